//! Offline construction of the ROCK2 coefficient tableaus.
//!
//! For a degree `s` the stability function is `R_s(z) = w(z) P_{s-2}(z)`
//! with `w(z) = 1 + 2 sigma1 z + sigma2 z^2` and `P_{s-2}` a member of the
//! family orthogonal with respect to `w(x)^2 / sqrt(1 - x^2)` on `[-1, 1]`
//! (mapped to `[-ell, 0]` via `z = ell (x - 1) / 2`). Since the weight
//! depends on `w` itself, the construction iterates to a fixed point:
//! Gauss-Chebyshev quadrature feeds a Stieltjes three-term recurrence, the
//! two second-order conditions yield updated `(sigma1, sigma2)`, and an
//! outer bisection finds the largest `ell` for which the interior peaks of
//! `|R_s|` stay below the damping target.

use super::Rock2Tableau;
use crate::error::{Error, Result};

/// Interior damping target; matches the roughly 5 percent margin the
/// published tableaus carry.
pub const DAMPING_TARGET: f64 = 0.95;

/// The discrete degree ladder: every integer from 3 to 20, then roughly
/// 5 percent geometric spacing up to 200.
pub fn ladder_degrees() -> Vec<usize> {
    let mut out: Vec<usize> = (3..=20).collect();
    let mut d = 20usize;
    while d < super::MAX_DEGREE {
        d = ((d as f64) * 1.05).round().max(d as f64 + 1.0) as usize;
        out.push(d.min(super::MAX_DEGREE));
    }
    out
}

struct Stieltjes {
    /// Monic recurrence coefficients `a_j`, `j = 0..p`.
    a: Vec<f64>,
    /// Monic recurrence coefficients `b_j`, `j = 1..p` (`b[0]` unused).
    b: Vec<f64>,
    /// `pi_j(1)` for `j = 0..=p`.
    val1: Vec<f64>,
    /// `pi_p'(1)` and `pi_p''(1)`.
    d1: f64,
    d2: f64,
}

/// Monic orthogonal polynomials for the weight `wx(x)^2 / sqrt(1 - x^2)`
/// sampled at Gauss-Chebyshev nodes.
fn stieltjes(wx_sq: &[f64], nodes: &[f64], p: usize) -> Stieltjes {
    let n = nodes.len();
    let mut a = vec![0.0; p];
    let mut b = vec![0.0; p];
    let mut pim1 = vec![0.0; n];
    let mut pi = vec![1.0; n];
    // quadrature weights pi/n are constant and cancel in the ratios
    let mut nrm: f64 = wx_sq.iter().sum();
    let mut moment: f64 = (0..n).map(|k| wx_sq[k] * nodes[k]).sum();
    let mut val1 = vec![1.0; p + 1];
    for j in 0..p {
        a[j] = moment / nrm;
        let bj = if j > 0 { b[j] } else { 0.0 };
        for k in 0..n {
            let next = (nodes[k] - a[j]) * pi[k] - bj * pim1[k];
            pim1[k] = pi[k];
            pi[k] = next;
        }
        let nrm_new: f64 = (0..n).map(|k| wx_sq[k] * pi[k] * pi[k]).sum();
        if j + 1 < p {
            b[j + 1] = nrm_new / nrm;
        }
        nrm = nrm_new;
        moment = (0..n).map(|k| wx_sq[k] * nodes[k] * pi[k] * pi[k]).sum();
        val1[j + 1] = (1.0 - a[j]) * val1[j] - bj * val1[j.saturating_sub(1)];
    }
    // derivatives of pi_p at x = 1 by differentiated recurrences
    let (mut v, mut vp) = (1.0, 1.0 - a[0]);
    let (mut d1m, mut d1) = (0.0, 1.0);
    let (mut d2m, mut d2) = (0.0, 0.0);
    for j in 1..p {
        let vn = (1.0 - a[j]) * vp - b[j] * v;
        let d1n = vp + (1.0 - a[j]) * d1 - b[j] * d1m;
        let d2n = 2.0 * d1 + (1.0 - a[j]) * d2 - b[j] * d2m;
        v = vp;
        vp = vn;
        d1m = d1;
        d1 = d1n;
        d2m = d2;
        d2 = d2n;
    }
    let _ = v;
    Stieltjes { a, b, val1, d1, d2 }
}

/// Assembles the stage-recurrence tableau from the monic family.
fn assemble(st: &Stieltjes, s: usize, ell: f64, sigma1: f64, sigma2: f64) -> Rock2Tableau {
    let p = s - 2;
    let mut mu = Vec::with_capacity(p);
    let mut nu = Vec::with_capacity(p.saturating_sub(1));
    let mut kappa = Vec::with_capacity(p.saturating_sub(1));
    mu.push(2.0 / (ell * st.val1[1]));
    for j in 1..p {
        mu.push(2.0 * st.val1[j] / (ell * st.val1[j + 1]));
        nu.push(-(1.0 - st.a[j]) * st.val1[j] / st.val1[j + 1]);
        kappa.push(st.b[j] * st.val1[j - 1] / st.val1[j + 1]);
    }
    Rock2Tableau { s, mu, nu, kappa, sigma1, sigma2, ell }
}

/// Inner fixed point at a given domain length. Returns `None` when the
/// quadratic factor loses positivity (infeasible length).
fn build_at_length(s: usize, ell: f64) -> Option<Rock2Tableau> {
    let p = s - 2;
    let n = (8 * s).max(200);
    let nodes: Vec<f64> = (1..=n)
        .map(|k| ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
        .collect();
    // w in x-space: w(x) = 1 + 2 s1t (x-1) + s2t (x-1)^2
    let mut s1t = 0.0;
    let mut s2t = 0.0;
    let mut result = None;
    for _ in 0..200 {
        let mut wx_sq = Vec::with_capacity(n);
        for &x in &nodes {
            let w = 1.0 + 2.0 * s1t * (x - 1.0) + s2t * (x - 1.0) * (x - 1.0);
            if w <= 0.0 {
                return None;
            }
            wx_sq.push(w * w);
        }
        let st = stieltjes(&wx_sq, &nodes, p);
        let pp = st.d1 / st.val1[p];
        let ppp = st.d2 / st.val1[p];
        // order conditions in x-space: R'(1) = ell/2, R''(1) = ell^2/4
        let s1t_new = (ell / 2.0 - pp) / 2.0;
        let s2t_new = (ell * ell / 4.0 - ppp - 4.0 * s1t_new * pp) / 2.0;
        let done = (s1t_new - s1t).abs() < 1e-14 * (1.0 + s1t.abs())
            && (s2t_new - s2t).abs() < 1e-12 * (1.0 + s2t.abs());
        s1t = s1t_new;
        s2t = s2t_new;
        if done {
            let sigma1 = 2.0 * s1t / ell;
            let sigma2 = 4.0 * s2t / (ell * ell);
            result = Some(assemble(&st, s, ell, sigma1, sigma2));
            break;
        }
    }
    result
}

/// Largest interior local maximum of `|R_s|` on `(-ell, 0)` and the global
/// maximum over `[-ell, 0]`, on a uniform grid.
fn damping_profile(tab: &Rock2Tableau, grid: usize) -> (f64, f64) {
    let mut vals = Vec::with_capacity(grid + 1);
    for k in 0..=grid {
        let z = -tab.ell * (1.0 - k as f64 / grid as f64);
        vals.push(tab.stability(z).abs());
    }
    let global = vals.iter().cloned().fold(0.0, f64::max);
    let mut peak = 0.0f64;
    for i in 1..vals.len() - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] {
            peak = peak.max(vals[i]);
        }
    }
    (peak, global)
}

fn feasible(tab: &Rock2Tableau) -> bool {
    let (peak, global) = damping_profile(tab, 4000);
    peak <= DAMPING_TARGET && global <= 1.0 + 1e-9
}

/// Builds the tableau for degree `s`: bisects on the domain length for the
/// largest `ell` meeting the damping target.
pub fn generate_tableau(s: usize) -> Result<Rock2Tableau> {
    if s < super::MIN_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "ROCK2 degree must be >= {}, got {s}",
            super::MIN_DEGREE
        )));
    }
    let sf = (s * s) as f64;
    let mut lo = 0.6 * sf;
    let mut found = false;
    for _ in 0..6 {
        if build_at_length(s, lo).map_or(false, |t| feasible(&t)) {
            found = true;
            break;
        }
        lo *= 0.8;
    }
    if !found {
        return Err(Error::InvalidParameter(format!(
            "no feasible domain length found for degree {s}"
        )));
    }
    let mut hi = 1.1 * sf;
    for _ in 0..55 {
        let mid = 0.5 * (lo + hi);
        match build_at_length(s, mid) {
            Some(t) if feasible(&t) => lo = mid,
            _ => hi = mid,
        }
    }
    build_at_length(s, lo).ok_or_else(|| {
        Error::InvalidParameter(format!("fixed point failed at final length for degree {s}"))
    })
}

/// Serializes tableaus into the documented plain-text asset format.
pub fn write_table(tabs: &[Rock2Tableau]) -> String {
    let mut out = String::new();
    out.push_str("# ROCK2 coefficient table, format version 1\n");
    out.push_str("# Generated by the offline orthogonal-polynomial construction\n");
    out.push_str("# (see src/rock2/generate.rs; regenerate with the gen_rock2_table example).\n");
    out.push_str("# Record layout, one per ladder degree s:\n");
    out.push_str("#   s <s> <sigma1> <sigma2> <ell>\n");
    out.push_str("#   mu <s-2 values>      recurrence, stages 1..s-2\n");
    out.push_str("#   nu <s-3 values>      recurrence, stages 2..s-2\n");
    out.push_str("#   kappa <s-3 values>   recurrence, stages 2..s-2\n");
    for t in tabs {
        out.push_str(&format!(
            "s {} {:.16e} {:.16e} {:.16e}\n",
            t.s, t.sigma1, t.sigma2, t.ell
        ));
        for (label, v) in [("mu", &t.mu), ("nu", &t.nu), ("kappa", &t.kappa)] {
            out.push_str(label);
            for x in v.iter() {
                out.push_str(&format!(" {x:.16e}"));
            }
            out.push('\n');
        }
    }
    out
}
