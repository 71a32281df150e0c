//! Second-order ROCK2 integrator: coefficient provisioning over a discrete
//! degree ladder, the step with finishing procedure, and the embedded error
//! estimate.
//!
//! Coefficients are vendored in `assets/rock2_coeffs.txt`, produced by the
//! offline generator in [`generate`] (run `cargo run --release --example
//! gen_rock2_table` to regenerate).

pub mod generate;

use crate::error::{Error, Result};
use crate::norm::ScaledNorm;
use crate::rkc::Rhs;

/// Smallest supported ROCK2 degree (one internal recurrence stage plus the
/// two finishing stages).
pub const MIN_DEGREE: usize = 3;
/// Largest ladder degree.
pub const MAX_DEGREE: usize = 200;

/// Recurrence and finishing coefficients of the degree-`s` ROCK2 method.
#[derive(Debug, Clone)]
pub struct Rock2Tableau {
    pub s: usize,
    /// `mu_j` for `j = 1..=s-2` (`mu[0]` is `mu_1`).
    pub mu: Vec<f64>,
    /// `nu_j` for `j = 2..=s-2`; empty for `s = 3`.
    pub nu: Vec<f64>,
    /// `kappa_j` for `j = 2..=s-2`; empty for `s = 3`.
    pub kappa: Vec<f64>,
    /// Finishing coefficients of `w(z) = 1 + 2 sigma1 z + sigma2 z^2`.
    pub sigma1: f64,
    pub sigma2: f64,
    /// Stability-domain length `ell_s` (about `0.8 s^2`).
    pub ell: f64,
}

impl Rock2Tableau {
    /// Stability function `R_s(z)`, computed by running the stage recurrence
    /// on the scalar linear problem (no monomial expansion).
    pub fn stability(&self, z: f64) -> f64 {
        let s = self.s;
        let mut km1 = 1.0;
        let mut k = 1.0 + self.mu[0] * z;
        for j in 2..=s - 2 {
            let next = self.mu[j - 1] * z * k - self.nu[j - 2] * k - self.kappa[j - 2] * km1;
            km1 = k;
            k = next;
        }
        let ksm2 = k;
        let ksm1 = ksm2 + self.sigma1 * z * ksm2;
        let ks_star = ksm1 + self.sigma1 * z * ksm1;
        // finishing correction reproduces w(z) = 1 + 2 sigma1 z + sigma2 z^2
        let fac = 1.0 - self.sigma2 / (self.sigma1 * self.sigma1);
        ks_star - fac * self.sigma1 * z * (ksm1 - ksm2)
    }
}

/// Scratch buffers for [`rock2_step`].
#[derive(Debug, Default)]
pub struct Rock2Workspace {
    k_prev: Vec<f64>,
    k_cur: Vec<f64>,
    k_next: Vec<f64>,
    f_a: Vec<f64>,
    f_b: Vec<f64>,
}

impl Rock2Workspace {
    pub fn new(n: usize) -> Self {
        Rock2Workspace {
            k_prev: vec![0.0; n],
            k_cur: vec![0.0; n],
            k_next: vec![0.0; n],
            f_a: vec![0.0; n],
            f_b: vec![0.0; n],
        }
    }

    fn resize(&mut self, n: usize) {
        self.k_prev.resize(n, 0.0);
        self.k_cur.resize(n, 0.0);
        self.k_next.resize(n, 0.0);
        self.f_a.resize(n, 0.0);
        self.f_b.resize(n, 0.0);
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One ROCK2 step over `[t, t + tau]`: `s - 2` recurrence stages followed by
/// the two finishing stages. Writes the new state into `out` and returns the
/// embedded estimate `||k_s^* - k_s||` in the tolerance-scaled norm.
/// Performs exactly `s` evaluations of `f`.
pub fn rock2_step(
    f: Rhs<'_>,
    t: f64,
    y: &[f64],
    tau: f64,
    tab: &Rock2Tableau,
    norm: &ScaledNorm,
    ws: &mut Rock2Workspace,
    out: &mut [f64],
) -> Result<f64> {
    assert!(tau > 0.0, "step size must be positive");
    let n = y.len();
    ws.resize(n);
    let s = tab.s;

    f(t, y, &mut ws.f_a);
    for i in 0..n {
        ws.k_prev[i] = y[i];
        ws.k_cur[i] = y[i] + tab.mu[0] * tau * ws.f_a[i];
    }
    if !all_finite(&ws.k_cur) {
        return Err(Error::Overflow { method: "rock2", stage: 1 });
    }
    let mut c_prev = 0.0;
    let mut c_cur = tab.mu[0];

    for j in 2..=s - 2 {
        let mu = tab.mu[j - 1];
        let nu = tab.nu[j - 2];
        let kappa = tab.kappa[j - 2];
        f(t + c_cur * tau, &ws.k_cur, &mut ws.f_a);
        for i in 0..n {
            ws.k_next[i] = mu * tau * ws.f_a[i] - nu * ws.k_cur[i] - kappa * ws.k_prev[i];
        }
        if !all_finite(&ws.k_next) {
            return Err(Error::Overflow { method: "rock2", stage: j });
        }
        let c_next = mu - nu * c_cur - kappa * c_prev;
        c_prev = c_cur;
        c_cur = c_next;
        std::mem::swap(&mut ws.k_prev, &mut ws.k_cur);
        std::mem::swap(&mut ws.k_cur, &mut ws.k_next);
    }

    // finishing procedure; f_a = f(k_{s-2}), f_b = f(k_{s-1})
    f(t + c_cur * tau, &ws.k_cur, &mut ws.f_a);
    for i in 0..n {
        ws.k_next[i] = ws.k_cur[i] + tab.sigma1 * tau * ws.f_a[i];
    }
    let c_sm1 = c_cur + tab.sigma1;
    f(t + c_sm1 * tau, &ws.k_next, &mut ws.f_b);

    let fac = 1.0 - tab.sigma2 / (tab.sigma1 * tab.sigma1);
    let mut err_sq = 0.0;
    for i in 0..n {
        let ks_star = ws.k_next[i] + tab.sigma1 * tau * ws.f_b[i];
        let corr = fac * tab.sigma1 * tau * (ws.f_b[i] - ws.f_a[i]);
        let ks = ks_star - corr;
        out[i] = ks;
        let sc = norm.scale(y[i].abs().max(ks.abs()));
        err_sq += (corr / sc) * (corr / sc);
    }
    if !all_finite(out) {
        return Err(Error::Overflow { method: "rock2", stage: s });
    }
    Ok((err_sq / n as f64).sqrt())
}

/// The discrete degree ladder with its vendored coefficient tableaus.
#[derive(Debug)]
pub struct Rock2Ladder {
    tabs: Vec<Rock2Tableau>,
}

impl Rock2Ladder {
    /// Loads the vendored coefficient asset compiled into the crate.
    pub fn load_default() -> Self {
        static ASSET: &str = include_str!("../../assets/rock2_coeffs.txt");
        Self::parse(ASSET).expect("vendored rock2 coefficient asset is valid")
    }

    /// Parses a coefficient table in the documented plain-text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(|l| l.split_whitespace());
        let mut tabs: Vec<Rock2Tableau> = Vec::new();
        let bad = |msg: &str| Error::Asset(msg.to_string());
        while let Some(tok) = tokens.next() {
            if tok != "s" {
                return Err(bad(&format!("expected 's', found '{tok}'")));
            }
            let next_f64 = |tokens: &mut dyn Iterator<Item = &str>| -> Result<f64> {
                tokens
                    .next()
                    .ok_or_else(|| bad("truncated record"))?
                    .parse::<f64>()
                    .map_err(|e| bad(&format!("bad float: {e}")))
            };
            let s = next_f64(&mut tokens)? as usize;
            if s < MIN_DEGREE {
                return Err(bad(&format!("degree {s} below minimum")));
            }
            let sigma1 = next_f64(&mut tokens)?;
            let sigma2 = next_f64(&mut tokens)?;
            let ell = next_f64(&mut tokens)?;
            let read_vec = |label: &str, len: usize,
                                tokens: &mut dyn Iterator<Item = &str>|
             -> Result<Vec<f64>> {
                match tokens.next() {
                    Some(t) if t == label => {}
                    other => return Err(bad(&format!("expected '{label}', found {other:?}"))),
                }
                let mut v = Vec::with_capacity(len);
                for _ in 0..len {
                    v.push(
                        tokens
                            .next()
                            .ok_or_else(|| bad("truncated sequence"))?
                            .parse::<f64>()
                            .map_err(|e| bad(&format!("bad float: {e}")))?,
                    );
                }
                Ok(v)
            };
            let mu = read_vec("mu", s - 2, &mut tokens)?;
            let nu = read_vec("nu", s - 3, &mut tokens)?;
            let kappa = read_vec("kappa", s - 3, &mut tokens)?;
            if let Some(last) = tabs.last() {
                if last.s >= s {
                    return Err(bad("ladder degrees must be strictly increasing"));
                }
            }
            tabs.push(Rock2Tableau { s, mu, nu, kappa, sigma1, sigma2, ell });
        }
        if tabs.is_empty() {
            return Err(bad("empty table"));
        }
        Ok(Rock2Ladder { tabs })
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.tabs.iter().map(|t| t.s)
    }

    pub fn min_degree(&self) -> usize {
        self.tabs.first().unwrap().s
    }

    pub fn max_degree(&self) -> usize {
        self.tabs.last().unwrap().s
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rock2Tableau> {
        self.tabs.iter()
    }

    /// Tableau for the smallest ladder degree `>= s_requested`.
    pub fn tableau(&self, s_requested: usize) -> Result<&Rock2Tableau> {
        let idx = self.tabs.partition_point(|t| t.s < s_requested);
        self.tabs.get(idx).ok_or(Error::DegreeOutOfRange {
            requested: s_requested,
            max: self.max_degree(),
        })
    }

    /// Smallest ladder tableau whose true domain length satisfies
    /// `ell_s >= needed`.
    pub fn tableau_for_length(&self, needed: f64) -> Result<&Rock2Tableau> {
        let idx = self.tabs.partition_point(|t| t.ell < needed);
        self.tabs.get(idx).ok_or(Error::DegreeOutOfRange {
            requested: (needed / 0.8).sqrt().ceil() as usize,
            max: self.max_degree(),
        })
    }
}

/// Process-wide shared copy of the vendored ladder.
pub fn default_ladder() -> &'static Rock2Ladder {
    use std::sync::OnceLock;
    static LADDER: OnceLock<Rock2Ladder> = OnceLock::new();
    LADDER.get_or_init(Rock2Ladder::load_default)
}
