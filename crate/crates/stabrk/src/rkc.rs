//! First-order RKC integrator step: the macro method of mRKC and the micro
//! method of both multirate schemes.

use crate::cheb::{beta, RkcTableau};
use crate::error::{Error, Result};

/// Default cap on the number of stages of a single (micro) solve.
pub const DEFAULT_STAGE_CAP: usize = 100_000;

/// A right-hand side callback: `f(t, y, dy)` writes `dy = f(t, y)`.
pub type Rhs<'a> = &'a mut dyn FnMut(f64, &[f64], &mut [f64]);

/// Scratch buffers for a stage recurrence; the recurrence only ever needs
/// three state-sized buffers plus one derivative buffer, rotated in place.
#[derive(Debug, Default)]
pub struct Workspace {
    pub(crate) k_prev: Vec<f64>,
    pub(crate) k_cur: Vec<f64>,
    pub(crate) k_next: Vec<f64>,
    pub(crate) dy: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace {
            k_prev: vec![0.0; n],
            k_cur: vec![0.0; n],
            k_next: vec![0.0; n],
            dy: vec![0.0; n],
        }
    }

    pub(crate) fn resize(&mut self, n: usize) {
        self.k_prev.resize(n, 0.0);
        self.k_cur.resize(n, 0.0);
        self.k_next.resize(n, 0.0);
        self.dy.resize(n, 0.0);
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One step of the `m`-stage RKC method over `[t, t + tau]`, writing the
/// result into `out`. Performs exactly `m` evaluations of `f`.
///
/// Stage times follow the internal consistency abscissae
/// `c_j = nu_j c_{j-1} + kappa_j c_{j-2} + mu_j`, `c_1 = mu_1`.
pub fn rkc_step(
    f: Rhs<'_>,
    t: f64,
    y: &[f64],
    tau: f64,
    tab: &RkcTableau,
    ws: &mut Workspace,
    out: &mut [f64],
) -> Result<()> {
    assert!(tau > 0.0, "step size must be positive");
    let n = y.len();
    ws.resize(n);
    let m = tab.m;

    // k_1 = k_0 + mu_1 tau f(t, k_0)
    f(t, y, &mut ws.dy);
    for i in 0..n {
        ws.k_prev[i] = y[i];
        ws.k_cur[i] = y[i] + tab.mu[0] * tau * ws.dy[i];
    }
    if !all_finite(&ws.k_cur) {
        return Err(Error::Overflow { method: "rkc", stage: 1 });
    }
    let mut c_prev = 0.0;
    let mut c_cur = tab.mu[0];

    for j in 2..=m {
        let mu = tab.mu[j - 1];
        let nu = tab.nu[j - 2];
        let kappa = tab.kappa[j - 2];
        f(t + c_cur * tau, &ws.k_cur, &mut ws.dy);
        for i in 0..n {
            ws.k_next[i] = nu * ws.k_cur[i] + kappa * ws.k_prev[i] + mu * tau * ws.dy[i];
        }
        if !all_finite(&ws.k_next) {
            return Err(Error::Overflow { method: "rkc", stage: j });
        }
        let c_next = nu * c_cur + kappa * c_prev + mu;
        c_prev = c_cur;
        c_cur = c_next;
        std::mem::swap(&mut ws.k_prev, &mut ws.k_cur);
        std::mem::swap(&mut ws.k_cur, &mut ws.k_next);
    }
    out.copy_from_slice(&ws.k_cur);
    Ok(())
}

/// Smallest admissible RKC stage count for `tau * rho`, per the rule
/// `m = floor(sqrt(tau rho / beta)) + 1` with `beta = 2 - 4 eps / 3`.
pub fn rkc_stage_count(tau_rho: f64, eps: f64) -> usize {
    assert!(tau_rho >= 0.0);
    (tau_rho / beta(eps)).sqrt().floor() as usize + 1
}
