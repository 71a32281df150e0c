//! Closed-form scalar analysis: the exact averaged-force multipliers,
//! composed stability values, the cost/speed-up model, and grid scans over
//! the multirate test equation.

use crate::cheb::RkcTableau;
use crate::rock2::default_ladder;

/// `phi(z) = (e^z - 1)/z` with `phi(0) = 1`, via `expm1`.
pub fn phi_exact(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// Exact modified-equation rate multiplier of the second-order averaged
/// force: `phi(eta lambda)(lambda + zeta)(1 - (eta lambda / 2) phi(eta lambda))`.
pub fn modified_rhs_order2(lambda: f64, zeta: f64, eta: f64) -> f64 {
    let z = eta * lambda;
    let p = phi_exact(z);
    p * (lambda + zeta) * (1.0 - 0.5 * z * p)
}

/// Composed mRKC stability value `R_s(tau Phi_m(eta lambda)(lambda + zeta))`
/// with the damped RKC polynomials for both levels.
pub fn mrkc_stability_value(
    lambda: f64,
    zeta: f64,
    tau: f64,
    eta: f64,
    s: usize,
    m: usize,
    eps: f64,
) -> f64 {
    let macro_tab = RkcTableau::new(s, eps);
    let micro_tab = RkcTableau::new(m, eps);
    macro_tab.stability(tau * micro_tab.phi(eta * lambda) * (lambda + zeta))
}

/// Composed mROCK2 stability value
/// `R_s(tau Phi_m(z)(lambda + zeta)(1 - (z alpha_m / 2) Phi_m(z)))`,
/// `z = eta lambda`, with the ladder tableau of degree `s`.
pub fn mrock2_stability_value(
    lambda: f64,
    zeta: f64,
    tau: f64,
    eta: f64,
    s: usize,
    m: usize,
    eps: f64,
) -> f64 {
    let macro_tab = default_ladder().tableau(s).expect("ladder degree");
    let micro_tab = RkcTableau::new(m, eps);
    macro_tab.stability(mrock2_inner(lambda, zeta, tau, eta, &micro_tab))
}

/// The argument handed to the macro polynomial by the second-order averaged
/// force.
pub fn mrock2_inner(lambda: f64, zeta: f64, tau: f64, eta: f64, micro: &RkcTableau) -> f64 {
    let z = eta * lambda;
    let p = micro.phi(z);
    tau * p * (lambda + zeta) * (1.0 - 0.5 * z * micro.alpha_m * p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedupVariant {
    Standard,
    ScaleSep,
}

/// Theoretical speed-up of mROCK2 over ROCK2 for radius ratio `r_rho` and
/// fast-part cost share `c_f`:
/// `sqrt(3/4) sqrt(1 + r) / (1 + c_f (sqrt(9 r) - 1))`, with `sqrt(4 r)` in
/// place of `sqrt(9 r)` under scale separation.
pub fn speedup(r_rho: f64, c_f: f64, variant: SpeedupVariant) -> f64 {
    assert!(r_rho >= 0.0 && (0.0..=1.0).contains(&c_f));
    let k = match variant {
        SpeedupVariant::Standard => 9.0,
        SpeedupVariant::ScaleSep => 4.0,
    };
    (0.75_f64).sqrt() * (1.0 + r_rho).sqrt() / (1.0 + c_f * ((k * r_rho).sqrt() - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    /// Modified-equation bound of the exact second-order force.
    Theorem22,
    /// Composed mRKC stability over the micro domain.
    MrkcComposed,
    /// Composed mROCK2 stability over the micro domain.
    Mrock2Composed,
    /// mROCK2 with the relaxed scale-separation micro step; the inner bound
    /// is only claimed for `z = eta lambda < -8`.
    ScaleSepComposed,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanParams {
    pub zeta: f64,
    pub tau: f64,
    pub s: usize,
    pub m: usize,
    pub eps: f64,
    /// Micro step; when absent the kind's canonical formula is used.
    pub eta: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanRow {
    pub lambda: f64,
    /// `z = eta lambda`.
    pub z: f64,
    /// Macro-polynomial argument (or the rate multiplier for Theorem22).
    pub inner: f64,
    /// Final stability value (equals `inner` for Theorem22).
    pub outer: f64,
    pub in_bounds: bool,
}

#[derive(Debug)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub violations: usize,
    /// Smallest distance to the violated bound across the grid (negative
    /// once a bound is crossed).
    pub worst_margin: f64,
}

/// Log-spaced nonpositive `lambda` grid over 14 decades plus zero.
pub fn lambda_grid(points: usize) -> Vec<f64> {
    lambda_grid_to(points, 1e12)
}

/// Log-spaced nonpositive grid from `-1e-2` down to `-lam_max` (plus zero
/// and the exact endpoint).
pub fn lambda_grid_to(points: usize, lam_max: f64) -> Vec<f64> {
    if points == 0 {
        return Vec::new();
    }
    let mut g = vec![0.0];
    let hi = lam_max.log10();
    for k in 0..points {
        let x = -2.0 + (hi + 2.0) * k as f64 / (points.max(2) - 1) as f64;
        g.push(-(10.0_f64).powf(x));
    }
    if let Some(last) = g.last_mut() {
        *last = -lam_max;
    }
    g
}

/// Evaluates the requested bound over the `lambda` grid.
pub fn scan(kind: ScanKind, p: &ScanParams) -> ScanResult {
    let micro = RkcTableau::new(p.m.max(1), p.eps);
    let ell_s = match kind {
        ScanKind::Mrock2Composed | ScanKind::ScaleSepComposed => {
            default_ladder().tableau(p.s).expect("ladder degree").ell
        }
        ScanKind::MrkcComposed => RkcTableau::new(p.s, p.eps).ell,
        ScanKind::Theorem22 => 0.0,
    };
    let mf = (p.m * p.m) as f64;
    let eta = p.eta.unwrap_or(match kind {
        ScanKind::Theorem22 => 2.0 / p.zeta.abs(),
        ScanKind::MrkcComposed => {
            6.0 * p.tau / (crate::cheb::beta(p.eps) * (p.s * p.s) as f64) * mf / (mf - 1.0)
        }
        ScanKind::Mrock2Composed => 6.0 * p.tau / ell_s * mf / (mf - 1.0),
        ScanKind::ScaleSepComposed => 2.8 * p.tau / ell_s,
    });
    // the composed bounds are only claimed inside the micro stability
    // constraint |eta lambda| <= ell_m; the grid stops there
    let grid = match kind {
        ScanKind::Theorem22 => lambda_grid(p.points),
        _ => lambda_grid_to(p.points, micro.ell / eta),
    };
    let tol = 1e-10;
    let mut rows = Vec::with_capacity(grid.len());
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for lambda in grid {
        let z = eta * lambda;
        let row = match kind {
            ScanKind::Theorem22 => {
                let v = modified_rhs_order2(lambda, p.zeta, eta);
                // bound of the modified rate: [1.5 zeta, 0]
                let margin = (v - 1.5 * p.zeta).min(-v);
                ScanRow { lambda, z, inner: v, outer: v, in_bounds: margin >= -tol }
            }
            ScanKind::MrkcComposed => {
                let inner = p.tau * micro.phi(z) * (lambda + p.zeta);
                let outer = RkcTableau::new(p.s, p.eps).stability(inner);
                let margin = (1.0 - outer.abs()).min((inner + ell_s).min(-inner) / ell_s);
                ScanRow { lambda, z, inner, outer, in_bounds: margin >= -tol }
            }
            ScanKind::Mrock2Composed | ScanKind::ScaleSepComposed => {
                let inner = mrock2_inner(lambda, p.zeta, p.tau, eta, &micro);
                let outer = default_ladder().tableau(p.s).unwrap().stability(inner);
                let inner_margin = (inner + ell_s).min(-inner) / ell_s;
                let margin = if kind == ScanKind::ScaleSepComposed && z >= -8.0 {
                    // the relaxed micro step only claims the bound for z < -8
                    f64::INFINITY
                } else {
                    (1.0 - outer.abs()).min(inner_margin)
                };
                ScanRow { lambda, z, inner, outer, in_bounds: margin >= -tol }
            }
        };
        if !row.in_bounds {
            violations += 1;
        }
        let m = match kind {
            ScanKind::Theorem22 => (row.inner - 1.5 * p.zeta).min(-row.inner),
            _ => 1.0 - row.outer.abs(),
        };
        worst = worst.min(m);
        rows.push(row);
    }
    ScanResult { rows, violations, worst_margin: worst }
}
