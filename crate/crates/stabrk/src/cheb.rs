//! Chebyshev machinery for the RKC family: coefficient tableaus, the
//! stability polynomial `P_m`, the shifted quotient `Phi_m` and the
//! curvature `alpha_m = P_m''(0)` with its analytic bounds.

use crate::error::{Error, Result};

/// Degree-`m` Chebyshev polynomial of the first kind, by the three-term
/// recurrence `T_j(x) = 2 x T_{j-1}(x) - T_{j-2}(x)`.
pub fn cheb_t(m: usize, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let mut tm1 = 1.0;
    let mut t = x;
    for _ in 2..=m {
        let next = 2.0 * x * t - tm1;
        tm1 = t;
        t = next;
    }
    t
}

/// Stability bound constant `beta = 2 - 4 eps / 3`, so that
/// `|z| <= beta m^2` is sufficient for `|P_m(z)| <= 1`.
pub fn beta(eps: f64) -> f64 {
    2.0 - 4.0 * eps / 3.0
}

/// `T_m`, `T_m'` and `T_m''` evaluated at `omega0 = 1 + eps/m^2 >= 1`.
///
/// For `eps > 0` the hyperbolic closed forms in `x = m arccosh(omega0)` are
/// used; the argument stays bounded near `sqrt(2 eps)` for all `m`, which
/// avoids both overflow and cancellation at large degree.
fn cheb_derivs_at_omega0(m: usize, eps: f64) -> (f64, f64, f64) {
    let mf = m as f64;
    if eps == 0.0 {
        // T_m(1) = 1, T_m'(1) = m^2, T_m''(1) = m^2 (m^2 - 1) / 3
        (1.0, mf * mf, mf * mf * (mf * mf - 1.0) / 3.0)
    } else {
        let delta = eps / (mf * mf);
        // arccosh(1 + delta) = ln(1 + delta + sqrt(delta (2 + delta)))
        let acosh = (delta + (delta * (2.0 + delta)).sqrt()).ln_1p();
        let x = mf * acosh;
        // omega0^2 - 1 = delta (2 + delta)
        let w2m1 = delta * (2.0 + delta);
        let omega0 = 1.0 + delta;
        let t = x.cosh();
        let tp = mf * x.sinh() / w2m1.sqrt();
        let tpp = mf * mf * t / w2m1 - mf * omega0 * x.sinh() / w2m1.powf(1.5);
        (t, tp, tpp)
    }
}

/// Coefficients of the `m`-stage RKC method with damping `eps`.
///
/// Immutable after construction; construction is pure.
#[derive(Debug, Clone)]
pub struct RkcTableau {
    pub m: usize,
    pub eps: f64,
    pub omega0: f64,
    pub omega1: f64,
    /// `b_j = 1 / T_j(omega0)` for `j = 0..=m`.
    pub b: Vec<f64>,
    /// `mu_j` for `j = 1..=m` (`mu[0]` is `mu_1`).
    pub mu: Vec<f64>,
    /// `nu_j` for `j = 2..=m` (`nu[0]` is `nu_2`); empty for `m = 1`.
    pub nu: Vec<f64>,
    /// `kappa_j` for `j = 2..=m`; empty for `m = 1`.
    pub kappa: Vec<f64>,
    /// `alpha_m = P_m''(0)`.
    pub alpha_m: f64,
    /// True stability-domain length `2 omega0 / omega1` (>= `beta m^2`).
    pub ell: f64,
}

impl RkcTableau {
    pub fn new(m: usize, eps: f64) -> Self {
        assert!(m >= 1, "RKC needs at least one stage");
        assert!(eps >= 0.0, "damping must be nonnegative");
        let mf = m as f64;
        let omega0 = 1.0 + eps / (mf * mf);
        let (tm, tpm, _) = cheb_derivs_at_omega0(m, eps);
        let omega1 = tm / tpm;

        // T_j(omega0) stays bounded by cosh(sqrt(2 eps) j / m): the direct
        // recurrence is fine here.
        let mut t = vec![0.0; m + 1];
        t[0] = 1.0;
        t[1] = omega0;
        for j in 2..=m {
            t[j] = 2.0 * omega0 * t[j - 1] - t[j - 2];
        }
        let b: Vec<f64> = t.iter().map(|tj| 1.0 / tj).collect();

        let mut mu = vec![0.0; m];
        mu[0] = omega1 / omega0;
        let mut nu = Vec::with_capacity(m.saturating_sub(1));
        let mut kappa = Vec::with_capacity(m.saturating_sub(1));
        for j in 2..=m {
            mu[j - 1] = 2.0 * omega1 * b[j] / b[j - 1];
            nu.push(2.0 * omega0 * b[j] / b[j - 1]);
            kappa.push(-b[j] / b[j - 2]);
        }

        RkcTableau {
            m,
            eps,
            omega0,
            omega1,
            b,
            mu,
            nu,
            kappa,
            alpha_m: alpha_m(m, eps),
            ell: 2.0 * omega0 / omega1,
        }
    }

    /// Stability polynomial `P_m(z) = b_m T_m(omega0 + omega1 z)`.
    pub fn stability(&self, z: f64) -> f64 {
        self.b[self.m] * cheb_t(self.m, self.omega0 + self.omega1 * z)
    }

    /// Shifted quotient `Phi_m(z) = (P_m(z) - 1) / z`, `Phi_m(0) = 1`.
    ///
    /// Below `|z| = 1e-6` the Taylor form `1 + (alpha_m / 2) z` is used to
    /// avoid cancellation in the quotient.
    pub fn phi(&self, z: f64) -> f64 {
        if z.abs() <= 1e-6 {
            1.0 + 0.5 * self.alpha_m * z
        } else {
            (self.stability(z) - 1.0) / z
        }
    }
}

/// Curvature `alpha_m(eps) = P_m''(0) = T_m(omega0) T_m''(omega0) / T_m'(omega0)^2`.
///
/// For `eps = 0` this reduces to the closed form `(m^2 - 1) / (3 m^2)`.
pub fn alpha_m(m: usize, eps: f64) -> f64 {
    assert!(m >= 1);
    if m == 1 {
        return 0.0; // P_1 is affine
    }
    let mf = m as f64;
    if eps == 0.0 {
        (mf * mf - 1.0) / (3.0 * mf * mf)
    } else {
        let (t, tp, tpp) = cheb_derivs_at_omega0(m, eps);
        t * tpp / (tp * tp)
    }
}

/// Limit `alpha(eps) = lim_{m -> inf} alpha_m(eps)`.
pub fn alpha_limit(eps: f64) -> Result<f64> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha_limit requires eps > 0, got {eps}"
        )));
    }
    let r = (2.0 * eps).sqrt();
    let th = r.tanh();
    Ok((1.0 / th) * (1.0 / th - 1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheb_t_basic_values() {
        assert_eq!(cheb_t(0, 0.7), 1.0);
        assert_eq!(cheb_t(5, 1.0), 1.0);
        assert_eq!(cheb_t(2, 2.0), 7.0); // 2*2*2 - 1
    }

    #[test]
    fn tableau_m1_is_explicit_euler() {
        let tab = RkcTableau::new(1, 0.0);
        assert_eq!(tab.omega0, 1.0);
        assert_eq!(tab.omega1, 1.0);
        assert_eq!(tab.mu[0], 1.0);
    }

    #[test]
    fn tableau_m2_hand_values() {
        let tab = RkcTableau::new(2, 0.0);
        assert!((tab.omega0 - 1.0).abs() < 1e-15);
        assert!((tab.omega1 - 0.25).abs() < 1e-15);
        assert!((tab.mu[0] - 0.25).abs() < 1e-15);
        assert!((tab.mu[1] - 0.5).abs() < 1e-15);
        assert!((tab.nu[0] - 2.0).abs() < 1e-15);
        assert!((tab.kappa[0] + 1.0).abs() < 1e-15);
        assert!((tab.ell - 8.0).abs() < 1e-12);
    }

    #[test]
    fn domain_length_bounds() {
        // eps = 0 gives exactly 2 m^2; damped case stays above beta m^2.
        for m in [1, 5, 20, 100] {
            let tab = RkcTableau::new(m, 0.0);
            let mf = m as f64;
            assert!((tab.ell - 2.0 * mf * mf).abs() < 1e-9 * mf * mf);
        }
        let tab = RkcTableau::new(10, 0.05);
        assert!(tab.ell >= beta(0.05) * 100.0);
        assert!(tab.ell <= 200.0);
    }

    #[test]
    fn stability_consistency_and_quadratic_case() {
        let tab = RkcTableau::new(7, 0.05);
        assert!((tab.stability(0.0) - 1.0).abs() < 1e-14);
        // m = 2, eps = 0: P_2(z) = 1 + z + z^2/8
        let tab2 = RkcTableau::new(2, 0.0);
        for z in [-4.0, -1.0, -0.3, 0.5] {
            let exact = 1.0 + z + z * z / 8.0;
            assert!((tab2.stability(z) - exact).abs() < 1e-14);
        }
        // endpoint of the damped stability interval
        let tab10 = RkcTableau::new(10, 0.05);
        assert!(tab10.stability(-tab10.ell).abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn phi_values_and_taylor_branch() {
        let tab = RkcTableau::new(2, 0.0);
        assert_eq!(tab.phi(0.0), 1.0);
        // P_2(-4) = 1 - 4 + 2 = -1, so Phi = (-1 - 1)/(-4) = 0.5
        assert!((tab.phi(-4.0) - 0.5).abs() < 1e-14);
        // Taylor branch, alpha_2(0) = 1/4
        assert!((tab.phi(1e-9) - (1.0 + 1.25e-10)).abs() < 1e-15);
    }

    #[test]
    fn alpha_m_values() {
        assert!((alpha_m(2, 0.0) - 0.25).abs() < 1e-15);
        assert_eq!(alpha_m(1, 0.3), 0.0);
        // Lemma bounds evaluated directly at m = 100, eps = 0.05
        let a = alpha_m(100, 0.05);
        let lo = alpha_m(100, 0.0);
        let hi = alpha_limit(0.05).unwrap();
        assert!(lo < a && a < hi, "alpha_100 = {a} not in ({lo}, {hi})");
    }

    #[test]
    fn alpha_limit_values() {
        let a = alpha_limit(0.05).unwrap();
        assert!((a - 0.3420969).abs() < 1e-6, "alpha(0.05) = {a}");
        assert!(a > 0.34 && a < 0.35);
        // eps -> 0+ tends to 1/3
        assert!((alpha_limit(1e-8).unwrap() - 1.0 / 3.0).abs() < 1e-6);
        assert!(alpha_limit(0.0).is_err());
    }

    #[test]
    fn alpha_matches_finite_difference_of_stability_polynomial() {
        for (m, eps) in [(2, 0.0), (5, 0.05), (20, 0.1), (80, 0.05)] {
            let tab = RkcTableau::new(m, eps);
            let h = 1e-4;
            let fd =
                (tab.stability(h) - 2.0 * tab.stability(0.0) + tab.stability(-h)) / (h * h);
            let rel = (fd - tab.alpha_m).abs() / tab.alpha_m.abs().max(1e-30);
            // central differences carry an O(h^2 P''''(0)) term that grows
            // with the degree; 1e-3 is what the check resolves at m = 80
            assert!(rel < 1e-3, "m={m} eps={eps} fd={fd} alpha={}", tab.alpha_m);
        }
    }

    #[test]
    fn stability_bounded_on_damped_interval() {
        for m in 1..=50 {
            for eps in [0.0, 0.05, 0.1] {
                let tab = RkcTableau::new(m, eps);
                let lim = beta(eps) * (m as f64) * (m as f64);
                for k in 0..=400 {
                    let z = -lim * k as f64 / 400.0;
                    assert!(
                        tab.stability(z).abs() <= 1.0 + 1e-12,
                        "m={m} eps={eps} z={z}"
                    );
                }
            }
        }
    }

    #[test]
    fn consistency_first_derivative() {
        for (m, eps) in [(1, 0.0), (4, 0.05), (30, 0.1)] {
            let tab = RkcTableau::new(m, eps);
            let h = 1e-7;
            let d = (tab.stability(h) - tab.stability(-h)) / (2.0 * h);
            assert!((d - 1.0).abs() < 1e-6, "m={m} eps={eps} P'(0)={d}");
        }
    }

    #[test]
    fn lemma_bounds_and_monotonicity_in_eps() {
        let eps_grid = [0.01, 0.05, 0.1, 0.5];
        for m in 2..=200 {
            for &eps in &eps_grid {
                let a = alpha_m(m, eps);
                assert!(alpha_m(m, 0.0) < a, "lower bound fails m={m} eps={eps}");
                assert!(a < alpha_limit(eps).unwrap(), "upper bound fails m={m} eps={eps}");
            }
            for w in eps_grid.windows(2) {
                assert!(
                    alpha_m(m, w[0]) < alpha_m(m, w[1]),
                    "monotonicity fails at m={m}"
                );
            }
        }
    }

    #[test]
    fn appendix_inequalities() {
        // omega0 arccosh(omega0) / sqrt(omega0^2 - 1) > 1 on (1, 10]
        for k in 1..=100 {
            let w0 = 1.0 + 9.0 * k as f64 / 100.0;
            let lhs = w0 * w0.acosh() / (w0 * w0 - 1.0).sqrt();
            assert!(lhs > 1.0, "w0={w0}");
        }
        // m arccosh(1 + eps/m^2) < sqrt(2 eps); the cancellation-free form
        // of arccosh near 1 is needed for the margin to survive roundoff
        for m in [1, 2, 10, 100, 1000] {
            for eps in [1e-3, 0.05, 1.0, 10.0] {
                let mf = m as f64;
                let d = eps / (mf * mf);
                let lhs = mf * (d + (d * (2.0 + d)).sqrt()).ln_1p();
                assert!(lhs < (2.0 * eps).sqrt(), "m={m} eps={eps}");
            }
        }
        // x -> 1/tanh^2(x) - 1/(x tanh x) increasing on (0, 10]
        let g = |x: f64| 1.0 / x.tanh().powi(2) - 1.0 / (x * x.tanh());
        let mut prev = g(0.01);
        for k in 1..=1000 {
            let x = 0.01 + (10.0 - 0.01) * k as f64 / 1000.0;
            let v = g(x);
            assert!(v > prev, "not increasing at x={x}");
            prev = v;
        }
    }
}
