//! Split right-hand sides and the ODE test problems: Robertson kinetics,
//! the scalar multirate test equation and generic linear systems.

use crate::error::{Error, Result};
use crate::sparse::Csr;
use crate::spectral;

pub type BoxedRhs = Box<dyn FnMut(f64, &[f64], &mut [f64])>;
pub type BoxedRho = Box<dyn FnMut(f64, &[f64]) -> f64>;

/// An ODE `y' = f_F(t, y) + f_S(t, y)` with spectral-radius providers for
/// both parts and per-run evaluation counters.
pub struct SplitSystem {
    pub dim: usize,
    pub y0: Vec<f64>,
    fast: BoxedRhs,
    slow: BoxedRhs,
    rho_fast: BoxedRho,
    rho_slow: BoxedRho,
    /// Radius provider for the full right-hand side; defaults to the sum of
    /// the part radii (a conservative bound, exact when one part vanishes).
    rho_full: Option<BoxedRho>,
    /// Exact or reference solution, when the model has one.
    pub exact: Option<Box<dyn Fn(f64) -> Vec<f64>>>,
    pub evals_fast: u64,
    pub evals_slow: u64,
    /// Full-rhs evaluations (single-rate methods).
    pub evals_full: u64,
}

impl SplitSystem {
    pub fn new(
        dim: usize,
        y0: Vec<f64>,
        fast: BoxedRhs,
        slow: BoxedRhs,
        rho_fast: BoxedRho,
        rho_slow: BoxedRho,
    ) -> Self {
        assert_eq!(y0.len(), dim);
        SplitSystem {
            dim,
            y0,
            fast,
            slow,
            rho_fast,
            rho_slow,
            rho_full: None,
            exact: None,
            evals_fast: 0,
            evals_slow: 0,
            evals_full: 0,
        }
    }

    pub fn with_exact(mut self, exact: Box<dyn Fn(f64) -> Vec<f64>>) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_rho_full(mut self, rho: BoxedRho) -> Self {
        self.rho_full = Some(rho);
        self
    }

    pub fn eval_fast(&mut self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.fast)(t, y, out);
        self.evals_fast += 1;
    }

    pub fn eval_slow(&mut self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.slow)(t, y, out);
        self.evals_slow += 1;
    }

    /// `out = f_F + f_S`, counted as one full evaluation.
    pub fn eval_full(&mut self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.fast)(t, y, out);
        let mut tmp = vec![0.0; self.dim];
        (self.slow)(t, y, &mut tmp);
        for i in 0..self.dim {
            out[i] += tmp[i];
        }
        self.evals_full += 1;
    }

    pub fn rho_fast(&mut self, t: f64, y: &[f64]) -> f64 {
        (self.rho_fast)(t, y)
    }

    pub fn rho_slow(&mut self, t: f64, y: &[f64]) -> f64 {
        (self.rho_slow)(t, y)
    }

    pub fn rho_full(&mut self, t: f64, y: &[f64]) -> f64 {
        match &mut self.rho_full {
            Some(r) => r(t, y),
            None => (self.rho_fast)(t, y) + (self.rho_slow)(t, y),
        }
    }

    pub fn reset_counters(&mut self) {
        self.evals_fast = 0;
        self.evals_slow = 0;
        self.evals_full = 0;
    }
}

/// Robertson chemical kinetics with the stiffest reaction term split off as
/// the fast part:
/// `f_F = (0, -1e4 y2 y3, 0)`, `f_S` the remainder.
pub fn robertson() -> SplitSystem {
    let fast = |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = 0.0;
        dy[1] = -1e4 * y[1] * y[2];
        dy[2] = 0.0;
    };
    let slow = |_t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = -0.04 * y[0] + 1e4 * y[1] * y[2];
        dy[1] = 0.04 * y[0] - 3e7 * y[1] * y[1];
        dy[2] = 3e7 * y[1] * y[1];
    };
    // analytic Jacobian blocks feed the power iteration
    let rho_fast = |_t: f64, y: &[f64]| {
        let (y1, y2) = (y[1], y[2]);
        let mut op = |v: &[f64], out: &mut [f64]| {
            out[0] = 0.0;
            out[1] = -1e4 * (y2 * v[1] + y1 * v[2]);
            out[2] = 0.0;
        };
        spectral::power_radius(&mut op, 3, 0.01, 50).radius
    };
    let rho_slow = |_t: f64, y: &[f64]| {
        let (y1, y2) = (y[1], y[2]);
        let mut op = |v: &[f64], out: &mut [f64]| {
            out[0] = -0.04 * v[0] + 1e4 * (y2 * v[1] + y1 * v[2]);
            out[1] = 0.04 * v[0] - 6e7 * y1 * v[1];
            out[2] = 6e7 * y1 * v[1];
        };
        spectral::power_radius(&mut op, 3, 0.01, 50).radius
    };
    let rho_full = |t: f64, y: &[f64]| {
        let mut f = |tt: f64, yy: &[f64], dy: &mut [f64]| {
            dy[0] = -0.04 * yy[0] + 1e4 * yy[1] * yy[2];
            dy[1] = 0.04 * yy[0] - 1e4 * yy[1] * yy[2] - 3e7 * yy[1] * yy[1];
            dy[2] = 3e7 * yy[1] * yy[1];
            let _ = tt;
        };
        let _ = t;
        spectral::nonlinear_radius(&mut f, t, y).radius
    };
    SplitSystem::new(
        3,
        vec![1.0, 2e-5, 0.1],
        Box::new(fast),
        Box::new(slow),
        Box::new(rho_fast),
        Box::new(rho_slow),
    )
    .with_rho_full(Box::new(rho_full))
}

/// Scalar multirate test equation `y' = lambda y + zeta y` with the fast
/// part `lambda y`. Exact solution `exp((lambda + zeta) t) y0`, `y0 = 1`.
pub fn multirate_test(lambda: f64, zeta: f64) -> SplitSystem {
    assert!(lambda <= 0.0 && zeta <= 0.0);
    let fast = move |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = lambda * y[0];
    let slow = move |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = zeta * y[0];
    SplitSystem::new(
        1,
        vec![1.0],
        Box::new(fast),
        Box::new(slow),
        Box::new(move |_t, _y: &[f64]| lambda.abs()),
        Box::new(move |_t, _y: &[f64]| zeta.abs()),
    )
    .with_rho_full(Box::new(move |_t, _y: &[f64]| (lambda + zeta).abs()))
    .with_exact(Box::new(move |t| vec![((lambda + zeta) * t).exp()]))
}

/// Linear split system `y' = A_F y + A_S y + G(t)`, with the source counted
/// as part of the slow term. Part radii are estimated once at construction.
pub fn linear_system(
    a_fast: Csr,
    a_slow: Csr,
    source: Option<Box<dyn FnMut(f64, &mut [f64])>>,
    y0: Vec<f64>,
) -> Result<SplitSystem> {
    let n = a_fast.n;
    if a_slow.n != n || y0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if a_slow.n != n { a_slow.n } else { y0.len() },
        });
    }
    let rho_f = csr_radius(&a_fast);
    let rho_s = csr_radius(&a_slow);
    let full = {
        let mut sum_trips = Vec::new();
        for (m, _) in [(&a_fast, 0), (&a_slow, 1)] {
            for i in 0..n {
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    sum_trips.push((i, m.col_idx[k], m.values[k]));
                }
            }
        }
        Csr::from_triplets(n, &sum_trips)
    };
    let rho_a = csr_radius(&full);
    let mut src = source;
    let mut tmp = vec![0.0; n];
    let a_slow2 = a_slow.clone();
    let fast = move |_t: f64, y: &[f64], dy: &mut [f64]| a_fast.matvec(y, dy);
    let slow = move |t: f64, y: &[f64], dy: &mut [f64]| {
        a_slow2.matvec(y, dy);
        if let Some(g) = src.as_mut() {
            g(t, &mut tmp);
            for i in 0..n {
                dy[i] += tmp[i];
            }
        }
    };
    Ok(SplitSystem::new(
        n,
        y0,
        Box::new(fast),
        Box::new(slow),
        Box::new(move |_t, _y: &[f64]| rho_f),
        Box::new(move |_t, _y: &[f64]| rho_s),
    )
    .with_rho_full(Box::new(move |_t, _y: &[f64]| rho_a)))
}

/// Power-iteration radius of a CSR matrix (with the safety inflation).
pub fn csr_radius(a: &Csr) -> f64 {
    let mut op = |v: &[f64], out: &mut [f64]| a.matvec(v, out);
    spectral::power_radius(&mut op, a.n, 1e-4, 10_000).radius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robertson_fast_at_initial_state() {
        let mut sys = robertson();
        let y0 = sys.y0.clone();
        let mut out = [0.0; 3];
        sys.eval_fast(0.0, &y0, &mut out);
        assert!((out[1] + 0.02).abs() < 1e-15);
        assert_eq!(out[0], 0.0);
        assert_eq!(out[2], 0.0);
        assert_eq!(sys.evals_fast, 1);
    }

    #[test]
    fn robertson_split_sums_to_classical_rhs() {
        let mut sys = robertson();
        let mut state = 0.37_f64;
        let mut next = move || {
            // small deterministic LCG over (0, 1)
            state = (state * 9301.0 + 49297.0) % 233280.0 / 233280.0;
            state
        };
        for _ in 0..100 {
            let y = [next(), next() * 1e-4, next()];
            let (mut f, mut s) = ([0.0; 3], [0.0; 3]);
            sys.eval_fast(0.0, &y, &mut f);
            sys.eval_slow(0.0, &y, &mut s);
            let classical = [
                -0.04 * y[0] + 1e4 * y[1] * y[2],
                0.04 * y[0] - 1e4 * y[1] * y[2] - 3e7 * y[1] * y[1],
                3e7 * y[1] * y[1],
            ];
            let mut mass = 0.0;
            for i in 0..3 {
                let sum = f[i] + s[i];
                assert!((sum - classical[i]).abs() <= 1e-14 * (1.0 + classical[i].abs()));
                mass += sum;
            }
            assert!(mass.abs() <= 1e-9, "mass drift {mass}");
        }
    }

    #[test]
    fn multirate_test_radii_and_exact() {
        let mut sys = multirate_test(-1e4, -1e2);
        assert_eq!(sys.rho_fast(0.0, &[1.0]), 1e4);
        assert_eq!(sys.rho_slow(0.0, &[1.0]), 1e2);
        let e = (sys.exact.as_ref().unwrap())(1.0);
        assert!((e[0] - (-10100.0_f64).exp()).abs() < 1e-300);
        // degenerate case: both parts vanish
        let mut z = multirate_test(0.0, 0.0);
        let mut dy = [1.0];
        z.eval_fast(0.0, &[5.0], &mut dy);
        assert_eq!(dy[0], 0.0);
        z.eval_slow(0.0, &[5.0], &mut dy);
        assert_eq!(dy[0], 0.0);
    }

    #[test]
    fn linear_diagonal_system_matches_scalar_closed_form() {
        let af = Csr::from_triplets(2, &[(0, 0, -50.0), (1, 1, -8.0)]);
        let as_ = Csr::from_triplets(2, &[(0, 0, -1.0), (1, 1, -2.0)]);
        let mut sys = linear_system(af, as_, None, vec![1.0, 1.0]).unwrap();
        let mut dy = [0.0; 2];
        sys.eval_full(0.0, &[2.0, 3.0], &mut dy);
        assert_eq!(dy, [-102.0, -30.0]);
        let rf = sys.rho_fast(0.0, &[0.0, 0.0]);
        assert!((rf / 1.05 - 50.0).abs() <= 0.5);
    }

    #[test]
    fn linear_dimension_mismatch_rejected() {
        let af = Csr::from_triplets(2, &[(0, 0, 1.0)]);
        let as_ = Csr::from_triplets(3, &[(0, 0, 1.0)]);
        assert!(linear_system(af, as_, None, vec![0.0; 2]).is_err());
    }

    #[test]
    fn symmetric_radius_matches_dense_oracle() {
        use nalgebra::DMatrix;
        let n = 5;
        let mut trips = Vec::new();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = ((3 * i + 5 * j + 1) % 7) as f64 - 3.0;
                trips.push((i, j, v));
                if i != j {
                    trips.push((j, i, v));
                }
                dense[(i, j)] = v;
                dense[(j, i)] = v;
            }
        }
        let a = Csr::from_triplets(n, &trips);
        let rho = csr_radius(&a) / crate::spectral::SAFETY_INFLATION;
        let truth = dense
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        assert!((rho - truth).abs() <= 1e-3 * truth, "{rho} vs {truth}");
    }

    #[test]
    fn full_eval_counts_once() {
        let mut sys = robertson();
        let y0 = sys.y0.clone();
        let mut dy = [0.0; 3];
        sys.eval_full(0.0, &y0, &mut dy);
        assert_eq!((sys.evals_full, sys.evals_fast, sys.evals_slow), (1, 0, 0));
    }
}
