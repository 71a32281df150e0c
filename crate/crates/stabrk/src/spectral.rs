//! Spectral-radius estimation for linear operators and nonlinear Jacobian
//! actions, via power iteration.

/// Multiplicative safety factor applied to the raw estimate; underestimates
/// break stability, overestimates only cost stages.
pub const SAFETY_INFLATION: f64 = 1.05;

/// Result of a power iteration run. `radius` already carries the 5 percent
/// safety inflation.
#[derive(Debug, Clone, Copy)]
pub struct RadiusEstimate {
    pub radius: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates the dominant eigenvalue magnitude of the linear action `op`
/// (`op(v, out)` computes `out = A v`). Deterministic start vector:
/// all ones plus a unit perturbation on the first coordinate.
pub fn power_radius(
    op: &mut dyn FnMut(&[f64], &mut [f64]),
    n: usize,
    tol: f64,
    max_iter: usize,
) -> RadiusEstimate {
    assert!(n >= 1);
    let mut v = vec![1.0; n];
    v[0] = 2.0;
    let mut av = vec![0.0; n];
    let mut prev = 0.0f64;
    normalize(&mut v);
    for it in 1..=max_iter {
        op(&v, &mut av);
        let norm = l2(&av);
        if norm == 0.0 {
            return RadiusEstimate { radius: 0.0, converged: true, iterations: it };
        }
        let est = norm;
        std::mem::swap(&mut v, &mut av);
        normalize(&mut v);
        if it > 1 && (est - prev).abs() <= tol * est.abs() {
            return RadiusEstimate {
                radius: est * SAFETY_INFLATION,
                converged: true,
                iterations: it,
            };
        }
        prev = est;
    }
    RadiusEstimate {
        radius: prev * SAFETY_INFLATION,
        converged: false,
        iterations: max_iter,
    }
}

/// Spectral radius of the Jacobian of `f` at `(t, y)` via power iteration on
/// the finite-difference directional action
/// `v -> (f(y + delta v) - f(y)) / delta`. Cap 50 iterations, 1 percent
/// tolerance, 5 percent inflation.
pub fn nonlinear_radius(
    f: &mut dyn FnMut(f64, &[f64], &mut [f64]),
    t: f64,
    y: &[f64],
) -> RadiusEstimate {
    let n = y.len();
    let mut fy = vec![0.0; n];
    f(t, y, &mut fy);
    let ynorm = l2(y);
    let delta0 = (f64::EPSILON).sqrt() * (1.0 + ynorm);
    let mut yp = vec![0.0; n];
    let mut fp = vec![0.0; n];
    let mut action = |v: &[f64], out: &mut [f64]| {
        // v arrives normalized to unit length
        let delta = delta0;
        for i in 0..n {
            yp[i] = y[i] + delta * v[i];
        }
        f(t, &yp, &mut fp);
        for i in 0..n {
            out[i] = (fp[i] - fy[i]) / delta;
        }
    };
    power_radius(&mut action, n, 0.01, 50)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = l2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}
