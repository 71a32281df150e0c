//! Integration loops: fixed-step and adaptive drivers, the step-size
//! controller with memory, and evaluation statistics.

use crate::cheb::RkcTableau;
use crate::error::{Error, Result};
use crate::multirate::{self, MultirateWorkspace};
use crate::norm::ScaledNorm;
use crate::problems::SplitSystem;
use crate::rkc::{self, rkc_step, DEFAULT_STAGE_CAP};
use crate::rock2::{self, rock2_step, Rock2Workspace};

pub const SAFETY: f64 = 0.8;
pub const MAX_GROWTH: f64 = 2.0;
pub const MIN_SHRINK: f64 = 0.1;
/// Default damping for all stabilized tableaus.
pub const DEFAULT_EPS: f64 = 0.05;

/// Margin applied to `tau * rho` when sizing single-rate stage counts. The
/// radius is estimated at the step's start state; on nonlinear problems it
/// drifts during the step, and sizing at the exact stability boundary lets
/// stiff modes amplify.
pub const STAGE_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rkc,
    Rock2,
    Mrkc,
    Mrock2,
    /// mROCK2 with the relaxed micro step.
    Mrock2ScaleSep,
}

impl Method {
    pub fn parse(name: &str) -> Option<Method> {
        match name {
            "rkc" => Some(Method::Rkc),
            "rock2" => Some(Method::Rock2),
            "mrkc" => Some(Method::Mrkc),
            "mrock2" => Some(Method::Mrock2),
            "mrock2-scale-sep" => Some(Method::Mrock2ScaleSep),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Rkc => "rkc",
            Method::Rock2 => "rock2",
            Method::Mrkc => "mrkc",
            Method::Mrock2 => "mrock2",
            Method::Mrock2ScaleSep => "mrock2-scale-sep",
        }
    }

    fn has_estimator(&self) -> bool {
        matches!(self, Method::Rock2 | Method::Mrock2 | Method::Mrock2ScaleSep)
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Control {
    Fixed { tau: f64 },
    Adaptive { rtol: f64, atol: f64, tau0: Option<f64> },
}

/// Per-attempt record: stage counts, the step taken and the scaled error
/// estimate (where the method has one).
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub t: f64,
    pub tau: f64,
    pub s: usize,
    /// Micro stage count; `None` for single-rate methods.
    pub m: Option<usize>,
    pub eta: Option<f64>,
    pub err: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Default)]
pub struct IntegrationStats {
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    pub evals_fs: u64,
    pub evals_ff: u64,
    /// Full-rhs evaluations (single-rate methods).
    pub evals_f: u64,
    pub stage_history: Vec<StepRecord>,
    pub final_time: f64,
}

impl IntegrationStats {
    /// Total right-hand-side work: counts a full evaluation once and part
    /// evaluations individually.
    pub fn total_evals(&self) -> u64 {
        self.evals_f + self.evals_fs + self.evals_ff
    }
}

/// Step-size proposal with memory. `err` values are tolerance-scaled
/// (acceptance threshold 1). On the first step or directly after a
/// rejection only the conventional proposal is used.
pub fn propose_step(
    tau_n: f64,
    tau_prev: f64,
    err_new: f64,
    err_prev: f64,
    first_or_rejected: bool,
) -> Result<f64> {
    if tau_n <= 0.0 || tau_prev <= 0.0 || err_new <= 0.0 || err_prev <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "propose_step needs positive inputs (tau_n={tau_n}, tau_prev={tau_prev}, \
             err_new={err_new}, err_prev={err_prev})"
        )));
    }
    let conventional = SAFETY * tau_n / err_new.sqrt();
    let proposal = if first_or_rejected {
        conventional
    } else {
        let memory = conventional * (tau_n / tau_prev) * (err_prev / err_new).sqrt();
        conventional.min(memory)
    };
    Ok(proposal.clamp(MIN_SHRINK * tau_n, MAX_GROWTH * tau_n))
}

/// Optional per-accepted-step observer: `(t, y, err, s, m, eta)`.
pub type Sink<'a> = &'a mut dyn FnMut(f64, &[f64], f64, usize, usize, f64);

struct Stepper {
    method: Method,
    eps: f64,
    norm: ScaledNorm,
    mr_ws: MultirateWorkspace,
    rkc_ws: rkc::Workspace,
    rock2_ws: Rock2Workspace,
}

struct Attempt {
    s: usize,
    m: Option<usize>,
    eta: Option<f64>,
    err: Option<f64>,
}

impl Stepper {
    fn step(
        &mut self,
        sys: &mut SplitSystem,
        t: f64,
        y: &[f64],
        tau: f64,
        out: &mut [f64],
    ) -> Result<Attempt> {
        match self.method {
            Method::Rkc => {
                let rho = sys.rho_full(t, y);
                let m = rkc::rkc_stage_count(STAGE_SAFETY * tau * rho, self.eps);
                if m > DEFAULT_STAGE_CAP {
                    return Err(Error::StageCapExceeded { required: m, cap: DEFAULT_STAGE_CAP });
                }
                let tab = RkcTableau::new(m, self.eps);
                let mut f = |tt: f64, yy: &[f64], dy: &mut [f64]| sys.eval_full(tt, yy, dy);
                rkc_step(&mut f, t, y, tau, &tab, &mut self.rkc_ws, out)?;
                Ok(Attempt { s: m, m: None, eta: None, err: None })
            }
            Method::Rock2 => {
                let rho = sys.rho_full(t, y);
                let tab =
                    rock2::default_ladder().tableau_for_length(STAGE_SAFETY * tau * rho)?;
                let mut f = |tt: f64, yy: &[f64], dy: &mut [f64]| sys.eval_full(tt, yy, dy);
                let err =
                    rock2_step(&mut f, t, y, tau, tab, &self.norm, &mut self.rock2_ws, out)?;
                Ok(Attempt { s: tab.s, m: None, eta: None, err: Some(err) })
            }
            Method::Mrkc => {
                let sel =
                    multirate::mrkc_step(sys, t, y, tau, self.eps, &mut self.mr_ws, out)?;
                Ok(Attempt { s: sel.s, m: Some(sel.m), eta: Some(sel.eta), err: None })
            }
            Method::Mrock2 | Method::Mrock2ScaleSep => {
                let scale_sep = self.method == Method::Mrock2ScaleSep;
                let (err, sel) = multirate::mrock2_step(
                    sys,
                    t,
                    y,
                    tau,
                    self.eps,
                    scale_sep,
                    &self.norm,
                    &mut self.mr_ws,
                    out,
                )?;
                Ok(Attempt { s: sel.s, m: Some(sel.m), eta: Some(sel.eta), err: Some(err) })
            }
        }
    }
}

/// Integrates `sys` from `t0` to `t_end`, starting at `y0`.
///
/// Fixed mode takes uniform steps with a truncated final step landing on
/// `t_end` exactly. Adaptive mode (second-order methods only) accepts a step
/// iff the scaled error is at most 1 and retries rejected steps with the
/// conventional proposal.
pub fn integrate(
    sys: &mut SplitSystem,
    method: Method,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    control: Control,
    mut sink: Option<Sink<'_>>,
) -> Result<(Vec<f64>, IntegrationStats)> {
    assert!(t_end > t0, "t_end must exceed t0");
    let n = y0.len();
    let mut stepper = Stepper {
        method,
        eps: DEFAULT_EPS,
        norm: match control {
            Control::Adaptive { rtol, atol, .. } => ScaledNorm::new(atol, rtol),
            Control::Fixed { .. } => ScaledNorm::new(1e-6, 1e-6),
        },
        mr_ws: MultirateWorkspace::new(n),
        rkc_ws: rkc::Workspace::new(n),
        rock2_ws: Rock2Workspace::new(n),
    };
    let mut stats = IntegrationStats::default();
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut t = t0;
    let span = t_end - t0;
    let eps_t = 1e-12 * span.max(t_end.abs());

    let record =
        |stats: &mut IntegrationStats, t: f64, tau: f64, a: &Attempt, accepted: bool| {
            stats.stage_history.push(StepRecord {
                t,
                tau,
                s: a.s,
                m: a.m,
                eta: a.eta,
                err: a.err,
                accepted,
            });
            if accepted {
                stats.steps_accepted += 1;
            } else {
                stats.steps_rejected += 1;
            }
        };

    match control {
        Control::Fixed { tau } => {
            assert!(tau > 0.0);
            while t < t_end - eps_t {
                let step = tau.min(t_end - t);
                let a = stepper.step(sys, t, &y, step, &mut y_new)?;
                t += step;
                std::mem::swap(&mut y, &mut y_new);
                record(&mut stats, t, step, &a, true);
                if let Some(sink) = sink.as_mut() {
                    sink(
                        t,
                        &y,
                        a.err.unwrap_or(f64::NAN),
                        a.s,
                        a.m.unwrap_or(0),
                        a.eta.unwrap_or(f64::NAN),
                    );
                }
            }
            t = t_end;
        }
        Control::Adaptive { tau0, .. } => {
            if !method.has_estimator() {
                return Err(Error::AdaptiveUnsupported { method: method.name() });
            }
            let tau_min = 1e-12 * span;
            let mut tau = tau0.unwrap_or(1e-4 * span).min(span);
            let mut tau_prev = tau;
            let mut err_prev = 1.0;
            let mut fresh = true; // first step or just rejected
            while t < t_end - eps_t {
                let step = tau.min(t_end - t);
                let a = match stepper.step(sys, t, &y, step, &mut y_new) {
                    Ok(a) => a,
                    // the controller grew the step past the stage budget:
                    // treat it like a rejection and retry at half the step
                    Err(
                        Error::DegreeOutOfRange { .. } | Error::StageCapExceeded { .. },
                    ) => {
                        tau = 0.5 * step;
                        fresh = true;
                        if tau < tau_min {
                            return Err(Error::StepUnderflow { tau, tau_min, t });
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let err = a.err.expect("adaptive methods carry an estimate").max(1e-10);
                let accepted = err <= 1.0;
                record(&mut stats, t, step, &a, accepted);
                let next = propose_step(step, tau_prev, err, err_prev, fresh)?;
                if accepted {
                    t += step;
                    std::mem::swap(&mut y, &mut y_new);
                    if let Some(sink) = sink.as_mut() {
                        sink(t, &y, err, a.s, a.m.unwrap_or(0), a.eta.unwrap_or(f64::NAN));
                    }
                    tau_prev = step;
                    err_prev = err;
                    fresh = false;
                } else {
                    fresh = true;
                }
                tau = next;
                if tau < tau_min {
                    return Err(Error::StepUnderflow { tau, tau_min, t });
                }
            }
            t = t_end;
        }
    }

    stats.final_time = t;
    stats.evals_fs = sys.evals_slow;
    stats.evals_ff = sys.evals_fast;
    stats.evals_f = sys.evals_full;
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{multirate_test, robertson};

    #[test]
    fn propose_step_worked_example() {
        // equal errors and steps: both proposals coincide
        let p = propose_step(0.1, 0.1, 0.5, 0.5, false).unwrap();
        assert!((p - 0.11313708498984761).abs() < 1e-15);
        // unit error on the first step: safety factor alone
        let p = propose_step(0.2, 0.2, 1.0, 0.3, true).unwrap();
        assert!((p - 0.16).abs() < 1e-15);
        // growing error history: memory term dominates (is smaller)
        let conventional = SAFETY * 0.1 / 0.8_f64.sqrt();
        let memory = conventional * (0.2_f64 / 0.8).sqrt();
        let p = propose_step(0.1, 0.1, 0.8, 0.2, false).unwrap();
        assert!((p - memory).abs() < 1e-15);
        assert!(memory < conventional);
        // invalid inputs
        assert!(propose_step(-0.1, 0.1, 0.5, 0.5, false).is_err());
        assert!(propose_step(0.1, 0.1, 0.0, 0.5, false).is_err());
    }

    #[test]
    fn propose_step_clamps() {
        // tiny error would triple the step; clamped to the growth cap
        let p = propose_step(1.0, 1.0, 1e-6, 1e-6, true).unwrap();
        assert_eq!(p, MAX_GROWTH);
        // huge error shrinks at most tenfold
        let p = propose_step(1.0, 1.0, 1e6, 1e6, true).unwrap();
        assert_eq!(p, MIN_SHRINK);
    }

    #[test]
    fn zero_rhs_all_methods() {
        for method in [Method::Rkc, Method::Rock2, Method::Mrkc, Method::Mrock2] {
            let mut sys = multirate_test(0.0, 0.0);
            let (y, stats) = integrate(
                &mut sys,
                method,
                0.0,
                &[3.5],
                1.0,
                Control::Fixed { tau: 0.25 },
                None,
            )
            .unwrap();
            assert!((y[0] - 3.5).abs() < 1e-13, "{method:?}");
            assert_eq!(stats.final_time, 1.0);
            assert_eq!(stats.steps_accepted, 4);
        }
    }

    #[test]
    fn fixed_mode_lands_exactly() {
        let mut sys = multirate_test(-100.0, -1.0);
        let (_, stats) = integrate(
            &mut sys,
            Method::Mrock2,
            0.0,
            &[1.0],
            1.0,
            Control::Fixed { tau: 0.3 },
            None,
        )
        .unwrap();
        assert_eq!(stats.final_time, 1.0);
        assert_eq!(stats.steps_accepted, 4); // 0.3 + 0.3 + 0.3 + 0.1
        let last = stats.stage_history.last().unwrap();
        assert!((last.tau - 0.1).abs() < 1e-12);
    }

    #[test]
    fn scalar_accuracy_single_and_multirate() {
        // moderately stiff scalar problem, exact solution known
        for method in [Method::Rock2, Method::Mrock2] {
            let mut sys = multirate_test(-200.0, -2.0);
            let exact = (-202.0_f64 * 1.0).exp();
            let (y, _) = integrate(
                &mut sys,
                method,
                0.0,
                &[1.0],
                1.0,
                Control::Fixed { tau: 1.0 / 512.0 },
                None,
            )
            .unwrap();
            assert!(
                (y[0] - exact).abs() < 1e-6,
                "{method:?}: {} vs {exact}",
                y[0]
            );
        }
    }

    #[test]
    fn adaptive_rejects_first_order_methods() {
        let mut sys = multirate_test(-1.0, -1.0);
        let err = integrate(
            &mut sys,
            Method::Mrkc,
            0.0,
            &[1.0],
            1.0,
            Control::Adaptive { rtol: 1e-4, atol: 1e-4, tau0: None },
            None,
        );
        assert!(matches!(err, Err(Error::AdaptiveUnsupported { .. })));
    }

    #[test]
    fn adaptive_robertson_completes_with_stats() {
        let mut sys = robertson();
        let y0 = sys.y0.clone();
        let (y, stats) = integrate(
            &mut sys,
            Method::Mrock2,
            0.0,
            &y0,
            100.0,
            Control::Adaptive { rtol: 1e-4, atol: 1e-4, tau0: None },
            None,
        )
        .unwrap();
        assert_eq!(stats.final_time, 100.0);
        assert!(stats.steps_accepted > 10);
        assert!(y.iter().all(|v| v.is_finite() && *v >= -1e-6));
        // the averaged force is not exactly conservative, so mass drifts
        // only at the tolerance scale
        let mass: f64 = y.iter().sum();
        let mass0: f64 = y0.iter().sum();
        assert!((mass - mass0).abs() < 1e-3, "mass {mass} vs {mass0}");
    }

    #[test]
    fn counter_audit_matches_stage_history() {
        for (method, fixed) in [(Method::Mrkc, true), (Method::Mrock2, false)] {
            let mut sys = robertson();
            let y0 = sys.y0.clone();
            let control = if fixed {
                Control::Fixed { tau: 0.5 }
            } else {
                Control::Adaptive { rtol: 1e-5, atol: 1e-5, tau0: None }
            };
            let (_, stats) =
                integrate(&mut sys, method, 0.0, &y0, 10.0, control, None).unwrap();
            let mut want_fs = 0u64;
            let mut want_ff = 0u64;
            for rec in &stats.stage_history {
                let m = rec.m.unwrap() as u64;
                want_fs += rec.s as u64;
                want_ff += match method {
                    Method::Mrkc => m * rec.s as u64,
                    _ => 2 * m * rec.s as u64,
                };
            }
            assert_eq!(stats.evals_fs, want_fs, "{method:?}");
            assert_eq!(stats.evals_ff, want_ff, "{method:?}");
            assert_eq!(stats.evals_f, 0);
        }
    }

    #[test]
    fn deterministic_repeat_runs() {
        let run = || {
            let mut sys = robertson();
            let y0 = sys.y0.clone();
            integrate(
                &mut sys,
                Method::Mrock2,
                0.0,
                &y0,
                50.0,
                Control::Adaptive { rtol: 1e-4, atol: 1e-6, tau0: None },
                None,
            )
            .unwrap()
        };
        let (y1, s1) = run();
        let (y2, s2) = run();
        assert_eq!(y1, y2);
        assert_eq!(s1.steps_accepted, s2.steps_accepted);
        assert_eq!(s1.steps_rejected, s2.steps_rejected);
    }

    #[test]
    fn sink_sees_every_accepted_step() {
        let mut sys = robertson();
        let y0 = sys.y0.clone();
        let mut seen = Vec::new();
        let mut sink = |t: f64, _y: &[f64], _e: f64, s: usize, m: usize, _eta: f64| {
            seen.push((t, s, m));
        };
        let (_, stats) = integrate(
            &mut sys,
            Method::Mrkc,
            0.0,
            &y0,
            5.0,
            Control::Fixed { tau: 1.0 },
            Some(&mut sink),
        )
        .unwrap();
        assert_eq!(seen.len() as u64, stats.steps_accepted);
        assert_eq!(seen.last().unwrap().0, 5.0);
    }
}
