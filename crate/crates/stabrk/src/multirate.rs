//! Multirate stabilized steps: discrete averaged forces, stage selection and
//! the composed mRKC / mROCK2 macro steps.

use crate::cheb::{beta, RkcTableau};
use crate::error::{Error, Result};
use crate::norm::ScaledNorm;
use crate::problems::SplitSystem;
use crate::rkc::{self, rkc_step, DEFAULT_STAGE_CAP};
use crate::rock2::{self, rock2_step, Rock2Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Mrkc,
    Mrock2,
    /// mROCK2 with the relaxed micro step for scale-separated problems.
    Mrock2ScaleSep,
}

/// The resolved stage counts and micro step of one macro step.
#[derive(Debug, Clone, Copy)]
pub struct StageSelection {
    pub s: usize,
    pub m: usize,
    pub eta: f64,
    pub variant: Variant,
}

/// Solves the stability constraints for the smallest admissible stage
/// counts. The macro count `s` is independent of `m` and found first; the
/// micro count is then the smallest `m >= 2` whose recomputed micro step
/// satisfies the fast constraint (the micro step decreases in `m`, so the
/// first hit is minimal).
pub fn get_stages(
    variant: Variant,
    tau: f64,
    rho_s: f64,
    rho_f: f64,
    eps: f64,
) -> Result<StageSelection> {
    assert!(tau > 0.0 && rho_s >= 0.0 && rho_f >= 0.0);
    let b = beta(eps);
    // macro stage count and the micro-step scale c with eta = c m^2/(m^2-1)
    let (s, c) = match variant {
        Variant::Mrkc => {
            let s = rkc::rkc_stage_count(tau * rho_s, eps);
            if s > DEFAULT_STAGE_CAP {
                return Err(Error::StageCapExceeded { required: s, cap: DEFAULT_STAGE_CAP });
            }
            (s, 6.0 * tau / (b * (s * s) as f64))
        }
        Variant::Mrock2 | Variant::Mrock2ScaleSep => {
            let tab = rock2::default_ladder().tableau_for_length(1.35 * tau * rho_s)?;
            (tab.s, 6.0 * tau / tab.ell)
        }
    };
    let eta_of = |m: usize| -> f64 {
        let mf = (m * m) as f64;
        // the micro step must follow the formula exactly: shortening it
        // under-damps the averaged force and pushes the macro polynomial
        // outside its stability domain (it may exceed tau at tiny stage
        // counts, which is harmless)
        match variant {
            // relaxed micro step, independent of m
            Variant::Mrock2ScaleSep => c * 2.8 / 6.0,
            // the m-dependence keeps the averaged force second-order exact
            _ => c * mf / (mf - 1.0),
        }
    };
    let mut m = 2;
    loop {
        let eta = eta_of(m);
        if eta * rho_f <= b * (m * m) as f64 * (1.0 + 1e-12) {
            return Ok(StageSelection { s, m, eta, variant });
        }
        m += 1;
        if m > DEFAULT_STAGE_CAP {
            return Err(Error::StageCapExceeded { required: m, cap: DEFAULT_STAGE_CAP });
        }
    }
}

/// Scratch buffers for the averaged-force evaluations.
#[derive(Debug, Default)]
pub struct ForceWorkspace {
    fs: Vec<f64>,
    fbar1: Vec<f64>,
    shifted: Vec<f64>,
    u: Vec<f64>,
    micro: rkc::Workspace,
}

impl ForceWorkspace {
    pub fn new(n: usize) -> Self {
        ForceWorkspace {
            fs: vec![0.0; n],
            fbar1: vec![0.0; n],
            shifted: vec![0.0; n],
            u: vec![0.0; n],
            micro: rkc::Workspace::new(n),
        }
    }

    fn resize(&mut self, n: usize) {
        self.fs.resize(n, 0.0);
        self.fbar1.resize(n, 0.0);
        self.shifted.resize(n, 0.0);
        self.u.resize(n, 0.0);
    }
}

/// First-order averaged force: solves the auxiliary fast system
/// `u' = f_F(u) + f_S(t, y)` over `[0, eta]` with one `micro.m`-stage RKC
/// step and returns `(u_eta - y)/eta`. Exactly `m` evaluations of the fast
/// part and one of the slow part.
pub fn averaged_force_1(
    sys: &mut SplitSystem,
    t: f64,
    y: &[f64],
    eta: f64,
    micro: &RkcTableau,
    ws: &mut ForceWorkspace,
    out: &mut [f64],
) -> Result<()> {
    assert!(eta > 0.0);
    let n = y.len();
    ws.resize(n);
    sys.eval_slow(t, y, &mut ws.fs);
    let ForceWorkspace { fs, u, micro: mws, .. } = ws;
    let mut g = |tt: f64, uu: &[f64], du: &mut [f64]| {
        sys.eval_fast(tt, uu, du);
        for i in 0..n {
            du[i] += fs[i];
        }
    };
    rkc_step(&mut g, t, y, eta, micro, mws, u)?;
    for i in 0..n {
        out[i] = (u[i] - y[i]) / eta;
    }
    Ok(())
}

/// Second-order averaged force: computes the first-order force, then solves
/// `v' = f_F(v - (alpha_m eta / 2) fbar_1) + f_S(t, y)` and returns
/// `(v_eta - y)/eta`. Exactly `2m` fast and one slow evaluation; the slow
/// part is frozen once and shared by both solves.
pub fn averaged_force_2(
    sys: &mut SplitSystem,
    t: f64,
    y: &[f64],
    eta: f64,
    micro: &RkcTableau,
    ws: &mut ForceWorkspace,
    out: &mut [f64],
) -> Result<()> {
    assert!(eta > 0.0);
    let n = y.len();
    ws.resize(n);
    sys.eval_slow(t, y, &mut ws.fs);
    {
        let ForceWorkspace { fs, u, fbar1, micro: mws, .. } = &mut *ws;
        let mut g = |tt: f64, uu: &[f64], du: &mut [f64]| {
            sys.eval_fast(tt, uu, du);
            for i in 0..n {
                du[i] += fs[i];
            }
        };
        rkc_step(&mut g, t, y, eta, micro, mws, u)?;
        for i in 0..n {
            fbar1[i] = (u[i] - y[i]) / eta;
        }
    }
    let shift = 0.5 * micro.alpha_m * eta;
    let ForceWorkspace { fs, u, fbar1, shifted, micro: mws } = ws;
    let mut g2 = |tt: f64, vv: &[f64], dv: &mut [f64]| {
        for i in 0..n {
            shifted[i] = vv[i] - shift * fbar1[i];
        }
        sys.eval_fast(tt, shifted, dv);
        for i in 0..n {
            dv[i] += fs[i];
        }
    };
    rkc_step(&mut g2, t, y, eta, micro, mws, u)?;
    for i in 0..n {
        out[i] = (u[i] - y[i]) / eta;
    }
    Ok(())
}

/// Scratch buffers for the composed macro steps.
#[derive(Debug, Default)]
pub struct MultirateWorkspace {
    force: ForceWorkspace,
    macro_rkc: rkc::Workspace,
    macro_rock2: Rock2Workspace,
}

impl MultirateWorkspace {
    pub fn new(n: usize) -> Self {
        MultirateWorkspace {
            force: ForceWorkspace::new(n),
            macro_rkc: rkc::Workspace::new(n),
            macro_rock2: Rock2Workspace::new(n),
        }
    }
}

/// One mRKC macro step: an `s`-stage RKC step applied to the first-order
/// averaged force. Per step: `s` slow and `m s` fast evaluations.
pub fn mrkc_step(
    sys: &mut SplitSystem,
    t: f64,
    y: &[f64],
    tau: f64,
    eps: f64,
    ws: &mut MultirateWorkspace,
    out: &mut [f64],
) -> Result<StageSelection> {
    let safety = crate::driver::STAGE_SAFETY;
    let rho_s = safety * sys.rho_slow(t, y);
    let rho_f = safety * sys.rho_fast(t, y);
    let sel = get_stages(Variant::Mrkc, tau, rho_s, rho_f, eps)?;
    let macro_tab = RkcTableau::new(sel.s, eps);
    let micro_tab = RkcTableau::new(sel.m, eps);
    let MultirateWorkspace { force, macro_rkc, .. } = ws;
    let mut failure: Option<Error> = None;
    let mut rhs = |tt: f64, yy: &[f64], dy: &mut [f64]| {
        if failure.is_some() {
            dy.fill(0.0);
            return;
        }
        if let Err(e) = averaged_force_1(sys, tt, yy, sel.eta, &micro_tab, force, dy) {
            failure = Some(e);
            dy.fill(0.0);
        }
    };
    let res = rkc_step(&mut rhs, t, y, tau, &macro_tab, macro_rkc, out);
    if let Some(e) = failure {
        return Err(e);
    }
    res?;
    Ok(sel)
}

/// One mROCK2 macro step: a degree-`s` ROCK2 step applied to the
/// second-order averaged force; returns the embedded error estimate along
/// with the stage selection. Per step: `s` slow and `2 m s` fast
/// evaluations.
pub fn mrock2_step(
    sys: &mut SplitSystem,
    t: f64,
    y: &[f64],
    tau: f64,
    eps: f64,
    scale_sep: bool,
    norm: &ScaledNorm,
    ws: &mut MultirateWorkspace,
    out: &mut [f64],
) -> Result<(f64, StageSelection)> {
    let safety = crate::driver::STAGE_SAFETY;
    let rho_s = safety * sys.rho_slow(t, y);
    let rho_f = safety * sys.rho_fast(t, y);
    let variant = if scale_sep { Variant::Mrock2ScaleSep } else { Variant::Mrock2 };
    let sel = get_stages(variant, tau, rho_s, rho_f, eps)?;
    let macro_tab = rock2::default_ladder().tableau(sel.s)?;
    let micro_tab = RkcTableau::new(sel.m, eps);
    let MultirateWorkspace { force, macro_rock2, .. } = ws;
    let mut failure: Option<Error> = None;
    let mut rhs = |tt: f64, yy: &[f64], dy: &mut [f64]| {
        if failure.is_some() {
            dy.fill(0.0);
            return;
        }
        if let Err(e) = averaged_force_2(sys, tt, yy, sel.eta, &micro_tab, force, dy) {
            failure = Some(e);
            dy.fill(0.0);
        }
    };
    let res = rock2_step(&mut rhs, t, y, tau, macro_tab, norm, macro_rock2, out);
    if let Some(e) = failure {
        return Err(e);
    }
    let err = res?;
    Ok((err, sel))
}
