//! Explicit stabilized and multirate time integrators.
//!
//! Implements the first-order RKC and second-order ROCK2 stabilized
//! Runge-Kutta methods, and their multirate counterparts mRKC and mROCK2
//! built on discrete averaged forces, together with step-size control,
//! closed-form scalar analysis tools, spectral-radius estimation and a
//! problem suite (Robertson kinetics and locally refined parabolic FEM
//! systems).

pub mod analysis;
pub mod cheb;
pub mod driver;
pub mod error;
pub mod fem2d;
pub mod multirate;
pub mod norm;
pub mod problems;
pub mod rkc;
pub mod rock2;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
