//! Oscillation tests for linear delay differential equations
//!
//! ```text
//! x'(t) + sum_i p_i(t) x(tau_i(t)) = 0,    tau_i(t) = t - d_i(t)
//! ```
//!
//! with periodic piecewise-linear coefficients `p_i >= 0` and lags `d_i > 0`.
//!
//! The crate computes the envelope `h(t) = max_i sup_{s <= t} tau_i(s)`, the
//! iterated kernels `a_r(t, s)`, the integrals `F_inner` / `F_outer` and their
//! limits superior and inferior, and compares them against the classical and
//! iterated sufficient conditions for oscillation. A fixed-step RK4 simulator
//! gives numerical evidence to check the verdicts against.
//!
//! ```no_run
//! use dde_oscillation::{config::load_equation, criteria::{check_all, CheckOptions}};
//!
//! let eq = load_equation("data/two_delay_sawtooth.json".as_ref()).unwrap();
//! let report = check_all(&eq, &CheckOptions::default()).unwrap();
//! println!("{:?}", report.overall);
//! ```

pub mod cli;
pub mod config;
pub mod criteria;
pub mod envelope;
pub mod error;
pub mod extremum;
pub mod kernel;
pub mod model;
pub mod quadrature;
pub mod sim;

pub use error::{Error, Result};
pub use model::{DelayEquation, PiecewisePeriodic};
