//! Finite-n and asymptotic distributions of componentwise maxima of bivariate
//! Gaussian triangular arrays, and their higher-order expansions around the
//! Hüsler-Reiss max-stable limit.
//!
//! The crate is organised bottom-up:
//!
//! - [`gauss`]: univariate and bivariate standard normal distribution functions.
//! - [`norming`]: the norming constants `b_n` with `n(1 - Φ(b_n)) = 1` and the
//!   thresholds `u_n(x) = b_n + x / b_n`.
//! - [`hr`]: the Hüsler-Reiss distribution `H_λ` and the closed-form expansion
//!   coefficients (`s`, `t`, `κ`, `τ`, ...).
//! - [`triangular`]: correlation sequences, exact distributions of the row
//!   maxima and the error `Δ = F^n - H_λ`.
//! - [`oracle`]: adaptive quadrature and Monte Carlo used to cross-check the
//!   closed forms.
//! - [`study`]: convergence tables, CSV I/O and log-log rate fits.
//! - [`verify`]: the identity and oracle checks behind `hrx verify`.

// `!(a < b)` comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gauss;
pub mod hr;
pub mod norming;
pub mod oracle;
pub mod study;
pub mod triangular;
pub mod verify;

pub use error::{Error, Result};
pub use gauss::Correlation;
pub use hr::{ApproxOrder, HrParams, Lambda};
pub use norming::NormingConstant;
pub use triangular::{ArrayRow, RhoSequenceSpec};
