//! Beta-expansion dynamics for the bases β_{n,q}.
//!
//! β_{n,q} is the unique positive root of `x^n = q(x^{n-1} + … + x + 1)`.
//! The crate provides exact arithmetic in Q(β), the greedy digit map
//! `T(x) = βx - ⌊βx⌋`, the transfer (Perron–Frobenius) and Koopman operators
//! acting exactly on piecewise-constant functions, the invariant density,
//! the spectral data of the induced n×n matrix, piecewise-exponential
//! eigenfunctions of the transfer operator, and sampling-based checks of the
//! probabilistic statements built on top of them.

pub mod algnum;
pub mod error;
pub mod expansion;
pub mod fmt;
pub mod layers;
pub mod pcfun;
pub mod pexp;
pub mod selftest;
pub mod stochastic;

pub use algnum::{AlgNum, BetaContext};
pub use error::{Error, Result};

/// Crate version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
