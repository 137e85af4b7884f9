//! Adjusted Expected Shortfall engine.
//!
//! The central quantity is
//!
//! ```text
//! ES^g(X) = sup_{p in [0,1]} { ES_p(X) - g(p) }
//! ```
//!
//! for a loss `X` (positive values are losses) and a nondecreasing risk profile
//! `g : [0,1] -> (-inf, +inf]`. Loss distributions are finitely supported and
//! represented by their left-continuous quantile function ([`StepQuantile`]); all
//! three supported profile families have a piecewise-affine `h_g(p) = (1-p) g(p)`,
//! which makes the supremum an exact maximum over a finite breakpoint set.
//!
//! Modules:
//! - [`quantile`]: step quantiles, Gaussian losses, VaR / ES / ES curves.
//! - [`profile`]: risk profiles, the `h_g` transform, class membership and benchmark synthesis.
//! - [`adjusted`]: `ES^g`, acceptability, dual certificates, inf-convolution and related quantities.
//! - [`ssd`]: second-order stochastic dominance and SSD-based risk measures.
//! - [`market`]: finite complete-market model and closed-form optimizers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjusted;
pub mod error;
pub mod market;
pub mod normal;
pub mod profile;
pub mod quantile;
pub mod ssd;

pub use adjusted::{adjusted_es, is_acceptable, AdjustedEsResult};
pub use error::{Result, RiskError};
pub use profile::{ProfileClass, RiskProfile};
pub use quantile::{GaussianLoss, LossDistribution, StepQuantile};

/// Absolute tolerance used for equality and acceptability decisions.
pub const EXACT_TOL: f64 = 1e-12;
