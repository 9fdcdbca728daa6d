//! Simulation laboratory for estimators in high-dimensional models.
//!
//! The crate pairs simple frequentist estimators (Horvitz-Thompson, linear and
//! unbiased quadratic functionals, pair-difference regression, sufficient-statistic
//! sums) with their Bayesian counterparts and measures where the two diverge:
//! accumulated plug-in bias, adversarial functionals, spurious cross-correlation
//! of independent non-ergodic sequences, and correlated stopping times. A small
//! finite-game solver builds least-favorable priors constructively.
//!
//! Monte Carlo replicates run on rayon when the `parallel` feature is on (the
//! default); every replicate owns a counter-based random stream keyed by its
//! index, so results are bit-identical for any thread count.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod adversarial;
pub mod bayes;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod games;
pub mod harness;
pub mod numerics;
pub mod partial_linear;
pub mod sequence;
pub mod stopping;
pub mod stratified;

pub use error::{Error, Result};
pub use harness::{derive_stream, rate_slope, summarize, McSummary, RngStream};
