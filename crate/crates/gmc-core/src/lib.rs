//! Adaptive two-stage Monte Carlo mean estimation with guaranteed small
//! error at high confidence on cone-shaped input classes, plus the
//! matching cost-bound calculators and a seeded experiment harness.
//!
//! The input class `Y_{p,q,K}` collects random variables whose centered
//! `L_q`-norm is at most `K` times their centered `L_p`-norm. On that
//! class the estimator first measures dispersion (a median of block
//! central-moment estimates), then sizes a median-of-means stage from the
//! measurement, so the total sample count adapts to the input while the
//! `(epsilon, delta)` accuracy guarantee holds uniformly over the cone.

pub mod bounds;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod streams;
pub mod tuner;
pub mod two_stage;

mod quad;
mod util;

pub use dist::{bernoulli_threshold_instance, ConeSpec, Distribution};
pub use error::{Error, Result};
pub use streams::{derive_stream, Stream};
pub use two_stage::{RunRecord, StagePlan};
