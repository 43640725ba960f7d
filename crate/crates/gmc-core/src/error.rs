//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample block is empty")]
    EmptyBlock,

    #[error("median requires an odd number of values, got {0}")]
    MedianNeedsOddLength(usize),

    #[error("unbiased variance requires at least 2 values, got {0}")]
    VarianceNeedsTwo(usize),

    #[error("sample count {got} does not match k*m = {expected}")]
    BlockLengthMismatch { expected: usize, got: usize },

    #[error("mean does not exist: {0}")]
    MeanUndefined(String),

    #[error("central absolute moment of order {order} does not exist: {reason}")]
    MomentUndefined { order: f64, reason: String },

    #[error("kappa undefined: distribution has zero central norm")]
    KappaUndefined,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("scale/shift unsupported for this family: {0}")]
    UnsupportedScaleShift(String),

    #[error("hypotheses indistinguishable: the two laws are identical")]
    IndistinguishableHypotheses,

    #[error("instance does not violate the cone (kappa = {kappa} <= K' = {bound})")]
    InstanceInsideCone { kappa: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
