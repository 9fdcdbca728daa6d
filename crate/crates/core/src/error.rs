use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no replicates")]
    NoReplicates,
    #[error("log of nonpositive value: {0}")]
    LogOfNonpositive(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("quadrature did not converge: achieved tolerance {achieved:e}")]
    Quadrature { achieved: f64 },
    #[error("truth outside support: |beta| = {beta} > a = {a}")]
    TruthOutsideSupport { beta: f64, a: f64 },
    #[error("estimator not shrinking enough to attack")]
    NotShrinking,
    #[error("empty selection")]
    EmptySelection,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("zero variance in cross-correlation")]
    ZeroVariance,
    #[error("sampling probability is zero at sampled index {0}")]
    ZeroProbability(usize),
    #[error("empty block {0}")]
    EmptyBlock(usize),
    #[error("problem size {size} exceeds guard {limit}")]
    SizeGuard { size: usize, limit: usize },
    #[error("linear program is unbounded")]
    Unbounded,
}

impl Error {
    /// Errors raised by numerical guards (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::ZeroDenominator
                | Error::ZeroVariance
                | Error::NotShrinking
                | Error::EmptySelection
                | Error::SizeGuard { .. }
                | Error::Unbounded
                | Error::LogOfNonpositive(_)
        )
    }
}
