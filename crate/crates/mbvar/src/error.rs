use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trade tick: {0}")]
    InvalidTick(String),

    #[error("invalid tape: {0}")]
    InvalidTape(String),

    /// A statistic is undefined because the tape carries no usable
    /// value or volume mass.
    #[error("degenerate tape: {0}")]
    DegenerateTape(String),

    /// The value-volume correlation constant is undefined because one of
    /// the coefficients of variation vanishes.
    #[error("correlation constant undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("security mismatch: {0}")]
    MissingSecurity(String),

    #[error("weight mismatch: {0}")]
    WeightMismatch(String),

    /// A current-to-base volume-share ratio is undefined because the base
    /// share is zero.
    #[error("zero volume share for security {0}")]
    ZeroShare(String),

    #[error("span mismatch: {0}")]
    SpanMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("zero-volume trade for security {security} at tick {tick}")]
    ZeroVolume { security: String, tick: usize },

    #[error("liquidity check failed: {0}")]
    LiquidityFailure(String),

    /// Two algebraically equivalent computation routes disagreed beyond
    /// tolerance, or a quantity violated a structural bound.
    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
