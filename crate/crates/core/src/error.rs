use thiserror::Error;

/// Errors produced by acquisition, filtering, recovery and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `x - y` is not a multiple of `2λ` at `index`.
    #[error("inconsistent pair at index {index}: residual is {deviation:e} away from the 2λ lattice")]
    InconsistentPair { index: usize, deviation: f64 },

    #[error("carriers {first} and {second} collide after reduction modulo the sampling rate")]
    AliasCollision { first: usize, second: usize },

    #[error("degenerate filter: leading tap is zero")]
    DegenerateFilter,

    #[error("sampling period too slow for a contractive filter; need T_S < {max_sample_period:e} s")]
    RateTooSlow { max_sample_period: f64 },

    #[error("fold detected inside the warm-up prefix at index {index} (filtered magnitude {magnitude:e})")]
    WarmupViolation { index: usize, magnitude: f64 },

    #[error("filter order too small: filtered magnitude {observed_max:e} reached λ at fold-free index {index}")]
    OrderTooSmall { index: usize, observed_max: f64 },

    #[error("filter needs {taps} taps, cap is {cap}")]
    TooManyTaps { taps: usize, cap: usize },

    #[error("band of width {band_width:e} rad/s is wider than the sampling rate {sampling_rate:e} rad/s")]
    BandTooWide { band_width: f64, sampling_rate: f64 },

    #[error("{path}:{line}: {message}")]
    Ingest {
        path: String,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
