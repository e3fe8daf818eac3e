use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the analysis kernels and the panel reader.
///
/// Scalar payloads are carried as `f64` regardless of the working scalar
/// type; they are diagnostics, not data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mass vector has length {0}, expected 366")]
    BadLength(usize),

    #[error("negative mass {value:e} at lead {lead}")]
    NegativeMass { lead: usize, value: f64 },

    #[error("mass sums to {0} which is outside the renormalization band")]
    SumOutOfTolerance(f64),

    #[error("threshold {0} outside the lead-time support")]
    ThresholdOutOfRange(usize),

    #[error("empty input")]
    EmptyInput,

    #[error("mixed metrics in pooled input")]
    MixedMetrics,

    #[error("dates not strictly increasing at position {0}")]
    UnsortedDates(usize),

    #[error("duplicate date at position {0}")]
    DuplicateDates(usize),

    #[error("series too short: need {needed}, got {actual}")]
    SeriesTooShort { needed: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cdf decreases at index {0}")]
    NonMonotoneCdf(usize),

    #[error("cdf does not terminate at 1 (last entry {0})")]
    CdfNotTerminatingAtOne(f64),

    #[error("invalid {family:?} parameters a={a}, b={b}")]
    InvalidParams {
        family: crate::fit::Family,
        a: f64,
        b: f64,
    },

    #[error("distribution has no usable mass on the lead-time support")]
    DegenerateMass,

    #[error("pmf is concentrated on a single lead; fit is degenerate")]
    DegenerateInput,

    #[error("too few exceedances: need {needed}, got {actual}")]
    TooFewExceedances { needed: usize, actual: usize },

    #[error("all estimator stages failed")]
    AllStagesFailed,

    #[error("basis dimension {0} too small (cubic splines need at least 4)")]
    BasisTooSmall(usize),

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    #[error("panel rejected with {} diagnostic(s); first: {}", .0.len(), .0.first().map(String::as_str).unwrap_or(""))]
    InvalidPanel(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Per-row diagnostics carried by [`Error::InvalidPanel`], if any.
    pub fn diagnostics(&self) -> &[String] {
        match self {
            Error::InvalidPanel(d) => d,
            _ => &[],
        }
    }
}
