use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Bessel order {order} exceeds the supported maximum {max}")]
    OrderOutOfRange { order: i64, max: i64 },

    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("unknown shape `{0}`")]
    UnknownShape(String),

    #[error("near-resonant system at omega = {omega}: condition number estimate {cond:.3e}")]
    NearResonance { omega: f64, cond: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("acquisition operator is not orthogonal (deviation {deviation:.3e}); use least squares")]
    NotOrthogonal { deviation: f64 },

    #[error("truncation bound not applicable: {0}")]
    BoundNotApplicable(String),

    #[error("band aperture mismatch: target {target}, dictionary {dictionary}")]
    BandMismatch { target: f64, dictionary: f64 },

    #[error("no dictionary entry is comparable with the target")]
    NoComparableEntry,

    #[error("singular value decomposition failed to converge")]
    SvdFailed,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
