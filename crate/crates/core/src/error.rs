use crate::logderiv::HExpansion;
use crate::rootfinder::Edge;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("exponential sum has no terms")]
    EmptySum,

    #[error("frequency basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("invalid frequency basis: {0}")]
    InvalidBasis(String),

    #[error("value exceeds floating range (log-magnitude {log_magnitude}, phase {phase})")]
    Overflow { log_magnitude: f64, phase: f64 },

    #[error("cutoff must be positive, got {0}")]
    BadCutoff(f64),

    #[error("coefficient recursion overflowed at gamma = {gamma}")]
    OverflowAbort { gamma: f64 },

    #[error("semigroup enumeration exceeded {limit} elements below cutoff {cutoff}")]
    SemigroupTooLarge { limit: usize, cutoff: f64 },

    #[error("bad sine factor: {0}")]
    BadFactor(String),

    #[error("radius {radius} exceeds expansion cutoff {cutoff}")]
    CutoffExceeded { radius: f64, cutoff: f64 },

    #[error("expansions were computed with different cutoffs ({0} vs {1})")]
    CutoffMismatch(f64, f64),

    #[error("contour passes too close to a zero on the {edge:?} edge")]
    ContourNearZero { edge: Edge },

    #[error("contour quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("could not isolate {count} zero(s) in [{x_lo}, {x_hi}]")]
    UnresolvedCluster { x_lo: f64, x_hi: f64, count: i64 },

    #[error("zero set is not certified real-rooted")]
    RequiresCertification,

    #[error("not a finite sine product: {reason} (residual mass {residual_mass:.3e})")]
    NotASineProduct {
        reason: String,
        residual_mass: f64,
        residual: Box<HExpansion>,
    },

    #[error("prefactor exponent is not real: a = {re} + {im}i")]
    InconsistentPrefactor { re: f64, im: f64 },

    #[error("only {valid} of {requested} verification samples were usable")]
    InsufficientSamples { valid: usize, requested: usize },

    #[error("no arithmetic progression structure: {0}")]
    NoProgressionStructure(String),

    #[error("exponential sum is not real-rooted on the probe window ({rect_count} zeros in strip, {real_count} on the axis)")]
    NotRealRooted { rect_count: i64, real_count: i64 },

    #[error("parse error at {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("frequency is not real at {position}")]
    FrequencyNotReal { position: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySum => "EmptySum",
            Error::BasisMismatch(_) => "BasisMismatch",
            Error::InvalidBasis(_) => "InvalidBasis",
            Error::Overflow { .. } => "OverflowSignal",
            Error::BadCutoff(_) => "BadCutoff",
            Error::OverflowAbort { .. } => "OverflowAbort",
            Error::SemigroupTooLarge { .. } => "SemigroupTooLarge",
            Error::BadFactor(_) => "BadFactor",
            Error::CutoffExceeded { .. } => "CutoffExceeded",
            Error::CutoffMismatch(..) => "CutoffMismatch",
            Error::ContourNearZero { .. } => "ContourNearZero",
            Error::QuadratureFailure(_) => "QuadratureFailure",
            Error::UnresolvedCluster { .. } => "UnresolvedCluster",
            Error::RequiresCertification => "RequiresCertification",
            Error::NotASineProduct { .. } => "NotASineProduct",
            Error::InconsistentPrefactor { .. } => "InconsistentPrefactor",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::NoProgressionStructure(_) => "NoProgressionStructure",
            Error::NotRealRooted { .. } => "NotRealRooted",
            Error::Parse { .. } => "ParseError",
            Error::FrequencyNotReal { .. } => "FrequencyNotReal",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Json(_) => "Json",
        }
    }
}
