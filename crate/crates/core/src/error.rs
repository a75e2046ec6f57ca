use thiserror::Error;

/// Failure modes shared by every module of the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("singular value decomposition did not converge")]
    SingularDecompositionFailure,
    #[error("eigenvalue computation did not converge")]
    EigenFailure,
    #[error("index {index} out of range (valid 1..={max})")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("singular value gap too small at simple root {0}")]
    GapTooSmall(usize),
    #[error("invalid group element: {0}")]
    InvalidElement(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("root subset is not symmetric: {0}")]
    NotSymmetric(String),
    #[error("functional support is not contained in the root subset")]
    SupportMismatch,

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("ball too large: projected {projected} elements exceeds budget {budget}")]
    BallTooLarge { projected: u64, budget: u64 },
    #[error("ping-pong domains overlap: {0}")]
    DomainOverlap(String),
    #[error("matrix entries exceed representable range at power {0}")]
    OverflowRisk(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("exponent estimates disagree: counting {counting:.4} vs classifier {classifier:.4} (tolerance {tolerance:.4})")]
    Inconsistent {
        counting: f64,
        classifier: f64,
        tolerance: f64,
    },
    #[error("no samples passed the selection filter")]
    EmptySelection,

    #[error("generating set is not adapted: {0}")]
    NotAdapted(String),
    #[error("vertices {0} and {1} are in different components")]
    Disconnected(usize, usize),

    #[error("denominator vanishes at the evaluation point")]
    DenominatorZero,
    #[error("non-integer power of a negative base")]
    NegativeBase,
    #[error("integration dimension {0} exceeds the supported maximum of 6")]
    DimensionTooLarge(usize),
    #[error("bisection bracket failed to shrink: {0}")]
    ClassifierAmbiguous(String),
    #[error("Lie algebra basis is not nilpotent")]
    NotNilpotent,
    #[error("function is not proper on the sampled spheres")]
    NotProper,

    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_)
            | LabError::UnknownGenerator(_)
            | LabError::NotSymmetric(_)
            | LabError::SupportMismatch
            | LabError::InvalidElement(_)
            | LabError::DimensionMismatch(_)
            | LabError::NotAdapted(_)
            | LabError::DomainOverlap(_)
            | LabError::Io(_) => 2,
            LabError::BallTooLarge { .. } | LabError::DimensionTooLarge(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::SingularDecompositionFailure => "singular_decomposition_failure",
            LabError::EigenFailure => "eigen_failure",
            LabError::IndexOutOfRange { .. } => "index_out_of_range",
            LabError::GapTooSmall(_) => "gap_too_small",
            LabError::InvalidElement(_) => "invalid_element",
            LabError::DimensionMismatch(_) => "dimension_mismatch",
            LabError::NotSymmetric(_) => "not_symmetric",
            LabError::SupportMismatch => "support_mismatch",
            LabError::UnknownGenerator(_) => "unknown_generator",
            LabError::BallTooLarge { .. } => "ball_too_large",
            LabError::DomainOverlap(_) => "domain_overlap",
            LabError::OverflowRisk(_) => "overflow_risk",
            LabError::InsufficientData(_) => "insufficient_data",
            LabError::Inconsistent { .. } => "inconsistent",
            LabError::EmptySelection => "empty_selection",
            LabError::NotAdapted(_) => "not_adapted",
            LabError::Disconnected(..) => "disconnected",
            LabError::DenominatorZero => "denominator_zero",
            LabError::NegativeBase => "negative_base",
            LabError::DimensionTooLarge(_) => "dimension_too_large",
            LabError::ClassifierAmbiguous(_) => "classifier_ambiguous",
            LabError::NotNilpotent => "not_nilpotent",
            LabError::NotProper => "not_proper",
            LabError::Config(_) => "config",
            LabError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
