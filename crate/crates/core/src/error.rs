use thiserror::Error;

pub type Result<T> = std::result::Result<T, SicError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SicError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Predictor column (1-based, intercept excluded) has zero variance.
    #[error("predictor column {0} is constant")]
    ConstantColumn(usize),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("need at least p + 2 = {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("numerical overflow: |x'alpha| = {0:.3e} exceeds 700")]
    NumericalOverflow(f64),

    #[error("design matrix is numerically singular (reciprocal condition {0:.3e})")]
    SingularDesign(f64),

    #[error("degenerate fit: residual variance is zero")]
    DegenerateFit,

    #[error("{component} block is not positive definite after ridge fallback")]
    NonPositiveDefinite { component: &'static str },

    #[error("invalid epsilon {0}: must be finite and > 0")]
    InvalidEpsilon(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("penalized information restricted to the active set is singular")]
    SingularInformation,

    #[error("at telescope step {step} (eps = {eps:.3e}): {source}")]
    AtStep {
        step: usize,
        eps: f64,
        #[source]
        source: Box<SicError>,
    },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{failed} of {total} replicates failed (limit 5%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl SicError {
    /// Strips any `AtStep` wrappers.
    pub fn root(&self) -> &SicError {
        match self {
            SicError::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            SicError::DimensionMismatch(_)
                | SicError::ConstantColumn(_)
                | SicError::NonFinite { .. }
                | SicError::TooFewRows { .. }
                | SicError::InvalidEpsilon(_)
                | SicError::InvalidSchedule(_)
                | SicError::InvalidScenario(_)
                | SicError::InvalidArgument(_)
        )
    }
}
