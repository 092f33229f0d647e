use thiserror::Error;

/// Errors raised while loading data, fitting models or computing decompositions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("singular design: term '{term}' is collinear with earlier terms")]
    SingularDesign { term: String },

    #[error("logistic regression separation detected: |{term}| exceeded {bound}")]
    Separation { term: String, bound: f64 },

    #[error("logistic regression did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        coefficients: Vec<f64>,
    },

    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),

    #[error("estimator {estimator} unavailable: {reasons}")]
    Unavailable { estimator: String, reasons: String },

    #[error("unsupported model plan: {0}")]
    UnsupportedPlan(String),

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("percent reduction undefined: initial disparity is zero")]
    UndefinedPercentage,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("bootstrap failed: {0}")]
    Bootstrap(String),
}

impl DecompError {
    /// Process exit code contract: 1 data/IO, 2 availability or model plan, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            DecompError::Schema(_)
            | DecompError::Parse { .. }
            | DecompError::Validation(_)
            | DecompError::Io(_)
            | DecompError::EmptyGroup(_) => 1,
            DecompError::Unavailable { .. } | DecompError::UnsupportedPlan(_) => 2,
            DecompError::SingularDesign { .. }
            | DecompError::Separation { .. }
            | DecompError::NonConvergence { .. }
            | DecompError::DegenerateRatio(_)
            | DecompError::UndefinedPercentage
            | DecompError::Calibration(_)
            | DecompError::Bootstrap(_) => 3,
        }
    }
}

pub type Result<T, E = DecompError> = std::result::Result<T, E>;

impl From<std::io::Error> for DecompError {
    fn from(e: std::io::Error) -> Self {
        DecompError::Io(e.to_string())
    }
}
