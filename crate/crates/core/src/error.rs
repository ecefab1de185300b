use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("mesh layout error: {0}")]
    Layout(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("nulling failed at element ({row}, {col}): residual {residual:e}")]
    Numerical {
        row: usize,
        col: usize,
        residual: f64,
    },
    #[error("photon number not conserved: input carries {input}, output carries {output}")]
    Conservation { input: usize, output: usize },
    #[error("zero post-selection support for {0}")]
    ZeroSupport(String),
    #[error("adaptive rule incomplete: {0}")]
    IncompleteRule(String),
    #[error("invalid outcome assignment: {0}")]
    Assignment(String),
    #[error("noise model error: {0}")]
    Model(String),
    #[error("photon cap exceeded: expansion needs {needed} photons, cap is {cap}")]
    Capacity { needed: usize, cap: usize },
    #[error("unphysical Bloch vector: density matrix has eigenvalue {0:e}")]
    Unphysical(f64),
    #[error("tomography counts are not informationally complete: {0}")]
    NotInformationallyComplete(String),
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("kernel error: {0}")]
    Kernel(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
