use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by graph construction, the sparse solver and the fitting
/// routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),

    #[error("vertex index {index} out of range for a graph with {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },

    #[error("duplicate vertex id `{0}`")]
    DuplicateId(String),

    #[error("unknown vertex id(s): {}", .0.join(", "))]
    UnknownIds(Vec<String>),

    #[error("missing value for vertex id(s): {}", .0.join(", "))]
    MissingIds(Vec<String>),

    #[error("area `{area}` has a degenerate ring: {reason}")]
    DegenerateRing { area: String, reason: String },

    #[error("coordinate {0} cannot be quantized at the requested tolerance")]
    CoordinateOverflow(f64),

    #[error("missing centroid for vertex `{0}`")]
    MissingCentroid(String),

    #[error("sparsity pattern is not symmetric at ({row}, {col})")]
    AsymmetricPattern { row: usize, col: usize },

    #[error("matrix values are not symmetric at ({row}, {col})")]
    AsymmetricValues { row: usize, col: usize },

    #[error("matrix pattern differs from the analysed pattern")]
    PatternMismatch,

    #[error("matrix is not positive definite (pivot at vertex {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("non-finite estimate at iteration {iteration}, vertex {index}")]
    Diverged { iteration: usize, index: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("criterion degenerate on this path")]
    DegenerateCriterion,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    GeoJson(#[from] Box<geojson::Error>),
}

impl Error {
    /// True for failures of the numerical procedure itself, as opposed to bad
    /// input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::Diverged { .. }
                | Error::DegenerateCriterion
        )
    }

    pub(crate) fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

impl From<geojson::Error> for Error {
    fn from(e: geojson::Error) -> Self {
        Error::GeoJson(Box::new(e))
    }
}
