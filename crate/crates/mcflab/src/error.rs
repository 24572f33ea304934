use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("generator produced a non-finite value at node {node:?}")]
    NonFiniteValue { node: Vec<f64> },

    #[error("node touches the grid boundary along axis {axis}; jets need interior nodes")]
    BoundaryNode { axis: usize },

    #[error("query point leaves the grid cube by {overshoot} along axis {axis}")]
    OutOfDomain { axis: usize, overshoot: f64 },

    #[error("radius {requested} exceeds usable half-width {max}")]
    RadiusTooLarge { requested: f64, max: f64 },

    #[error("unsupported sphere sampling: scheme {scheme} in dimension {n}")]
    UnsupportedScheme { scheme: String, n: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("blow-down coverage violated: query {query:?} is outside the stored domain")]
    Coverage { query: Vec<f64> },

    #[error("non-finite state encountered at t = {t}: {what}")]
    NonFiniteState { t: f64, what: String },

    #[error("boundary quadrature is implemented for n <= 3, got n = {0}")]
    UnsupportedDimension(usize),

    #[error("metric bound violated at node {node}: {detail}")]
    MetricBound { node: usize, detail: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
