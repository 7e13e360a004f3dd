use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("lattice spacing {epsilon} leaves no cell inside the shape")]
    EmptyDomain { epsilon: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cell index {0} out of range")]
    InvalidCell(usize),
    #[error("sites {0} and {1} are not nearest neighbours")]
    NotNeighbors(usize, usize),
    #[error("region is not simply connected: {0}")]
    NotSimplyConnected(String),
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("invalid vortex prescription: {0}")]
    InvalidPrescription(String),
    #[error("overlapping balls around atoms {0} and {1}")]
    OverlappingBalls(usize, usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("field does not match domain: {0}")]
    FieldMismatch(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
