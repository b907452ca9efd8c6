use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: expected {expected} inputs, found {found}")]
    Shape {
        layer: usize,
        expected: usize,
        found: usize,
    },

    #[error("gate has length {found} but the pathway has {expected} configurations")]
    GateLength { expected: usize, found: usize },

    #[error("invalid gate vector: {0}")]
    InvalidGate(String),

    #[error("configuration index {index} out of range for {count} configurations")]
    ConfigurationOutOfRange { index: usize, count: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("thresholded control output {lambda:?} is not one-hot (noisy stop signal near threshold?)")]
    ControlAmbiguity { lambda: Vec<f64> },

    #[error("invalid control policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid component output: {0}")]
    InvalidOutput(String),

    #[error("invalid tree routing: {0}")]
    InvalidRouting(String),

    #[error("classifier combiner is incompatible with its control policy: {0}")]
    IncompatibleCombiner(String),

    #[error("invalid style model: {0}")]
    InvalidModel(String),

    #[error("degenerate evidence: every component has zero likelihood")]
    DegenerateEvidence,

    #[error("invalid training input: {0}")]
    InvalidTraining(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
