use crate::models::ModelId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{model} constraint violated: {constraint} (got {value})")]
    Constraint {
        model: ModelId,
        constraint: &'static str,
        value: f64,
    },

    #[error("singular parameterization: {0}")]
    Singular(String),

    #[error("invalid parameter vector for {model}: {reason}")]
    Validity { model: ModelId, reason: String },

    #[error("degenerate background: empirical or modeled background risk equals 1")]
    DegenerateBackground,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("elicitation did not converge (half squared residual norm {residual:e})")]
    Elicitation { residual: f64 },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("algorithm failure for {model} after {restarts} restarts")]
    AlgorithmFailure { model: ModelId, restarts: u32 },

    #[error("bridge sampling degenerate: no approximating draw has positive posterior density")]
    BridgeDegenerate,

    #[error("no model with a finite marginal likelihood")]
    NoValidModel,

    #[error("data failure: no increasing trend (s_max = {s_max})")]
    DataFailure { s_max: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
