use thiserror::Error;

/// Errors surfaced by graph construction, input parsing, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("record '{record}' has an empty feature list")]
    EmptyFeatures { record: String },

    #[error("duplicate instance id '{record}'")]
    DuplicateInstance { record: String },

    #[error("record '{record}' carries label {label} but only {num_labels} labels exist")]
    LabelOutOfRange {
        record: String,
        label: usize,
        num_labels: usize,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("graph does not have uniform instance degree (saw {deg_a} and {deg_b})")]
    NonUniformDegree { deg_a: usize, deg_b: usize },

    #[error("no seed labels present")]
    NoSeeds,

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
