use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("GML: {0}")]
    Gml(String),

    #[error("node id {id} out of range for a graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("edge ({i}, {j}) has zero expected weight under the current parameters")]
    Infeasible { i: usize, j: usize },

    #[error("node {0} has zero degree")]
    ZeroDegree(usize),

    #[error("visit-rate solver did not converge after {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("conductance is undefined for an empty set or the whole node set")]
    UndefinedConductance,

    #[error("enrichment is undefined: {0}")]
    UndefinedEnrichment(&'static str),

    #[error("cover has no communities")]
    EmptyCover,

    #[error("exhaustive type search supports at most {max} communities, got {c}")]
    TooManyCommunities { c: usize, max: usize },

    #[error("every row of the community-count sweep failed")]
    AllRowsFailed,
}

pub type Result<T> = std::result::Result<T, Error>;
