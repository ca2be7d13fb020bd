use thiserror::Error;

use crate::graph::{EdgeId, NodeId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown edge id {0}")]
    UnknownEdge(EdgeId),

    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("invalid weight {0}: weights must be finite and strictly positive")]
    InvalidWeight(f64),

    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("removing edge {edge} would disconnect the graph (1 + dw*omega = {denominator:e})")]
    BridgeDeletion { edge: EdgeId, denominator: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stop criterion cannot be reached: {0}")]
    UnreachableStop(String),

    #[error("iteration {iteration}: deletions disconnected the graph on {attempts} consecutive draws")]
    RedrawLimit { iteration: usize, attempts: usize },

    #[error("reduction stalled: {iterations} consecutive iterations without an acted edge")]
    Stalled { iterations: usize },

    #[error("projection matrix did not converge after {0} iterations")]
    ProjectionNotConverged(usize),

    #[error("solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverNotConverged { residual: f64, iterations: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
