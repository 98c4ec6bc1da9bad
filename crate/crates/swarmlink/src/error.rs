use crate::graph::NodeId;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("graph is disconnected")]
    Disconnected,
    #[error("node id {0} out of range (n = {1})")]
    NodeOutOfRange(NodeId, usize),
    #[error("edge ({0}, {1}) not present")]
    EdgeNotFound(NodeId, NodeId),
    #[error("edge ({0}, {1}) already present")]
    EdgeExists(NodeId, NodeId),
    #[error("edge list: {0}")]
    EdgeListParse(String),
    #[error("contraction rate must exceed 1/2, got {0}")]
    ContractionRate(f64),
    #[error("query time {query} precedes known state time {known}")]
    TimeReversed { known: f64, query: f64 },
    #[error("state became non-finite during integration")]
    NonFiniteState,
    #[error("report for node {node} inconsistent with motion and delay bounds")]
    InconsistentReport { node: NodeId },
    #[error("uncertainty region for node {node} shrank to nothing")]
    EmptyRegion { node: NodeId },
    #[error("central node lost connectivity of its own view")]
    CentralViewDisconnected,
    #[error("config: {0}")]
    Config(String),
    #[error("scenario generation failed: {0}")]
    ScenarioGeneration(String),
    #[error("run aborted at step {step}: {reason}")]
    RunAborted { step: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
