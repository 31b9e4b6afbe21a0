use crate::graph::{EdgeId, NodeId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cost components must be finite and non-negative, got ({loss_db}, {deph_db})")]
    InvalidCost { loss_db: f64, deph_db: f64 },

    #[error("efficiency must lie in [0, 1] and fidelity in [1/2, 1], got ({eta}, {fidelity})")]
    InvalidPhysical { eta: f64, fidelity: f64 },

    #[error("purification needs at least one input")]
    EmptyPurification,

    #[error("grid side must be at least 2, got {0}")]
    GridTooSmall(usize),

    #[error("node {0} not in graph")]
    UnknownNode(NodeId),

    #[error("edge {0} not in graph")]
    UnknownEdge(EdgeId),

    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),

    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),

    #[error("channel {edge} endpoint {node} not in graph")]
    DanglingEndpoint { edge: EdgeId, node: NodeId },

    #[error("removal probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("cannot sample {requested} pairs from {available} nodes without replacement")]
    TooManyPairs { requested: usize, available: usize },

    #[error("freespace channel {0} has no satellite endpoint")]
    FreespaceWithoutSatellite(EdgeId),

    #[error("node {0} has no position")]
    MissingPosition(NodeId),

    #[error("meta-graph depth must be at least 1")]
    ZeroDepth,

    #[error("layer tie-break epsilon {epsilon} must be positive and below the minimum edge weight {min_weight}")]
    EpsilonTooLarge { epsilon: f64, min_weight: f64 },

    #[error("latency is undefined when no pair routed")]
    NoPathsRouted,

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error("atmosphere model requires positive rho0, scale height, beta and d0")]
    InvalidAtmosphere,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
