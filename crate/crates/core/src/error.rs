use thiserror::Error;

use crate::model::VertexId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("demand {demand} at vertex {vertex} exceeds link capacity {capacity}")]
    DemandExceedsCapacity { vertex: VertexId, demand: f64, capacity: f64 },

    #[error("inconsistent plan: {0}")]
    Inconsistent(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("vertex {neighbor} is not a relay-path logical neighbor of {center}")]
    NotLogicalNeighbor { center: VertexId, neighbor: VertexId },

    #[error("degenerate sector direction at vertex {0}")]
    DegenerateDirection(VertexId),

    #[error("oracle search space of {size} assignments exceeds limit {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("generation failed after {0} attempts")]
    GenerationFailed(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
