//! Middle-mile wireless mesh planning.
//!
//! The pipeline picks tower heights so that every terminal reaches the
//! landline over line-of-sight links ([`steiner_tc`]), installs link capacity
//! on the resulting tree ([`cnd`]) and optionally swaps underused links for
//! sector or omnidirectional hyperlinks ([`hybrid`]). [`oracle`] holds
//! exhaustive solvers for checking the greedy on small inputs.

pub mod analysis;
pub mod builder;
pub mod cnd;
pub mod error;
pub mod generate;
pub mod hybrid;
pub mod model;
pub mod oracle;
pub mod plan;
pub mod steiner_tc;

pub use analysis::{bound_report, BoundCase, BoundReport};
pub use cnd::{install_capacity, CapacityPlan, Group};
pub use error::{Error, Result};
pub use hybrid::{run_hybrid, HybridOrder, HybridPlan};
pub use model::{cover, total_cost, CostReport, HeightFunction, PlanningInstance, VertexId};
pub use plan::{run_pipeline, PlanDocument, PlanOptions};
pub use steiner_tc::{steiner_tc_solve, IterationTrace, SteinerSolution, SteinerTree};
