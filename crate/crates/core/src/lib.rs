//! Contact processes and branching random walks on periodic trees.

pub mod analytic_bounds;
pub mod exact_oracle;
pub mod report;
pub mod simulator;
pub mod tree_model;
pub mod walk_counts;

pub use tree_model::{PeriodicDegreeSequence, TreeArena, TreeError, VertexId};
