//! Continuous-time simulation of the contact process and the branching random
//! walk, plus the aggregated star chain and survival estimation.

mod engine;
pub mod star;
pub mod survival;
mod topology;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{run_brw, run_contact, run_on, StopRule};
pub use star::{run_star, run_star_with, star_replicas, StarChain, StarHit, StarRun, StarState, StarStops, StarTransition};
pub use survival::{
    estimate_lambda2, run_replicas, survival_curve, survival_from_outcomes, wilson_interval, Criterion,
    Lambda2Estimate, Lambda2Protocol, SurvivalEstimate,
};
pub use topology::{BallTree, ExplicitGraph, Topology};

use crate::tree_model::PeriodicDegreeSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Contact,
    Brw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub degrees: PeriodicDegreeSequence,
    #[serde(default)]
    pub root_residue: usize,
    pub lambda: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    #[serde(default = "defaults::max_events")]
    pub max_events: u64,
    #[serde(default = "defaults::max_vertices")]
    pub max_vertices: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::replicas")]
    pub replicas: u64,
    #[serde(default = "defaults::mode")]
    pub mode: Mode,
    #[serde(default = "defaults::population_cap")]
    pub brw_population_cap: u64,
    /// Start of the local-survival window as a fraction of the horizon.
    #[serde(default = "defaults::window")]
    pub local_window: f64,
    /// Restrict the tree to the ball of this graph radius around the root.
    #[serde(default)]
    pub radius: Option<u32>,
    /// Re-derive the bookkeeping from scratch after every event.
    #[serde(default)]
    pub audit: bool,
}

mod defaults {
    use super::Mode;

    pub fn horizon() -> f64 {
        100.0
    }
    pub fn max_events() -> u64 {
        10_000_000
    }
    pub fn max_vertices() -> usize {
        1_000_000
    }
    pub fn replicas() -> u64 {
        1000
    }
    pub fn mode() -> Mode {
        Mode::Contact
    }
    pub fn population_cap() -> u64 {
        1_000_000
    }
    pub fn window() -> f64 {
        0.5
    }
}

impl SimConfig {
    pub fn new(degrees: PeriodicDegreeSequence, lambda: f64) -> Self {
        Self {
            degrees,
            root_residue: 0,
            lambda,
            horizon: defaults::horizon(),
            max_events: defaults::max_events(),
            max_vertices: defaults::max_vertices(),
            seed: 0,
            replicas: defaults::replicas(),
            mode: defaults::mode(),
            brw_population_cap: defaults::population_cap(),
            local_window: defaults::window(),
            radius: None,
            audit: false,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidConfig(what.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1");
        }
        if self.max_events == 0 || self.max_vertices == 0 || self.brw_population_cap == 0 {
            return bad("caps must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.local_window) {
            return bad("local_window must lie in [0, 1]");
        }
        if self.max_vertices > u32::MAX as usize - 1 {
            return bad("max_vertices exceeds the vertex id range");
        }
        Ok(())
    }

    pub fn window_start(&self) -> f64 {
        self.local_window * self.horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    VertexCap,
    EventCap,
    PopulationCap,
}

impl Truncation {
    pub fn as_str(self) -> &'static str {
        match self {
            Truncation::VertexCap => "vertex_cap",
            Truncation::EventCap => "event_cap",
            Truncation::PopulationCap => "population_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimOutcome {
    pub extinct: bool,
    pub extinction_time: Option<f64>,
    /// Times at which the root went from vacant to occupied.
    pub root_visit_times: Vec<f64>,
    /// The root was occupied at some time in `[window_start, horizon]`.
    pub root_in_window: bool,
    pub peak_infected: u64,
    pub events: u64,
    /// Transmissions onto an already occupied vertex.
    pub wasted_events: u64,
    /// Simulated time at which the run stopped.
    pub end_time: f64,
    pub truncated: Option<Truncation>,
}

impl SimOutcome {
    /// Truncated runs count as survivors under both criteria.
    pub fn survived(&self, criterion: Criterion) -> bool {
        if self.truncated.is_some() {
            return true;
        }
        match criterion {
            Criterion::Global => !self.extinct,
            Criterion::Local => self.root_in_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("bisection bracket [{lo}, {hi}] does not straddle the target: p(lo) = {p_lo}, p(hi) = {p_hi}")]
    BracketFailure { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },
}

/// Streams reserved per replica, so independent uses never share randomness.
pub(crate) const STREAMS_PER_REPLICA: u64 = 16;

/// Random stream for `(seed, replica, stream)`. ChaCha is counter based: the
/// key comes from the seed and the nonce from `(replica, stream)`, so no state
/// is shared between replicas.
pub fn replica_rng(seed: u64, replica: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica.wrapping_mul(STREAMS_PER_REPLICA).wrapping_add(stream % STREAMS_PER_REPLICA));
    rng
}
