//! Task semantics: rollout evaluators that drive a decision function through
//! one full episode, plus bounds, baselines and small-instance oracles.

mod baseline;
mod builtin;
mod obp;
pub mod oracle;
mod routing;
mod verify;

pub use baseline::{cvrp_baseline, cvrp_baseline_routes, tsp_baseline, tsp_baseline_tour, two_opt};
pub use builtin::Builtin;
pub use obp::{eval_obp, obp_lower_bound, obp_lower_bound_l1, ObpBound};
pub use routing::{eval_cvrp, eval_tsp};
pub use verify::verify_solution;

use crate::domain::{DistanceMatrix, Payload, ProblemInstance};

/// Tolerance on capacity comparisons, relative to the capacity.
pub(crate) const CAPACITY_EPS: f64 = 1e-9;

/// One question put to a heuristic during a rollout.
#[derive(Debug, Clone, Copy)]
pub enum DecisionQuery<'a> {
    /// `bins` are the remaining capacities of the open bins that can hold
    /// `item`.
    Obp { item: f64, bins: &'a [f64] },
    Tsp {
        current: usize,
        destination: usize,
        unvisited: &'a [usize],
        distances: &'a DistanceMatrix,
    },
    Cvrp {
        current: usize,
        depot: usize,
        unvisited: &'a [usize],
        rest_capacity: f64,
        demands: &'a [f64],
        distances: &'a DistanceMatrix,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    /// One priority per queried bin.
    Priorities(Vec<f64>),
    /// Node id; negative values mean "no choice".
    Node(i64),
}

/// Failure raised by a decision function itself.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct DecisionError(pub String);

/// A heuristic decision function.
pub trait Decider {
    fn decide(&self, query: &DecisionQuery<'_>) -> Result<Decision, DecisionError>;
}

impl<D: Decider + ?Sized> Decider for &D {
    fn decide(&self, query: &DecisionQuery<'_>) -> Result<Decision, DecisionError> {
        (**self).decide(query)
    }
}

/// Outcome of one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Bins used, tour length or total route distance.
    pub raw: f64,
    /// `(raw - baseline) / baseline`.
    pub gap: f64,
    pub decisions: usize,
    /// Set when the episode is invalid.
    pub violation: Option<String>,
    /// Bin per item (OBP), visit order (TSP) or node sequence with depot
    /// visits (CVRP).
    pub trace: Vec<usize>,
    /// CVRP picks that were routed through the depot for lack of capacity.
    pub detours: usize,
}

impl EpisodeResult {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }

    pub(crate) fn failed(reason: impl Into<String>, decisions: usize) -> Self {
        EpisodeResult {
            raw: f64::INFINITY,
            gap: f64::INFINITY,
            decisions,
            violation: Some(reason.into()),
            trace: Vec::new(),
            detours: 0,
        }
    }
}

/// Runs the task-appropriate rollout.
pub fn evaluate<D: Decider + ?Sized>(decider: &D, instance: &ProblemInstance) -> EpisodeResult {
    match instance.payload() {
        Payload::Obp { .. } => eval_obp(decider, instance),
        Payload::Tsp { .. } => eval_tsp(decider, instance),
        Payload::Cvrp { .. } => eval_cvrp(decider, instance),
    }
}

/// Length of a closed tour through `order`.
pub fn tour_length(distances: &DistanceMatrix, order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    let open: f64 = order.windows(2).map(|w| distances.get(w[0], w[1])).sum();
    open + distances.get(order[order.len() - 1], order[0])
}

/// Length of an open path through `sequence`.
pub fn path_length(distances: &DistanceMatrix, sequence: &[usize]) -> f64 {
    sequence.windows(2).map(|w| distances.get(w[0], w[1])).sum()
}
