//! Tabu search over pickup-and-delivery neighborhoods.
//!
//! Moves are always evaluated by rescheduling every route they touch, so the
//! search never leaves the feasible region. Tabu status is attached to
//! objective values: a move is tabu when its resulting objective equals one
//! of the last `tabu_tenure` values the search has moved through, unless it
//! beats the incumbent.

mod clock;
mod operators;
mod tabu;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::strip_partial_groups;
use crate::model::{Instance, Solution};
use crate::plan::Plan;

pub use clock::{ClockMode, WORK_UNITS_PER_SECOND};
pub use tabu::{StepOutcome, TabuList, TabuSearch};
pub use trace::{ProgressTrace, TraceSample};

/// Which objective the search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// Group penalty only.
    Original,
    /// Service plus travel time plus `big_m` times the group penalty.
    Accelerated,
}

/// How request groups are treated during search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// Groups may be partially served while searching; the whole group is
    /// still penalized and partial groups are stripped at the end.
    Soft,
    /// Groups are always fully served or fully unserved. Insertion activates
    /// at most [`HARD_INSERT_LIMIT`] requests per move.
    Hard,
}

/// Largest group the hard-coupling insertion move can activate at once.
pub const HARD_INSERT_LIMIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    RelocatePair,
    SwapPairs,
    InsertUnservedPair,
    RemovePair,
    OrOptIntra,
}

impl Operator {
    pub const ALL: [Operator; 5] = [
        Operator::RelocatePair,
        Operator::SwapPairs,
        Operator::InsertUnservedPair,
        Operator::RemovePair,
        Operator::OrOptIntra,
    ];

    fn index(self) -> usize {
        Operator::ALL.iter().position(|&o| o == self).unwrap()
    }
}

/// Nonnegative selection weight per operator, in [`Operator::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorWeights(pub [u32; 5]);

impl Default for OperatorWeights {
    fn default() -> Self {
        OperatorWeights([1; 5])
    }
}

impl OperatorWeights {
    pub fn get(&self, op: Operator) -> u32 {
        self.0[op.index()]
    }

    pub fn only(op: Operator) -> Self {
        let mut w = [0; 5];
        w[op.index()] = 1;
        OperatorWeights(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Budget in seconds (deterministic or wall-clock, see `clock`).
    pub time_limit: f64,
    pub seed: u64,
    pub objective: ObjectiveMode,
    pub coupling: Coupling,
    /// Number of recent objective values that are tabu. Zero turns the
    /// search into pure descent that stops at the first local minimum.
    pub tabu_tenure: usize,
    pub weights: OperatorWeights,
    /// Iterations without a new incumbent before the current solution is perturbed.
    pub max_no_improve: u64,
    pub clock: ClockMode,
    /// Seconds between trace samples when no new incumbent is found.
    pub heartbeat: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            time_limit: 60.0,
            seed: 0,
            objective: ObjectiveMode::Accelerated,
            coupling: Coupling::Soft,
            tabu_tenure: 100,
            weights: OperatorWeights::default(),
            max_no_improve: 500,
            clock: ClockMode::Deterministic,
            heartbeat: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("initial solution is not usable: {0}")]
    InitialSolution(String),
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if !(self.time_limit > 0.0) || !self.time_limit.is_finite() {
            return Err(SearchError::Config("time_limit must be positive".into()));
        }
        if self.weights.0.iter().all(|&w| w == 0) {
            return Err(SearchError::Config("operator weights are all zero".into()));
        }
        if !(self.heartbeat > 0.0) {
            return Err(SearchError::Config("heartbeat must be positive".into()));
        }
        Ok(())
    }
}

/// Objective value of a plan under `mode`.
pub(crate) fn plan_objective(plan: &Plan<'_>, mode: ObjectiveMode) -> i64 {
    objective_value(mode, plan.inst.big_m(), plan.penalty, plan.time_term)
}

#[inline]
pub(crate) fn objective_value(
    mode: ObjectiveMode,
    big_m: i64,
    penalty: i64,
    time_term: i64,
) -> i64 {
    match mode {
        ObjectiveMode::Original => penalty,
        ObjectiveMode::Accelerated => time_term + big_m * penalty,
    }
}

/// Configured objective of a full solution.
pub fn solution_objective(inst: &Instance, sol: &Solution, mode: ObjectiveMode) -> i64 {
    match mode {
        ObjectiveMode::Original => crate::evaluate::objective_unserved(inst, sol),
        ObjectiveMode::Accelerated => crate::evaluate::objective_accelerated(inst, sol),
    }
}

/// Improves `init` until the budget runs out and returns the best solution
/// found, with partially served groups removed, plus the progress trace.
pub fn solve(
    inst: &Instance,
    init: &Solution,
    cfg: &SearchConfig,
) -> Result<(Solution, ProgressTrace), SearchError> {
    let mut search = TabuSearch::new(inst, init, cfg)?;
    let mut trace = ProgressTrace::default();
    trace.push(search.sample());
    let mut next_beat = cfg.heartbeat;
    loop {
        let outcome = search.step();
        let elapsed = search.elapsed();
        match outcome {
            StepOutcome::BudgetExhausted | StepOutcome::LocalMinimum => break,
            StepOutcome::Moved { improved: true, .. } => trace.push(search.sample()),
            _ => {}
        }
        if elapsed >= next_beat {
            trace.push(search.sample());
            while next_beat <= elapsed {
                next_beat += cfg.heartbeat;
            }
        }
    }
    trace.push(search.sample());
    Ok((
        strip_partial_groups(inst, &search.incumbent_solution()),
        trace,
    ))
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveMode::Original => "original",
            ObjectiveMode::Accelerated => "accelerated",
        })
    }
}

impl FromStr for ObjectiveMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "original" => Ok(ObjectiveMode::Original),
            "accelerated" => Ok(ObjectiveMode::Accelerated),
            _ => Err(format!(
                "unknown objective `{s}` (expected original or accelerated)"
            )),
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coupling::Soft => "soft",
            Coupling::Hard => "hard",
        })
    }
}

impl FromStr for Coupling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "soft" => Ok(Coupling::Soft),
            "hard" => Ok(Coupling::Hard),
            _ => Err(format!("unknown coupling `{s}` (expected soft or hard)")),
        }
    }
}
