use std::collections::{HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::clock::Clock;
use super::operators;
use super::trace::TraceSample;
use super::{plan_objective, Coupling, ObjectiveMode, Operator, SearchConfig, SearchError};
use crate::evaluate::{check_solution, strip_partial_groups, total_working_minutes};
use crate::model::{Instance, Solution};
use crate::plan::{without_request, Candidate, Plan, RouteChange};
use crate::schedule::RouteEval;

const STEP_OVERHEAD_UNITS: u64 = 50;

/// The last `tenure` objective values the search moved through.
#[derive(Debug, Clone)]
pub struct TabuList {
    tenure: usize,
    recent: VecDeque<i64>,
    // multiplicity of each value in `recent`, for constant-time lookups
    counts: HashMap<i64, u32>,
}

impl TabuList {
    pub fn new(tenure: usize) -> Self {
        TabuList {
            tenure,
            recent: VecDeque::with_capacity(tenure),
            counts: HashMap::with_capacity(tenure),
        }
    }

    pub fn record(&mut self, value: i64) {
        if self.tenure == 0 {
            return;
        }
        if self.recent.len() == self.tenure {
            if let Some(old) = self.recent.pop_front() {
                if let Some(c) = self.counts.get_mut(&old) {
                    *c -= 1;
                    if *c == 0 {
                        self.counts.remove(&old);
                    }
                }
            }
        }
        self.recent.push_back(value);
        *self.counts.entry(value).or_insert(0) += 1;
    }

    pub fn contains(&self, value: i64) -> bool {
        self.counts.contains_key(&value)
    }

    /// A value is admissible if it is not tabu or beats the incumbent.
    pub fn admits(&self, value: i64, incumbent: i64) -> bool {
        value < incumbent || !self.contains(value)
    }
}

/// Keeps the best admissible candidate seen during one operator scan.
pub(crate) struct Selector<'s> {
    pub(crate) tabu: &'s TabuList,
    pub(crate) clock: &'s Clock,
    pub(crate) mode: ObjectiveMode,
    pub(crate) big_m: i64,
    pub(crate) current: i64,
    pub(crate) incumbent: i64,
    pub(crate) descent_only: bool,
    pub best: Option<(i64, Candidate)>,
    pub aborted: bool,
}

impl<'s> Selector<'s> {
    /// Objective after replacing the evaluated routes and flipping requests.
    pub fn value_of(
        &self,
        plan: &Plan<'_>,
        routes: &[(usize, RouteEval)],
        toggles: &[(usize, bool)],
    ) -> i64 {
        let penalty = if toggles.is_empty() {
            plan.penalty
        } else {
            plan.penalty_after(toggles)
        };
        self.value_with_penalty(plan, routes, penalty)
    }

    /// Like [`Selector::value_of`] with the penalty already known, for
    /// scans that try one toggle set at many positions.
    pub fn value_with_penalty(
        &self,
        plan: &Plan<'_>,
        routes: &[(usize, RouteEval)],
        penalty: i64,
    ) -> i64 {
        let mut time = plan.time_term;
        for &(k, eval) in routes {
            time += eval.time_term - plan.evals[k - 1].time_term;
        }
        super::objective_value(self.mode, self.big_m, penalty, time)
    }

    fn wants(&self, value: i64) -> bool {
        if self.descent_only && value >= self.current {
            return false;
        }
        if self.best.as_ref().is_some_and(|(b, _)| value >= *b) {
            return false;
        }
        self.tabu.admits(value, self.incumbent)
    }

    /// Offers a candidate; `build` runs only if it becomes the new best.
    /// Returns false once the budget is exhausted and the scan must stop.
    pub fn offer(
        &mut self,
        plan: &Plan<'_>,
        value: i64,
        build: impl FnOnce() -> Candidate,
    ) -> bool {
        if self.wants(value) {
            self.best = Some((value, build()));
        }
        self.keep_going(plan)
    }

    pub fn keep_going(&mut self, plan: &Plan<'_>) -> bool {
        if self.clock.exhausted(plan.work.get()) {
            self.aborted = true;
        }
        !self.aborted
    }
}

/// Result of one call to [`TabuSearch::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Moved {
        operator: Operator,
        value: i64,
        improved: bool,
    },
    /// The operator had no admissible move.
    NoMove {
        operator: Operator,
    },
    /// Stagnation limit reached; requests were removed to diversify.
    Perturbed {
        removed: usize,
    },
    BudgetExhausted,
    /// Pure descent found no improving move in a full operator cycle.
    LocalMinimum,
}

/// Smooth weighted round-robin over the operators.
#[derive(Debug, Clone)]
struct RoundRobin {
    weights: [i64; 5],
    current: [i64; 5],
    total: i64,
}

impl RoundRobin {
    fn new(weights: &super::OperatorWeights) -> Self {
        let weights = weights.0.map(i64::from);
        RoundRobin {
            weights,
            current: [0; 5],
            total: weights.iter().sum(),
        }
    }

    fn next(&mut self) -> Operator {
        let mut pick = 0;
        for i in 0..5 {
            self.current[i] += self.weights[i];
            if self.current[i] > self.current[pick] {
                pick = i;
            }
        }
        self.current[pick] -= self.total;
        Operator::ALL[pick]
    }
}

/// Search state: current and incumbent solutions, tabu list, operator
/// schedule and budget.
pub struct TabuSearch<'a> {
    cfg: SearchConfig,
    plan: Plan<'a>,
    incumbent: Plan<'a>,
    incumbent_value: i64,
    current_value: i64,
    tabu: TabuList,
    rr: RoundRobin,
    rng: ChaCha8Rng,
    clock: Clock,
    no_improve: u64,
    idle_streak: i64,
    finished: bool,
    scratch: Vec<usize>,
}

impl<'a> TabuSearch<'a> {
    pub fn new(
        inst: &'a Instance,
        init: &Solution,
        cfg: &SearchConfig,
    ) -> Result<Self, SearchError> {
        cfg.validate()?;
        init.check_structure(inst)
            .map_err(|e| SearchError::InitialSolution(e.to_string()))?;
        let report = check_solution(inst, init);
        if !report.feasible {
            return Err(SearchError::InitialSolution(format!(
                "{} constraint violations, first: {}",
                report.violations.len(),
                report.violations[0].message
            )));
        }
        let start = match cfg.coupling {
            Coupling::Soft => init.clone(),
            Coupling::Hard => strip_partial_groups(inst, init),
        };
        let plan = Plan::from_solution(inst, &start)
            .map_err(|e| SearchError::InitialSolution(e.to_string()))?;
        let value = plan_objective(&plan, cfg.objective);
        let mut tabu = TabuList::new(cfg.tabu_tenure);
        tabu.record(value);
        Ok(TabuSearch {
            cfg: cfg.clone(),
            incumbent: plan.clone(),
            plan,
            incumbent_value: value,
            current_value: value,
            tabu,
            rr: RoundRobin::new(&cfg.weights),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            clock: Clock::start(cfg.clock, cfg.time_limit),
            no_improve: 0,
            idle_streak: 0,
            finished: false,
            scratch: Vec::new(),
        })
    }

    pub fn current_value(&self) -> i64 {
        self.current_value
    }

    pub fn incumbent_value(&self) -> i64 {
        self.incumbent_value
    }

    pub fn current_solution(&self) -> Solution {
        self.plan.to_solution()
    }

    pub fn incumbent_solution(&self) -> Solution {
        self.incumbent.to_solution()
    }

    pub fn tabu_list(&self) -> &TabuList {
        &self.tabu
    }

    pub fn tabu_list_mut(&mut self) -> &mut TabuList {
        &mut self.tabu
    }

    /// Scheduling work done so far, the unit of the deterministic clock.
    pub fn work_units(&self) -> u64 {
        self.plan.work.get()
    }

    /// Elapsed seconds on the configured clock.
    pub fn elapsed(&self) -> f64 {
        self.clock.elapsed(self.plan.work.get())
    }

    /// Trace record for the incumbent, as it would be returned.
    pub fn sample(&self) -> TraceSample {
        let inst = self.plan.inst;
        let stripped = strip_partial_groups(inst, &self.incumbent.to_solution());
        TraceSample {
            elapsed: self.elapsed(),
            served: inst.n() - stripped.unserved.len(),
            working_minutes: total_working_minutes(&stripped),
            objective: self.incumbent_value,
        }
    }

    /// Runs one operator scan and applies the selected move.
    pub fn step(&mut self) -> StepOutcome {
        if self.finished {
            return StepOutcome::LocalMinimum;
        }
        if self.clock.exhausted(self.plan.work.get()) {
            return StepOutcome::BudgetExhausted;
        }
        // bookkeeping outside route scheduling is charged per step
        self.plan
            .work
            .set(self.plan.work.get() + STEP_OVERHEAD_UNITS);
        let op = self.rr.next();
        let descent_only = self.cfg.tabu_tenure == 0;
        let mut sel = Selector {
            tabu: &self.tabu,
            clock: &self.clock,
            mode: self.cfg.objective,
            big_m: self.plan.inst.big_m(),
            current: self.current_value,
            incumbent: self.incumbent_value,
            descent_only,
            best: None,
            aborted: false,
        };
        operators::scan(
            op,
            &self.plan,
            self.cfg.coupling,
            &mut sel,
            &mut self.scratch,
        );
        if sel.aborted {
            return StepOutcome::BudgetExhausted;
        }
        let chosen = sel.best.take();

        let outcome = match chosen {
            Some((value, cand)) => {
                self.plan.apply(&cand);
                debug_assert_eq!(value, plan_objective(&self.plan, self.cfg.objective));
                self.current_value = value;
                self.tabu.record(value);
                self.idle_streak = 0;
                let improved = value < self.incumbent_value;
                if improved {
                    self.incumbent = self.plan.clone();
                    self.incumbent_value = value;
                    self.no_improve = 0;
                } else {
                    self.no_improve += 1;
                }
                StepOutcome::Moved {
                    operator: op,
                    value,
                    improved,
                }
            }
            None => {
                self.idle_streak += 1;
                self.no_improve += 1;
                if descent_only && self.idle_streak >= self.rr.total {
                    self.finished = true;
                    return StepOutcome::LocalMinimum;
                }
                StepOutcome::NoMove { operator: op }
            }
        };
        if !descent_only && self.no_improve >= self.cfg.max_no_improve {
            return self.perturb();
        }
        outcome
    }

    /// Removes about 5% of the served requests (whole groups under hard
    /// coupling) at random. The incumbent is kept.
    fn perturb(&mut self) -> StepOutcome {
        self.no_improve = 0;
        let inst = self.plan.inst;
        let served: Vec<usize> = (1..=inst.n())
            .filter(|&r| self.plan.served[r - 1])
            .collect();
        if served.is_empty() {
            return StepOutcome::Perturbed { removed: 0 };
        }
        let target = ((served.len() as f64) * 0.05).ceil() as usize;
        let mut order = served;
        order.shuffle(&mut self.rng);
        let mut removed = 0;
        for r in order {
            if removed >= target {
                break;
            }
            if !self.plan.served[r - 1] {
                continue;
            }
            let batch: Vec<usize> = match self.cfg.coupling {
                Coupling::Soft => vec![r],
                Coupling::Hard => inst.groups()[inst.group_of(r)].clone(),
            };
            if let Some(cand) = removal_candidate(&self.plan, &batch) {
                self.plan.apply(&cand);
                removed += batch.len();
            }
        }
        self.current_value = plan_objective(&self.plan, self.cfg.objective);
        self.tabu.record(self.current_value);
        StepOutcome::Perturbed { removed }
    }
}

/// Candidate that unserves every request in `requests`, or `None` if a
/// shortened route no longer schedules.
pub(crate) fn removal_candidate(plan: &Plan<'_>, requests: &[usize]) -> Option<Candidate> {
    let mut changes: Vec<RouteChange> = Vec::new();
    for &r in requests {
        let (k, _, _) = plan.locate(r)?;
        let base = match changes.iter().position(|c| c.vehicle == k) {
            Some(i) => changes.remove(i).nodes,
            None => plan.routes[k - 1].clone(),
        };
        let nodes = without_request(plan.inst, &base, r);
        let eval = plan.evaluate(k, &nodes).ok()?;
        changes.push(RouteChange {
            vehicle: k,
            nodes,
            eval,
        });
    }
    Some(Candidate {
        changes,
        toggles: requests.iter().map(|&r| (r, false)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recently_seen_value_is_tabu_unless_it_beats_incumbent() {
        let mut tabu = TabuList::new(10);
        tabu.record(42);
        assert!(tabu.contains(42));
        assert!(!tabu.admits(42, 40));
        // aspiration
        assert!(tabu.admits(42, 50));
        assert!(tabu.admits(41, 40));
    }

    #[test]
    fn tenure_bounds_memory() {
        let mut tabu = TabuList::new(2);
        tabu.record(1);
        tabu.record(2);
        tabu.record(3);
        assert!(!tabu.contains(1));
        assert!(tabu.contains(2) && tabu.contains(3));
        let mut none = TabuList::new(0);
        none.record(5);
        assert!(!none.contains(5));
    }

    #[test]
    fn round_robin_follows_weights() {
        let mut rr = RoundRobin::new(&super::super::OperatorWeights([2, 1, 0, 0, 1]));
        let picks: Vec<Operator> = (0..8).map(|_| rr.next()).collect();
        let count = |op| picks.iter().filter(|&&p| p == op).count();
        assert_eq!(count(Operator::RelocatePair), 4);
        assert_eq!(count(Operator::SwapPairs), 2);
        assert_eq!(count(Operator::OrOptIntra), 2);
        assert_eq!(count(Operator::InsertUnservedPair), 0);
    }
}
