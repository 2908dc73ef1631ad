//! Group-aware cheapest insertion.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Instance, Solution};
use crate::plan::{Candidate, Plan, RouteChange};

/// Builds a feasible starting solution.
///
/// Groups are visited in a seed-dependent random order and inserted
/// atomically, each request at its cheapest feasible position over all
/// routes (cost is the increase in service plus travel time; ties go to the
/// lowest vehicle and earliest position). Members of groups that did not fit
/// as a whole are retried one by one afterwards.
pub fn construct(inst: &Instance, seed: u64) -> Solution {
    build_plan(inst, seed).to_solution()
}

pub(crate) fn build_plan(inst: &Instance, seed: u64) -> Plan<'_> {
    let mut plan = Plan::empty(inst).expect("empty routes always schedule");
    let mut order: Vec<usize> = (0..inst.groups().len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut scratch = Vec::new();
    let mut leftovers = Vec::new();
    for &g in &order {
        let snapshot = plan.clone();
        let mut ok = true;
        for &r in &inst.groups()[g] {
            if !insert_cheapest(&mut plan, r, &mut scratch) {
                ok = false;
                break;
            }
        }
        if !ok {
            plan = snapshot;
            leftovers.push(g);
        }
    }
    for g in leftovers {
        for &r in &inst.groups()[g] {
            insert_cheapest(&mut plan, r, &mut scratch);
        }
    }
    plan
}

/// Inserts an unserved request at its cheapest position; false if none is feasible.
pub(crate) fn insert_cheapest(
    plan: &mut Plan<'_>,
    request: usize,
    scratch: &mut Vec<usize>,
) -> bool {
    let mut best: Option<(i64, usize, Vec<usize>, crate::schedule::RouteEval)> = None;
    for k in 1..=plan.inst.m() {
        let base = &plan.routes[k - 1];
        let term = plan.evals[k - 1].time_term;
        if let Some((cost, nodes, eval)) = plan.best_insertion(k, base, term, request, scratch) {
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, k, nodes, eval));
            }
        }
    }
    match best {
        Some((_, vehicle, nodes, eval)) => {
            plan.apply(&Candidate {
                changes: vec![RouteChange {
                    vehicle,
                    nodes,
                    eval,
                }],
                toggles: vec![(request, true)],
            });
            true
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::{check_solution, objective_unserved};
    use crate::generate::{generate, GenParams};
    use crate::schedule::tests::single_request;

    #[test]
    fn serves_a_reachable_request() {
        let inst = single_request((60, 120), vec![0, 60], 480);
        let sol = construct(&inst, 7);
        assert!(sol.unserved.is_empty());
        assert_eq!(objective_unserved(&inst, &sol), 0);
        assert!(check_solution(&inst, &sol).feasible);
    }

    #[test]
    fn leaves_unreachable_request_unserved() {
        // the only candidate departure is after the pickup window closes
        let inst = single_request((60, 65), vec![0], 480)
            .with_shift_policy(crate::model::ShiftPolicy::Candidates(vec![100]))
            .unwrap();
        let sol = construct(&inst, 7);
        assert_eq!(sol.unserved, vec![1]);
        assert!(sol.routes[0].is_empty());
        assert!(check_solution(&inst, &sol).feasible);
    }

    #[test]
    fn deterministic_and_feasible_on_generated_instance() {
        let inst = generate(&GenParams {
            n_requests: 60,
            n_vehicles: 4,
            seed: 2,
            ..GenParams::default()
        })
        .unwrap();
        let a = construct(&inst, 11);
        let b = construct(&inst, 11);
        assert_eq!(a, b);
        let report = check_solution(&inst, &a);
        assert!(report.feasible, "{:?}", report.violations);
        assert!(a.served_count(&inst) > 0);
    }
}
