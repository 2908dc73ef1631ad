//! Neighborhood scans. Each scan offers every feasible move of one operator
//! to the selector, which keeps the best admissible one.

use super::tabu::{removal_candidate, Selector};
use super::{Coupling, Operator, HARD_INSERT_LIMIT};
use crate::plan::{without_request, Candidate, Plan, RouteChange};
use crate::schedule::RouteEval;

pub(crate) fn scan(
    op: Operator,
    plan: &Plan<'_>,
    coupling: Coupling,
    sel: &mut Selector<'_>,
    scratch: &mut Vec<usize>,
) {
    match op {
        Operator::RelocatePair => relocate_pair(plan, sel, scratch),
        Operator::SwapPairs => swap_pairs(plan, sel),
        Operator::InsertUnservedPair => match coupling {
            Coupling::Soft => insert_unserved_soft(plan, sel, scratch),
            Coupling::Hard => insert_unserved_hard(plan, sel, scratch),
        },
        Operator::RemovePair => remove_pair(plan, coupling, sel),
        Operator::OrOptIntra => or_opt_intra(plan, sel, scratch),
    }
}

fn change(vehicle: usize, nodes: &[usize], eval: RouteEval) -> RouteChange {
    RouteChange {
        vehicle,
        nodes: nodes.to_vec(),
        eval,
    }
}

/// Moves one served request to another position, on its own or another route.
fn relocate_pair(plan: &Plan<'_>, sel: &mut Selector<'_>, scratch: &mut Vec<usize>) {
    let inst = plan.inst;
    for r in 1..=inst.n() {
        let Some((from, _, _)) = plan.locate(r) else {
            continue;
        };
        let reduced = without_request(inst, &plan.routes[from - 1], r);
        let Ok(reduced_eval) = plan.evaluate(from, &reduced) else {
            if !sel.keep_going(plan) {
                return;
            }
            continue;
        };
        let original = &plan.routes[from - 1];
        for to in 1..=inst.m() {
            let base: &[usize] = if to == from {
                &reduced
            } else {
                &plan.routes[to - 1]
            };
            let go_on = plan.for_each_insertion(to, base, r, scratch, |_, _, nodes, eval| {
                if to == from {
                    if nodes == original.as_slice() {
                        return sel.keep_going(plan);
                    }
                    let value = sel.value_of(plan, &[(from, eval)], &[]);
                    sel.offer(plan, value, || Candidate {
                        changes: vec![change(from, nodes, eval)],
                        toggles: Vec::new(),
                    })
                } else {
                    let value = sel.value_of(plan, &[(from, reduced_eval), (to, eval)], &[]);
                    sel.offer(plan, value, || Candidate {
                        changes: vec![
                            change(from, &reduced, reduced_eval),
                            change(to, nodes, eval),
                        ],
                        toggles: Vec::new(),
                    })
                }
            });
            if !go_on || !sel.keep_going(plan) {
                return;
            }
        }
    }
}

/// Exchanges two served requests on different routes, each taking over the
/// other's pickup and drop-off positions.
fn swap_pairs(plan: &Plan<'_>, sel: &mut Selector<'_>) {
    let inst = plan.inst;
    let located: Vec<(usize, usize, usize, usize)> = (1..=inst.n())
        .filter_map(|r| plan.locate(r).map(|(k, i, j)| (r, k, i, j)))
        .collect();
    let mut a_nodes = Vec::new();
    let mut b_nodes = Vec::new();
    for (x, &(r1, k1, i1, j1)) in located.iter().enumerate() {
        for &(r2, k2, i2, j2) in &located[x + 1..] {
            if k1 == k2 {
                continue;
            }
            a_nodes.clone_from(&plan.routes[k1 - 1]);
            a_nodes[i1] = inst.pickup(r2);
            a_nodes[j1] = inst.dropoff(r2);
            let Ok(a_eval) = plan.evaluate(k1, &a_nodes) else {
                if !sel.keep_going(plan) {
                    return;
                }
                continue;
            };
            b_nodes.clone_from(&plan.routes[k2 - 1]);
            b_nodes[i2] = inst.pickup(r1);
            b_nodes[j2] = inst.dropoff(r1);
            let go_on = match plan.evaluate(k2, &b_nodes) {
                Ok(b_eval) => {
                    let value = sel.value_of(plan, &[(k1, a_eval), (k2, b_eval)], &[]);
                    sel.offer(plan, value, || Candidate {
                        changes: vec![change(k1, &a_nodes, a_eval), change(k2, &b_nodes, b_eval)],
                        toggles: Vec::new(),
                    })
                }
                Err(_) => sel.keep_going(plan),
            };
            if !go_on {
                return;
            }
        }
    }
}

/// Serves one unserved request at any feasible position of any route.
fn insert_unserved_soft(plan: &Plan<'_>, sel: &mut Selector<'_>, scratch: &mut Vec<usize>) {
    let inst = plan.inst;
    for r in 1..=inst.n() {
        if plan.served[r - 1] {
            continue;
        }
        let toggles = [(r, true)];
        let penalty = plan.penalty_after(&toggles);
        for k in 1..=inst.m() {
            let go_on =
                plan.for_each_insertion(k, &plan.routes[k - 1], r, scratch, |_, _, nodes, eval| {
                    let value = sel.value_with_penalty(plan, &[(k, eval)], penalty);
                    sel.offer(plan, value, || Candidate {
                        changes: vec![change(k, nodes, eval)],
                        toggles: toggles.to_vec(),
                    })
                });
            if !go_on || !sel.keep_going(plan) {
                return;
            }
        }
    }
}

/// Activates a whole unserved group of at most [`HARD_INSERT_LIMIT`]
/// requests. Single requests are tried at every position; larger groups are
/// placed greedily, one request after the other at its cheapest position.
fn insert_unserved_hard(plan: &Plan<'_>, sel: &mut Selector<'_>, scratch: &mut Vec<usize>) {
    let inst = plan.inst;
    for (g, members) in inst.groups().iter().enumerate() {
        if !plan.group_untouched(g) || members.len() > HARD_INSERT_LIMIT {
            continue;
        }
        if let [r] = members[..] {
            let toggles = [(r, true)];
            let penalty = plan.penalty_after(&toggles);
            for k in 1..=inst.m() {
                let go_on = plan.for_each_insertion(
                    k,
                    &plan.routes[k - 1],
                    r,
                    scratch,
                    |_, _, nodes, eval| {
                        let value = sel.value_with_penalty(plan, &[(k, eval)], penalty);
                        sel.offer(plan, value, || Candidate {
                            changes: vec![change(k, nodes, eval)],
                            toggles: toggles.to_vec(),
                        })
                    },
                );
                if !go_on || !sel.keep_going(plan) {
                    return;
                }
            }
            continue;
        }
        if let Some(cand) = greedy_group_insertion(plan, members, scratch) {
            let routes: Vec<(usize, RouteEval)> =
                cand.changes.iter().map(|c| (c.vehicle, c.eval)).collect();
            let value = sel.value_of(plan, &routes, &cand.toggles);
            if !sel.offer(plan, value, || cand) {
                return;
            }
        } else if !sel.keep_going(plan) {
            return;
        }
    }
}

fn greedy_group_insertion(
    plan: &Plan<'_>,
    members: &[usize],
    scratch: &mut Vec<usize>,
) -> Option<Candidate> {
    let inst = plan.inst;
    let mut changes: Vec<RouteChange> = Vec::new();
    for &r in members {
        let mut best: Option<(i64, RouteChange)> = None;
        for k in 1..=inst.m() {
            let (base, term) = match changes.iter().find(|c| c.vehicle == k) {
                Some(c) => (c.nodes.as_slice(), c.eval.time_term),
                None => (plan.routes[k - 1].as_slice(), plan.evals[k - 1].time_term),
            };
            if let Some((cost, nodes, eval)) = plan.best_insertion(k, base, term, r, scratch) {
                if best.as_ref().is_none_or(|b| cost < b.0) {
                    best = Some((
                        cost,
                        RouteChange {
                            vehicle: k,
                            nodes,
                            eval,
                        },
                    ));
                }
            }
        }
        let (_, c) = best?;
        changes.retain(|old| old.vehicle != c.vehicle);
        changes.push(c);
    }
    changes.sort_by_key(|c| c.vehicle);
    Some(Candidate {
        changes,
        toggles: members.iter().map(|&r| (r, true)).collect(),
    })
}

/// Unserves one request, or under hard coupling one complete group.
fn remove_pair(plan: &Plan<'_>, coupling: Coupling, sel: &mut Selector<'_>) {
    let inst = plan.inst;
    let mut offer = |requests: &[usize]| -> bool {
        match removal_candidate(plan, requests) {
            Some(cand) => {
                let routes: Vec<(usize, RouteEval)> =
                    cand.changes.iter().map(|c| (c.vehicle, c.eval)).collect();
                let value = sel.value_of(plan, &routes, &cand.toggles);
                sel.offer(plan, value, || cand)
            }
            None => sel.keep_going(plan),
        }
    };
    match coupling {
        Coupling::Soft => {
            for r in 1..=inst.n() {
                if plan.served[r - 1] && !offer(&[r]) {
                    return;
                }
            }
        }
        Coupling::Hard => {
            for (g, members) in inst.groups().iter().enumerate() {
                if plan.group_complete(g) && !offer(members) {
                    return;
                }
            }
        }
    }
}

/// Moves a block of one to three consecutive nodes elsewhere in its route.
fn or_opt_intra(plan: &Plan<'_>, sel: &mut Selector<'_>, scratch: &mut Vec<usize>) {
    let inst = plan.inst;
    let mut rest = Vec::new();
    for k in 1..=inst.m() {
        let route = &plan.routes[k - 1];
        let len = route.len();
        for seg_len in 1..=3.min(len) {
            for i in 0..=len - seg_len {
                let seg = &route[i..i + seg_len];
                rest.clear();
                rest.extend_from_slice(&route[..i]);
                rest.extend_from_slice(&route[i + seg_len..]);
                for j in 0..=rest.len() {
                    if j == i {
                        continue;
                    }
                    scratch.clear();
                    scratch.extend_from_slice(&rest[..j]);
                    scratch.extend_from_slice(seg);
                    scratch.extend_from_slice(&rest[j..]);
                    if !precedence_ok(plan, scratch) {
                        continue;
                    }
                    let go_on = match plan.evaluate(k, scratch) {
                        Ok(eval) => {
                            let value = sel.value_of(plan, &[(k, eval)], &[]);
                            sel.offer(plan, value, || Candidate {
                                changes: vec![change(k, scratch, eval)],
                                toggles: Vec::new(),
                            })
                        }
                        Err(_) => sel.keep_going(plan),
                    };
                    if !go_on {
                        return;
                    }
                }
            }
        }
    }
}

/// Every drop-off in `nodes` comes after its pickup.
fn precedence_ok(plan: &Plan<'_>, nodes: &[usize]) -> bool {
    let n = plan.inst.n();
    for (idx, &v) in nodes.iter().enumerate() {
        if v > n && !nodes[..idx].contains(&(v - n)) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::build_plan;
    use crate::generate::{generate, GenParams};
    use crate::plan::with_pair;
    use crate::search::clock::{Clock, ClockMode};
    use crate::search::tabu::TabuList;
    use crate::search::{plan_objective, ObjectiveMode};

    fn best_move(plan: &Plan<'_>, op: Operator, coupling: Coupling) -> Option<(i64, Candidate)> {
        let tabu = TabuList::new(0);
        let clock = Clock::start(ClockMode::Deterministic, 1e9);
        let mut sel = Selector {
            tabu: &tabu,
            clock: &clock,
            mode: ObjectiveMode::Accelerated,
            big_m: plan.inst.big_m(),
            current: plan_objective(plan, ObjectiveMode::Accelerated),
            incumbent: i64::MIN,
            descent_only: false,
            best: None,
            aborted: false,
        };
        scan(op, plan, coupling, &mut sel, &mut Vec::new());
        sel.best
    }

    fn instance(seed: u64) -> crate::model::Instance {
        generate(&GenParams::tiny(5, 2, seed)).unwrap()
    }

    #[test]
    fn inserting_an_unserved_request_lowers_the_objective_by_at_most_its_group() {
        let mut found = 0;
        for seed in 0..30 {
            let inst = instance(seed);
            let mut plan = build_plan(&inst, seed);
            // a request whose group is otherwise complete, so reinserting it pays off
            let Some(r) = (1..=inst.n()).find(|&r| plan.group_complete(inst.group_of(r))) else {
                continue;
            };
            let removal = crate::search::tabu::removal_candidate(&plan, &[r]).unwrap();
            plan.apply(&removal);
            let before = plan_objective(&plan, ObjectiveMode::Accelerated);
            let (value, cand) =
                best_move(&plan, Operator::InsertUnservedPair, Coupling::Soft).unwrap();
            let inserted = cand.toggles[0].0;
            let group = inst.groups()[inst.group_of(inserted)].len() as i64;
            assert!(value - before < 0);
            assert!(value - before >= -inst.big_m() * group);
            plan.apply(&cand);
            assert_eq!(plan_objective(&plan, ObjectiveMode::Accelerated), value);
            found += 1;
        }
        assert!(found > 10);
    }

    #[test]
    fn removing_and_reinserting_at_the_same_place_is_neutral() {
        for seed in 0..30 {
            let inst = instance(seed);
            let mut plan = build_plan(&inst, seed);
            let original = (plan.penalty, plan.time_term, plan.routes.clone());
            for r in 1..=inst.n() {
                let Some((k, i, j)) = plan.locate(r) else {
                    continue;
                };
                let removal = crate::search::tabu::removal_candidate(&plan, &[r]).unwrap();
                plan.apply(&removal);
                let nodes = with_pair(&plan.routes[k - 1], i, j, inst.pickup(r), inst.dropoff(r));
                let eval = plan.evaluate(k, &nodes).unwrap();
                plan.apply(&Candidate {
                    changes: vec![RouteChange {
                        vehicle: k,
                        nodes,
                        eval,
                    }],
                    toggles: vec![(r, true)],
                });
                assert_eq!(
                    (plan.penalty, plan.time_term, plan.routes.clone()),
                    original
                );
            }
        }
    }

    #[test]
    fn moves_keep_plans_feasible_and_objectives_exact() {
        for seed in 0..20 {
            let inst = instance(seed);
            for op in Operator::ALL {
                for coupling in [Coupling::Soft, Coupling::Hard] {
                    let mut plan = build_plan(&inst, seed);
                    if let Some((value, cand)) = best_move(&plan, op, coupling) {
                        plan.apply(&cand);
                        assert_eq!(plan_objective(&plan, ObjectiveMode::Accelerated), value);
                        let sol = plan.to_solution();
                        let report = crate::evaluate::check_solution(&inst, &sol);
                        assert!(
                            report.feasible,
                            "{op:?} {coupling:?}: {:?}",
                            report.violations
                        );
                        if op == Operator::OrOptIntra
                            || op == Operator::RelocatePair
                            || op == Operator::SwapPairs
                        {
                            assert_eq!(crate::evaluate::objective_unserved(&inst, &sol), {
                                let before = build_plan(&inst, seed);
                                before.penalty
                            });
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hard_coupling_moves_whole_groups() {
        let inst = generate(&GenParams {
            round_trip_fraction: 1.0,
            ..GenParams::tiny(4, 2, 5)
        })
        .unwrap();
        let plan = crate::plan::Plan::empty(&inst).unwrap();
        if let Some((_, cand)) = best_move(&plan, Operator::InsertUnservedPair, Coupling::Hard) {
            assert_eq!(cand.toggles.len(), 2);
        }
        let full = build_plan(&inst, 1);
        if let Some((_, cand)) = best_move(&full, Operator::RemovePair, Coupling::Hard) {
            let g = inst.group_of(cand.toggles[0].0);
            assert_eq!(cand.toggles.len(), inst.groups()[g].len());
        }
    }
}
