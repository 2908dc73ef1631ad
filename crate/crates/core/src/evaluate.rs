//! Solution validation, objectives and post-processing.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::{Instance, Minutes, Route, Solution};
use crate::schedule::{route_time_term, schedule_inner, Infeasible};

/// Constraint families a solution can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationTag {
    TimeProgress,
    TimeWindow,
    StartCandidate,
    ShiftSpan,
    PairVehicle,
    PairOrder,
    LoadProgress,
    Capacity,
    LoadStart,
    Uniqueness,
}

impl ViolationTag {
    pub const ALL: [ViolationTag; 10] = [
        ViolationTag::TimeProgress,
        ViolationTag::TimeWindow,
        ViolationTag::StartCandidate,
        ViolationTag::ShiftSpan,
        ViolationTag::PairVehicle,
        ViolationTag::PairOrder,
        ViolationTag::LoadProgress,
        ViolationTag::Capacity,
        ViolationTag::LoadStart,
        ViolationTag::Uniqueness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationTag::TimeProgress => "time_progress",
            ViolationTag::TimeWindow => "time_window",
            ViolationTag::StartCandidate => "start_candidate",
            ViolationTag::ShiftSpan => "shift_span",
            ViolationTag::PairVehicle => "pair_vehicle",
            ViolationTag::PairOrder => "pair_order",
            ViolationTag::LoadProgress => "load_progress",
            ViolationTag::Capacity => "capacity",
            ViolationTag::LoadStart => "load_start",
            ViolationTag::Uniqueness => "uniqueness",
        }
    }
}

impl fmt::Display for ViolationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub tag: ViolationTag,
    /// Vehicle whose route holds the violation, if route-local.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn tags(&self) -> BTreeSet<ViolationTag> {
        self.violations.iter().map(|v| v.tag).collect()
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(
        &mut self,
        tag: ViolationTag,
        vehicle: Option<usize>,
        node: Option<usize>,
        message: String,
    ) {
        self.0.push(Violation {
            tag,
            vehicle,
            node,
            message,
        });
    }
}

/// Checks the stored times and loads of every route against the model's
/// constraints, plus pairing and at-most-once service across routes.
pub fn check_solution(inst: &Instance, sol: &Solution) -> ValidationReport {
    use ViolationTag::*;
    let mut out = Collector(Vec::new());

    if let Err(err) = sol.check_structure(inst) {
        out.push(Uniqueness, None, None, err.to_string());
        return ValidationReport {
            feasible: false,
            violations: out.0,
        };
    }

    let n = inst.n();
    // visit count and (vehicle, position) of each request node
    let mut visits = vec![0usize; 2 * n + 1];
    let mut place = vec![None::<(usize, usize)>; 2 * n + 1];

    for route in &sol.routes {
        let k = route.vehicle;
        let seq = &route.sequence;
        let times = &route.times;

        for (j, &v) in seq.iter().enumerate() {
            if times[j] < inst.open(v) || times[j] > inst.close(v) {
                out.push(
                    TimeWindow,
                    Some(k),
                    Some(v),
                    format!(
                        "time {} outside window [{}, {}]",
                        times[j],
                        inst.open(v),
                        inst.close(v)
                    ),
                );
            }
            if j + 1 < seq.len() {
                let w = seq[j + 1];
                let ready = times[j] + inst.service(v) + inst.travel(v, w);
                if ready > times[j + 1] {
                    out.push(
                        TimeProgress,
                        Some(k),
                        Some(w),
                        format!(
                            "reached at {ready} after leaving node {v}, but stored time is {}",
                            times[j + 1]
                        ),
                    );
                }
            }
            if j > 0 && j + 1 < seq.len() {
                visits[v] += 1;
                place[v] = Some((k, j));
            }
        }

        let start = times[0];
        if route.shift_start != start {
            out.push(
                StartCandidate,
                Some(k),
                Some(seq[0]),
                format!(
                    "shift_start {} disagrees with depot time {start}",
                    route.shift_start
                ),
            );
        }
        if !inst.shift_policy().allows(start) {
            out.push(
                StartCandidate,
                Some(k),
                Some(seq[0]),
                format!("departure {start} is not an allowed shift start"),
            );
        }
        let span = times[times.len() - 1] - start;
        if span > inst.max_shift_span() {
            out.push(
                ShiftSpan,
                Some(k),
                None,
                format!("span {span} exceeds limit {}", inst.max_shift_span()),
            );
        }

        let derived;
        let loads: &[i64] = match &route.loads {
            Some(stored) => {
                if stored[0] != 0 {
                    out.push(
                        LoadStart,
                        Some(k),
                        Some(seq[0]),
                        format!("starting load is {}", stored[0]),
                    );
                }
                for j in 0..seq.len() - 1 {
                    let expect = stored[j] + inst.demand(seq[j]);
                    if stored[j + 1] != expect {
                        out.push(
                            LoadProgress,
                            Some(k),
                            Some(seq[j + 1]),
                            format!(
                                "stored load {} but {expect} follows from node {}",
                                stored[j + 1],
                                seq[j]
                            ),
                        );
                    }
                }
                stored
            }
            None => {
                derived = derived_loads(inst, seq);
                &derived
            }
        };
        for (j, &load) in loads.iter().enumerate() {
            if load < 0 || load > inst.capacity() {
                out.push(
                    Capacity,
                    Some(k),
                    Some(seq[j]),
                    format!("load {load} outside [0, {}]", inst.capacity()),
                );
            }
        }
    }

    for id in 1..=2 * n {
        if visits[id] > 1 {
            out.push(
                Uniqueness,
                None,
                Some(id),
                format!("node visited {} times", visits[id]),
            );
        }
    }
    for r in 1..=n {
        let (p, d) = (inst.pickup(r), inst.dropoff(r));
        if visits[p] > 1 || visits[d] > 1 {
            continue;
        }
        match (place[p], place[d]) {
            (Some((kp, jp)), Some((kd, jd))) => {
                if kp != kd {
                    out.push(
                        PairVehicle,
                        Some(kp),
                        Some(p),
                        format!(
                            "request {r} picked up by vehicle {kp} but dropped off by vehicle {kd}"
                        ),
                    );
                } else if jd <= jp {
                    out.push(
                        PairOrder,
                        Some(kp),
                        Some(d),
                        format!("request {r} dropped off before pickup"),
                    );
                }
            }
            (Some((k, _)), None) => out.push(
                PairVehicle,
                Some(k),
                Some(p),
                format!("request {r} picked up but never dropped off"),
            ),
            (None, Some((k, _))) => out.push(
                PairVehicle,
                Some(k),
                Some(d),
                format!("request {r} dropped off but never picked up"),
            ),
            (None, None) => {}
        }
    }

    let mut listed = vec![0usize; n + 1];
    for &r in &sol.unserved {
        listed[r] += 1;
    }
    for r in 1..=n {
        let visited = visits[inst.pickup(r)] > 0 || visits[inst.dropoff(r)] > 0;
        if listed[r] > 1 {
            out.push(
                Uniqueness,
                None,
                Some(r),
                format!("request {r} listed as unserved {} times", listed[r]),
            );
        }
        if visited && listed[r] > 0 {
            out.push(
                Uniqueness,
                None,
                Some(r),
                format!("request {r} is both served and listed as unserved"),
            );
        }
        if !visited && listed[r] == 0 {
            out.push(
                Uniqueness,
                None,
                Some(r),
                format!("request {r} is neither served nor listed as unserved"),
            );
        }
    }

    ValidationReport {
        feasible: out.0.is_empty(),
        violations: out.0,
    }
}

fn derived_loads(inst: &Instance, seq: &[usize]) -> Vec<i64> {
    let mut loads = Vec::with_capacity(seq.len());
    let mut load = 0;
    for &v in seq {
        loads.push(load);
        load += inst.demand(v);
    }
    loads
}

/// Group penalty given a per-request served predicate (`served[r - 1]`).
pub fn penalty_for(inst: &Instance, served: &[bool]) -> i64 {
    inst.groups()
        .iter()
        .filter(|g| g.iter().any(|&r| !served[r - 1]))
        .map(|g| g.len() as i64)
        .sum()
}

fn served_flags(inst: &Instance, sol: &Solution) -> Vec<bool> {
    let mut served = vec![false; inst.n()];
    for route in &sol.routes {
        for &v in route.inner() {
            if v <= inst.n() {
                served[v - 1] = true;
            }
        }
    }
    served
}

/// Sum of `|R_u|` over groups with at least one unserved request.
pub fn objective_unserved(inst: &Instance, sol: &Solution) -> i64 {
    penalty_for(inst, &served_flags(inst, sol))
}

/// Service plus travel time summed over the arcs of all used routes.
pub fn time_term(inst: &Instance, sol: &Solution) -> Minutes {
    sol.routes
        .iter()
        .map(|r| route_time_term(inst, &r.sequence))
        .sum()
}

/// Time term plus `big_m` times the group penalty.
pub fn objective_accelerated(inst: &Instance, sol: &Solution) -> i64 {
    time_term(inst, sol) + inst.big_m() * objective_unserved(inst, sol)
}

/// Sum of shift spans over vehicles that serve at least one request.
pub fn total_working_minutes(sol: &Solution) -> Minutes {
    sol.routes
        .iter()
        .filter(|r| !r.is_empty())
        .map(Route::span)
        .sum()
}

/// Builds a solution with canonical schedules from per-vehicle request lists
/// (`inner[k - 1]` for vehicle `k`).
pub fn assemble_solution(inst: &Instance, inner: &[Vec<usize>]) -> Result<Solution, Infeasible> {
    let mut routes = Vec::with_capacity(inst.m());
    let mut served = vec![false; inst.n()];
    for (idx, nodes) in inner.iter().enumerate() {
        let k = idx + 1;
        routes.push(canonical_route(inst, k, nodes)?);
        for &v in nodes {
            if v <= inst.n() {
                served[v - 1] = true;
            }
        }
    }
    let unserved = (1..=inst.n()).filter(|&r| !served[r - 1]).collect();
    Ok(Solution { routes, unserved })
}

pub(crate) fn canonical_route(
    inst: &Instance,
    vehicle: usize,
    inner: &[usize],
) -> Result<Route, Infeasible> {
    let sched = schedule_inner(inst, vehicle, inner)?;
    let mut sequence = Vec::with_capacity(inner.len() + 2);
    sequence.push(inst.start_depot(vehicle));
    sequence.extend_from_slice(inner);
    sequence.push(inst.end_depot(vehicle));
    Ok(Route {
        vehicle,
        sequence,
        shift_start: sched.shift_start,
        times: sched.node_times,
        loads: Some(sched.node_loads),
    })
}

/// Removes every request of every partially served group.
///
/// Routes that lose nodes are rescheduled canonically; untouched routes keep
/// their stored schedule. If the travel times violate
/// `s_j + t_ij + t_jk >= t_ik` a shortened route can become infeasible; such
/// a route then sheds whole groups from its end until it schedules again,
/// which raises the penalty. On instances satisfying that inequality the
/// penalty is always preserved.
pub fn strip_partial_groups(inst: &Instance, sol: &Solution) -> Solution {
    let served = served_flags(inst, sol);
    let mut drop = vec![false; inst.n()];
    for group in inst.groups() {
        let count = group.iter().filter(|&&r| served[r - 1]).count();
        if count > 0 && count < group.len() {
            for &r in group {
                drop[r - 1] = true;
            }
        }
    }
    if !drop.iter().any(|&d| d) {
        return sol.clone();
    }

    let mut inner: Vec<Option<Vec<usize>>> = sol
        .routes
        .iter()
        .map(|route| {
            let touches = route.inner().iter().any(|&v| drop[inst.request_of(v) - 1]);
            touches.then(|| {
                route
                    .inner()
                    .iter()
                    .copied()
                    .filter(|&v| !drop[inst.request_of(v) - 1])
                    .collect()
            })
        })
        .collect();

    // Fallback for non-metric travel times: shed groups until every
    // rewritten route schedules, repeating until no route changes.
    loop {
        let mut changed = false;
        for k in 1..=inst.m() {
            let Some(nodes) = inner[k - 1].as_mut() else {
                continue;
            };
            while schedule_inner(inst, k, nodes).is_err() {
                let last = *nodes.last().expect("an empty route always schedules");
                let group = inst.group_of(inst.request_of(last));
                for &r in &inst.groups()[group] {
                    drop[r - 1] = true;
                }
                nodes.retain(|&v| !drop[inst.request_of(v) - 1]);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (idx, route) in sol.routes.iter().enumerate() {
            if inner[idx].is_none() && route.inner().iter().any(|&v| drop[inst.request_of(v) - 1]) {
                inner[idx] = Some(
                    route
                        .inner()
                        .iter()
                        .copied()
                        .filter(|&v| !drop[inst.request_of(v) - 1])
                        .collect(),
                );
            }
        }
    }

    let routes = sol
        .routes
        .iter()
        .zip(inner)
        .map(|(route, nodes)| match nodes {
            None => route.clone(),
            Some(nodes) => canonical_route(inst, route.vehicle, &nodes).expect("checked above"),
        })
        .collect();
    let mut unserved: Vec<usize> = sol.unserved.clone();
    unserved.extend((1..=inst.n()).filter(|&r| drop[r - 1] && served[r - 1]));
    unserved.sort_unstable();
    unserved.dedup();
    Solution { routes, unserved }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InstanceData, NodeSpec, ShiftPolicy};

    /// `n` requests, `m` vehicles, generous windows, unit distances.
    fn open_instance(n: usize, m: usize, groups: Vec<Vec<usize>>) -> Instance {
        let nn = 2 * n + 2 * m;
        let mut nodes = vec![
            NodeSpec {
                a: 0,
                b: 1000,
                s: 1,
                d: 1
            };
            n
        ];
        nodes.extend(vec![
            NodeSpec {
                a: 0,
                b: 1000,
                s: 1,
                d: -1
            };
            n
        ]);
        nodes.extend(vec![
            NodeSpec {
                a: 0,
                b: 1000,
                s: 0,
                d: 0
            };
            2 * m
        ]);
        let mut travel = vec![vec![2; nn]; nn];
        for (i, row) in travel.iter_mut().enumerate() {
            row[i] = 0;
        }
        Instance::new(InstanceData {
            n,
            m,
            capacity: 3,
            max_shift_span: 1000,
            shift_starts: ShiftPolicy::Candidates(vec![0, 60]),
            big_m: 10_000,
            nodes,
            travel,
            groups,
        })
        .unwrap()
    }

    fn singletons(n: usize) -> Vec<Vec<usize>> {
        (1..=n).map(|r| vec![r]).collect()
    }

    #[test]
    fn assembled_solution_validates() {
        let inst = open_instance(2, 1, singletons(2));
        let sol = assemble_solution(&inst, &[vec![1, 2, 3, 4]]).unwrap();
        let report = check_solution(&inst, &sol);
        assert!(report.feasible, "{report:?}");
        assert_eq!(objective_unserved(&inst, &sol), 0);
    }

    #[test]
    fn penalty_counts_whole_group() {
        let inst = open_instance(4, 1, vec![vec![1, 2, 3], vec![4]]);
        // requests 1 and 2 served, 3 not: group of size 3 penalized
        let sol = assemble_solution(&inst, &[vec![1, 5, 2, 6, 4, 8]]).unwrap();
        assert_eq!(objective_unserved(&inst, &sol), 3);
        let all = assemble_solution(&inst, &[vec![1, 5, 2, 6, 3, 7, 4, 8]]).unwrap();
        assert_eq!(objective_unserved(&inst, &all), 0);
    }

    #[test]
    fn two_unserved_singletons_cost_two() {
        let inst = open_instance(2, 1, singletons(2));
        let empty = assemble_solution(&inst, &[vec![]]).unwrap();
        assert_eq!(objective_unserved(&inst, &empty), 2);
        assert_eq!(objective_accelerated(&inst, &empty), 20_000);
        assert_eq!(total_working_minutes(&empty), 0);
    }

    #[test]
    fn accelerated_objective_adds_time_term() {
        let inst = open_instance(1, 1, singletons(1));
        let sol = assemble_solution(&inst, &[vec![1, 2]]).unwrap();
        // 0+2, 1+2, 1+2
        assert_eq!(time_term(&inst, &sol), 8);
        assert_eq!(objective_accelerated(&inst, &sol), 8);
    }

    #[test]
    fn working_minutes_sum_active_spans() {
        let inst = open_instance(2, 2, singletons(2));
        let sol = assemble_solution(&inst, &[vec![1, 3], vec![2, 4]]).unwrap();
        let spans: Minutes = sol.routes.iter().map(Route::span).sum();
        assert_eq!(total_working_minutes(&sol), spans);
        let one = assemble_solution(&inst, &[vec![1, 3], vec![]]).unwrap();
        assert_eq!(total_working_minutes(&one), one.routes[0].span());
    }

    #[test]
    fn strip_removes_partial_group_and_keeps_penalty() {
        let inst = open_instance(3, 1, vec![vec![1, 2], vec![3]]);
        let sol = assemble_solution(&inst, &[vec![1, 4, 3, 6]]).unwrap();
        assert_eq!(objective_unserved(&inst, &sol), 2);
        let stripped = strip_partial_groups(&inst, &sol);
        assert_eq!(stripped.routes[0].inner(), &[3, 6]);
        assert_eq!(stripped.unserved, vec![1, 2]);
        assert_eq!(objective_unserved(&inst, &stripped), 2);
        assert!(check_solution(&inst, &stripped).feasible);
        assert_eq!(strip_partial_groups(&inst, &stripped), stripped);
    }

    #[test]
    fn strip_is_identity_on_complete_groups() {
        let inst = open_instance(2, 1, vec![vec![1, 2]]);
        let sol = assemble_solution(&inst, &[vec![1, 2, 3, 4]]).unwrap();
        assert_eq!(strip_partial_groups(&inst, &sol), sol);
    }

    #[test]
    fn report_is_feasible_iff_no_violations() {
        let inst = open_instance(1, 1, singletons(1));
        let mut sol = assemble_solution(&inst, &[vec![1, 2]]).unwrap();
        assert!(check_solution(&inst, &sol).feasible);
        sol.routes[0].times[1] = 2000;
        let report = check_solution(&inst, &sol);
        assert!(!report.feasible);
        assert!(report.tags().contains(&ViolationTag::TimeWindow));
    }

    #[test]
    fn tags_serialize_in_snake_case() {
        for tag in ViolationTag::ALL {
            let json = serde_json::to_string(&tag).unwrap();
            assert_eq!(json, format!("\"{}\"", tag.as_str()));
        }
    }
}
