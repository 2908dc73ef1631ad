//! Route scheduling for a fixed visit order.
//!
//! A backward pass computes, for every node, the latest service start that
//! still meets all downstream deadlines. Any departure between the depot's
//! window open and that latest value yields a window-feasible forward pass,
//! and later departures never lengthen the shift, so the chosen departure is
//! the latest allowed one in that range.

use std::cmp::{max, min};

use thiserror::Error;

use crate::model::{Instance, Minutes};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Infeasible {
    #[error("time window missed at node {node}")]
    WindowMiss { node: usize },
    #[error("no allowed shift start for vehicle {vehicle} (latest feasible departure {latest})")]
    NoStartCandidate { vehicle: usize, latest: Minutes },
    #[error("shift span {span} exceeds limit {limit}")]
    SpanExceeded { span: Minutes, limit: Minutes },
    #[error("load {load} out of range after node {node}")]
    CapacityExceeded { node: usize, load: i64 },
    #[error("malformed sequence: {0}")]
    BadSequence(String),
}

/// Feasible schedule for one route. Vectors are aligned with the full
/// sequence, depots included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteSchedule {
    pub vehicle: usize,
    pub shift_start: Minutes,
    pub node_times: Vec<Minutes>,
    pub node_loads: Vec<i64>,
    pub span: Minutes,
}

impl RouteSchedule {
    pub fn end_time(&self) -> Minutes {
        *self.node_times.last().expect("schedule includes depots")
    }
}

/// Allocation-free summary of a feasible route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RouteEval {
    pub shift_start: Minutes,
    pub end_time: Minutes,
    /// Service plus travel time over the route's arcs; zero for an unused vehicle.
    pub time_term: Minutes,
}

impl RouteEval {
    pub fn span(&self) -> Minutes {
        self.end_time - self.shift_start
    }
}

/// Schedules a full sequence `start depot, requests..., end depot`.
pub fn schedule_route(inst: &Instance, sequence: &[usize]) -> Result<RouteSchedule, Infeasible> {
    let vehicle = vehicle_of_sequence(inst, sequence)?;
    schedule_inner(inst, vehicle, &sequence[1..sequence.len() - 1])
}

fn vehicle_of_sequence(inst: &Instance, sequence: &[usize]) -> Result<usize, Infeasible> {
    if sequence.len() < 2 {
        return Err(Infeasible::BadSequence(
            "sequence must contain both depots".into(),
        ));
    }
    let first = sequence[0];
    let n2 = 2 * inst.n();
    if first <= n2 || first > n2 + inst.m() {
        return Err(Infeasible::BadSequence(format!(
            "node {first} is not a start depot"
        )));
    }
    let vehicle = first - n2;
    let last = sequence[sequence.len() - 1];
    if last != inst.end_depot(vehicle) {
        return Err(Infeasible::BadSequence(format!(
            "vehicle {vehicle} must end at node {}, not {last}",
            inst.end_depot(vehicle)
        )));
    }
    if let Some(&bad) = sequence[1..sequence.len() - 1]
        .iter()
        .find(|&&id| !inst.is_request_node(id))
    {
        return Err(Infeasible::BadSequence(format!(
            "node {bad} is not a request node"
        )));
    }
    Ok(vehicle)
}

/// Schedules the requests `inner` on `vehicle`, returning full vectors.
pub fn schedule_inner(
    inst: &Instance,
    vehicle: usize,
    inner: &[usize],
) -> Result<RouteSchedule, Infeasible> {
    let eval = evaluate_inner(inst, vehicle, inner)?;
    let node_times = forward_times(inst, vehicle, inner, eval.shift_start);
    let mut node_loads = Vec::with_capacity(inner.len() + 2);
    let mut load = 0;
    node_loads.push(0);
    for &v in inner {
        node_loads.push(load);
        load += inst.demand(v);
    }
    node_loads.push(load);
    Ok(RouteSchedule {
        vehicle,
        shift_start: eval.shift_start,
        node_times,
        node_loads,
        span: eval.span(),
    })
}

/// Feasibility, chosen departure, end time and time term of a route.
pub fn evaluate_inner(
    inst: &Instance,
    vehicle: usize,
    inner: &[usize],
) -> Result<RouteEval, Infeasible> {
    let q = inst.capacity();
    let mut load = 0;
    for &v in inner {
        load += inst.demand(v);
        if load > q || load < 0 {
            return Err(Infeasible::CapacityExceeded { node: v, load });
        }
    }

    let sd = inst.start_depot(vehicle);
    let ed = inst.end_depot(vehicle);

    let mut latest = inst.close(ed);
    let mut next = ed;
    for &v in inner.iter().rev() {
        latest = min(
            inst.close(v),
            latest - inst.service(v) - inst.travel(v, next),
        );
        if inst.open(v) > latest {
            return Err(Infeasible::WindowMiss { node: v });
        }
        next = v;
    }
    let latest_departure = min(
        inst.close(sd),
        latest - inst.service(sd) - inst.travel(sd, next),
    );
    let shift_start = inst
        .shift_policy()
        .latest_in(inst.open(sd), latest_departure)
        .ok_or(Infeasible::NoStartCandidate {
            vehicle,
            latest: latest_departure,
        })?;

    let mut time = shift_start;
    let mut prev = sd;
    let mut time_term = 0;
    for &v in inner.iter().chain(std::iter::once(&ed)) {
        let step = inst.service(prev) + inst.travel(prev, v);
        time_term += step;
        time = max(inst.open(v), time + step);
        debug_assert!(time <= inst.close(v));
        prev = v;
    }
    let span = time - shift_start;
    if span > inst.max_shift_span() {
        return Err(Infeasible::SpanExceeded {
            span,
            limit: inst.max_shift_span(),
        });
    }
    Ok(RouteEval {
        shift_start,
        end_time: time,
        time_term: if inner.is_empty() { 0 } else { time_term },
    })
}

/// Earliest service starts along the route when leaving the depot at `start`,
/// waiting whenever a window has not opened yet. Windows are not checked.
pub fn forward_times(
    inst: &Instance,
    vehicle: usize,
    inner: &[usize],
    start: Minutes,
) -> Vec<Minutes> {
    let sd = inst.start_depot(vehicle);
    let ed = inst.end_depot(vehicle);
    let mut times = Vec::with_capacity(inner.len() + 2);
    times.push(start);
    let mut time = start;
    let mut prev = sd;
    for &v in inner.iter().chain(std::iter::once(&ed)) {
        time = max(
            inst.open(v),
            time + inst.service(prev) + inst.travel(prev, v),
        );
        times.push(time);
        prev = v;
    }
    times
}

/// Service plus travel time over the arcs of a route; zero for an unused vehicle.
pub fn route_time_term(inst: &Instance, sequence: &[usize]) -> Minutes {
    if sequence.len() <= 2 {
        return 0;
    }
    sequence
        .windows(2)
        .map(|w| inst.service(w[0]) + inst.travel(w[0], w[1]))
        .sum()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{InstanceData, NodeSpec, ShiftPolicy};

    /// One request, one vehicle: pickup 1, drop-off 2, depots 3 and 4.
    pub(crate) fn single_request(
        p_window: (Minutes, Minutes),
        starts: Vec<Minutes>,
        span: Minutes,
    ) -> Instance {
        let nodes = vec![
            NodeSpec {
                a: p_window.0,
                b: p_window.1,
                s: 5,
                d: 1,
            },
            NodeSpec {
                a: 80,
                b: 140,
                s: 5,
                d: -1,
            },
            NodeSpec {
                a: 0,
                b: 1440,
                s: 0,
                d: 0,
            },
            NodeSpec {
                a: 0,
                b: 1440,
                s: 0,
                d: 0,
            },
        ];
        let mut travel = vec![vec![10; 4]; 4];
        for (i, row) in travel.iter_mut().enumerate() {
            row[i] = 0;
        }
        travel[2][3] = 0;
        travel[3][2] = 0;
        Instance::new(InstanceData {
            n: 1,
            m: 1,
            capacity: 3,
            max_shift_span: span,
            shift_starts: ShiftPolicy::Candidates(starts),
            big_m: 10_000,
            nodes,
            travel,
            groups: vec![vec![1]],
        })
        .unwrap()
    }

    #[test]
    fn picks_latest_candidate_that_meets_windows() {
        let inst = single_request((60, 120), vec![0, 60], 480);
        let sched = schedule_route(&inst, &[3, 1, 2, 4]).unwrap();
        assert_eq!(sched.shift_start, 60);
        assert_eq!(sched.node_times, vec![60, 70, 85, 100]);
        assert_eq!(sched.node_loads, vec![0, 0, 1, 0]);
        assert_eq!(sched.span, 40);
    }

    #[test]
    fn waits_for_window_to_open() {
        let inst = single_request((60, 65), vec![0], 480);
        let sched = schedule_route(&inst, &[3, 1, 2, 4]).unwrap();
        assert_eq!(sched.shift_start, 0);
        // arrives at 10, waits until 60
        assert_eq!(sched.node_times[1], 60);
        assert_eq!(sched.node_times[2], 80);
    }

    #[test]
    fn span_limit_makes_route_infeasible() {
        let inst = single_request((60, 120), vec![0, 60], 30);
        assert_eq!(
            schedule_route(&inst, &[3, 1, 2, 4]),
            Err(Infeasible::SpanExceeded {
                span: 40,
                limit: 30
            })
        );
    }

    #[test]
    fn empty_route_spans_depot_to_depot() {
        let inst = single_request((60, 120), vec![0, 60], 480);
        let sched = schedule_route(&inst, &[3, 4]).unwrap();
        assert_eq!(sched.shift_start, 60);
        assert_eq!(sched.span, inst.travel(3, 4));
        assert_eq!(evaluate_inner(&inst, 1, &[]).unwrap().time_term, 0);
    }

    #[test]
    fn unreachable_deadline_is_a_window_miss() {
        // drop-off closes before the pickup can be served and driven over
        let inst = single_request((130, 135), vec![0, 60], 480);
        assert_eq!(
            schedule_route(&inst, &[3, 1, 2, 4]),
            Err(Infeasible::WindowMiss { node: 1 })
        );
    }

    #[test]
    fn no_candidate_early_enough() {
        let inst = single_request((60, 120), vec![120], 480);
        assert!(matches!(
            schedule_route(&inst, &[3, 1, 2, 4]),
            Err(Infeasible::NoStartCandidate {
                vehicle: 1,
                latest: 110
            })
        ));
    }

    #[test]
    fn capacity_and_order_of_loads() {
        let inst = single_request((60, 120), vec![0, 60], 480);
        // drop-off before pickup drives the load negative
        assert!(matches!(
            schedule_route(&inst, &[3, 2, 1, 4]),
            Err(Infeasible::CapacityExceeded { node: 2, load: -1 })
        ));
    }

    #[test]
    fn rejects_malformed_sequences() {
        let inst = single_request((60, 120), vec![0, 60], 480);
        assert!(matches!(
            schedule_route(&inst, &[3]),
            Err(Infeasible::BadSequence(_))
        ));
        assert!(matches!(
            schedule_route(&inst, &[1, 2, 4]),
            Err(Infeasible::BadSequence(_))
        ));
        assert!(matches!(
            schedule_route(&inst, &[3, 1, 2, 3]),
            Err(Infeasible::BadSequence(_))
        ));
        assert!(matches!(
            schedule_route(&inst, &[3, 4, 4]),
            Err(Infeasible::BadSequence(_))
        ));
    }

    #[test]
    fn time_term_counts_service_and_travel() {
        let inst = single_request((60, 120), vec![0, 60], 480);
        // 0+10 from depot, 5+10 after pickup, 5+10 after drop-off
        assert_eq!(route_time_term(&inst, &[3, 1, 2, 4]), 40);
        assert_eq!(route_time_term(&inst, &[3, 4]), 0);
        assert_eq!(evaluate_inner(&inst, 1, &[1, 2]).unwrap().time_term, 40);
    }
}
