//! Exhaustive solver for very small instances.
//!
//! Works directly from the instance data with its own route simulation: every
//! precedence-respecting visiting order of every request subset on every
//! vehicle is enumerated, and each order is checked by trying every allowed
//! departure time. Use it to measure how far a heuristic is from optimal.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::model::{Instance, Minutes, Route, ShiftPolicy, Solution};

pub const MAX_EXACT_REQUESTS: usize = 5;
pub const MAX_EXACT_VEHICLES: usize = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for exact search: {n} requests and {m} vehicles (limit {MAX_EXACT_REQUESTS} and {MAX_EXACT_VEHICLES})")]
    TooLarge { n: usize, m: usize },
    #[error("no feasible solution exists, not even with every vehicle idle")]
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactResult {
    /// Smallest achievable group penalty.
    pub penalty: i64,
    /// Smallest service plus travel time among solutions with that penalty.
    pub time_term: Minutes,
    /// An optimal solution with lexicographically smallest (penalty, time).
    pub solution: Solution,
    /// Number of distinct served-request sets reaching the optimal penalty.
    pub optimal_sets: usize,
}

/// Best way to serve one request subset with one vehicle.
#[derive(Debug, Clone)]
struct Tour {
    time_term: Minutes,
    inner: Vec<usize>,
    start: Minutes,
}

pub fn solve_exact(inst: &Instance) -> Result<ExactResult, OracleError> {
    let (n, m) = (inst.n(), inst.m());
    if n > MAX_EXACT_REQUESTS || m > MAX_EXACT_VEHICLES {
        return Err(OracleError::TooLarge { n, m });
    }

    // best tour per (vehicle, subset bitmask)
    let mut tours: HashMap<(usize, u32), Option<Tour>> = HashMap::new();
    for k in 1..=m {
        for mask in 0..(1u32 << n) {
            tours.insert((k, mask), best_tour(inst, k, mask));
        }
    }

    // every request goes to one vehicle or stays unserved (value 0)
    let mut best: Option<(i64, Minutes, Vec<u32>)> = None;
    let mut optimal: BTreeSet<u32> = BTreeSet::new();
    let mut best_penalty_sets: Option<i64> = None;
    let mut assign = vec![0usize; n];
    loop {
        let mut masks = vec![0u32; m];
        for (r, &k) in assign.iter().enumerate() {
            if k > 0 {
                masks[k - 1] |= 1 << r;
            }
        }
        let mut time = 0;
        let mut feasible = true;
        for k in 1..=m {
            match &tours[&(k, masks[k - 1])] {
                Some(t) => time += t.time_term,
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            let served_mask = masks.iter().fold(0, |a, &b| a | b);
            let penalty = penalty_of(inst, served_mask);
            match best_penalty_sets {
                Some(p) if penalty > p => {}
                Some(p) if penalty == p => {
                    optimal.insert(served_mask);
                }
                _ => {
                    best_penalty_sets = Some(penalty);
                    optimal.clear();
                    optimal.insert(served_mask);
                }
            }
            if best.as_ref().is_none_or(|b| (penalty, time) < (b.0, b.1)) {
                best = Some((penalty, time, masks));
            }
        }
        // next assignment in base m + 1
        let mut i = 0;
        loop {
            if i == n {
                let (penalty, time_term, masks) = best.ok_or(OracleError::Infeasible)?;
                let solution = build_solution(inst, &tours, &masks);
                return Ok(ExactResult {
                    penalty,
                    time_term,
                    solution,
                    optimal_sets: optimal.len(),
                });
            }
            assign[i] += 1;
            if assign[i] <= m {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

fn penalty_of(inst: &Instance, served_mask: u32) -> i64 {
    inst.groups()
        .iter()
        .filter(|g| g.iter().any(|&r| served_mask & (1 << (r - 1)) == 0))
        .map(|g| g.len() as i64)
        .sum()
}

fn build_solution(
    inst: &Instance,
    tours: &HashMap<(usize, u32), Option<Tour>>,
    masks: &[u32],
) -> Solution {
    let mut routes = Vec::with_capacity(inst.m());
    let mut unserved: BTreeSet<usize> = (1..=inst.n()).collect();
    for k in 1..=inst.m() {
        let tour = tours[&(k, masks[k - 1])]
            .as_ref()
            .expect("chosen tours exist");
        let mut sequence = vec![inst.start_depot(k)];
        sequence.extend_from_slice(&tour.inner);
        sequence.push(inst.end_depot(k));
        let times = simulate(inst, &sequence, tour.start).expect("chosen start is feasible");
        for &v in &tour.inner {
            if v <= inst.n() {
                unserved.remove(&v);
            }
        }
        routes.push(Route {
            vehicle: k,
            sequence,
            shift_start: tour.start,
            times,
            loads: None,
        });
    }
    Solution {
        routes,
        unserved: unserved.into_iter().collect(),
    }
}

/// Cheapest feasible order for the requests in `mask` on `vehicle`.
fn best_tour(inst: &Instance, vehicle: usize, mask: u32) -> Option<Tour> {
    let requests: Vec<usize> = (1..=inst.n())
        .filter(|r| mask & (1 << (r - 1)) != 0)
        .collect();
    let mut orders: Vec<(Minutes, Vec<usize>)> = Vec::new();
    let sd = inst.start_depot(vehicle);
    let mut path = vec![sd];
    let mut picked = vec![false; requests.len()];
    let mut dropped = vec![false; requests.len()];
    enumerate(
        inst,
        &requests,
        &mut path,
        &mut picked,
        &mut dropped,
        0,
        inst.open(sd),
        0,
        &mut orders,
    );
    orders.sort();
    let starts = allowed_starts(inst, vehicle);
    for (time_term, inner) in orders {
        let mut sequence = vec![sd];
        sequence.extend_from_slice(&inner);
        sequence.push(inst.end_depot(vehicle));
        // latest feasible departure
        if let Some(&start) = starts
            .iter()
            .rev()
            .find(|&&s| simulate(inst, &sequence, s).is_some())
        {
            return Some(Tour {
                time_term,
                inner,
                start,
            });
        }
    }
    None
}

fn allowed_starts(inst: &Instance, vehicle: usize) -> Vec<Minutes> {
    let sd = inst.start_depot(vehicle);
    let (lo, hi) = (inst.open(sd), inst.close(sd));
    match inst.shift_policy() {
        ShiftPolicy::Flexible => (lo..=hi).collect(),
        ShiftPolicy::Candidates(c) => c.iter().copied().filter(|&s| s >= lo && s <= hi).collect(),
    }
}

/// Depth-first enumeration of complete visiting orders. `time` is the
/// earliest possible arrival at the last node, used only for pruning.
#[allow(clippy::too_many_arguments)]
fn enumerate(
    inst: &Instance,
    requests: &[usize],
    path: &mut Vec<usize>,
    picked: &mut [bool],
    dropped: &mut [bool],
    load: i64,
    time: Minutes,
    cost: Minutes,
    out: &mut Vec<(Minutes, Vec<usize>)>,
) {
    let last = *path.last().unwrap();
    if path.len() == 1 && requests.is_empty() {
        out.push((0, Vec::new()));
        return;
    }
    if dropped.iter().all(|&d| d) {
        let end = inst.end_depot(vehicle_of(inst, path[0]));
        let total = cost + inst.service(last) + inst.travel(last, end);
        out.push((total, path[1..].to_vec()));
        return;
    }
    for idx in 0..requests.len() {
        let r = requests[idx];
        let next = if !picked[idx] {
            inst.pickup(r)
        } else if !dropped[idx] {
            inst.dropoff(r)
        } else {
            continue;
        };
        let new_load = load + inst.demand(next);
        if new_load > inst.capacity() || new_load < 0 {
            continue;
        }
        let arrive = (time + inst.service(last) + inst.travel(last, next)).max(inst.open(next));
        if arrive > inst.close(next) {
            continue;
        }
        let step = inst.service(last) + inst.travel(last, next);
        let pickup = !picked[idx];
        if pickup {
            picked[idx] = true;
        } else {
            dropped[idx] = true;
        }
        path.push(next);
        enumerate(
            inst,
            requests,
            path,
            picked,
            dropped,
            new_load,
            arrive,
            cost + step,
            out,
        );
        path.pop();
        if pickup {
            picked[idx] = false;
        } else {
            dropped[idx] = false;
        }
    }
}

fn vehicle_of(inst: &Instance, start_depot: usize) -> usize {
    start_depot - 2 * inst.n()
}

/// Arrival times when leaving the start depot at `start`, or `None` if any
/// window, capacity or span limit is broken.
fn simulate(inst: &Instance, sequence: &[usize], start: Minutes) -> Option<Vec<Minutes>> {
    let sd = sequence[0];
    if start < inst.open(sd) || start > inst.close(sd) {
        return None;
    }
    let mut times = vec![start];
    let mut load = 0;
    for w in sequence.windows(2) {
        let (u, v) = (w[0], w[1]);
        let t = (times.last().unwrap() + inst.service(u) + inst.travel(u, v)).max(inst.open(v));
        if t > inst.close(v) {
            return None;
        }
        load += inst.demand(v);
        if load > inst.capacity() || load < 0 {
            return None;
        }
        times.push(t);
    }
    let end = *times.last().unwrap();
    if end - start > inst.max_shift_span() {
        return None;
    }
    Some(times)
}
