//! Mutable working representation shared by construction and search.

use std::cell::Cell;

use crate::evaluate::assemble_solution;
use crate::model::{Instance, Solution};
use crate::schedule::{evaluate_inner, Infeasible, RouteEval};

/// Replacement contents for one route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RouteChange {
    pub vehicle: usize,
    pub nodes: Vec<usize>,
    pub eval: RouteEval,
}

/// A fully evaluated move: routes to overwrite and requests whose served
/// status flips.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub(crate) struct Candidate {
    pub changes: Vec<RouteChange>,
    pub toggles: Vec<(usize, bool)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Plan<'a> {
    pub inst: &'a Instance,
    /// Request nodes per vehicle (`routes[k - 1]`), depots excluded.
    pub routes: Vec<Vec<usize>>,
    pub evals: Vec<RouteEval>,
    /// `served[r - 1]`.
    pub served: Vec<bool>,
    group_served: Vec<usize>,
    pub penalty: i64,
    pub time_term: i64,
    /// Route nodes scheduled so far; drives the deterministic clock.
    pub work: Cell<u64>,
}

impl<'a> Plan<'a> {
    pub fn empty(inst: &'a Instance) -> Result<Self, Infeasible> {
        Plan::from_routes(inst, vec![Vec::new(); inst.m()])
    }

    pub fn from_routes(inst: &'a Instance, routes: Vec<Vec<usize>>) -> Result<Self, Infeasible> {
        let evals = routes
            .iter()
            .enumerate()
            .map(|(idx, nodes)| evaluate_inner(inst, idx + 1, nodes))
            .collect::<Result<Vec<_>, _>>()?;
        let mut served = vec![false; inst.n()];
        for nodes in &routes {
            for &v in nodes {
                if v <= inst.n() {
                    served[v - 1] = true;
                }
            }
        }
        let mut group_served = vec![0; inst.groups().len()];
        for r in 1..=inst.n() {
            if served[r - 1] {
                group_served[inst.group_of(r)] += 1;
            }
        }
        let penalty = inst
            .groups()
            .iter()
            .zip(&group_served)
            .filter(|(g, &c)| c < g.len())
            .map(|(g, _)| g.len() as i64)
            .sum();
        let time_term = evals.iter().map(|e| e.time_term).sum();
        Ok(Plan {
            inst,
            routes,
            evals,
            served,
            group_served,
            penalty,
            time_term,
            work: Cell::new(0),
        })
    }

    pub fn from_solution(inst: &'a Instance, sol: &Solution) -> Result<Self, Infeasible> {
        Plan::from_routes(
            inst,
            sol.routes.iter().map(|r| r.inner().to_vec()).collect(),
        )
    }

    pub fn to_solution(&self) -> Solution {
        assemble_solution(self.inst, &self.routes).expect("plan routes are feasible")
    }

    /// Evaluates a route and charges its length to the work counter.
    #[inline]
    pub fn evaluate(&self, vehicle: usize, nodes: &[usize]) -> Result<RouteEval, Infeasible> {
        self.work.set(self.work.get() + nodes.len() as u64 + 24);
        evaluate_inner(self.inst, vehicle, nodes)
    }

    /// Whether every request of group `g` is served.
    pub fn group_complete(&self, g: usize) -> bool {
        self.group_served[g] == self.inst.groups()[g].len()
    }

    pub fn group_untouched(&self, g: usize) -> bool {
        self.group_served[g] == 0
    }

    /// Group penalty after flipping the given requests.
    pub fn penalty_after(&self, toggles: &[(usize, bool)]) -> i64 {
        let mut penalty = self.penalty;
        let groups = self.inst.groups();
        // toggles touch at most a handful of groups; apply them one by one
        let mut local: Vec<(usize, usize)> = Vec::with_capacity(toggles.len());
        for &(r, now) in toggles {
            let g = self.inst.group_of(r);
            let idx = match local.iter().position(|&(lg, _)| lg == g) {
                Some(i) => i,
                None => {
                    local.push((g, self.group_served[g]));
                    local.len() - 1
                }
            };
            let before = local[idx].1;
            let after = if now { before + 1 } else { before - 1 };
            local[idx].1 = after;
        }
        for (g, after) in local {
            let size = groups[g].len();
            let was = self.group_served[g] < size;
            let is = after < size;
            match (was, is) {
                (true, false) => penalty -= size as i64,
                (false, true) => penalty += size as i64,
                _ => {}
            }
        }
        penalty
    }

    /// Time term after replacing the routes named in `changes`.
    pub fn time_term_after(&self, changes: &[RouteChange]) -> i64 {
        let mut t = self.time_term;
        for c in changes {
            t += c.eval.time_term - self.evals[c.vehicle - 1].time_term;
        }
        t
    }

    pub fn apply(&mut self, cand: &Candidate) {
        self.penalty = self.penalty_after(&cand.toggles);
        self.time_term = self.time_term_after(&cand.changes);
        for c in &cand.changes {
            self.routes[c.vehicle - 1] = c.nodes.clone();
            self.evals[c.vehicle - 1] = c.eval;
        }
        for &(r, now) in &cand.toggles {
            debug_assert_ne!(self.served[r - 1], now);
            self.served[r - 1] = now;
            let g = self.inst.group_of(r);
            if now {
                self.group_served[g] += 1;
            } else {
                self.group_served[g] -= 1;
            }
        }
    }

    /// Vehicle and positions of a served request's pickup and drop-off.
    pub fn locate(&self, request: usize) -> Option<(usize, usize, usize)> {
        let (p, d) = (self.inst.pickup(request), self.inst.dropoff(request));
        for (idx, nodes) in self.routes.iter().enumerate() {
            if let Some(i) = nodes.iter().position(|&v| v == p) {
                let j = nodes.iter().position(|&v| v == d)?;
                return Some((idx + 1, i, j));
            }
        }
        None
    }

    /// Cheapest feasible insertion of `request` into `base` on `vehicle`,
    /// measured as the time-term increase over `base_term`. Scans pickup
    /// positions outermost and keeps the first strictly cheaper option.
    pub fn best_insertion(
        &self,
        vehicle: usize,
        base: &[usize],
        base_term: i64,
        request: usize,
        scratch: &mut Vec<usize>,
    ) -> Option<(i64, Vec<usize>, RouteEval)> {
        let mut best: Option<(i64, usize, usize, RouteEval)> = None;
        self.for_each_insertion(vehicle, base, request, scratch, |p, q, _nodes, eval| {
            let cost = eval.time_term - base_term;
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, p, q, eval));
            }
            true
        });
        best.map(|(cost, p, q, eval)| {
            let nodes = with_pair(
                base,
                p,
                q,
                self.inst.pickup(request),
                self.inst.dropoff(request),
            );
            (cost, nodes, eval)
        })
    }

    /// Calls `visit(p, q, nodes, eval)` for every feasible placement of the
    /// request's pickup at index `p` and drop-off at index `q > p` of the
    /// resulting route. Stops early when `visit` returns false.
    pub fn for_each_insertion(
        &self,
        vehicle: usize,
        base: &[usize],
        request: usize,
        scratch: &mut Vec<usize>,
        mut visit: impl FnMut(usize, usize, &[usize], RouteEval) -> bool,
    ) -> bool {
        let pickup = self.inst.pickup(request);
        let dropoff = self.inst.dropoff(request);
        let len = base.len();
        for p in 0..=len {
            if self.pickup_unreachable(vehicle, base, p, pickup) {
                continue;
            }
            for q in p + 1..=len + 1 {
                fill_with_pair(scratch, base, p, q, pickup, dropoff);
                if let Ok(eval) = self.evaluate(vehicle, scratch) {
                    if !visit(p, q, scratch, eval) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// True when serving `pickup` right after `base[..p]` is late even when
    /// the vehicle leaves at the depot's window open.
    fn pickup_unreachable(&self, vehicle: usize, base: &[usize], p: usize, pickup: usize) -> bool {
        let inst = self.inst;
        self.work.set(self.work.get() + p as u64 + 8);
        let sd = inst.start_depot(vehicle);
        let mut time = inst.open(sd);
        let mut prev = sd;
        for &v in &base[..p] {
            time = std::cmp::max(
                inst.open(v),
                time + inst.service(prev) + inst.travel(prev, v),
            );
            prev = v;
        }
        let arrive = std::cmp::max(
            inst.open(pickup),
            time + inst.service(prev) + inst.travel(prev, pickup),
        );
        arrive > inst.close(pickup)
    }
}

/// `base` with `pickup` at index `p` and `dropoff` at index `q` of the result.
pub(crate) fn with_pair(
    base: &[usize],
    p: usize,
    q: usize,
    pickup: usize,
    dropoff: usize,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(base.len() + 2);
    fill_with_pair(&mut out, base, p, q, pickup, dropoff);
    out
}

pub(crate) fn fill_with_pair(
    out: &mut Vec<usize>,
    base: &[usize],
    p: usize,
    q: usize,
    pickup: usize,
    dropoff: usize,
) {
    debug_assert!(p < q && q <= base.len() + 1);
    out.clear();
    out.extend_from_slice(&base[..p]);
    out.push(pickup);
    out.extend_from_slice(&base[p..q - 1]);
    out.push(dropoff);
    out.extend_from_slice(&base[q - 1..]);
}

/// `nodes` without the pickup and drop-off of `request`.
pub(crate) fn without_request(inst: &Instance, nodes: &[usize], request: usize) -> Vec<usize> {
    let (p, d) = (inst.pickup(request), inst.dropoff(request));
    nodes
        .iter()
        .copied()
        .filter(|&v| v != p && v != d)
        .collect()
}
