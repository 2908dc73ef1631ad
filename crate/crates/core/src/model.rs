//! Problem and solution data model.
//!
//! Node ids are 1-based and follow a fixed layout for `n` requests and `m`
//! vehicles: pickups `1..=n`, drop-offs `n+1..=2n`, start depots
//! `2n+1..=2n+m`, end depots `2n+m+1..=2n+2m`. Request `r` is picked up at
//! node `r` and dropped off at node `n + r`.

use std::collections::BTreeSet;

use crate::error::ModelError;

/// Minutes since midnight (or a duration in minutes).
pub type Minutes = i64;

/// Which departure times a vehicle may leave its start depot at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShiftPolicy {
    /// Explicit sorted set of allowed departure minutes.
    Candidates(Vec<Minutes>),
    /// Any integer minute inside the start depot window.
    Flexible,
}

impl ShiftPolicy {
    /// Top-of-the-hour departures from `first` to `last` inclusive.
    pub fn hourly(first: Minutes, last: Minutes) -> Self {
        ShiftPolicy::Candidates((first..=last).step_by(60).collect())
    }

    pub fn is_flexible(&self) -> bool {
        matches!(self, ShiftPolicy::Flexible)
    }

    pub fn allows(&self, t: Minutes) -> bool {
        match self {
            ShiftPolicy::Flexible => true,
            ShiftPolicy::Candidates(c) => c.binary_search(&t).is_ok(),
        }
    }

    /// Latest allowed departure in `[lo, hi]`.
    pub fn latest_in(&self, lo: Minutes, hi: Minutes) -> Option<Minutes> {
        if lo > hi {
            return None;
        }
        match self {
            ShiftPolicy::Flexible => Some(hi),
            ShiftPolicy::Candidates(c) => {
                let idx = c.partition_point(|&t| t <= hi);
                if idx == 0 {
                    return None;
                }
                let t = c[idx - 1];
                (t >= lo).then_some(t)
            }
        }
    }
}

/// Per-node data: time window `[a, b]`, service time `s`, demand `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSpec {
    pub a: Minutes,
    pub b: Minutes,
    pub s: Minutes,
    pub d: i64,
}

/// Unvalidated instance contents, in node-id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceData {
    pub n: usize,
    pub m: usize,
    pub capacity: i64,
    pub max_shift_span: Minutes,
    pub shift_starts: ShiftPolicy,
    pub big_m: i64,
    /// `nodes[id - 1]`.
    pub nodes: Vec<NodeSpec>,
    /// Row-major `(2n+2m) x (2n+2m)` travel times.
    pub travel: Vec<Vec<Minutes>>,
    pub groups: Vec<Vec<usize>>,
}

/// Role of a node, derived from its id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Pickup { partner: usize },
    Dropoff { partner: usize },
    StartDepot { vehicle: usize },
    EndDepot { vehicle: usize },
}

impl NodeRole {
    pub fn partner(&self) -> Option<usize> {
        match *self {
            NodeRole::Pickup { partner } | NodeRole::Dropoff { partner } => Some(partner),
            _ => None,
        }
    }
}

/// A validated, immutable problem instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    data: InstanceData,
    travel: Vec<Minutes>,
    group_of: Vec<usize>,
}

impl Instance {
    pub fn new(data: InstanceData) -> Result<Self, ModelError> {
        let n = data.n;
        let m = data.m;
        let nn = 2 * n + 2 * m;
        if data.nodes.len() != nn {
            return Err(ModelError::invariant(
                "node indexing",
                format!(
                    "expected {} nodes for n={n}, m={m}, found {}",
                    nn,
                    data.nodes.len()
                ),
            ));
        }
        if data.travel.len() != nn || data.travel.iter().any(|row| row.len() != nn) {
            return Err(ModelError::invariant(
                "travel matrix shape",
                format!("travel matrix must be {nn}x{nn}"),
            ));
        }
        let mut travel = Vec::with_capacity(nn * nn);
        for (i, row) in data.travel.iter().enumerate() {
            for (j, &t) in row.iter().enumerate() {
                if t < 0 {
                    return Err(ModelError::invariant(
                        "nonnegative times",
                        format!("travel time {} -> {} is {t}", i + 1, j + 1),
                    ));
                }
                travel.push(t);
            }
        }
        for (idx, node) in data.nodes.iter().enumerate() {
            let id = idx + 1;
            if node.a < 0 || node.b < 0 || node.s < 0 {
                return Err(ModelError::invariant(
                    "nonnegative times",
                    format!("node {id} has a negative window bound or service time"),
                ));
            }
            if node.a > node.b {
                return Err(ModelError::invariant(
                    "time window order",
                    format!("node {id} window [{}, {}] is empty", node.a, node.b),
                ));
            }
            if id <= n {
                if node.d <= 0 {
                    return Err(ModelError::invariant(
                        "demand sign",
                        format!("pickup {id} has demand {}", node.d),
                    ));
                }
                let drop = data.nodes[n + idx].d;
                if drop != -node.d {
                    return Err(ModelError::invariant(
                        "demand antisymmetry",
                        format!(
                            "pickup {id} has demand {} but drop-off {} has {drop}",
                            node.d,
                            n + id
                        ),
                    ));
                }
            } else if id > 2 * n && node.d != 0 {
                return Err(ModelError::invariant(
                    "depot demand",
                    format!("depot {id} has demand {}", node.d),
                ));
            }
        }
        if data.capacity < 0 || data.max_shift_span < 0 || data.big_m < 0 {
            return Err(ModelError::invariant(
                "nonnegative parameters",
                "capacity, max_shift_span and big_m must be nonnegative",
            ));
        }

        let mut group_of = vec![usize::MAX; n];
        for (g, members) in data.groups.iter().enumerate() {
            if members.is_empty() {
                return Err(ModelError::invariant(
                    "groups not a partition",
                    format!("group {g} is empty"),
                ));
            }
            for &r in members {
                if r == 0 || r > n {
                    return Err(ModelError::invariant(
                        "groups not a partition",
                        format!("group {g} names request {r}, outside 1..={n}"),
                    ));
                }
                if group_of[r - 1] != usize::MAX {
                    return Err(ModelError::invariant(
                        "groups not a partition",
                        format!("request {r} appears in more than one group"),
                    ));
                }
                group_of[r - 1] = g;
            }
        }
        if let Some(r) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(ModelError::invariant(
                "groups not a partition",
                format!("request {} belongs to no group", r + 1),
            ));
        }

        if let ShiftPolicy::Candidates(c) = &data.shift_starts {
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ModelError::invariant(
                    "shift candidates sorted",
                    "shift_starts must be strictly increasing",
                ));
            }
            for k in 1..=m {
                let depot = data.nodes[2 * n + k - 1];
                if let Some(&t) = c.iter().find(|&&t| t < depot.a || t > depot.b) {
                    return Err(ModelError::invariant(
                        "shift candidates within depot window",
                        format!(
                            "candidate {t} outside start depot {} window [{}, {}]",
                            2 * n + k,
                            depot.a,
                            depot.b
                        ),
                    ));
                }
            }
        }

        Ok(Instance {
            data,
            travel,
            group_of,
        })
    }

    pub fn data(&self) -> &InstanceData {
        &self.data
    }

    pub fn into_data(self) -> InstanceData {
        self.data
    }

    /// Same instance under a different shift policy.
    pub fn with_shift_policy(&self, policy: ShiftPolicy) -> Result<Instance, ModelError> {
        let mut data = self.data.clone();
        data.shift_starts = policy;
        Instance::new(data)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.data.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.data.m
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.data.nodes.len()
    }

    #[inline]
    pub fn capacity(&self) -> i64 {
        self.data.capacity
    }

    #[inline]
    pub fn max_shift_span(&self) -> Minutes {
        self.data.max_shift_span
    }

    #[inline]
    pub fn shift_policy(&self) -> &ShiftPolicy {
        &self.data.shift_starts
    }

    #[inline]
    pub fn big_m(&self) -> i64 {
        self.data.big_m
    }

    #[inline]
    pub fn node(&self, id: usize) -> &NodeSpec {
        &self.data.nodes[id - 1]
    }

    #[inline]
    pub fn open(&self, id: usize) -> Minutes {
        self.data.nodes[id - 1].a
    }

    #[inline]
    pub fn close(&self, id: usize) -> Minutes {
        self.data.nodes[id - 1].b
    }

    #[inline]
    pub fn service(&self, id: usize) -> Minutes {
        self.data.nodes[id - 1].s
    }

    #[inline]
    pub fn demand(&self, id: usize) -> i64 {
        self.data.nodes[id - 1].d
    }

    #[inline]
    pub fn travel(&self, from: usize, to: usize) -> Minutes {
        self.travel[(from - 1) * self.data.nodes.len() + (to - 1)]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.data.groups
    }

    /// Index into [`Instance::groups`] of the group holding request `r`.
    #[inline]
    pub fn group_of(&self, request: usize) -> usize {
        self.group_of[request - 1]
    }

    #[inline]
    pub fn pickup(&self, request: usize) -> usize {
        request
    }

    #[inline]
    pub fn dropoff(&self, request: usize) -> usize {
        self.data.n + request
    }

    #[inline]
    pub fn start_depot(&self, vehicle: usize) -> usize {
        2 * self.data.n + vehicle
    }

    #[inline]
    pub fn end_depot(&self, vehicle: usize) -> usize {
        2 * self.data.n + self.data.m + vehicle
    }

    #[inline]
    pub fn is_request_node(&self, id: usize) -> bool {
        id >= 1 && id <= 2 * self.data.n
    }

    /// Request id served by a pickup or drop-off node.
    #[inline]
    pub fn request_of(&self, id: usize) -> usize {
        if id > self.data.n {
            id - self.data.n
        } else {
            id
        }
    }

    pub fn node_role(&self, id: usize) -> Result<NodeRole, ModelError> {
        let n = self.data.n;
        let m = self.data.m;
        let max = 2 * n + 2 * m;
        if id == 0 || id > max {
            return Err(ModelError::NodeOutOfRange { id, max });
        }
        Ok(if id <= n {
            NodeRole::Pickup { partner: n + id }
        } else if id <= 2 * n {
            NodeRole::Dropoff { partner: id - n }
        } else if id <= 2 * n + m {
            NodeRole::StartDepot {
                vehicle: id - 2 * n,
            }
        } else {
            NodeRole::EndDepot {
                vehicle: id - 2 * n - m,
            }
        })
    }
}

/// One vehicle's route with its stored schedule.
///
/// `sequence` runs from the vehicle's start depot to its end depot; a route
/// with no request nodes in between is an unused vehicle. `times[j]` is the
/// service start at `sequence[j]`. `loads`, when present, is the stored load
/// on arrival at each node; otherwise loads are derived from demands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub vehicle: usize,
    pub sequence: Vec<usize>,
    pub shift_start: Minutes,
    pub times: Vec<Minutes>,
    pub loads: Option<Vec<i64>>,
}

impl Route {
    /// Request nodes strictly between the depots.
    pub fn inner(&self) -> &[usize] {
        if self.sequence.len() < 2 {
            return &[];
        }
        &self.sequence[1..self.sequence.len() - 1]
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.len() <= 2
    }

    /// Arrival at the end depot minus shift start.
    pub fn span(&self) -> Minutes {
        self.times.last().map_or(0, |&end| end - self.shift_start)
    }
}

/// A full solution: one route per vehicle plus the unserved request ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub unserved: Vec<usize>,
}

impl Solution {
    /// Requests whose pickup node appears on some route.
    pub fn served_requests(&self, inst: &Instance) -> BTreeSet<usize> {
        self.routes
            .iter()
            .flat_map(|r| r.inner().iter().copied())
            .filter(|&id| id >= 1 && id <= inst.n())
            .collect()
    }

    /// Number of requests visited by some route.
    pub fn served_count(&self, inst: &Instance) -> usize {
        self.served_requests(inst).len()
    }

    /// Checks the shape that every other operation assumes: exactly one route
    /// per vehicle in vehicle order, correct depots at both ends, only request
    /// nodes in between, schedule vectors of matching length, and unserved ids
    /// in range. Duplicate visits are not structural; they are reported by the
    /// validator.
    pub fn check_structure(&self, inst: &Instance) -> Result<(), ModelError> {
        if self.routes.len() != inst.m() {
            return Err(ModelError::Solution(format!(
                "expected {} routes, found {}",
                inst.m(),
                self.routes.len()
            )));
        }
        for (idx, route) in self.routes.iter().enumerate() {
            let k = idx + 1;
            if route.vehicle != k {
                return Err(ModelError::Solution(format!(
                    "route {idx} belongs to vehicle {}, expected {k}",
                    route.vehicle
                )));
            }
            let seq = &route.sequence;
            if seq.len() < 2
                || seq[0] != inst.start_depot(k)
                || seq[seq.len() - 1] != inst.end_depot(k)
            {
                return Err(ModelError::Solution(format!(
                    "route of vehicle {k} must run from node {} to node {}",
                    inst.start_depot(k),
                    inst.end_depot(k)
                )));
            }
            if let Some(&bad) = route.inner().iter().find(|&&id| !inst.is_request_node(id)) {
                return Err(ModelError::Solution(format!(
                    "route of vehicle {k} visits node {bad}, which is not a request node in 1..={}",
                    2 * inst.n()
                )));
            }
            if route.times.len() != seq.len() {
                return Err(ModelError::Solution(format!(
                    "route of vehicle {k} has {} nodes but {} times",
                    seq.len(),
                    route.times.len()
                )));
            }
            if let Some(loads) = &route.loads {
                if loads.len() != seq.len() {
                    return Err(ModelError::Solution(format!(
                        "route of vehicle {k} has {} nodes but {} loads",
                        seq.len(),
                        loads.len()
                    )));
                }
            }
        }
        if let Some(&bad) = self.unserved.iter().find(|&&r| r == 0 || r > inst.n()) {
            return Err(ModelError::Solution(format!(
                "unserved request id {bad} outside 1..={}",
                inst.n()
            )));
        }
        Ok(())
    }
}
