#![allow(dead_code)]

use paratransit_core::{
    generate, GenParams, Instance, InstanceData, Minutes, NodeSpec, ShiftPolicy,
};

/// Every request node has window `window`, service 5 and demand ±1; depots
/// are open all day; all distinct nodes are `travel` apart except the two
/// depots of a vehicle, which coincide.
pub fn uniform(
    n: usize,
    m: usize,
    window: (Minutes, Minutes),
    travel: Minutes,
    starts: Vec<Minutes>,
    span: Minutes,
) -> Instance {
    let mut nodes = Vec::new();
    for _ in 0..n {
        nodes.push(NodeSpec {
            a: window.0,
            b: window.1,
            s: 5,
            d: 1,
        });
    }
    for _ in 0..n {
        nodes.push(NodeSpec {
            a: window.0,
            b: window.1,
            s: 5,
            d: -1,
        });
    }
    for _ in 0..2 * m {
        nodes.push(NodeSpec {
            a: 0,
            b: 1440,
            s: 0,
            d: 0,
        });
    }
    let size = 2 * n + 2 * m;
    let mut t = vec![vec![travel; size]; size];
    for (i, row) in t.iter_mut().enumerate() {
        row[i] = 0;
    }
    for k in 0..m {
        let (s, e) = (2 * n + k, 2 * n + m + k);
        t[s][e] = 0;
        t[e][s] = 0;
    }
    Instance::new(InstanceData {
        n,
        m,
        capacity: 3,
        max_shift_span: span,
        shift_starts: ShiftPolicy::Candidates(starts),
        big_m: 10_000,
        nodes,
        travel: t,
        groups: (1..=n).map(|r| vec![r]).collect(),
    })
    .unwrap()
}

/// The one-request instance used to illustrate route scheduling.
pub fn single_request(
    p_window: (Minutes, Minutes),
    starts: Vec<Minutes>,
    span: Minutes,
) -> Instance {
    let mut data = uniform(1, 1, (0, 1440), 10, starts, span).into_data();
    data.nodes[0].a = p_window.0;
    data.nodes[0].b = p_window.1;
    data.nodes[1].a = 80;
    data.nodes[1].b = 140;
    Instance::new(data).unwrap()
}

pub fn tiny(n: usize, m: usize, seed: u64) -> Instance {
    generate(&GenParams::tiny(n, m, seed)).unwrap()
}

/// Same instance with vehicles renumbered: new vehicle `k` is old vehicle `perm[k - 1]`.
pub fn relabel_vehicles(inst: &Instance, perm: &[usize]) -> Instance {
    let data = inst.data().clone();
    let (n, m) = (data.n, data.m);
    // old node id for each new node id
    let old_of = |new: usize| -> usize {
        if new <= 2 * n {
            new
        } else if new <= 2 * n + m {
            2 * n + perm[new - 2 * n - 1]
        } else {
            2 * n + m + perm[new - 2 * n - m - 1]
        }
    };
    let size = 2 * n + 2 * m;
    let nodes = (1..=size).map(|v| data.nodes[old_of(v) - 1]).collect();
    let travel = (1..=size)
        .map(|i| {
            (1..=size)
                .map(|j| data.travel[old_of(i) - 1][old_of(j) - 1])
                .collect()
        })
        .collect();
    Instance::new(InstanceData {
        nodes,
        travel,
        ..data
    })
    .unwrap()
}
