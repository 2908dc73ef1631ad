mod common;

use proptest::prelude::*;

use paratransit_core::schedule::forward_times;
use paratransit_core::{
    assemble_solution, check_solution, construct, generate, objective_accelerated,
    objective_unserved, schedule_route, strip_partial_groups, time_term, GenParams, Instance,
    NodeRole, ShiftPolicy, Solution,
};

fn params() -> impl Strategy<Value = GenParams> {
    (
        1usize..30,
        1usize..4,
        any::<u64>(),
        0.0f64..=0.6,
        0.0f64..=0.4,
        prop::bool::ANY,
    )
        .prop_map(|(n, m, seed, round, three, flexible)| GenParams {
            n_requests: n,
            n_vehicles: m,
            round_trip_fraction: round,
            three_leg_fraction: three,
            shift_mode: if flexible {
                paratransit_core::generate::ShiftMode::Flexible
            } else {
                paratransit_core::generate::ShiftMode::Hourly
            },
            seed,
            ..GenParams::default()
        })
}

/// A feasible solution with a random subset of requests dropped from a
/// constructed one; may contain partially served groups.
fn thinned(inst: &Instance, seed: u64, keep_mask: u64) -> Solution {
    let base = construct(inst, seed);
    let inner: Vec<Vec<usize>> = base
        .routes
        .iter()
        .map(|r| {
            let mut nodes: Vec<usize> = r.inner().to_vec();
            nodes.retain(|&v| {
                let req = inst.request_of(v);
                keep_mask & (1 << (req % 64)) != 0
            });
            nodes
        })
        .collect();
    match assemble_solution(inst, &inner) {
        Ok(sol) => sol,
        Err(_) => base,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_satisfy_invariants(p in params()) {
        let inst = generate(&p).unwrap();
        let n = inst.n();
        for r in 1..=n {
            let (pu, dr) = (inst.pickup(r), inst.dropoff(r));
            prop_assert_eq!(inst.close(dr) - inst.open(dr), 30);
            let drive = inst.travel(pu, dr);
            prop_assert_eq!(inst.open(pu), inst.open(dr) - drive);
            prop_assert_eq!(inst.close(pu), inst.close(dr) - drive);
            prop_assert!(inst.close(pu) + drive <= inst.close(dr));
        }
        for i in 1..=inst.num_nodes() {
            prop_assert_eq!(inst.travel(i, i), 0);
            for j in 1..=inst.num_nodes() {
                prop_assert_eq!(inst.travel(i, j), inst.travel(j, i));
                prop_assert!(inst.travel(i, j) >= 0);
            }
            match inst.node_role(i).unwrap() {
                NodeRole::Pickup { partner } | NodeRole::Dropoff { partner } => {
                    prop_assert_eq!(inst.node_role(partner).unwrap().partner(), Some(i));
                }
                NodeRole::StartDepot { .. } | NodeRole::EndDepot { .. } => {}
            }
        }
        let mut seen: Vec<usize> = inst.groups().iter().flatten().copied().collect();
        seen.sort();
        prop_assert_eq!(seen, (1..=n).collect::<Vec<_>>());
        // the file format round-trips and revalidates
        let text = paratransit_core::io::instance_to_string(&inst);
        let back = paratransit_core::io::instance_from_str(&text, std::path::Path::new("generated")).unwrap();
        prop_assert_eq!(back.data(), inst.data());
    }

    #[test]
    fn delaying_the_start_shifts_times_by_at_most_the_delay(p in params(), delta in 0i64..120) {
        let inst = generate(&GenParams { n_requests: p.n_requests.min(20), ..p }).unwrap();
        let sol = construct(&inst, 1);
        for route in &sol.routes {
            let inner = route.inner();
            let early = forward_times(&inst, route.vehicle, inner, route.shift_start);
            let late = forward_times(&inst, route.vehicle, inner, route.shift_start + delta);
            for (a, b) in early.iter().zip(&late) {
                prop_assert!(b >= a);
                prop_assert!(b - a <= delta);
            }
        }
    }

    #[test]
    fn validator_accepts_scheduled_routes_and_more_starts_never_hurt(p in params()) {
        let inst = generate(&GenParams { n_requests: p.n_requests.min(20), ..p }).unwrap();
        let sol = construct(&inst, 2);
        prop_assert!(check_solution(&inst, &sol).feasible);
        for route in &sol.routes {
            let sched = schedule_route(&inst, &route.sequence).unwrap();
            prop_assert_eq!(&sched.node_times, &route.times);
        }
        let flexible = inst.with_shift_policy(ShiftPolicy::Flexible).unwrap();
        prop_assert!(check_solution(&flexible, &sol).feasible);
        for route in &sol.routes {
            prop_assert!(schedule_route(&flexible, &route.sequence).is_ok());
        }
        if let ShiftPolicy::Candidates(c) = inst.shift_policy() {
            let mut more = c.clone();
            more.push(inst.open(inst.start_depot(1)));
            more.sort();
            more.dedup();
            let wider = inst.with_shift_policy(ShiftPolicy::Candidates(more)).unwrap();
            for route in &sol.routes {
                prop_assert!(schedule_route(&wider, &route.sequence).is_ok());
            }
        }
    }

    #[test]
    fn stripping_partial_groups_is_safe_and_idempotent(p in params(), mask in any::<u64>()) {
        let inst = generate(&GenParams { n_requests: p.n_requests.min(20), ..p }).unwrap();
        let sol = thinned(&inst, 3, mask);
        let stripped = strip_partial_groups(&inst, &sol);
        prop_assert!(check_solution(&inst, &stripped).feasible);
        prop_assert_eq!(objective_unserved(&inst, &stripped), objective_unserved(&inst, &sol));
        prop_assert_eq!(strip_partial_groups(&inst, &stripped), stripped.clone());
        for g in inst.groups() {
            let served = g.iter().filter(|&&r| !stripped.unserved.contains(&r)).count();
            prop_assert!(served == 0 || served == g.len());
        }
    }

    #[test]
    fn accelerated_order_agrees_with_penalty_order(p in params(), m1 in any::<u64>(), m2 in any::<u64>()) {
        let inst = generate(&GenParams { n_requests: p.n_requests.min(20), ..p }).unwrap();
        let a = thinned(&inst, 4, m1);
        let b = thinned(&inst, 5, m2);
        prop_assume!(time_term(&inst, &a) < inst.big_m() && time_term(&inst, &b) < inst.big_m());
        let (pa, pb) = (objective_unserved(&inst, &a), objective_unserved(&inst, &b));
        prop_assume!(pa != pb);
        prop_assert_eq!(pa < pb, objective_accelerated(&inst, &a) < objective_accelerated(&inst, &b));
    }
}
