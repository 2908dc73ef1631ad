mod common;

use common::{tiny, uniform};
use paratransit_core::search::{StepOutcome, TabuSearch};
use paratransit_core::{
    assemble_solution, check_solution, construct, objective_unserved, solve, solve_exact,
    strip_partial_groups, Coupling, Instance, ObjectiveMode, SearchConfig, Solution,
};

fn without_request(inst: &Instance, sol: &Solution, request: usize) -> Solution {
    let (p, d) = (inst.pickup(request), inst.dropoff(request));
    let inner: Vec<Vec<usize>> = sol
        .routes
        .iter()
        .map(|r| {
            r.inner()
                .iter()
                .copied()
                .filter(|&v| v != p && v != d)
                .collect()
        })
        .collect();
    assemble_solution(inst, &inner).unwrap()
}

#[test]
fn reaches_oracle_optimum_from_a_start_missing_one_request() {
    let mut checked = 0;
    for seed in 0..100 {
        let inst = tiny(3, 2, seed);
        if solve_exact(&inst).unwrap().penalty != 0 {
            continue;
        }
        let full = construct(&inst, seed);
        if !full.unserved.is_empty() {
            continue;
        }
        let init = without_request(&inst, &full, 1);
        assert!(objective_unserved(&inst, &init) > 0);
        let cfg = SearchConfig {
            time_limit: 5.0,
            seed,
            ..SearchConfig::default()
        };
        let (sol, trace) = solve(&inst, &init, &cfg).unwrap();
        assert_eq!(objective_unserved(&inst, &sol), 0, "seed {seed}");
        // one route evaluation may overrun the budget
        assert!(trace.samples.last().unwrap().elapsed < 5.0 + 1e-3);
        checked += 1;
        if checked == 5 {
            break;
        }
    }
    assert_eq!(checked, 5);
}

#[test]
fn exhausted_budget_returns_stripped_start() {
    let inst = tiny(5, 2, 3);
    let init = construct(&inst, 3);
    let cfg = SearchConfig {
        time_limit: 1e-12,
        ..SearchConfig::default()
    };
    let (sol, trace) = solve(&inst, &init, &cfg).unwrap();
    assert_eq!(sol, strip_partial_groups(&inst, &init));
    assert!(trace.samples.len() >= 2);
}

#[test]
fn same_inputs_same_outputs() {
    let inst = tiny(5, 2, 8);
    let init = construct(&inst, 8);
    let cfg = SearchConfig {
        time_limit: 0.5,
        seed: 4,
        ..SearchConfig::default()
    };
    let a = solve(&inst, &init, &cfg).unwrap();
    let b = solve(&inst, &init, &cfg).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1.to_csv(), b.1.to_csv());
}

#[test]
fn result_is_feasible_and_no_worse_than_start() {
    for (seed, objective, coupling) in [
        (1, ObjectiveMode::Accelerated, Coupling::Soft),
        (2, ObjectiveMode::Original, Coupling::Soft),
        (3, ObjectiveMode::Accelerated, Coupling::Hard),
        (4, ObjectiveMode::Original, Coupling::Hard),
    ] {
        let inst = tiny(5, 2, seed);
        let init = construct(&inst, seed);
        let start = strip_partial_groups(&inst, &init);
        let cfg = SearchConfig {
            time_limit: 0.3,
            seed,
            objective,
            coupling,
            ..SearchConfig::default()
        };
        let (sol, trace) = solve(&inst, &init, &cfg).unwrap();
        let report = check_solution(&inst, &sol);
        assert!(report.feasible, "{:?}", report.violations);
        assert!(objective_unserved(&inst, &sol) <= objective_unserved(&inst, &start));
        let objs: Vec<i64> = trace.samples.iter().map(|s| s.objective).collect();
        assert!(objs.windows(2).all(|w| w[1] <= w[0]));
        let times: Vec<f64> = trace.samples.iter().map(|s| s.elapsed).collect();
        assert!(times.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn zero_tenure_stops_at_a_local_minimum() {
    for seed in 0..10 {
        let inst = tiny(5, 2, seed);
        let init = construct(&inst, seed);
        let cfg = SearchConfig {
            time_limit: 1000.0,
            seed,
            tabu_tenure: 0,
            ..SearchConfig::default()
        };
        let mut search = TabuSearch::new(&inst, &init, &cfg).unwrap();
        let mut steps = 0;
        loop {
            match search.step() {
                StepOutcome::LocalMinimum => break,
                StepOutcome::BudgetExhausted => panic!("descent did not terminate"),
                StepOutcome::Perturbed { .. } => panic!("descent never perturbs"),
                _ => steps += 1,
            }
            assert!(steps < 100_000);
        }
        let local = search.current_solution();
        assert_eq!(search.current_value(), search.incumbent_value());

        // restarting from the local minimum finds no improving move
        let mut again = TabuSearch::new(&inst, &local, &cfg).unwrap();
        loop {
            match again.step() {
                StepOutcome::LocalMinimum => break,
                StepOutcome::Moved { .. } => {
                    panic!("seed {seed}: improving move from a local minimum")
                }
                _ => {}
            }
        }
        let optimum = solve_exact(&inst).unwrap().penalty;
        assert!(objective_unserved(&inst, &local) >= optimum);
    }
}

#[test]
fn rejects_infeasible_start_and_bad_config() {
    let inst = uniform(1, 1, (0, 1440), 10, vec![0], 480);
    let mut sol = construct(&inst, 0);
    sol.routes[0].times[1] += 5000;
    assert!(solve(&inst, &sol, &SearchConfig::default()).is_err());
    let good = construct(&inst, 0);
    let cfg = SearchConfig {
        time_limit: 0.0,
        ..SearchConfig::default()
    };
    assert!(solve(&inst, &good, &cfg).is_err());
}
