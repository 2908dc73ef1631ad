//! Experiment harness behind the `paratransit bench` subcommand.
//!
//! Each suite generates a fixed family of instances from a base seed, solves
//! them under the compared configurations and reports one [`BenchRow`] per
//! (instance, configuration).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use paratransit_core::generate::ShiftMode;
use paratransit_core::{
    construct, generate, objective_unserved, solve, solve_exact, total_working_minutes, ClockMode,
    Coupling, GenParams, Instance, InstanceData, ObjectiveMode, ProgressTrace, SearchConfig,
    ShiftPolicy, Solution,
};

/// Environment variable that overrides the number of worker threads `bench` uses.
pub const THREADS_ENV: &str = "PARATRANSIT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Original against accelerated objective.
    Acceleration,
    /// Top-of-hour shift starts against fully flexible ones, plus a replay
    /// with the top-of-hour shifts fixed as depot windows.
    Flexibility,
    /// Soft against hard group coupling on instances with three-leg trips.
    Coupling,
    /// Tabu search against the exhaustive optimum on tiny instances.
    OracleAgreement,
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "acceleration" => Ok(Suite::Acceleration),
            "flexibility" => Ok(Suite::Flexibility),
            "coupling" => Ok(Suite::Coupling),
            "oracle-agreement" => Ok(Suite::OracleAgreement),
            _ => Err(format!(
                "unknown suite `{s}` (expected acceleration, flexibility, coupling or oracle-agreement)"
            )),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Acceleration => "acceleration",
            Suite::Flexibility => "flexibility",
            Suite::Coupling => "coupling",
            Suite::OracleAgreement => "oracle-agreement",
        })
    }
}

/// One CSV record of a bench run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub mode: String,
    pub seed: u64,
    pub served: usize,
    pub requests: usize,
    pub penalty: i64,
    pub working_minutes: i64,
    /// Real elapsed seconds; the only column that varies between runs.
    pub wall_s: f64,
}

impl BenchRow {
    pub fn new(
        instance: &str,
        mode: &str,
        seed: u64,
        inst: &Instance,
        sol: &Solution,
        wall_s: f64,
    ) -> Self {
        BenchRow {
            instance: instance.to_string(),
            mode: mode.to_string(),
            seed,
            served: sol.served_count(inst),
            requests: inst.n(),
            penalty: objective_unserved(inst, sol),
            working_minutes: total_working_minutes(sol),
            wall_s,
        }
    }
}

/// Budget and clock shared by every solve of a suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    pub instances: usize,
    pub seed: u64,
    pub time_limit: f64,
    pub clock: ClockMode,
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub solution: Solution,
    pub trace: ProgressTrace,
    pub wall_s: f64,
}

/// Search configuration used by the suites for one instance.
pub fn search_config(
    settings: &BenchSettings,
    seed: u64,
    objective: ObjectiveMode,
    coupling: Coupling,
) -> SearchConfig {
    SearchConfig {
        time_limit: settings.time_limit,
        seed,
        objective,
        coupling,
        clock: settings.clock,
        ..SearchConfig::default()
    }
}

/// Constructs a start solution with `cfg.seed` and improves it.
pub fn solve_fresh(inst: &Instance, cfg: &SearchConfig) -> Result<SolveRun> {
    let started = Instant::now();
    let init = construct(inst, cfg.seed);
    solve_from(inst, &init, cfg, started)
}

/// Improves a given start solution.
pub fn solve_warm(inst: &Instance, init: &Solution, cfg: &SearchConfig) -> Result<SolveRun> {
    solve_from(inst, init, cfg, Instant::now())
}

fn solve_from(
    inst: &Instance,
    init: &Solution,
    cfg: &SearchConfig,
    started: Instant,
) -> Result<SolveRun> {
    let (solution, trace) = solve(inst, init, cfg).context("search failed")?;
    Ok(SolveRun {
        solution,
        trace,
        wall_s: started.elapsed().as_secs_f64(),
    })
}

/// Generator parameters of instance `index` of a suite.
pub fn suite_params(suite: Suite, index: usize, base_seed: u64) -> GenParams {
    let seed = base_seed + index as u64;
    match suite {
        Suite::Acceleration | Suite::Flexibility => GenParams {
            seed,
            ..GenParams::default()
        },
        Suite::Coupling => GenParams {
            round_trip_fraction: 0.3,
            three_leg_fraction: 0.3,
            seed,
            ..GenParams::default()
        },
        Suite::OracleAgreement => GenParams::tiny(2 + index % 3, 1 + (index / 3) % 2, seed),
    }
}

pub fn suite_instance(suite: Suite, index: usize, base_seed: u64) -> Result<(String, Instance)> {
    let p = suite_params(suite, index, base_seed);
    let inst =
        generate(&p).with_context(|| format!("generating instance {index} of suite {suite}"))?;
    let name = format!("n{}-m{}-s{}", p.n_requests, p.n_vehicles, p.seed);
    Ok((name, inst))
}

/// Copy of `inst` where each vehicle may only work inside the shift it
/// had in `sol`: both of its depots get the window
/// `[shift_start, shift_start + L]` and any departure minute is allowed.
/// Vehicles that stayed idle in `sol` can only make the empty trip.
pub fn pin_shifts(inst: &Instance, sol: &Solution) -> Result<Instance> {
    let mut data: InstanceData = inst.data().clone();
    data.shift_starts = ShiftPolicy::Flexible;
    for route in &sol.routes {
        let k = route.vehicle;
        let (sd, ed) = (inst.start_depot(k), inst.end_depot(k));
        let open = route.shift_start;
        let close = if route.is_empty() {
            open + inst.service(sd) + inst.travel(sd, ed)
        } else {
            open + inst.max_shift_span()
        };
        data.nodes[sd - 1].a = open;
        data.nodes[sd - 1].b = if route.is_empty() {
            open
        } else {
            close.min(inst.close(sd))
        };
        data.nodes[ed - 1].a = open.max(inst.open(ed));
        data.nodes[ed - 1].b = close.min(inst.close(ed));
    }
    Instance::new(data).context("pinned-shift instance is invalid")
}

/// Rows of one suite instance. Under the flexibility suite the flexible
/// run starts from the top-of-hour result, so it can only serve more.
pub fn run_instance(suite: Suite, index: usize, settings: &BenchSettings) -> Result<Vec<BenchRow>> {
    let (name, inst) = suite_instance(suite, index, settings.seed)?;
    let seed = settings.seed + index as u64;
    let cfg = |objective, coupling| search_config(settings, seed, objective, coupling);
    let row = |mode: &str, inst: &Instance, run: &SolveRun| {
        BenchRow::new(&name, mode, seed, inst, &run.solution, run.wall_s)
    };
    let mut rows = Vec::new();
    match suite {
        Suite::Acceleration => {
            for (mode, objective) in [
                ("original", ObjectiveMode::Original),
                ("accelerated", ObjectiveMode::Accelerated),
            ] {
                let run = solve_fresh(&inst, &cfg(objective, Coupling::Soft))?;
                rows.push(row(mode, &inst, &run));
            }
        }
        Suite::Flexibility => {
            let c = cfg(ObjectiveMode::Accelerated, Coupling::Soft);
            let hourly = solve_fresh(&inst, &c)?;
            rows.push(row("top_of_hour", &inst, &hourly));
            let flex_inst = flexible_variant(&inst)?;
            let flexible = solve_warm(&flex_inst, &hourly.solution, &c)?;
            rows.push(row("flexible", &flex_inst, &flexible));
            let pinned = pin_shifts(&inst, &hourly.solution)?;
            let provided = solve_fresh(&pinned, &c)?;
            rows.push(row("shifts_provided", &pinned, &provided));
        }
        Suite::Coupling => {
            for (mode, coupling) in [("soft", Coupling::Soft), ("hard", Coupling::Hard)] {
                let run = solve_fresh(&inst, &cfg(ObjectiveMode::Accelerated, coupling))?;
                rows.push(row(mode, &inst, &run));
            }
        }
        Suite::OracleAgreement => {
            let started = Instant::now();
            let exact = solve_exact(&inst)?;
            rows.push(BenchRow::new(
                &name,
                "oracle",
                seed,
                &inst,
                &exact.solution,
                started.elapsed().as_secs_f64(),
            ));
            let run = solve_fresh(&inst, &cfg(ObjectiveMode::Accelerated, Coupling::Soft))?;
            rows.push(row("search", &inst, &run));
        }
    }
    Ok(rows)
}

/// Same instance with every departure minute in the depot windows allowed.
pub fn flexible_variant(inst: &Instance) -> Result<Instance> {
    Ok(inst.with_shift_policy(ShiftPolicy::Flexible)?)
}

/// Runs a whole suite, instances in parallel, rows in instance order.
pub fn run_suite(suite: Suite, settings: &BenchSettings) -> Result<Vec<BenchRow>> {
    if settings.instances == 0 {
        bail!("at least one instance is required");
    }
    let pool = thread_pool()?;
    let per_instance: Vec<Result<Vec<BenchRow>>> = pool.install(|| {
        (0..settings.instances)
            .into_par_iter()
            .map(|i| run_instance(suite, i, settings))
            .collect()
    });
    let mut rows = Vec::new();
    for r in per_instance {
        rows.extend(r?);
    }
    Ok(rows)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize =
            value.parse().ok().filter(|&n| n > 0).with_context(|| {
                format!("{THREADS_ENV} must be a positive integer, got `{value}`")
            })?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

pub fn write_rows<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the `--shifts` flag of `generate`.
pub fn parse_shift_mode(s: &str) -> Result<ShiftMode, String> {
    match s {
        "hourly" | "candidates" => Ok(ShiftMode::Hourly),
        "flexible" => Ok(ShiftMode::Flexible),
        _ => Err(format!(
            "unknown shift mode `{s}` (expected candidates or flexible)"
        )),
    }
}
