use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use paratransit_cli::{parse_shift_mode, run_suite, write_rows, BenchSettings, Suite};
use paratransit_core::generate::ShiftMode;
use paratransit_core::io::{
    load_instance, load_raw_solution, load_solution, save_instance, save_solution,
};
use paratransit_core::{
    check_solution, construct, generate, objective_accelerated, objective_unserved, solve,
    solve_exact, total_working_minutes, ClockMode, Coupling, GenParams, ObjectiveMode,
    SearchConfig, ShiftPolicy,
};

#[derive(Parser, Debug)]
#[command(
    name = "paratransit",
    version,
    about = "Joint rider trip planning and driver shift scheduling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Improve a constructed (or given) solution with tabu search.
    Solve(SolveArgs),
    /// Check a solution against every constraint; exit 2 if infeasible.
    Validate(ValidateArgs),
    /// Solve a tiny instance to optimality by enumeration.
    Oracle(OracleArgs),
    /// Run one of the comparison suites and write a CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Default,
    Tiny,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Shifts {
    Candidates,
    Flexible,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Clock {
    Deterministic,
    Wall,
}

impl From<Clock> for ClockMode {
    fn from(c: Clock) -> Self {
        match c {
            Clock::Deterministic => ClockMode::Deterministic,
            Clock::Wall => ClockMode::Wall,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// JSON file with generator parameters; flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    requests: Option<usize>,
    #[arg(long)]
    vehicles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_shift_mode)]
    shifts: Option<ShiftMode>,
    #[arg(long)]
    round_trip_fraction: Option<f64>,
    #[arg(long)]
    three_leg_fraction: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value = "accelerated")]
    objective: ObjectiveMode,
    #[arg(long, default_value = "soft")]
    coupling: Coupling,
    /// `candidates` keeps the instance's start times, `flexible` allows any minute.
    #[arg(long, value_enum, default_value_t = Shifts::Candidates)]
    shifts: Shifts,
    /// Start from this solution instead of constructing one.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    tabu_tenure: usize,
    #[arg(long, default_value_t = 500)]
    max_no_improve: u64,
    /// `deterministic` measures the budget in scheduling work, so runs are reproducible.
    #[arg(long, value_enum, default_value_t = Clock::Deterministic)]
    clock: Clock,
    #[arg(long)]
    out: PathBuf,
    /// Progress trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Also write the optimal solution here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    suite: Suite,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, value_enum, default_value_t = Clock::Deterministic)]
    clock: Clock,
    /// CSV destination; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Solve(a) => run_solve(a),
        Command::Validate(a) => run_validate(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run_generate(a: GenerateArgs) -> Result<ExitCode> {
    let mut p = match (&a.params, a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<GenParams>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(Preset::Tiny)) => GenParams::tiny(4, 2, 0),
        (None, _) => GenParams::default(),
    };
    if let Some(n) = a.requests {
        p.n_requests = n;
    }
    if let Some(m) = a.vehicles {
        p.n_vehicles = m;
    }
    if let Some(s) = a.seed {
        p.seed = s;
    }
    if let Some(s) = a.shifts {
        p.shift_mode = s;
    }
    if let Some(f) = a.round_trip_fraction {
        p.round_trip_fraction = f;
    }
    if let Some(f) = a.three_leg_fraction {
        p.three_leg_fraction = f;
    }
    let inst = generate(&p)?;
    save_instance(&inst, &a.out)?;
    eprintln!(
        "wrote {} requests in {} groups, {} vehicles to {}",
        inst.n(),
        inst.groups().len(),
        inst.m(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_solve(a: SolveArgs) -> Result<ExitCode> {
    let mut inst = load_instance(&a.instance)?;
    match (a.shifts, inst.shift_policy().is_flexible()) {
        (Shifts::Flexible, false) => inst = inst.with_shift_policy(ShiftPolicy::Flexible)?,
        (Shifts::Candidates, true) => bail!(
            "instance {} has no candidate start times",
            a.instance.display()
        ),
        _ => {}
    }
    let init = match &a.init {
        Some(path) => load_solution(&inst, path)?,
        None => construct(&inst, a.seed),
    };
    let cfg = SearchConfig {
        time_limit: a.time_limit,
        seed: a.seed,
        objective: a.objective,
        coupling: a.coupling,
        tabu_tenure: a.tabu_tenure,
        max_no_improve: a.max_no_improve,
        clock: a.clock.into(),
        ..SearchConfig::default()
    };
    let (sol, trace) = solve(&inst, &init, &cfg)?;
    save_solution(&sol, &a.out)?;
    if let Some(path) = &a.trace {
        trace
            .write_csv(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!(
        "served {}/{}  penalty {}  working minutes {}  objective {}",
        sol.served_count(&inst),
        inst.n(),
        objective_unserved(&inst, &sol),
        total_working_minutes(&sol),
        objective_accelerated(&inst, &sol)
    );
    Ok(ExitCode::SUCCESS)
}

fn run_validate(a: ValidateArgs) -> Result<ExitCode> {
    let inst = load_instance(&a.instance)?;
    let sol = load_raw_solution(&a.solution)?;
    let report = check_solution(&inst, &sol);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(if report.feasible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[derive(Serialize)]
struct OracleReport {
    penalty: i64,
    time_term: i64,
    optimal_sets: usize,
    served: usize,
    requests: usize,
}

fn run_oracle(a: OracleArgs) -> Result<ExitCode> {
    let inst = load_instance(&a.instance)?;
    let res = solve_exact(&inst)?;
    if let Some(path) = &a.out {
        save_solution(&res.solution, path)?;
    }
    let report = OracleReport {
        penalty: res.penalty,
        time_term: res.time_term,
        optimal_sets: res.optimal_sets,
        served: res.solution.served_count(&inst),
        requests: inst.n(),
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn run_bench(a: BenchArgs) -> Result<ExitCode> {
    let settings = BenchSettings {
        instances: a.instances,
        seed: a.seed,
        time_limit: a.time_limit,
        clock: a.clock.into(),
    };
    let rows = run_suite(a.suite, &settings)?;
    match &a.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_rows(&rows, file)?;
        }
        None => write_rows(&rows, io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}
