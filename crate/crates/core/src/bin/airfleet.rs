use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use airfleet::bench::{self, Algorithm, BenchPlan, InstanceSource, ParallelModes, ReportFormat};
use airfleet::construct::{self, ConstructConfig};
use airfleet::exact::{self, ExactLimits, ExactStatus, MpsFormat};
use airfleet::feasibility::{self, EvalReport};
use airfleet::geo::build_matrix;
use airfleet::model::{self, GenerationParams, Instance, InstanceFormat, ScheduleFile};
use airfleet::search::{self, SearchConfig, SearchMode, DEFAULT_TABU_TENURE};
use airfleet::Error;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "airfleet", version, about = "Air-ambulance fleet scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance over the bundled base set.
    Gen(GenArgs),
    /// Solve an instance (exact by default).
    Solve(SolveArgs),
    /// Construct a start schedule and improve it with local search.
    Search(SearchArgs),
    /// Run a multi-seed benchmark plan.
    Bench(BenchArgs),
    /// Write the integer program of an instance as MPS.
    ExportMps(ExportArgs),
    /// Re-render saved benchmark records.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Ns,
    Tabu,
    Exact,
}

impl From<Algo> for Algorithm {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Ns => Algorithm::Neighbourhood,
            Algo::Tabu => Algorithm::Tabu,
            Algo::Exact => Algorithm::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Markdown => ReportFormat::Markdown,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 12)]
    missions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Share of missions only a helicopter may fly.
    #[arg(long, default_value_t = 0.25)]
    heli_only_fraction: f64,
    /// Base set to use instead of the bundled one (instance JSON).
    #[arg(long)]
    bases: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON, or a directory holding bases.csv and missions.csv.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Args)]
struct SearchOpts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Evaluate candidate moves on the thread pool.
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value_t = DEFAULT_TABU_TENURE)]
    tabu_tenure: usize,
    /// Shuffle the scan order every sweep.
    #[arg(long)]
    permute: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, value_enum, default_value_t = Algo::Exact)]
    algo: Algo,
    #[command(flatten)]
    search: SearchOpts,
    /// Exact search time budget in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_budget: f64,
    #[arg(long)]
    node_budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long, value_enum, default_value_t = Algo::Tabu)]
    algo: Algo,
    #[command(flatten)]
    search: SearchOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Mission counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_MISSION_COUNTS)]
    missions: Vec<usize>,
    /// Benchmark fixed instances instead of generated ones; repeatable.
    #[arg(long)]
    instance: Vec<PathBuf>,
    #[arg(long, default_value_t = bench::DEFAULT_RUNS_PER_POINT)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algo::Ns, Algo::Tabu])]
    algo: Vec<Algo>,
    /// Run the heuristics in both sequential and parallel evaluation modes.
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value_t = DEFAULT_TABU_TENURE)]
    tabu_tenure: usize,
    #[arg(long)]
    permute: bool,
    /// Exact search time budget per cell, seconds.
    #[arg(long, default_value_t = 60.0)]
    time_budget: f64,
    /// Also solve exactly so heuristic records carry a gap.
    #[arg(long)]
    gaps: bool,
    /// Cells run concurrently.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    input: InstanceArgs,
    #[arg(long)]
    out: PathBuf,
    /// Free-format MPS, needed once names exceed 8 characters.
    #[arg(long)]
    free: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Records saved by `bench` (JSON or .csv).
    #[arg(long)]
    records: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveOutput {
    algorithm: Algorithm,
    status: String,
    objective_hours: Option<f64>,
    runtime_seconds: f64,
    iterations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_bound: Option<f64>,
    schedule: Option<ScheduleFile>,
    evaluation: Option<EvalReport>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Construct(_) | Error::Generation(_) => EXIT_INFEASIBLE,
        Error::InvalidArgument(_) | Error::InvalidParameter(_) => EXIT_USAGE,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("AIRFLEET_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("AIRFLEET_THREADS must be a positive integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> airfleet::Result<u8> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Search(a) => search_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::ExportMps(a) => export(a),
        Command::Report(a) => report(a),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> airfleet::Result<()> {
    let io_err = |path: &Path, source| Error::Io { path: path.to_path_buf(), source };
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn load(input: &InstanceArgs) -> airfleet::Result<Instance> {
    let instance = model::load_instance(&input.instance, InstanceFormat::detect(&input.instance))?;
    for warning in instance.validate()? {
        log::warn!("{warning}");
    }
    Ok(instance)
}

fn time_budget(seconds: f64) -> airfleet::Result<Duration> {
    Duration::try_from_secs_f64(seconds)
        .map_err(|_| Error::InvalidArgument(format!("time budget {seconds} is not a valid duration")))
}

fn gen(a: GenArgs) -> airfleet::Result<u8> {
    let bases = match &a.bases {
        Some(path) => model::load_instance(path, InstanceFormat::detect(path))?.bases,
        None => model::sample_bases(),
    };
    let params = GenerationParams {
        heli_only_fraction: a.heli_only_fraction,
        ..GenerationParams::default()
    };
    let instance = model::generate_instance(&bases, &model::sample_facilities(), a.missions, a.seed, &params, |i| {
        construct::initialize(i, &build_matrix(i), &ConstructConfig::default()).is_ok()
    })?;
    write_output(a.out.as_deref(), &(instance.to_json_string() + "\n"))?;
    Ok(0)
}

fn search_config(algo: Algo, opts: &SearchOpts) -> SearchConfig {
    SearchConfig {
        mode: if algo == Algo::Tabu { SearchMode::Tabu } else { SearchMode::Neighbourhood },
        tabu_tenure: opts.tabu_tenure,
        permute_scan_order: opts.permute,
        rng_seed: opts.seed,
        max_sweeps: None,
        parallel_eval: opts.parallel,
    }
}

fn run_heuristic(instance: &Instance, algo: Algo, opts: &SearchOpts) -> airfleet::Result<SolveOutput> {
    let matrix = build_matrix(instance);
    let start = construct::initialize(
        instance,
        &matrix,
        &ConstructConfig { parallel_eval: opts.parallel, ..ConstructConfig::default() },
    )?;
    let started = Instant::now();
    let found = search::search(instance, &matrix, &start.schedule, &search_config(algo, opts))?;
    Ok(SolveOutput {
        algorithm: algo.into(),
        status: "ok".into(),
        objective_hours: Some(found.objective_hours),
        runtime_seconds: started.elapsed().as_secs_f64(),
        iterations: found.sweeps as u64,
        best_bound: None,
        evaluation: Some(feasibility::evaluate(instance, &matrix, &found.schedule)),
        schedule: Some(found.schedule.to_file(instance)),
    })
}

fn emit(out: Option<&Path>, result: &SolveOutput) -> airfleet::Result<()> {
    eprintln!(
        "{}: {} ({})",
        result.algorithm,
        result.objective_hours.map_or("no schedule".into(), |o| format!("{o:.3} flight hours")),
        result.status
    );
    let text = serde_json::to_string_pretty(result).expect("result serialises") + "\n";
    write_output(out, &text)
}

fn solve(a: SolveArgs) -> airfleet::Result<u8> {
    let instance = load(&a.input)?;
    if a.algo != Algo::Exact {
        emit(a.out.as_deref(), &run_heuristic(&instance, a.algo, &a.search)?)?;
        return Ok(0);
    }
    let matrix = build_matrix(&instance);
    let limits = ExactLimits {
        node_budget: a.node_budget,
        time_budget: Some(time_budget(a.time_budget)?),
        ..ExactLimits::default()
    };
    let started = Instant::now();
    let result = exact::solve_exact(&instance, &matrix, &limits)?;
    let code = match result.status {
        ExactStatus::Optimal => 0,
        ExactStatus::Infeasible => EXIT_INFEASIBLE,
        ExactStatus::NodeLimit => EXIT_BUDGET,
    };
    let output = SolveOutput {
        algorithm: Algorithm::Exact,
        status: serde_json::to_value(result.status).expect("status serialises").as_str().unwrap_or_default().into(),
        objective_hours: result.schedule.as_ref().map(|_| result.objective_hours),
        runtime_seconds: started.elapsed().as_secs_f64(),
        iterations: result.nodes_explored,
        best_bound: result.best_bound.is_finite().then_some(result.best_bound),
        evaluation: result.schedule.as_ref().map(|s| feasibility::evaluate(&instance, &matrix, s)),
        schedule: result.schedule.as_ref().map(|s| s.to_file(&instance)),
    };
    emit(a.out.as_deref(), &output)?;
    Ok(code)
}

fn search_cmd(a: SearchArgs) -> airfleet::Result<u8> {
    if a.algo == Algo::Exact {
        return Err(Error::InvalidArgument("search runs ns or tabu; use `solve` for exact".into()));
    }
    let instance = load(&a.input)?;
    emit(a.out.as_deref(), &run_heuristic(&instance, a.algo, &a.search)?)?;
    Ok(0)
}

fn bench_cmd(a: BenchArgs) -> airfleet::Result<u8> {
    let mut algorithms: Vec<Algorithm> = a.algo.iter().map(|&x| x.into()).collect();
    algorithms.sort();
    algorithms.dedup();
    let plan = BenchPlan {
        mission_counts: a.missions,
        runs_per_point: a.runs,
        algorithms,
        parallel_modes: if a.parallel { ParallelModes::Both } else { ParallelModes::Sequential },
        base_seed: a.seed,
        tabu_tenure: a.tabu_tenure,
        permute_scan_order: a.permute,
        exact_limits: ExactLimits {
            time_budget: Some(time_budget(a.time_budget)?),
            ..ExactLimits::default()
        },
        oracle_gaps: a.gaps,
        workers: a.workers,
    };
    let source = if a.instance.is_empty() {
        InstanceSource::sample()
    } else {
        let loaded = a
            .instance
            .iter()
            .map(|p| model::load_instance(p, InstanceFormat::detect(p)))
            .collect::<airfleet::Result<Vec<_>>>()?;
        InstanceSource::Loaded(loaded)
    };
    let records = bench::run_plan(&plan, &source)?;
    let text = bench::render_report(&records, a.format.into())?;
    write_output(a.out.as_deref(), &text)?;
    for notice in bench::summarize(&records).notices {
        eprintln!("note: {notice}");
    }
    Ok(0)
}

fn export(a: ExportArgs) -> airfleet::Result<u8> {
    let instance = load(&a.input)?;
    let matrix = build_matrix(&instance);
    let format = if a.free { MpsFormat::Free } else { MpsFormat::Fixed };
    let ilp = exact::export_mps(&instance, &matrix, &a.out, format)?;
    eprintln!(
        "wrote {}: {} rows, {} binaries, {} integers",
        a.out.display(),
        ilp.rows.len(),
        ilp.binaries(),
        ilp.integers()
    );
    Ok(0)
}

fn report(a: ReportArgs) -> airfleet::Result<u8> {
    let records = bench::load_records(&a.records)?;
    let text = bench::render_report(&records, a.format.into())?;
    write_output(a.out.as_deref(), &text)?;
    Ok(0)
}
