//! Multi-seed experiment runs and their reports.
//!
//! A plan is a grid of `(mission count, run)` cells. Every cell builds one
//! instance, constructs a start schedule and runs each requested algorithm
//! from it, so all algorithms in a cell are paired on the same instance.
//! Records come back in cell order whatever the worker count.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{self, ConstructConfig};
use crate::error::{Error, Result};
use crate::exact::{self, ExactLimits, ExactResult, ExactStatus};
use crate::geo::{build_matrix, GeoPoint, TravelTimeMatrix};
use crate::model::{self, Base, GenerationParams, Instance};
use crate::search::{self, derive_seed, SearchConfig, SearchMode, DEFAULT_TABU_TENURE};

pub const DEFAULT_MISSION_COUNTS: [usize; 8] = [12, 15, 18, 21, 24, 27, 30, 33];
pub const DEFAULT_RUNS_PER_POINT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Neighbourhood,
    Tabu,
    Exact,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Neighbourhood => "Neighbourhood",
            Algorithm::Tabu => "Tabu",
            Algorithm::Exact => "Exact",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Neighbourhood => "neighbourhood",
            Algorithm::Tabu => "tabu",
            Algorithm::Exact => "exact",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ns" | "neighbourhood" | "neighborhood" => Ok(Algorithm::Neighbourhood),
            "tabu" => Ok(Algorithm::Tabu),
            "exact" => Ok(Algorithm::Exact),
            other => Err(Error::InvalidArgument(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Which evaluation modes the heuristics run in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParallelModes {
    #[default]
    Sequential,
    Parallel,
    Both,
}

impl ParallelModes {
    fn flags(self) -> &'static [bool] {
        match self {
            ParallelModes::Sequential => &[false],
            ParallelModes::Parallel => &[true],
            ParallelModes::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub mission_counts: Vec<usize>,
    pub runs_per_point: usize,
    pub algorithms: Vec<Algorithm>,
    pub parallel_modes: ParallelModes,
    /// Run `r` of every count uses seed `base_seed + r`.
    pub base_seed: u64,
    pub tabu_tenure: usize,
    pub permute_scan_order: bool,
    pub exact_limits: ExactLimits,
    /// Solve every cell exactly, even without `Exact` in `algorithms`, so
    /// heuristic records carry a gap.
    pub oracle_gaps: bool,
    /// Size of the worker pool cells are spread over.
    pub workers: usize,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            mission_counts: DEFAULT_MISSION_COUNTS.to_vec(),
            runs_per_point: DEFAULT_RUNS_PER_POINT,
            algorithms: vec![Algorithm::Neighbourhood, Algorithm::Tabu],
            parallel_modes: ParallelModes::Sequential,
            base_seed: 0,
            tabu_tenure: DEFAULT_TABU_TENURE,
            permute_scan_order: false,
            exact_limits: ExactLimits::default(),
            oracle_gaps: false,
            workers: 1,
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_point == 0 {
            return Err(Error::InvalidParameter("runs per point must be at least 1".into()));
        }
        if self.mission_counts.is_empty() {
            return Err(Error::InvalidParameter("no mission counts given".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms given".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("worker count must be at least 1".into()));
        }
        if self.algorithms.contains(&Algorithm::Tabu) && self.tabu_tenure == 0 {
            return Err(Error::InvalidParameter("tabu tenure must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where cell instances come from.
#[derive(Debug, Clone)]
pub enum InstanceSource {
    /// Fresh missions per cell over fixed bases. Deadlines are re-drawn until
    /// construction succeeds.
    Generated {
        bases: Vec<Base>,
        facilities: Vec<GeoPoint>,
        params: GenerationParams,
    },
    /// The same instances for every run; the plan's mission counts are
    /// replaced by the instances' own sizes.
    Loaded(Vec<Instance>),
}

impl InstanceSource {
    /// The bundled 8 helicopter + 4 plane fleet and facility pool.
    pub fn sample() -> Self {
        InstanceSource::Generated {
            bases: model::sample_bases(),
            facilities: model::sample_facilities(),
            params: GenerationParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    Ok,
    Optimal,
    /// Exact search ran out of budget; the objective is the incumbent's.
    NodeLimit,
    /// Exact search ran out of budget before finding any schedule.
    NoIncumbent,
    Infeasible,
    ConstructFailed,
    GenerationFailed,
}

impl RecordStatus {
    pub fn is_success(self) -> bool {
        matches!(self, RecordStatus::Ok | RecordStatus::Optimal | RecordStatus::NodeLimit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub parallel: bool,
    pub mission_count: usize,
    pub seed: u64,
    pub status: RecordStatus,
    pub objective_hours: Option<f64>,
    /// Wall time of the optimisation phase alone.
    pub runtime_seconds: f64,
    pub construct_seconds: f64,
    /// Sweeps for the heuristics, search nodes for the exact solver.
    pub iterations: u64,
    pub gap_fraction: Option<f64>,
}

impl BenchRecord {
    fn failed(algorithm: Algorithm, parallel: bool, count: usize, seed: u64, status: RecordStatus) -> Self {
        BenchRecord {
            algorithm,
            parallel,
            mission_count: count,
            seed,
            status,
            objective_hours: None,
            runtime_seconds: 0.0,
            construct_seconds: 0.0,
            iterations: 0,
            gap_fraction: None,
        }
    }
}

struct Cell<'a> {
    count: usize,
    seed: u64,
    loaded: Option<&'a Instance>,
}

/// Runs every cell of `plan` and returns the records in cell order.
pub fn run_plan(plan: &BenchPlan, source: &InstanceSource) -> Result<Vec<BenchRecord>> {
    plan.validate()?;
    let mut cells = Vec::new();
    match source {
        InstanceSource::Generated { .. } => {
            for &count in &plan.mission_counts {
                for run in 0..plan.runs_per_point {
                    cells.push(Cell {
                        count,
                        seed: plan.base_seed.wrapping_add(run as u64),
                        loaded: None,
                    });
                }
            }
        }
        InstanceSource::Loaded(instances) => {
            for instance in instances {
                instance.validate()?;
                for run in 0..plan.runs_per_point {
                    cells.push(Cell {
                        count: instance.missions.len(),
                        seed: plan.base_seed.wrapping_add(run as u64),
                        loaded: Some(instance),
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let per_cell: Vec<Vec<BenchRecord>> =
        pool.install(|| cells.par_iter().map(|cell| run_cell(plan, source, cell)).collect());
    Ok(per_cell.into_iter().flatten().collect())
}

fn cell_instance(source: &InstanceSource, cell: &Cell<'_>) -> Option<Instance> {
    if let Some(instance) = cell.loaded {
        return Some(instance.clone());
    }
    let InstanceSource::Generated { bases, facilities, params } = source else {
        return None;
    };
    let instance_seed = derive_seed(cell.seed, cell.count as u64);
    let accept = |candidate: &Instance| {
        let matrix = build_matrix(candidate);
        construct::initialize(candidate, &matrix, &ConstructConfig::default()).is_ok()
    };
    match model::generate_instance(bases, facilities, cell.count, instance_seed, params, accept) {
        Ok(instance) => Some(instance),
        Err(e) => {
            log::warn!("{e}");
            None
        }
    }
}

fn run_cell(plan: &BenchPlan, source: &InstanceSource, cell: &Cell<'_>) -> Vec<BenchRecord> {
    let heuristics: Vec<Algorithm> = plan
        .algorithms
        .iter()
        .copied()
        .filter(|a| *a != Algorithm::Exact)
        .collect();
    let wants_exact = plan.algorithms.contains(&Algorithm::Exact);

    let Some(instance) = cell_instance(source, cell) else {
        let mut out = Vec::new();
        for &alg in &plan.algorithms {
            let modes: &[bool] = if alg == Algorithm::Exact { &[false] } else { plan.parallel_modes.flags() };
            for &parallel in modes {
                out.push(BenchRecord::failed(alg, parallel, cell.count, cell.seed, RecordStatus::GenerationFailed));
            }
        }
        return out;
    };
    let matrix = build_matrix(&instance);

    let oracle = (wants_exact || plan.oracle_gaps).then(|| {
        let started = Instant::now();
        let result = exact::solve_exact(&instance, &matrix, &plan.exact_limits);
        (result, started.elapsed())
    });

    let mut out = Vec::new();
    if !heuristics.is_empty() {
        let started = Instant::now();
        let constructed = construct::initialize(&instance, &matrix, &ConstructConfig::default());
        let construct_seconds = started.elapsed().as_secs_f64();
        for &alg in &heuristics {
            for &parallel in plan.parallel_modes.flags() {
                let record = match &constructed {
                    Ok(start) => run_heuristic(
                        plan, &instance, &matrix, &start.schedule, alg, parallel, cell, construct_seconds,
                        oracle.as_ref().and_then(|(r, _)| r.as_ref().ok()),
                    ),
                    Err(e) => {
                        log::info!("n={} seed={}: {e}", cell.count, cell.seed);
                        BenchRecord::failed(alg, parallel, cell.count, cell.seed, RecordStatus::ConstructFailed)
                    }
                };
                out.push(record);
            }
        }
    }

    if wants_exact {
        let (result, elapsed) = oracle.expect("oracle computed when exact is requested");
        out.push(exact_record(result, elapsed, cell));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_heuristic(
    plan: &BenchPlan,
    instance: &Instance,
    matrix: &TravelTimeMatrix,
    start: &model::Schedule,
    algorithm: Algorithm,
    parallel: bool,
    cell: &Cell<'_>,
    construct_seconds: f64,
    oracle: Option<&ExactResult>,
) -> BenchRecord {
    let config = SearchConfig {
        mode: if algorithm == Algorithm::Tabu { SearchMode::Tabu } else { SearchMode::Neighbourhood },
        tabu_tenure: plan.tabu_tenure,
        permute_scan_order: plan.permute_scan_order,
        rng_seed: cell.seed,
        max_sweeps: None,
        parallel_eval: parallel,
    };
    let started = Instant::now();
    let result = search::search(instance, matrix, start, &config);
    let runtime_seconds = started.elapsed().as_secs_f64();
    match result {
        Ok(found) => BenchRecord {
            algorithm,
            parallel,
            mission_count: cell.count,
            seed: cell.seed,
            status: RecordStatus::Ok,
            objective_hours: Some(found.objective_hours),
            runtime_seconds,
            construct_seconds,
            iterations: found.sweeps as u64,
            gap_fraction: oracle.and_then(|o| exact::gap_to_optimum(instance, matrix, &found.schedule, o).ok()),
        },
        Err(e) => {
            log::warn!("n={} seed={}: {e}", cell.count, cell.seed);
            BenchRecord::failed(algorithm, parallel, cell.count, cell.seed, RecordStatus::ConstructFailed)
        }
    }
}

fn exact_record(result: Result<ExactResult>, elapsed: Duration, cell: &Cell<'_>) -> BenchRecord {
    let mut record = BenchRecord::failed(Algorithm::Exact, false, cell.count, cell.seed, RecordStatus::NoIncumbent);
    record.runtime_seconds = elapsed.as_secs_f64();
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            log::warn!("n={} seed={}: {e}", cell.count, cell.seed);
            return record;
        }
    };
    record.iterations = result.nodes_explored;
    record.status = match (result.status, result.schedule.is_some()) {
        (ExactStatus::Optimal, _) => RecordStatus::Optimal,
        (ExactStatus::Infeasible, _) => RecordStatus::Infeasible,
        (ExactStatus::NodeLimit, true) => RecordStatus::NodeLimit,
        (ExactStatus::NodeLimit, false) => RecordStatus::NoIncumbent,
    };
    if record.status.is_success() {
        record.objective_hours = Some(result.objective_hours);
    }
    if record.status == RecordStatus::Optimal {
        record.gap_fraction = Some(0.0);
    }
    record
}

/// One summarised `(mission count, algorithm, mode)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mission_count: usize,
    pub algorithm: Algorithm,
    pub parallel: bool,
    pub runs: usize,
    pub upper: f64,
    pub lower: f64,
    pub average: f64,
    pub mean_runtime_seconds: f64,
    pub mean_gap: Option<f64>,
    pub max_gap: Option<f64>,
}

impl SummaryRow {
    pub fn label(&self) -> String {
        column_label(self.algorithm, self.parallel)
    }
}

fn column_label(algorithm: Algorithm, parallel: bool) -> String {
    if parallel {
        format!("{} (parallel)", algorithm.label())
    } else {
        algorithm.label().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    /// One line per cell left out for lack of successful runs.
    pub notices: Vec<String>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Upper / lower / average objective per cell, ordered by mission count,
/// algorithm, then mode.
pub fn summarize(records: &[BenchRecord]) -> Summary {
    let mut groups: BTreeMap<(usize, Algorithm, bool), Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.mission_count, r.algorithm, r.parallel)).or_default().push(r);
    }
    let mut summary = Summary::default();
    for ((count, algorithm, parallel), group) in groups {
        let ok: Vec<&BenchRecord> = group
            .iter()
            .copied()
            .filter(|r| r.status.is_success() && r.objective_hours.is_some())
            .collect();
        if ok.is_empty() {
            summary.notices.push(format!(
                "{count} missions, {}: no successful runs out of {}",
                column_label(algorithm, parallel),
                group.len()
            ));
            continue;
        }
        let objectives: Vec<f64> = ok.iter().filter_map(|r| r.objective_hours).collect();
        let runtimes: Vec<f64> = ok.iter().map(|r| r.runtime_seconds).collect();
        let gaps: Vec<f64> = ok.iter().filter_map(|r| r.gap_fraction).collect();
        summary.rows.push(SummaryRow {
            mission_count: count,
            algorithm,
            parallel,
            runs: ok.len(),
            upper: objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            lower: objectives.iter().copied().fold(f64::INFINITY, f64::min),
            average: mean(&objectives),
            mean_runtime_seconds: mean(&runtimes),
            mean_gap: (!gaps.is_empty()).then(|| mean(&gaps)),
            max_gap: gaps.iter().copied().reduce(f64::max),
        });
    }
    summary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    Csv,
    Markdown,
    #[default]
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown report format '{other}'"))),
        }
    }
}

/// Renders records. CSV and JSON hold the records themselves, Markdown the
/// summary tables.
pub fn render_report(records: &[BenchRecord], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(records).expect("records serialise");
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            writer
                .write_record(CSV_HEADER)
                .and_then(|_| records.iter().try_for_each(|r| writer.serialize(r)))
                .map_err(|e| Error::InvalidArgument(format!("csv encoding failed: {e}")))?;
            let bytes = writer
                .into_inner()
                .map_err(|e| Error::InvalidArgument(format!("csv encoding failed: {e}")))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Markdown => Ok(render_markdown(&summarize(records))),
    }
}

const CSV_HEADER: [&str; 10] = [
    "algorithm",
    "parallel",
    "mission_count",
    "seed",
    "status",
    "objective_hours",
    "runtime_seconds",
    "construct_seconds",
    "iterations",
    "gap_fraction",
];

/// Writes [`render_report`] output to `path`.
pub fn emit_report(records: &[BenchRecord], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(records, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                source_name: "bench csv".into(),
                message: format!("record {}: {e}", i + 1),
            })
        })
        .collect()
}

pub fn read_json(text: &str) -> Result<Vec<BenchRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        source_name: "bench json".into(),
        message: e.to_string(),
    })
}

/// Loads records from a `.csv` or JSON file.
pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_csv(&text)
    } else {
        read_json(&text)
    }
}

/// Two tables: mean optimisation runtime, then U/L/A objective. A gap table
/// follows when any record carries a gap.
pub fn render_markdown(summary: &Summary) -> String {
    let mut columns: Vec<(Algorithm, bool)> = summary.rows.iter().map(|r| (r.algorithm, r.parallel)).collect();
    columns.sort();
    columns.dedup();
    let mut counts: Vec<usize> = summary.rows.iter().map(|r| r.mission_count).collect();
    counts.dedup();
    let lookup: BTreeMap<(usize, Algorithm, bool), &SummaryRow> = summary
        .rows
        .iter()
        .map(|r| ((r.mission_count, r.algorithm, r.parallel), r))
        .collect();

    let mut out = String::new();
    let table = |out: &mut String, title: &str, cell: &dyn Fn(&SummaryRow) -> Option<String>| {
        writeln!(out, "## {title}\n").unwrap();
        let mut header = String::from("| Missions |");
        let mut rule = String::from("|---:|");
        for &(a, p) in &columns {
            write!(header, " {} |", column_label(a, p)).unwrap();
            rule.push_str("---|");
        }
        writeln!(out, "{header}\n{rule}").unwrap();
        for &n in &counts {
            let mut line = format!("| {n} |");
            for &(a, p) in &columns {
                let text = lookup.get(&(n, a, p)).and_then(|r| cell(r)).unwrap_or_else(|| "N/A".into());
                write!(line, " {text} |").unwrap();
            }
            writeln!(out, "{line}").unwrap();
        }
        out.push('\n');
    };

    table(&mut out, "Mean runtime (seconds)", &|r| Some(format!("{:.6}", r.mean_runtime_seconds)));
    table(&mut out, "Total flight hours", &|r| {
        Some(format!("U: {:.3}<br>L: {:.3}<br>A: {:.3}", r.upper, r.lower, r.average))
    });
    if summary.rows.iter().any(|r| r.mean_gap.is_some()) {
        table(&mut out, "Gap to optimum (mean / max)", &|r| {
            Some(format!("{:.2}% / {:.2}%", 100.0 * r.mean_gap?, 100.0 * r.max_gap?))
        });
    }
    if !summary.notices.is_empty() {
        out.push_str("Omitted cells:\n\n");
        for notice in &summary.notices {
            writeln!(out, "- {notice}").unwrap();
        }
        out.push('\n');
    }
    out
}
