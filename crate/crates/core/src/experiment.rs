//! Experiment runs and their on-disk artifacts.
//!
//! A run directory holds:
//!
//! | file | contents |
//! |---|---|
//! | `config.json` | the effective configuration |
//! | `heuristics.jsonl` | every evaluated heuristic with its scores |
//! | `matrix.csv` | heuristics by instances, gap values (`inf` when invalid) |
//! | `convergence.csv` | `generation,evals_used,population_cpi,best_single_mean` |
//! | `report.json` | final population, CPI, set-size series, contributors |
//!
//! With more than one repeat every file but `config.json` gets a `_<r>`
//! suffix.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Heuristic, HeuristicId, PerformanceMatrix, PerformanceVector, Population, ProblemInstance, Task};
use crate::engine::{
    cpi_vs_setsize, Ablation, ConvergencePoint, Engine, EngineError, EvolutionConfig, InstanceSetSpec, LlmSpec,
    RunState, SizePoint, Termination,
};
use crate::exec::{Executor, SetEvaluation, Evaluator};
use crate::instances::{self, InstanceError};
use crate::llm::{ChatClient, Generator, LlmError, MockGenerator};
use crate::metrics;
use crate::selection::{self, SelectionError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Instances(#[from] InstanceError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Exec(#[from] crate::exec::ExecError),
}

impl ExperimentError {
    /// Whether the error comes from bad input rather than a failure while
    /// running.
    pub fn is_config(&self) -> bool {
        match self {
            ExperimentError::Config(_) | ExperimentError::Format { .. } => true,
            ExperimentError::Engine(EngineError::Config(_)) => true,
            ExperimentError::Instances(InstanceError::Spec(_)) => true,
            _ => false,
        }
    }
}

fn io_err(path: &Path, e: impl ToString) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn format_err(path: &Path, e: impl ToString) -> ExperimentError {
    ExperimentError::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Reads a TOML or JSON configuration (by extension; TOML otherwise).
pub fn load_config(path: &Path) -> Result<EvolutionConfig, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let config: EvolutionConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| format_err(path, e))?
    } else {
        toml::from_str(&text).map_err(|e| format_err(path, e))?
    };
    Ok(config)
}

/// Resolves an instance source. The warning list names skipped benchmark
/// files.
pub fn load_instances(spec: &InstanceSetSpec, task: Task) -> Result<(Vec<ProblemInstance>, Vec<String>), ExperimentError> {
    let (instances, warnings) = match spec {
        InstanceSetSpec::Generated(g) => (instances::generate(g)?, vec![]),
        InstanceSetSpec::File { path } => (instances::read_jsonl(path)?, vec![]),
        InstanceSetSpec::Benchmark { dir } => instances::load_benchmark_dir(dir, task)?,
    };
    if let Some(bad) = instances.iter().find(|i| i.task() != task) {
        return Err(ExperimentError::Config(format!("instance {} is not a {task} instance", bad.id())));
    }
    Ok((instances, warnings))
}

pub fn make_generator(llm: &LlmSpec, seed: u64) -> Result<Box<dyn Generator>, ExperimentError> {
    Ok(match llm {
        LlmSpec::Mock => Box::new(MockGenerator::new(seed)),
        LlmSpec::Live(chat) => Box::new(ChatClient::new(chat.clone())?),
    })
}

/// Row label for an ablation setting.
pub fn variant_label(ablation: &Ablation) -> &'static str {
    match (ablation.disable_cs, ablation.disable_ls, ablation.disable_cpm) {
        (false, false, false) => "full",
        (true, false, false) => "w/o CS",
        (false, true, false) => "w/o LS",
        (false, false, true) => "w/o CPM",
        (true, false, true) => "w/o CS, w/o CPM",
        (false, true, true) => "w/o LS, w/o CPM",
        (true, true, _) => "invalid",
    }
}

/// One line of `heuristics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRecord {
    #[serde(flatten)]
    pub heuristic: Heuristic,
    pub valid: bool,
    /// Gap per instance; absent for invalid heuristics.
    pub vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub instance: String,
    pub heuristic: HeuristicId,
    pub gap: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub variant: String,
    pub task: Task,
    pub seed: u64,
    pub repeat: usize,
    pub termination: Option<Termination>,
    pub evals_used: usize,
    pub generations: usize,
    pub generator_calls: u64,
    pub failures: usize,
    pub final_population: Vec<HeuristicId>,
    pub final_cpi: f64,
    pub best_single_mean: f64,
    /// Greedy CPI over the valid archive for set sizes 1..=10.
    pub setsize: Vec<SizePoint>,
    /// Which final-population member wins each instance.
    pub contributors: Vec<Contribution>,
    /// Instances won per final-population member.
    pub contribution_counts: BTreeMap<HeuristicId, usize>,
}

/// Largest set size in the report's series.
pub const SERIES_MAX: usize = 10;

/// Builds the report for a population held in `matrix`.
pub fn summarize(
    config: &EvolutionConfig,
    repeat: usize,
    matrix: &PerformanceMatrix,
    members: &[usize],
    convergence: &[ConvergencePoint],
) -> Result<RunReport, ExperimentError> {
    let cpi = metrics::cpi(matrix, members).map_err(SelectionError::from)?;
    let pool = matrix.valid_rows();
    let sizes: Vec<usize> = (1..=SERIES_MAX.min(pool.len())).collect();
    let setsize = cpi_vs_setsize(matrix, &pool, &sizes)?;
    let mut counts: BTreeMap<HeuristicId, usize> = members.iter().map(|&r| (matrix.heuristic_ids()[r], 0)).collect();
    let contributors = cpi
        .contributor
        .iter()
        .zip(matrix.instance_ids())
        .zip(&cpi.best_per_instance)
        .map(|((&h, inst), &gap)| {
            *counts.entry(h).or_default() += 1;
            Contribution {
                instance: inst.clone(),
                heuristic: h,
                gap,
            }
        })
        .collect();
    let last = convergence.last();
    Ok(RunReport {
        variant: variant_label(&config.ablation).to_string(),
        task: config.task,
        seed: config.seed,
        repeat,
        termination: None,
        evals_used: last.map_or(0, |c| c.evals_used),
        generations: last.map_or(0, |c| c.generation),
        generator_calls: 0,
        failures: 0,
        final_population: members.iter().map(|&r| matrix.heuristic_ids()[r]).collect(),
        final_cpi: cpi.cpi,
        best_single_mean: members
            .iter()
            .map(|&r| matrix.rows()[r].mean())
            .fold(f64::INFINITY, f64::min),
        setsize,
        contributors,
        contribution_counts: counts,
    })
}

pub fn report_for_state(config: &EvolutionConfig, repeat: usize, state: &RunState) -> Result<RunReport, ExperimentError> {
    let mut report = summarize(config, repeat, &state.matrix, state.population.members(), &state.convergence)?;
    report.termination = state.termination;
    report.generator_calls = state.generator_calls();
    report.failures = state.failures.len();
    Ok(report)
}

fn suffixed(dir: &Path, stem: &str, ext: &str, repeat: Option<usize>) -> PathBuf {
    match repeat {
        Some(r) => dir.join(format!("{stem}_{r}.{ext}")),
        None => dir.join(format!("{stem}.{ext}")),
    }
}

/// Paths of one run's files inside an artifact directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub config: PathBuf,
    pub heuristics: PathBuf,
    pub matrix: PathBuf,
    pub convergence: PathBuf,
    pub report: PathBuf,
}

impl RunFiles {
    /// `repeat` is `None` for single-repeat directories.
    pub fn new(dir: &Path, repeat: Option<usize>) -> Self {
        RunFiles {
            config: dir.join("config.json"),
            heuristics: suffixed(dir, "heuristics", "jsonl", repeat),
            matrix: suffixed(dir, "matrix", "csv", repeat),
            convergence: suffixed(dir, "convergence", "csv", repeat),
            report: suffixed(dir, "report", "json", repeat),
        }
    }

    /// Finds the files for `repeat`, accepting either layout.
    pub fn locate(dir: &Path, repeat: usize) -> Self {
        let plain = RunFiles::new(dir, None);
        if repeat == 0 && plain.report.exists() {
            plain
        } else {
            RunFiles::new(dir, Some(repeat))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn write_matrix_csv(path: &Path, matrix: &PerformanceMatrix) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["heuristic".to_string()];
    header.extend(matrix.instance_ids().iter().cloned());
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (id, row) in matrix.heuristic_ids().iter().zip(matrix.rows()) {
        let mut rec = vec![id.to_string()];
        rec.extend(row.scores().iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads `matrix.csv`; a row with any non-finite value is invalid.
pub fn read_matrix_csv(path: &Path) -> Result<PerformanceMatrix, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = r.headers().map_err(|e| format_err(path, e))?.clone();
    if header.get(0) != Some("heuristic") {
        return Err(format_err(path, "first column must be `heuristic`"));
    }
    let mut matrix = PerformanceMatrix::new(header.iter().skip(1).map(str::to_string).collect());
    for rec in r.records() {
        let rec = rec.map_err(|e| format_err(path, e))?;
        let id: HeuristicId = rec[0].parse().map_err(|e| format_err(path, e))?;
        let scores = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>().map_err(|e| format_err(path, format!("{id}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let vector = if scores.iter().all(|s| s.is_finite()) {
            PerformanceVector::valid(scores).map_err(|e| format_err(path, e))?
        } else {
            PerformanceVector::invalid(scores.len())
        };
        matrix.push(id, vector).map_err(|e| format_err(path, e))?;
    }
    Ok(matrix)
}

pub fn write_convergence_csv(path: &Path, points: &[ConvergencePoint]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for p in points {
        w.serialize(p).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_convergence_csv(path: &Path) -> Result<Vec<ConvergencePoint>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize().map(|p| p.map_err(|e| format_err(path, e))).collect()
}

pub fn write_heuristics_jsonl(path: &Path, archive: &[Heuristic], matrix: &PerformanceMatrix) -> Result<(), ExperimentError> {
    let mut out = String::new();
    for (h, row) in archive.iter().zip(matrix.rows()) {
        let record = HeuristicRecord {
            heuristic: h.clone(),
            valid: row.is_valid(),
            vector: row.is_valid().then(|| row.scores().to_vec()),
        };
        out.push_str(&serde_json::to_string(&record).expect("records serialize"));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn read_heuristics_jsonl(path: &Path) -> Result<Vec<HeuristicRecord>, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format_err(path, format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn write_config(path: &Path, config: &EvolutionConfig) -> Result<(), ExperimentError> {
    write_file(path, &to_json_pretty(config))
}

pub fn read_report(path: &Path) -> Result<RunReport, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e))
}

/// Writes every per-run file (not `config.json`).
pub fn write_run(files: &RunFiles, state: &RunState, report: &RunReport) -> Result<(), ExperimentError> {
    write_heuristics_jsonl(&files.heuristics, &state.archive, &state.matrix)?;
    write_matrix_csv(&files.matrix, &state.matrix)?;
    write_convergence_csv(&files.convergence, &state.convergence)?;
    write_file(&files.report, &to_json_pretty(report))
}

/// Result of one repeat.
#[derive(Debug)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub seed: u64,
    pub files: RunFiles,
    pub result: Result<RunReport, ExperimentError>,
}

/// Runs `repeats` independent repeats into `out`. Repeat `r` uses seed
/// `config.seed + r` on the instance set of the base seed. A failed repeat
/// is reported in its outcome and does not stop the others; errors that
/// affect every repeat are returned directly.
pub fn run_experiment(config: &EvolutionConfig, out: &Path, repeats: usize) -> Result<Vec<RepeatOutcome>, ExperimentError> {
    if repeats == 0 {
        return Err(ExperimentError::Config("repeats must be at least 1".into()));
    }
    config.validate()?;
    let mut config = config.clone();
    let spec = config.instance_spec();
    config.instances = Some(spec.clone());
    let (instances, warnings) = load_instances(&spec, config.task)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    if instances.is_empty() {
        return Err(ExperimentError::Config("no training instances".into()));
    }
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_config(&out.join("config.json"), &config)?;
    let executor = Executor::new(config.route, config.worker.clone());

    let mut outcomes = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let files = RunFiles::new(out, (repeats > 1).then_some(r));
        let run_config = EvolutionConfig {
            seed: config.seed.wrapping_add(r as u64),
            ..config.clone()
        };
        log::info!("repeat {r}: seed {}", run_config.seed);
        let result = run_one(&run_config, r, &executor, &instances, &files);
        if let Err(e) = &result {
            log::error!("repeat {r} failed: {e}");
        }
        outcomes.push(RepeatOutcome {
            repeat: r,
            seed: run_config.seed,
            files,
            result,
        });
    }
    Ok(outcomes)
}

fn run_one(
    config: &EvolutionConfig,
    repeat: usize,
    executor: &Executor,
    instances: &[ProblemInstance],
    files: &RunFiles,
) -> Result<RunReport, ExperimentError> {
    let generator = make_generator(&config.llm, config.seed)?;
    let engine = Engine::new(config, generator.as_ref(), executor, instances)?;
    let state = engine.run()?;
    let report = report_for_state(config, repeat, &state)?;
    write_run(files, &state, &report)?;
    Ok(report)
}

/// A run read back from its artifact directory.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub config: EvolutionConfig,
    pub heuristics: Vec<HeuristicRecord>,
    pub matrix: PerformanceMatrix,
    pub convergence: Vec<ConvergencePoint>,
    pub report: RunReport,
}

impl LoadedRun {
    pub fn load(dir: &Path, repeat: usize) -> Result<Self, ExperimentError> {
        let files = RunFiles::locate(dir, repeat);
        let config: EvolutionConfig = {
            let text = fs::read_to_string(&files.config).map_err(|e| io_err(&files.config, e))?;
            serde_json::from_str(&text).map_err(|e| format_err(&files.config, e))?
        };
        let run = LoadedRun {
            config,
            heuristics: read_heuristics_jsonl(&files.heuristics)?,
            matrix: read_matrix_csv(&files.matrix)?,
            convergence: read_convergence_csv(&files.convergence)?,
            report: read_report(&files.report)?,
        };
        for id in &run.report.final_population {
            if run.matrix.row_of(*id).is_none() || !run.heuristics.iter().any(|h| h.heuristic.id == *id) {
                return Err(format_err(&files.report, format!("final population member {id} is not in the archive")));
            }
        }
        Ok(run)
    }

    /// Final population in member order.
    pub fn population(&self) -> Vec<Heuristic> {
        self.report
            .final_population
            .iter()
            .filter_map(|id| self.heuristics.iter().find(|h| h.heuristic.id == *id))
            .map(|h| h.heuristic.clone())
            .collect()
    }

    /// Matrix rows of the final population.
    pub fn member_rows(&self) -> Vec<usize> {
        self.report
            .final_population
            .iter()
            .filter_map(|id| self.matrix.row_of(*id))
            .collect()
    }

    /// Recomputes the report from the matrix and population alone.
    pub fn recompute_report(&self) -> Result<RunReport, ExperimentError> {
        let rows = self.member_rows();
        let archive: Vec<Heuristic> = self.heuristics.iter().map(|h| h.heuristic.clone()).collect();
        Population::new(rows.clone(), self.report.generations, &archive, &self.matrix)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        let mut fresh = summarize(&self.config, self.report.repeat, &self.matrix, &rows, &self.convergence)?;
        fresh.seed = self.report.seed;
        fresh.termination = self.report.termination;
        fresh.generator_calls = self.report.generator_calls;
        fresh.failures = self.report.failures;
        Ok(fresh)
    }
}

/// Standalone greedy selection over a matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub chosen: Vec<HeuristicId>,
    pub cpi_trace: Vec<f64>,
    pub pool: usize,
}

pub fn select_from_matrix(matrix: &PerformanceMatrix, k: usize) -> Result<SelectionSummary, ExperimentError> {
    let pool = matrix.valid_rows();
    let out = selection::cpm_select(matrix, &pool, k)?;
    Ok(SelectionSummary {
        chosen: out.chosen.iter().map(|&r| matrix.heuristic_ids()[r]).collect(),
        cpi_trace: out.cpi_trace,
        pool: pool.len(),
    })
}

/// One benchmark instance evaluated by every heuristic of a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    /// Best gap over the set's valid results.
    pub set_gap: Option<f64>,
    /// Gap of the set's first heuristic.
    pub single_gap: Option<f64>,
    /// Gap per heuristic in set order; `None` where the episode failed.
    pub gaps: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub heuristics: Vec<HeuristicId>,
    pub rows: Vec<BenchRow>,
    pub mean_set_gap: Option<f64>,
    pub mean_single_gap: Option<f64>,
    pub warnings: Vec<String>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.collect::<Option<Vec<f64>>>()?;
    (!v.is_empty()).then(|| metrics::mean(&v))
}

/// Evaluates `set` on benchmark instances. The first heuristic is the
/// single-heuristic reference.
pub fn bench(
    set: &[Heuristic],
    task: Task,
    instances: &[ProblemInstance],
    evaluator: &dyn Evaluator,
    mut warnings: Vec<String>,
) -> Result<BenchTable, ExperimentError> {
    if set.is_empty() {
        return Err(ExperimentError::Config("heuristic set is empty".into()));
    }
    let mut columns = Vec::with_capacity(set.len());
    for h in set {
        // per instance so that one failing file does not blank the column
        let mut col = Vec::with_capacity(instances.len());
        for inst in instances {
            let SetEvaluation { vector, failure } = evaluator.evaluate_on_set(h, task, std::slice::from_ref(inst))?;
            match failure {
                None => col.push(Some(vector.scores()[0])),
                Some((_, reason)) => {
                    warnings.push(format!("{} on {}: {reason}", h.id, inst.id()));
                    col.push(None);
                }
            }
        }
        columns.push(col);
    }
    let rows: Vec<BenchRow> = instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let gaps: Vec<Option<f64>> = columns.iter().map(|c| c[i]).collect();
            let set_gap = gaps.iter().flatten().copied().reduce(f64::min);
            BenchRow {
                instance: inst.id().to_string(),
                set_gap,
                single_gap: gaps[0],
                gaps,
            }
        })
        .collect();
    Ok(BenchTable {
        heuristics: set.iter().map(|h| h.id).collect(),
        mean_set_gap: mean_of(rows.iter().map(|r| r.set_gap)),
        mean_single_gap: mean_of(rows.iter().map(|r| r.single_gap)),
        rows,
        warnings,
    })
}

/// Benchmarks a set on every instance file in `dir`.
pub fn bench_dir(set: &[Heuristic], task: Task, dir: &Path, evaluator: &dyn Evaluator) -> Result<BenchTable, ExperimentError> {
    let (instances, warnings) = instances::load_benchmark_dir(dir, task)?;
    bench(set, task, &instances, evaluator, warnings)
}
