use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eohs::domain::{Heuristic, HeuristicId, Origin, Task};
use eohs::engine::{EvolutionConfig, InstanceSetSpec, LlmSpec};
use eohs::exec::{worker, Executor};
use eohs::experiment::{self, ExperimentError, LoadedRun};
use eohs::instances::{self, GeneratorSpec};
use eohs::llm::ChatConfig;
use eohs::problems::Builtin;
use eohs::verify::{run_battery, BatteryConfig};

#[derive(Parser)]
#[command(name = "eohs", version, about = "Evolve complementary heuristic sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training instance set as JSONL.
    Gen(GenArgs),
    /// Run an experiment and write its artifact directory.
    Run(RunArgs),
    /// Evaluate a heuristic set on a benchmark directory.
    Bench(BenchArgs),
    /// Greedy set selection over a matrix.csv.
    Select(SelectArgs),
    /// Randomized property checks of the set objective and greedy selection.
    Verify(VerifyArgs),
    /// Recompute report series from an artifact directory.
    Report(ReportArgs),
    /// Serve the evaluation protocol on stdin/stdout.
    #[command(hide = true)]
    Worker,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    task: Task,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the training-set size for the task.
    #[arg(long)]
    count: Option<usize>,
    /// Use the small smoke-test size ranges.
    #[arg(long)]
    small: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Use the offline mock generator.
    #[arg(long, conflicts_with = "endpoint")]
    mock_llm: bool,
    /// Chat-completions URL; implies a live generator.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    /// Per-episode worker timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    no_cs: bool,
    #[arg(long)]
    no_ls: bool,
    #[arg(long)]
    no_cpm: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Artifact directory whose final population is benchmarked.
    #[arg(long, required_unless_present = "builtin")]
    run: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    repeat: usize,
    /// Comma-separated built-in heuristics instead of a run.
    #[arg(long, value_delimiter = ',')]
    builtin: Vec<String>,
    /// Directory of BPPLIB, TSPLIB or CVRPLIB files.
    #[arg(long)]
    dir: PathBuf,
    /// Required with --builtin when the names span no single task.
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    timeout: Option<f64>,
    /// Write the table as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    k: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 200)]
    greedy_trials: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long, default_value_t = 0)]
    repeat: usize,
    /// Write the recomputed report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
    Verification(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let mut spec = if args.small {
        GeneratorSpec::small(args.task, 16, args.seed)
    } else {
        GeneratorSpec::training(args.task, args.seed)
    };
    if let Some(c) = args.count {
        spec.count = c;
    }
    let set = instances::generate(&spec).map_err(|e| Failure::Config(e.to_string()))?;
    instances::write_jsonl(&args.out, &set).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("wrote {} {} instances to {}", set.len(), args.task, args.out.display());
    Ok(())
}

fn build_config(args: &RunArgs) -> Result<EvolutionConfig, Failure> {
    let mut c = match &args.config {
        // an unreadable config file is still a configuration problem
        Some(p) => experiment::load_config(p).map_err(|e| Failure::Config(e.to_string()))?,
        None => EvolutionConfig::default(),
    };
    if let Some(t) = args.task {
        if c.task != t {
            if let Some(InstanceSetSpec::Generated(_)) = c.instances {
                c.instances = None;
            }
        }
        c.task = t;
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(n) = args.pop_size {
        c.population_size = n;
    }
    if let Some(b) = args.budget {
        c.eval_budget = b;
    }
    if let Some(t) = args.timeout {
        c.worker.timeout_secs = t;
    }
    if args.mock_llm {
        c.llm = LlmSpec::Mock;
    }
    if let Some(e) = &args.endpoint {
        let mut chat = match &c.llm {
            LlmSpec::Live(chat) => chat.clone(),
            LlmSpec::Mock => ChatConfig::default(),
        };
        chat.endpoint = e.clone();
        c.llm = LlmSpec::Live(chat);
    }
    if let Some(m) = &args.model {
        match &mut c.llm {
            LlmSpec::Live(chat) => chat.model = m.clone(),
            LlmSpec::Mock => return Err(Failure::Config("--model needs a live generator".into())),
        }
    }
    c.ablation.disable_cs |= args.no_cs;
    c.ablation.disable_ls |= args.no_ls;
    c.ablation.disable_cpm |= args.no_cpm;
    c.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(c)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let config = build_config(&args)?;
    let outcomes = experiment::run_experiment(&config, &args.out, args.repeats)?;
    let mut failed = 0;
    for o in &outcomes {
        match &o.result {
            Ok(r) => println!(
                "repeat {} (seed {}): cpi {:.6}, best single {:.6}, {} evaluations, {} generations -> {}",
                o.repeat,
                o.seed,
                r.final_cpi,
                r.best_single_mean,
                r.evals_used,
                r.generations,
                o.files.report.display()
            ),
            Err(e) => {
                failed += 1;
                eprintln!("repeat {} (seed {}) failed: {e}", o.repeat, o.seed);
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} repeat(s) failed", outcomes.len())));
    }
    Ok(())
}

fn builtin_set(names: &[String], task: Option<Task>) -> Result<(Vec<Heuristic>, Task), Failure> {
    let mut set = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let b = Builtin::from_name(name).ok_or_else(|| Failure::Config(format!("unknown built-in `{name}`")))?;
        let h = Heuristic::new(HeuristicId(i as u64 + 1), b.task(), b.description(), b.reference_source(), Origin::Builtin, vec![])
            .map_err(|e| Failure::Runtime(e.to_string()))?;
        set.push((b.task(), h));
    }
    let task = task
        .or_else(|| set.first().map(|(t, _)| *t))
        .ok_or_else(|| Failure::Config("no heuristics given".into()))?;
    if let Some((t, h)) = set.iter().find(|(t, _)| *t != task) {
        return Err(Failure::Config(format!("{} is a {t} heuristic, not {task}", h.id)));
    }
    Ok((set.into_iter().map(|(_, h)| h).collect(), task))
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let (set, task, mut executor_config) = match &args.run {
        Some(dir) => {
            let run = LoadedRun::load(dir, args.repeat)?;
            (run.population(), run.config.task, (run.config.route, run.config.worker.clone()))
        }
        None => {
            let (set, task) = builtin_set(&args.builtin, args.task)?;
            (set, task, (Default::default(), Default::default()))
        }
    };
    if let Some(t) = args.timeout {
        executor_config.1.timeout_secs = t;
    }
    let executor = Executor::new(executor_config.0, executor_config.1);
    let table = experiment::bench_dir(&set, task, &args.dir, &executor)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let fmt = |g: Option<f64>| g.map_or("-".to_string(), |g| format!("{:.4}", g * 100.0));
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let _ = writeln!(out, "{:<24} {:>10} {:>10}", "instance", "set %", "single %");
    for r in &table.rows {
        let _ = writeln!(out, "{:<24} {:>10} {:>10}", r.instance, fmt(r.set_gap), fmt(r.single_gap));
    }
    let _ = writeln!(out, "{:<24} {:>10} {:>10}", "mean", fmt(table.mean_set_gap), fmt(table.mean_single_gap));
    drop(out);
    if let Some(p) = &args.out {
        write_json(p, &table)?;
    }
    Ok(())
}

fn select(args: SelectArgs) -> Result<(), Failure> {
    let matrix = experiment::read_matrix_csv(&args.matrix)?;
    let summary = experiment::select_from_matrix(&matrix, args.k).map_err(|e| Failure::Config(e.to_string()))?;
    print_json(&summary)
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let config = BatteryConfig {
        seed: args.seed,
        monotonicity_trials: args.trials,
        greedy_trials: args.greedy_trials,
        delta_trials: args.trials,
    };
    let report = run_battery(&config).map_err(|e| Failure::Runtime(e.to_string()))?;
    print_json(&report)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("property violations found".into()))
    }
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let run = LoadedRun::load(&args.run, args.repeat)?;
    let fresh = run.recompute_report()?;
    if fresh != run.report {
        eprintln!("warning: stored report differs from the recomputed one");
    }
    match &args.out {
        Some(p) => write_json(p, &fresh),
        None => print_json(&fresh),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Select(a) => select(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
        Command::Worker => {
            let stdin = io::stdin();
            let stdout = io::stdout();
            worker::serve(stdin.lock(), stdout.lock()).map_err(|e| Failure::Runtime(e.to_string()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(3)
        }
    }
}
