//! `recosim` command-line driver.
//!
//! Every subcommand prints its fully resolved configuration before doing any
//! work. Values are resolved as flags > config file > `RECOSIM_SEED` (seed
//! only) > built-in defaults.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 I/O error, 3 empty
//! result.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};

use recosim::agents::{load_agent, save_agent, BlobError, RandomAgent, AGENT_NAMES};
use recosim::eval::{
    evaluate_online, generate_log, measure_throughput, sweep_bandit_events, sweep_sigma_phi, Axis, EvalError,
    EvalOptions, Policy, SweepSettings, ORACLE_LABEL,
};
use recosim::io::{
    read_config_over, read_events, read_report, rows_from_sweep, write_config, write_events, write_report,
    DataError, ReportRow, RunConfig,
};
use recosim::plot::render_svg;
use recosim::{Agent, AgentError};

const SEED_ENV: &str = "RECOSIM_SEED";

#[derive(Debug, Parser)]
#[command(name = "recosim", version, about = "Organic/bandit recommendation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate users under a random logging policy and write the event log.
    Simulate(SimulateArgs),
    /// Train an agent on an event log and save it.
    Train(TrainArgs),
    /// Evaluate a saved agent (or the oracle policy) on fresh users.
    Evaluate(EvaluateArgs),
    /// Sweep training bandit events or sigma_phi and write a report and a plot.
    Sweep(SweepArgs),
    /// Render a report CSV as an SVG chart.
    Plot(PlotArgs),
    /// Measure simulation throughput.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; absent keys take built-in defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run seed [default: harness.seed, else $RECOSIM_SEED, else 0].
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Users to simulate [default: harness.train_users = 1000].
    #[arg(long, value_name = "N")]
    users: Option<u64>,
    /// Worker threads [default: harness.threads = 1].
    #[arg(long, value_name = "T")]
    threads: Option<usize>,
    /// Output event log (CSV).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// TOML run configuration; absent keys take built-in defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Agent to train [default: agent.name = random]. One of: random, logistic,
    /// pure_bandit, pure_organic, combined, prod2vec.
    #[arg(long, value_name = "NAME")]
    agent: Option<String>,
    /// Training event log (CSV).
    #[arg(long, value_name = "PATH")]
    log: PathBuf,
    /// Output agent blob.
    #[arg(long, value_name = "AGENT_PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    /// Saved agent to evaluate; required unless --oracle-policy is given.
    #[arg(long, value_name = "PATH", required_unless_present = "oracle_policy")]
    agent_blob: Option<PathBuf>,
    /// Evaluate the oracle best-action policy instead of a saved agent.
    #[arg(long, conflicts_with = "agent_blob")]
    oracle_policy: bool,
    /// Evaluation users [default: harness.eval_users = 2000].
    #[arg(long, value_name = "N")]
    users: Option<u64>,
    /// Record mean regret against the oracle best action [default: harness.oracle = false].
    #[arg(long)]
    oracle: bool,
    /// Worker threads [default: harness.threads = 1].
    #[arg(long, value_name = "T")]
    threads: Option<usize>,
    /// Output report (CSV).
    #[arg(long, value_name = "REPORT")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Swept quantity: bandit_events or sigma_phi.
    #[arg(long, value_parser = clap::value_parser!(Axis))]
    axis: Axis,
    /// Comma-separated ascending grid [default: harness.bandit_events_grid =
    /// 100,1000,10000,100000 or harness.sigma_phi_grid = 0,1,2,3].
    #[arg(long, value_name = "CSV-LIST")]
    grid: Option<String>,
    /// Comma-separated agent names.
    #[arg(long, value_name = "CSV-LIST", default_value = "pure_organic,pure_bandit,combined")]
    agents: String,
    /// Repetitions [default: harness.reps = 5].
    #[arg(long, value_name = "R")]
    reps: Option<u32>,
    /// Evaluation users per point [default: harness.eval_users = 2000].
    #[arg(long, value_name = "N")]
    users: Option<u64>,
    /// Training bandit events per point of a sigma_phi sweep
    /// [default: harness.training_bandit_events = 10000].
    #[arg(long, value_name = "N")]
    training_events: Option<usize>,
    /// Worker threads [default: harness.threads = 1].
    #[arg(long, value_name = "T")]
    threads: Option<usize>,
    /// Output directory; receives sweep_<axis>.csv and sweep_<axis>.svg.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Report CSV written by `sweep`.
    #[arg(long, value_name = "PATH")]
    report: PathBuf,
    /// Output SVG.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Label of the horizontal axis.
    #[arg(long, value_name = "TEXT", default_value = "axis_value")]
    x_label: String,
    /// Normal quantile for pooled intervals.
    #[arg(long, value_name = "Z", default_value_t = recosim::eval::Z_95)]
    z: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Users simulated per measurement.
    #[arg(long, value_name = "N", default_value_t = 200_000)]
    users: u64,
    /// Comma-separated thread counts to measure.
    #[arg(long, value_name = "CSV-LIST", default_value = "1,4")]
    threads: String,
    /// Number of products for the benchmark model.
    #[arg(long, value_name = "P", default_value_t = 100)]
    products: usize,
    /// Latent dimension for the benchmark model.
    #[arg(long, value_name = "K", default_value_t = 10)]
    latent_dim: usize,
}

/// An error with the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn invalid(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: error.into() }
    }

    fn io(error: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: error.into() }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::SinkFailure(_) | DataError::SourceFailure(_) => Failure::io(e),
            _ => Failure::invalid(e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ZeroDisplays => Self { code: 3, error: e.into() },
            _ => Failure::invalid(e),
        }
    }
}

impl From<AgentError> for Failure {
    fn from(e: AgentError) -> Self {
        Failure::invalid(e)
    }
}

impl From<BlobError> for Failure {
    fn from(e: BlobError) -> Self {
        match e {
            BlobError::Io(_) => Failure::io(e),
            _ => Failure::invalid(e),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Train(args) => train(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Sweep(args) => sweep(args),
        Command::Plot(args) => plot(args),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(anyhow!("{}: {e}", path.display())))
}

fn create_file(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(anyhow!("{}: {e}", path.display())))
}

fn open_file(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(anyhow!("{}: {e}", path.display())))
}

/// Built-in defaults with `RECOSIM_SEED` applied, overlaid by the config file.
fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let mut base = RunConfig::default();
    if let Ok(value) = std::env::var(SEED_ENV) {
        base.harness.seed =
            value.trim().parse().map_err(|_| Failure::invalid(anyhow!("{SEED_ENV}=`{value}` is not a u64")))?;
    }
    let Some(path) = path else {
        return Ok(base);
    };
    let text = read_file(path)?;
    read_config_over(&text, &base).map_err(|e| {
        let code = Failure::from(e);
        Failure { code: code.code, error: code.error.context(path.display().to_string()) }
    })
}

/// Validates the resolved config and prints it.
fn announce(config: &RunConfig) -> CmdResult {
    config.validate().map_err(Failure::invalid)?;
    println!("# resolved configuration");
    print!("{}", write_config(config));
    println!("# end of configuration");
    Ok(())
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let mut cfg = load_config(args.common.config.as_deref())?;
    cfg.harness.seed = args.common.seed.unwrap_or(cfg.harness.seed);
    cfg.harness.train_users = args.users.unwrap_or(cfg.harness.train_users);
    cfg.harness.threads = args.threads.unwrap_or(cfg.harness.threads);
    announce(&cfg)?;
    let logger = RandomAgent::new(cfg.sim.num_products, cfg.agent.random_seed);
    let log = generate_log(&cfg.sim, cfg.harness.train_users, &logger, cfg.harness.seed, cfg.harness.threads)?;
    let bytes = write_events(&log, create_file(&args.out)?)?;
    println!(
        "wrote {} events ({} bandit) for {} users to {} ({bytes} bytes)",
        log.len(),
        log.bandit_count(),
        cfg.harness.train_users,
        args.out.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> CmdResult {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(name) = args.agent {
        cfg.agent.name = name;
    }
    announce(&cfg)?;
    let mut agent = cfg.agent.build_default(cfg.sim.num_products)?;
    let log = read_events(open_file(&args.log)?).map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, error: f.error.context(args.log.display().to_string()) }
    })?;
    agent.train(&log)?;
    let bytes = save_agent(&agent, create_file(&args.out)?)?;
    println!("trained {} on {} events; wrote {} ({bytes} bytes)", agent.name(), log.len(), args.out.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> CmdResult {
    let mut cfg = load_config(args.common.config.as_deref())?;
    cfg.harness.seed = args.common.seed.unwrap_or(cfg.harness.seed);
    cfg.harness.eval_users = args.users.unwrap_or(cfg.harness.eval_users);
    cfg.harness.threads = args.threads.unwrap_or(cfg.harness.threads);
    cfg.harness.oracle |= args.oracle;
    announce(&cfg)?;
    let agent = match &args.agent_blob {
        Some(path) => Some(load_agent(open_file(path)?)?),
        None => None,
    };
    let (label, policy) = match &agent {
        Some(a) => (a.name(), Policy::Agent(a as &dyn Agent)),
        None => (ORACLE_LABEL, Policy::Oracle),
    };
    let opts = EvalOptions { z: cfg.harness.z, oracle: cfg.harness.oracle, threads: cfg.harness.threads };
    let report = evaluate_online(&cfg.sim, policy, cfg.harness.eval_users, cfg.harness.seed, &opts)?;
    write_report(&[ReportRow::single(label, report.clone())], create_file(&args.out)?)?;
    println!(
        "{label}: ctr {:.6} [{:.6}, {:.6}] over {} displays{}",
        report.ctr,
        report.ci_low,
        report.ci_high,
        report.displays,
        report.mean_regret.map_or(String::new(), |r| format!(", mean regret {r:.6}"))
    );
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| Failure::invalid(anyhow!("{what}: bad value `{v}`"))))
        .collect()
}

fn sweep(args: SweepArgs) -> CmdResult {
    let mut cfg = load_config(args.common.config.as_deref())?;
    cfg.harness.seed = args.common.seed.unwrap_or(cfg.harness.seed);
    cfg.harness.reps = args.reps.unwrap_or(cfg.harness.reps);
    cfg.harness.eval_users = args.users.unwrap_or(cfg.harness.eval_users);
    cfg.harness.threads = args.threads.unwrap_or(cfg.harness.threads);
    cfg.harness.training_bandit_events = args.training_events.unwrap_or(cfg.harness.training_bandit_events);
    if let Some(grid) = &args.grid {
        match args.axis {
            Axis::BanditEvents => cfg.harness.bandit_events_grid = parse_list(grid, "--grid")?,
            Axis::SigmaPhi => cfg.harness.sigma_phi_grid = parse_list(grid, "--grid")?,
        }
    }
    let names: Vec<&str> = args.agents.split(',').map(str::trim).collect();
    if let Some(bad) = names.iter().find(|n| !AGENT_NAMES.contains(n)) {
        return Err(Failure::invalid(AgentError::UnknownAgent { name: bad.to_string() }));
    }
    announce(&cfg)?;
    let h = &cfg.harness;
    let settings = SweepSettings {
        eval_users: h.eval_users,
        reps: h.reps,
        seed: h.seed,
        eval: EvalOptions { z: h.z, oracle: h.oracle, threads: h.threads },
    };
    let table = match args.axis {
        Axis::BanditEvents => sweep_bandit_events(&cfg.sim, &cfg.agent, &names, &h.bandit_events_grid, &settings)?,
        Axis::SigmaPhi => {
            sweep_sigma_phi(&cfg.sim, &cfg.agent, &names, &h.sigma_phi_grid, h.training_bandit_events, &settings)?
        }
    };
    let rows = rows_from_sweep(&table);
    let svg = render_svg(&rows, &args.axis.to_string(), h.z).map_err(Failure::invalid)?;
    fs::create_dir_all(&args.out).map_err(|e| Failure::io(anyhow!("{}: {e}", args.out.display())))?;
    let csv_path = args.out.join(format!("sweep_{}.csv", args.axis));
    let svg_path = args.out.join(format!("sweep_{}.svg", args.axis));
    write_report(&rows, create_file(&csv_path)?)?;
    fs::write(&svg_path, svg).map_err(|e| Failure::io(anyhow!("{}: {e}", svg_path.display())))?;
    for value in table.values() {
        for agent in table.agents() {
            let r = table.pooled(value, agent, h.z).expect("every grid point has rows");
            println!("{} = {value}: {agent} ctr {:.6} [{:.6}, {:.6}]", args.axis, r.ctr, r.ci_low, r.ci_high);
        }
    }
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

fn plot(args: PlotArgs) -> CmdResult {
    println!("# resolved configuration");
    println!("report = {:?}\nout = {:?}\nx_label = {:?}\nz = {}", args.report, args.out, args.x_label, args.z);
    println!("# end of configuration");
    if !(args.z.is_finite() && args.z > 0.0) {
        return Err(Failure::invalid(anyhow!("--z must be positive")));
    }
    let rows = read_report(open_file(&args.report)?).map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, error: f.error.context(args.report.display().to_string()) }
    })?;
    let svg = render_svg(&rows, &args.x_label, args.z).map_err(Failure::invalid)?;
    fs::write(&args.out, &svg).map_err(|e| Failure::io(anyhow!("{}: {e}", args.out.display())))?;
    println!("wrote {} ({} bytes)", args.out.display(), svg.len());
    Ok(())
}

fn bench(args: BenchArgs) -> CmdResult {
    let mut cfg = load_config(args.common.config.as_deref())?;
    cfg.harness.seed = args.common.seed.unwrap_or(cfg.harness.seed);
    cfg.sim.num_products = args.products;
    cfg.sim.latent_dim = args.latent_dim;
    let threads: Vec<usize> = parse_list(&args.threads, "--threads")?;
    if threads.contains(&0) {
        return Err(Failure::invalid(anyhow!("--threads entries must be at least 1")));
    }
    announce(&cfg)?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    println!("available cores: {cores}");
    let mut baseline = None;
    for t in threads {
        let m = measure_throughput(&cfg.sim, args.users, t, cfg.harness.seed)?;
        let rate = m.events_per_second();
        let base = *baseline.get_or_insert(rate);
        println!(
            "threads {t}: {} events in {:.3} s = {rate:.0} events/s (x{:.2} vs first)",
            m.events,
            m.seconds,
            rate / base
        );
    }
    Ok(())
}
