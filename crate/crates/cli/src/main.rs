use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use po_miner_core::{
    alpha_partialize, discover, export_net, granularity_partialize, parse_lpo_json, parse_pnml,
    parse_sequential_csv, replay_statistics, write_lpo_json, CsvColumns, DecidedBy,
    DiscoveryConfig, EventLog, NetFormat, OrderMode, SequentialLog,
};

#[derive(Parser)]
#[command(
    name = "po-miner",
    version,
    about = "Process discovery over partially ordered event logs"
)]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "PO_MINER_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover a workflow net from a log.
    Discover(DiscoverArgs),
    /// Lift a sequential CSV log to an LPO-log JSON document.
    Convert(ConvertArgs),
    /// Replay a log on a PNML net and report fitting fractions.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LogFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Oracle {
    None,
    Alpha,
    Granularity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Frequency,
    Lexicographic,
}

#[derive(Args)]
struct LogArgs {
    /// Sequential CSV or LPO-log JSON.
    #[arg(long)]
    log: PathBuf,
    /// Input format; guessed from the file extension when omitted.
    #[arg(long, value_enum)]
    format: Option<LogFormat>,
    #[arg(long, default_value = "case")]
    case_column: String,
    #[arg(long, default_value = "activity")]
    activity_column: String,
    #[arg(long, default_value = "timestamp")]
    timestamp_column: String,
    /// Concurrency oracle applied to CSV input.
    #[arg(long, value_enum, default_value = "none")]
    oracle: Oracle,
    /// Bucket width for the granularity oracle, e.g. `1h`, `182d`, `2w`.
    #[arg(long, value_parser = humantime::parse_duration)]
    bucket: Option<Duration>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    input: LogArgs,
    /// Minimum fraction of cases a place must fit.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Bound on preset plus postset size.
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    #[arg(long)]
    no_prune: bool,
    #[arg(long, value_enum, default_value = "frequency")]
    order: Order,
    /// PNML output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// DOT output path.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// JSON replay report of the discovered net.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    #[command(flatten)]
    input: LogArgs,
    /// LPO-log JSON output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// PNML net.
    #[arg(long)]
    net: PathBuf,
    #[command(flatten)]
    input: LogArgs,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Input problems exit with 2, everything else with 1.
enum Failure {
    Input(anyhow::Error),
    Other(anyhow::Error),
}

trait InputContext<T> {
    fn input(self) -> Result<T, Failure>;
}

impl<T> InputContext<T> for anyhow::Result<T> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(Failure::Input)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_output(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

impl LogArgs {
    fn format(&self) -> LogFormat {
        self.format
            .unwrap_or_else(|| match self.log.extension().and_then(|e| e.to_str()) {
                Some(ext) if ext.eq_ignore_ascii_case("json") => LogFormat::Json,
                _ => LogFormat::Csv,
            })
    }

    fn read_sequential(&self) -> anyhow::Result<SequentialLog> {
        if self.format() != LogFormat::Csv {
            bail!("{} is not a CSV log", self.log.display());
        }
        let columns = CsvColumns {
            case: self.case_column.clone(),
            activity: self.activity_column.clone(),
            timestamp: self.timestamp_column.clone(),
        };
        let bytes = read_input(&self.log)?;
        parse_sequential_csv(&bytes, &columns)
            .with_context(|| format!("cannot parse {}", self.log.display()))
    }

    /// The LPO log and, for CSV input, the number of trace variants.
    fn load(&self) -> anyhow::Result<(EventLog, Option<usize>)> {
        if self.bucket.is_some() && self.oracle != Oracle::Granularity {
            bail!("--bucket only applies to --oracle granularity");
        }
        if self.format() == LogFormat::Json {
            if self.oracle != Oracle::None {
                bail!("oracles apply to sequential CSV logs only");
            }
            let bytes = read_input(&self.log)?;
            let log = parse_lpo_json(&bytes)
                .with_context(|| format!("cannot parse {}", self.log.display()))?;
            return Ok((log, None));
        }
        let seq = self.read_sequential()?;
        let traces = seq.trace_variant_count();
        let log = match self.oracle {
            Oracle::None => po_miner_core::fold_variants(&seq.to_chain_log()),
            Oracle::Alpha => alpha_partialize(&seq),
            Oracle::Granularity => {
                let Some(bucket) = self.bucket.filter(|b| !b.is_zero()) else {
                    bail!("--oracle granularity needs a positive --bucket");
                };
                granularity_partialize(&seq, bucket)
            }
        };
        Ok((log, Some(traces)))
    }
}

fn histogram(decided_by: &[u64; 4]) -> String {
    DecidedBy::ALL
        .iter()
        .map(|d| format!("{d}={}", decided_by[d.index()]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn run_discover(args: &DiscoverArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.tau) {
        return Err(Failure::Input(anyhow::anyhow!("--tau must lie in [0, 1]")));
    }
    let (log, _) = args.input.load().input()?;
    let cfg = DiscoveryConfig {
        tau: args.tau,
        max_depth: args.max_depth,
        transition_order: match args.order {
            Order::Frequency => OrderMode::FrequencyDesc,
            Order::Lexicographic => OrderMode::Lexicographic,
        },
        prune: !args.no_prune,
    };
    let start = Instant::now();
    let (net, stats) = discover(&log, &cfg).context("discovery failed").input()?;
    let elapsed = start.elapsed();

    if let Some(path) = &args.out {
        write_output(path, &export_net(&net, NetFormat::Pnml))?;
    }
    if let Some(path) = &args.dot {
        write_output(path, &export_net(&net, NetFormat::Dot))?;
    }
    let report = replay_statistics(&net, &log).context("replay failed")?;
    if let Some(path) = &args.report {
        let mut json = serde_json::to_string_pretty(&report).context("cannot encode report")?;
        json.push('\n');
        write_output(path, json.as_bytes())?;
    }

    println!(
        "log: {} cases, {} variants, {} activities",
        log.case_count(),
        log.variants.len(),
        log.alphabet.len()
    );
    println!(
        "candidates: {} evaluated, {} pruned",
        stats.candidates_evaluated, stats.candidates_pruned
    );
    println!("decided_by: {}", histogram(&stats.decided_by));
    println!("places: {} fitting at tau {}", net.places().len(), cfg.tau);
    println!("net_fitting_fraction: {}", report.net_fitting_fraction);
    if !report.disconnected_transitions.is_empty() {
        println!(
            "disconnected transitions: {}",
            report.disconnected_transitions.join(", ")
        );
    }
    println!("wall time: {:.3?}", elapsed);
    Ok(())
}

fn run_convert(args: &ConvertArgs) -> Result<(), Failure> {
    if args.input.format() != LogFormat::Csv {
        return Err(Failure::Input(anyhow::anyhow!("convert expects a CSV log")));
    }
    let (log, traces) = args.input.load().input()?;
    let json = write_lpo_json(&log);
    match &args.out {
        Some(path) => {
            write_output(path, json.as_bytes())?;
            println!(
                "{} cases, {} trace variants, {} lpo variants",
                log.case_count(),
                traces.unwrap_or_default(),
                log.variants.len()
            );
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn run_replay(args: &ReplayArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.net)
        .with_context(|| format!("cannot read {}", args.net.display()))
        .input()?;
    let net = parse_pnml(&text)
        .with_context(|| format!("cannot parse {}", args.net.display()))
        .input()?;
    let (log, _) = args.input.load().input()?;
    let report = replay_statistics(&net, &log)
        .map_err(anyhow::Error::from)
        .input()?;
    let mut json = serde_json::to_string_pretty(&report).context("cannot encode report")?;
    json.push('\n');
    match &args.out {
        Some(path) => {
            write_output(path, json.as_bytes())?;
            println!("net_fitting_fraction: {}", report.net_fitting_fraction);
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Discover(args) => run_discover(args),
        Command::Convert(args) => run_convert(args),
        Command::Replay(args) => run_replay(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
