//! Command-line front end for the mixture-ucb simulator.
//!
//! One binary, five subcommands: `run` executes an experiment config and
//! exports trajectories, `oracle` solves for the optimal mixture,
//! `compare` prints the aggregate loss table, `check-bound` validates the
//! concentration bounds, and `validate-config` checks a config without
//! running anything.
//!
//! Config handling is file-first: every invocation names a TOML config
//! and may patch individual keys with repeated `--set key=value` flags.
//! Overrides apply before validation, and a bad override fails before any
//! computation starts. Progress goes to stderr; stdout stays
//! machine-parseable. Exit codes: 0 success, 1 config error, 2 runtime
//! error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixture_ucb::arms::read_pool;
use mixture_ucb::harness::{
    build_loss_spec, compute_oracle, export, run_experiment, validate_concentration,
};
use mixture_ucb::score::MetricKind;
use mixture_ucb::{bandit, ExperimentConfig, SourceSpec};

/// Environment variable naming the output directory; `--out` wins over
/// it, and it wins over the config's `run.output_dir`.
const OUT_ENV: &str = "MIXTURE_UCB_OUT";

#[derive(Parser)]
#[command(
    name = "mixture-ucb",
    version,
    about = "Online mixture selection under quadratic kernel losses",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (policy, seed) pair and export the results.
    Run(Common),
    /// Solve for the optimal mixture and print it.
    Oracle(Common),
    /// Run all policies and print the aggregate loss table.
    Compare(Common),
    /// Validate the concentration bounds and print the regret envelope.
    CheckBound(Common),
    /// Check the config for errors without running anything.
    ValidateConfig(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Run(c)
            | Command::Oracle(c)
            | Command::Compare(c)
            | Command::CheckBound(c)
            | Command::ValidateConfig(c) => c,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Path to the experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override one config key, e.g. --set run.rounds=500. Repeatable;
    /// the key must already exist in the config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; wins over MIXTURE_UCB_OUT and the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cap on concurrent runs; defaults to the number of cores.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Suppress progress output on stderr.
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(command: &Command) -> Result<(), Failure> {
    let common = command.common();
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Failure::config("--jobs must be at least 1"));
        }
        // Ignore the error from configuring twice; only tests hit it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let config = load_config(common)?;
    match command {
        Command::ValidateConfig(_) => {
            println!("ok");
            Ok(())
        }
        Command::Run(common) => cmd_run(common, config),
        Command::Oracle(common) => cmd_oracle(common, config),
        Command::Compare(common) => cmd_compare(common, config),
        Command::CheckBound(common) => cmd_check_bound(common, config),
    }
}

/// Loads, patches, and validates the config. Every failure here is a
/// config error (exit 1) and happens before any computation.
fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&common.config).map_err(|e| {
        Failure::config(format!("cannot read {}: {e}", common.config.display()))
    })?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Failure::config(format!("{}: {e}", common.config.display())))?;
    let mut root = toml::Value::Table(table);
    for patch in &common.set {
        apply_set(&mut root, patch)
            .map_err(|e| Failure::config(format!("--set {patch}: {e}")))?;
    }
    let config: ExperimentConfig = root
        .try_into()
        .map_err(|e| Failure::config(format!("{}: {e}", common.config.display())))?;
    config.validate().map_err(Failure::config)?;
    Ok(config)
}

/// Checks that every file the config references exists and parses.
/// Missing data files are config errors, caught before the run starts.
fn preflight(config: &ExperimentConfig) -> Result<(), Failure> {
    build_loss_spec(&config.loss).map_err(Failure::config)?;
    for arm in &config.arms {
        if let SourceSpec::FilePool { path, .. } = arm {
            read_pool::<f64>(path).map_err(Failure::config)?;
        }
    }
    Ok(())
}

fn output_dir(common: &Common, config: &ExperimentConfig) -> PathBuf {
    if let Some(out) = &common.out {
        return out.clone();
    }
    if let Some(out) = std::env::var_os(OUT_ENV) {
        if !out.is_empty() {
            return PathBuf::from(out);
        }
    }
    config.run.output_dir.clone()
}

fn progress(common: &Common, message: String) {
    if !common.quiet {
        eprintln!("{message}");
    }
}

fn cmd_run(common: &Common, mut config: ExperimentConfig) -> Result<(), Failure> {
    preflight(&config)?;
    config.run.output_dir = output_dir(common, &config);
    progress(
        common,
        format!(
            "running {} policies x {} seeds at {} rounds",
            config.policies.len(),
            config.run.num_seeds,
            config.run.rounds
        ),
    );
    let result = run_experiment(&config).map_err(Failure::runtime)?;
    let dir = result.config.run.output_dir.clone();
    let written = export(&result, &dir).map_err(Failure::runtime)?;
    progress(
        common,
        format!("exported {} files to {}", written.len(), dir.display()),
    );
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_oracle(common: &Common, config: ExperimentConfig) -> Result<(), Failure> {
    preflight(&config)?;
    progress(
        common,
        format!(
            "solving the oracle mixture over {} arms at {} samples per arm",
            config.arms.len(),
            config.run.oracle_samples
        ),
    );
    let oracle = compute_oracle(&config).map_err(Failure::runtime)?;
    let alpha: Vec<String> = oracle.weights.iter().map(|w| w.to_string()).collect();
    println!("alpha {}", alpha.join(" "));
    println!("loss {}", oracle.loss);
    if let Some(score) = oracle.score {
        let label = match config.loss.metric {
            MetricKind::Rke => "mode_count",
            _ => "score",
        };
        println!("{label} {score}");
    }
    Ok(())
}

fn cmd_compare(common: &Common, config: ExperimentConfig) -> Result<(), Failure> {
    preflight(&config)?;
    progress(
        common,
        format!(
            "comparing {} policies over {} seeds",
            config.policies.len(),
            config.run.num_seeds
        ),
    );
    let result = run_experiment(&config).map_err(Failure::runtime)?;
    progress(common, format!("oracle loss {}", result.oracle.loss));
    println!("policy,t,mean_loss,sd_loss");
    for curve in &result.aggregates {
        for (k, &round) in curve.rounds.iter().enumerate() {
            println!(
                "{},{},{},{}",
                curve.policy, round, curve.mean_loss[k], curve.sd_loss[k]
            );
        }
    }
    Ok(())
}

fn cmd_check_bound(common: &Common, config: ExperimentConfig) -> Result<(), Failure> {
    preflight(&config)?;
    let spec = build_loss_spec(&config.loss).map_err(Failure::config)?;
    let params = config.confidence_params(&spec).map_err(Failure::config)?;
    progress(
        common,
        format!(
            "validating bounds over {} replications",
            config
                .validation
                .as_ref()
                .map(|v| v.replications)
                .unwrap_or(0)
        ),
    );
    let report = validate_concentration(&config).map_err(Failure::runtime)?;
    println!("truth {}", report.truth);
    for row in &report.rows {
        println!(
            "fixed {} {} {} {}",
            row.delta, row.radius, row.upper_rate, row.lower_rate
        );
    }
    for row in &report.sweep {
        println!("sweep {} {} {}", row.delta, row.rate, row.grid_points);
    }
    let envelope = bandit::regret_envelope(
        params.delta_l,
        params.beta,
        config.arms.len(),
        config.run.rounds,
    );
    println!("envelope {} {}", config.run.rounds, envelope);
    Ok(())
}

/// Applies one `key=value` patch to the parsed TOML document. Keys use
/// dotted paths; numeric segments index arrays. The addressed key must
/// already exist.
fn apply_set(root: &mut toml::Value, patch: &str) -> Result<(), String> {
    let (key, raw) = patch
        .split_once('=')
        .ok_or_else(|| "expected KEY=VALUE".to_string())?;
    if key.is_empty() {
        return Err("empty key".to_string());
    }
    let mut node = root;
    for segment in key.split('.') {
        node = descend(node, segment)?;
    }
    *node = parse_value(raw);
    Ok(())
}

fn descend<'a>(node: &'a mut toml::Value, segment: &str) -> Result<&'a mut toml::Value, String> {
    match node {
        toml::Value::Table(table) => table
            .get_mut(segment)
            .ok_or_else(|| format!("no key {segment:?} in the config")),
        toml::Value::Array(items) => {
            let len = items.len();
            let index: usize = segment
                .parse()
                .map_err(|_| format!("expected an array index, got {segment:?}"))?;
            items
                .get_mut(index)
                .ok_or_else(|| format!("index {index} is out of range for {len} entries"))
        }
        _ => Err(format!("cannot descend into a scalar at {segment:?}")),
    }
}

/// Parses the value as TOML when possible and falls back to a string, so
/// `--set run.rounds=500` patches an integer while
/// `--set run.output_dir=results` patches a string without quoting.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut table| table.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
