//! Command-line front end for the mixshor experiments.
//!
//! Exit codes: 0 on success, 2 when arguments fail validation (nothing is
//! computed), 1 on runtime failure.

pub mod csv;
pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use mixshor_core::circuit::{reference_distribution, InitialStateKind};
use mixshor_core::experiments::{
    ensemble_instances, ensemble_profile, mix_sweep, monte_carlo_sweep, random_baseline, run_tree,
    tree_profile, StageReport, TreeOptions,
};
use mixshor_core::noise::NoiseKind;
use mixshor_core::{build_instance, ShorInstance};

use crate::csv::{format_real, write_csv, Schema, Table};
use crate::plot::{line_chart, Series};

pub const THREADS_VAR: &str = "MIXSHOR_THREADS";
/// Tree and oracle distributions must agree to this.
pub const ORACLE_TOL: f64 = 1e-9;
const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "mixshor",
    version,
    about = "Entanglement and mixing in single-control-qubit Shor period finding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stage-by-stage entanglement and mixedness from the exact branch tree.
    Profile(ProfileArgs),
    /// Profile averaged over every (N, a) with N a semiprime of the given size.
    Ensemble(EnsembleArgs),
    /// Monte Carlo success rate against noise probability.
    Noise(NoiseArgs),
    /// Exact success probability and entanglement against control mixing.
    Mix(MixArgs),
    /// Success rate of uniformly random outcomes.
    Baseline(InstanceArgs),
    /// Compares the tree leaf distribution with the closed-form reference.
    OracleCheck(InstanceArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long = "n")]
    modulus: u64,
    #[arg(long = "a")]
    base: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart to this path.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long = "n")]
    modulus: u64,
    #[arg(long = "a")]
    base: u64,
    #[arg(long, default_value = "pure")]
    kind: String,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    #[arg(long)]
    bits: u32,
    #[arg(long, default_value = "mixed-n")]
    kind: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[arg(long = "n")]
    modulus: u64,
    #[arg(long = "a")]
    base: u64,
    #[arg(long, default_value = "pure")]
    kind: String,
    #[arg(long)]
    noise: String,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long)]
    probs: String,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    exclude_control: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct MixArgs {
    #[arg(long = "n")]
    modulus: u64,
    #[arg(long = "a")]
    base: u64,
    #[arg(long, default_value = "pure")]
    kind: String,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long)]
    epsilons: String,
    #[command(flatten)]
    output: OutputArgs,
}

/// Parses `start:stop:step` (inclusive of `stop` within 1e-12) or `x,y,...`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let number = |s: &str| -> Result<f64, CliError> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| invalid(format!("not a number: '{s}'")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(invalid(format!("not a finite number: '{s}'")))
        }
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(invalid(format!("range '{text}' is not start:stop:step")));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step <= 0.0 {
            return Err(invalid("range step must be positive"));
        }
        if stop < start - RANGE_SLACK {
            return Err(invalid("range stop is below its start"));
        }
        let count = ((stop - start + RANGE_SLACK) / step).floor() as usize + 1;
        Ok((0..count)
            .map(|k| {
                let v = start + k as f64 * step;
                if (v - stop).abs() <= RANGE_SLACK {
                    stop
                } else {
                    v
                }
            })
            .collect())
    } else {
        let values: Vec<f64> = text.split(',').map(number).collect::<Result<_, _>>()?;
        if values.is_empty() {
            return Err(invalid("empty value list"));
        }
        Ok(values)
    }
}

fn check_within(values: &[f64], lo: f64, hi: f64, what: &str) -> Result<(), CliError> {
    match values.iter().find(|v| !(lo..=hi).contains(*v)) {
        Some(v) => Err(invalid(format!("{what} {v} outside [{lo}, {hi}]"))),
        None => Ok(()),
    }
}

fn instance(modulus: u64, base: u64) -> Result<ShorInstance, CliError> {
    build_instance(modulus, base).map_err(invalid)
}

fn kind(text: &str) -> Result<InitialStateKind, CliError> {
    text.parse().map_err(invalid)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        invalid(format!(
            "{THREADS_VAR} must be a positive integer, got '{raw}'"
        ))
    })?;
    // the global pool can only be set once per process
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn emit(
    table: &Table,
    output: &OutputArgs,
    chart: impl FnOnce() -> String,
) -> Result<(), CliError> {
    write_csv(table, output.out.as_deref())
        .map_err(|e| runtime(format!("cannot write CSV: {e}")))?;
    if let Some(path) = &output.plot {
        fs::write(path, chart()).map_err(|e| runtime(format!("cannot write plot: {e}")))?;
    }
    Ok(())
}

fn stage_chart(title: &str, reports: &[StageReport]) -> String {
    let series = |label: &str, f: fn(&StageReport) -> f64| Series {
        label: label.to_string(),
        points: reports
            .iter()
            .enumerate()
            .map(|(k, r)| (k as f64 / 2.0, f(r)))
            .collect(),
    };
    line_chart(
        title,
        "stage",
        &[
            series("avg log-negativity", |r| r.avg_logneg),
            series("mixedness", |r| r.mixedness),
        ],
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Profile(args) => {
            let inst = instance(args.modulus, args.base)?;
            let kind = kind(&args.kind)?;
            check_within(&[args.epsilon], 0.0, 0.5, "epsilon")?;
            configure_threads()?;
            let tree = tree_profile(&inst, kind, args.epsilon, None).map_err(runtime)?;
            let title = format!("N={} a={} {kind}", inst.modulus(), inst.base());
            emit(&Table::stages(&tree.reports), &args.output, || {
                stage_chart(&title, &tree.reports)
            })
        }
        Command::Ensemble(args) => {
            let kind = kind(&args.kind)?;
            ensemble_instances(args.bits).map_err(invalid)?;
            configure_threads()?;
            let reports = ensemble_profile(args.bits, kind).map_err(runtime)?;
            let title = format!("{}-bit ensemble {kind}", args.bits);
            emit(&Table::stages(&reports), &args.output, || {
                stage_chart(&title, &reports)
            })
        }
        Command::Noise(args) => {
            let inst = instance(args.modulus, args.base)?;
            let kind = kind(&args.kind)?;
            let noise: NoiseKind = args.noise.parse().map_err(invalid)?;
            let probs = parse_grid(&args.probs)?;
            check_within(&probs, 0.0, 1.0, "noise probability")?;
            if args.runs == 0 {
                return Err(invalid("runs must be at least 1"));
            }
            configure_threads()?;
            let rows = monte_carlo_sweep(
                &inst,
                kind,
                noise,
                &probs,
                args.runs,
                args.exclude_control,
                args.seed,
            )
            .map_err(runtime)?;
            let title = format!(
                "N={} a={} {kind}, {noise} noise",
                inst.modulus(),
                inst.base()
            );
            emit(&Table::noise(&rows), &args.output, || {
                line_chart(
                    &title,
                    "noise probability",
                    &[Series {
                        label: "success rate".into(),
                        points: rows.iter().map(|r| (r.prob, r.rate())).collect(),
                    }],
                )
            })
        }
        Command::Mix(args) => {
            let inst = instance(args.modulus, args.base)?;
            let kind = kind(&args.kind)?;
            let epsilons = parse_grid(&args.epsilons)?;
            check_within(&epsilons, 0.0, 0.5, "epsilon")?;
            configure_threads()?;
            let rows = mix_sweep(&inst, kind, &epsilons).map_err(runtime)?;
            let title = format!(
                "N={} a={} {kind}, control mixing",
                inst.modulus(),
                inst.base()
            );
            emit(&Table::mix(&rows), &args.output, || {
                line_chart(
                    &title,
                    "epsilon",
                    &[
                        Series {
                            label: "success probability".into(),
                            points: rows.iter().map(|r| (r.epsilon, r.success_prob)).collect(),
                        },
                        Series {
                            label: "avg entanglement".into(),
                            points: rows
                                .iter()
                                .map(|r| (r.epsilon, r.avg_entanglement))
                                .collect(),
                        },
                    ],
                )
            })
        }
        Command::Baseline(args) => {
            let inst = instance(args.modulus, args.base)?;
            let mut table = Table::new(Schema::Baseline);
            table.push(vec![
                inst.modulus().to_string(),
                inst.base().to_string(),
                inst.order().to_string(),
                format_real(random_baseline(&inst)),
            ]);
            write_csv(&table, args.out.as_deref()).map_err(runtime)
        }
        Command::OracleCheck(args) => {
            let inst = instance(args.modulus, args.base)?;
            configure_threads()?;
            let mut table = Table::new(Schema::OracleCheck);
            let mut worst = 0.0f64;
            for kind in [InitialStateKind::Pure, InitialStateKind::MixedN] {
                let tree = run_tree(&inst, kind, 0.0, TreeOptions::distribution_only())
                    .map_err(runtime)?;
                let reference = reference_distribution(&inst, kind);
                let dev = tree
                    .leaf_distribution
                    .iter()
                    .zip(&reference)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(dev);
                table.push(vec![kind.to_string(), format_real(dev)]);
            }
            write_csv(&table, args.out.as_deref()).map_err(runtime)?;
            if worst < ORACLE_TOL {
                Ok(())
            } else {
                Err(runtime(format!(
                    "tree and reference distributions differ by {worst:e}"
                )))
            }
        }
    }
}

/// Runs one command line and returns the process exit code.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
