//! The `qiris` command line.
//!
//! Exit codes: 0 on success, 1 when execution fails, 2 for usage and
//! input errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use qiris_core::{canonical_wire_cut, lower_to_circuit, parse_qir, EstimateMode};

use crate::experiment::{validate_run, ExperimentConfig};
use crate::formats::{
    format_std, parse_decomposition, parse_graph, payload_summary, probability_lines, register_builtin_kernels,
    validation_csv,
};
use crate::runtime::{run_circuit, ExecMode, Payload, Policy, RuntimeBuilder, RuntimeError, TaskState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qiris", version, about = "Run QIR programs, task graphs and wire-cut experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a QIR program and print its measurement histogram.
    Exec {
        file: PathBuf,
        #[arg(short = 'a', long, value_enum, default_value_t = Accelerator::Statevector)]
        accelerator: Accelerator,
        #[arg(short = 's', long, default_value_t = 1024)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the exact outcome probabilities instead of sampling.
        #[arg(long)]
        probs: bool,
    },
    /// Run a task graph described by a JSON file.
    Graph {
        file: PathBuf,
        /// Overrides the file's policy.
        #[arg(long)]
        policy: Option<Policy>,
        /// Overrides the file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate <ZZZZ> of a four-qubit GHZ state through two wire cuts.
    GhzQpd {
        #[arg(long, default_value_t = 1024)]
        shots: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        reps: u64,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        devices: u64,
        #[arg(long, value_enum, default_value_t = Mode::Sampled)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = Policy::Default)]
        policy: Policy,
        /// Write per-repetition values as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Build three circuits per instance instead of sharing fragments.
        #[arg(long)]
        no_dedup: bool,
        /// Decomposition table JSON (defaults to the built-in table).
        #[arg(long)]
        decomposition: Option<PathBuf>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=2))]
        cuts: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Accelerator {
    Statevector,
    Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

/// Runs the command line with `args` (including the program name) and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Exec { file, accelerator, shots, seed, probs } => {
            exec(&file, accelerator, shots, seed, probs, out, err)
        }
        Command::Graph { file, policy, seed } => graph(&file, policy, seed, out),
        Command::GhzQpd { shots, reps, devices, mode, seed, policy, csv, no_dedup, decomposition, cuts } => {
            let cfg = ExperimentConfig {
                shots,
                mode: match mode {
                    Mode::Exact => EstimateMode::Exact,
                    Mode::Sampled => EstimateMode::Sampled,
                },
                seed,
                dedup: !no_dedup,
                n_cuts: cuts as usize,
                policy,
            };
            ghz_qpd(&cfg, reps as usize, devices as usize, decomposition.as_deref(), csv.as_deref(), out)
        }
    };
    match result {
        Ok(code) => code,
        Err((code, message)) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

type CmdResult = Result<i32, (i32, String)>;

fn usage(message: impl std::fmt::Display) -> (i32, String) {
    (EXIT_USAGE, message.to_string())
}

fn read(path: &Path) -> Result<String, (i32, String)> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn exec(
    file: &Path,
    accelerator: Accelerator,
    shots: u64,
    seed: u64,
    probs: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let text = read(file)?;
    let program = parse_qir(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let lowered = lower_to_circuit(&program).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let order = Some(lowered.output_order.as_slice());
    let failed = |e: String| (EXIT_FAILURE, e);

    if probs || shots == 0 {
        if !probs {
            let _ = writeln!(err, "note: 0 shots requested, nothing sampled (use --probs for the exact distribution)");
            let _ = writeln!(out, "shots 0");
            return Ok(EXIT_OK);
        }
        return match run_circuit(&lowered.circuit, order, 0, seed, ExecMode::Exact).map_err(failed)? {
            Payload::Distribution(d) => {
                let _ = write!(out, "{}", probability_lines(&d));
                Ok(EXIT_OK)
            }
            _ => Err(failed("exact simulation returned no distribution".into())),
        };
    }

    let mode = match accelerator {
        Accelerator::Statevector => ExecMode::Sampled,
        Accelerator::Trajectory => ExecMode::Trajectory,
    };
    match run_circuit(&lowered.circuit, order, shots, seed, mode).map_err(failed)? {
        Payload::Histogram(h) => {
            let _ = write!(out, "{h}");
            Ok(EXIT_OK)
        }
        _ => Err(failed("simulation returned no histogram".into())),
    }
}

fn graph(file: &Path, policy: Option<Policy>, seed: Option<u64>, out: &mut dyn Write) -> CmdResult {
    let text = read(file)?;
    let base = file.parent().unwrap_or(Path::new("."));
    let mut cfg = parse_graph(&text, base).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    if let Some(seed) = seed {
        cfg.graph.set_seed(seed);
    }
    let policy = policy.unwrap_or(cfg.policy);

    let mut builder = RuntimeBuilder::with_devices(cfg.qpu_devices, cfg.host_devices);
    register_builtin_kernels(&mut builder).map_err(|e| (EXIT_FAILURE, e.to_string()))?;
    let rt = builder.build();
    let handle = rt.submit(cfg.graph, policy, true).map_err(|e| match e {
        RuntimeError::Cycle(_) => usage(e),
        e => (EXIT_FAILURE, e.to_string()),
    })?;
    let results = handle.wait();

    let tasks = handle.graph().tasks();
    let mut any_failed = false;
    for (id, task) in tasks.iter().enumerate() {
        let r = &results[&id];
        let device = r.device.map_or_else(|| "-".to_string(), |d| d.to_string());
        let _ = writeln!(out, "{} {device} {}", task.name, r.state.name());
        any_failed |= r.state == TaskState::Failed;
    }
    for (id, task) in tasks.iter().enumerate() {
        let r = &results[&id];
        if let Some(p) = &r.payload {
            let _ = writeln!(out, "payload {} {}", task.name, payload_summary(p));
        }
        if let Some(e) = &r.error {
            let _ = writeln!(out, "error {} {e}", task.name);
        }
    }
    Ok(if any_failed { EXIT_FAILURE } else { EXIT_OK })
}

fn ghz_qpd(
    cfg: &ExperimentConfig,
    reps: usize,
    devices: usize,
    decomposition: Option<&Path>,
    csv: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let decomp = match decomposition {
        Some(path) => parse_decomposition(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => canonical_wire_cut(),
    };
    let est = validate_run(&decomp, cfg, reps, devices).map_err(|e| (EXIT_FAILURE, e.to_string()))?;
    if let Some(path) = csv {
        fs::write(path, validation_csv(&est.values, est.mean, est.std))
            .map_err(|e| (EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))?;
    }
    let _ = writeln!(out, "estimate {:.9}", est.mean);
    let _ = writeln!(out, "std {}", format_std(est.std));
    Ok(EXIT_OK)
}
