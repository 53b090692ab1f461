use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ksbound::report::render;
use ksbound::timestep::MonitorLevel;
use ksbound::verify::{run_suite, Suite};
use ksbound::{run_sweep, run_with, RunOptions, RunReport, Scenario, SweepConfig, TerminationStatus};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_BLOWUP: u8 = 2;
const EXIT_STEP_FAILURE: u8 = 3;
const EXIT_THRESHOLD: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "ksbound", version, about = "Quasilinear Keller-Segel runs, sweeps and verification suites")]
struct Cli {
    /// Also record per-step residuals in residuals.csv.
    #[arg(long, global = true)]
    dense: bool,
    /// Reserved; all initial profiles are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a single scenario.
    Run {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        output: PathBuf,
    },
    /// Run a (p, M) grid around a base scenario.
    Sweep {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        output: PathBuf,
        #[arg(short = 'j', long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Run a built-in verification suite: mms, identities, steady or compare.
    Verify { suite: Suite },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Failures that map onto a specific exit code.
enum Failure {
    Config(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    let outcome = match &cli.command {
        Command::Run { config, output } => cmd_run(config, output, cli.dense, cli.seed),
        Command::Sweep {
            config,
            output,
            workers,
        } => cmd_sweep(config, output, *workers),
        Command::Verify { suite } => cmd_verify(*suite),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_STEP_FAILURE)
        }
    }
}

fn read_config<T>(path: &Path, parse: impl Fn(&str) -> ksbound::Result<T>) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure::Config(format!("{}: {}", path.display(), anchor(&text, &e))))
}

/// Prefixes semantic errors with the line of the first JSON key they name.
/// Parse errors already carry a position.
fn anchor(text: &str, err: &ksbound::Error) -> String {
    let msg = err.to_string();
    if matches!(err, ksbound::Error::Json(_)) {
        return msg;
    }
    let keys = msg
        .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .filter(|w| w.len() > 1);
    for key in keys {
        let quoted = format!("\"{key}\"");
        if let Some(line) = text.lines().position(|l| l.contains(&quoted)) {
            return format!("line {}: {msg}", line + 1);
        }
    }
    msg
}

fn status_code(status: &TerminationStatus) -> u8 {
    match status {
        TerminationStatus::Completed => EXIT_OK,
        TerminationStatus::BlowupSuspected { .. } => EXIT_BLOWUP,
        TerminationStatus::StepFailure { .. } => EXIT_STEP_FAILURE,
    }
}

fn cmd_run(config: &Path, output: &Path, dense: bool, seed: Option<u64>) -> Result<u8, Failure> {
    let scenario = read_config(config, Scenario::from_json)?;
    let options = RunOptions {
        monitor: if dense { MonitorLevel::Steps } else { MonitorLevel::Samples },
        ..RunOptions::default()
    };
    let report = run_with(&scenario, &options).map_err(|e| Failure::Config(e.to_string()))?;
    write_run(output, &report, dense, seed)?;
    println!("{}", report.status);
    Ok(status_code(&report.status))
}

fn write_run(dir: &Path, report: &RunReport, dense: bool, seed: Option<u64>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(dir, "samples.csv", &report.samples_csv())?;
    if dense {
        write(dir, "residuals.csv", &report.steps_csv())?;
    }
    write(dir, "report.txt", &report_text(report, seed))?;
    write(dir, "plot.py", PLOT_SCRIPT)?;
    write(dir, "scenario.json", &report.scenario.to_json())?;
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn report_text(report: &RunReport, seed: Option<u64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status: {}", report.status);
    match &report.status {
        TerminationStatus::BlowupSuspected { t_stop, sup_u } => {
            let _ = writeln!(out, "blow-up time: {t_stop} (sup u = {sup_u:e})");
        }
        TerminationStatus::StepFailure { t_stop, reason } => {
            let _ = writeln!(out, "stopped at t = {t_stop}: {reason}");
        }
        TerminationStatus::Completed => {}
    }
    let _ = writeln!(
        out,
        "steps: {} accepted, {} rejected",
        report.steps_accepted, report.steps_rejected
    );
    let _ = writeln!(out, "max relative mass drift: {:e}", report.max_mass_drift);
    let _ = writeln!(out, "min u seen: {:e}", report.min_u_seen);
    if let Some(seed) = seed {
        let _ = writeln!(out, "seed: {seed} (unused)");
    }
    out.push_str(&render(&report.property_summary));
    let _ = writeln!(out, "wall time: {:.3} s", report.wall_time);
    out
}

fn cmd_sweep(config: &Path, output: &Path, workers: usize) -> Result<u8, Failure> {
    let sweep = read_config(config, SweepConfig::from_json)?;
    let report = run_sweep(&sweep, workers).map_err(|e| Failure::Config(e.to_string()))?;
    fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    write(output, "phase.csv", &report.phase_csv())?;
    let grid = report.summary_grid();
    write(output, "summary.txt", &grid)?;
    for (row, run) in report.rows.iter().zip(&report.reports) {
        let dir = output.join(format!("p{}_M{}", row.p, row.mass));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir, "samples.csv", &run.samples_csv())?;
        write(&dir, "report.txt", &report_text(run, None))?;
    }
    print!("{grid}");
    Ok(EXIT_OK)
}

fn cmd_verify(suite: Suite) -> Result<u8, Failure> {
    let outcome = run_suite(suite).context("running suite")?;
    print!("{}", outcome.text());
    if outcome.passed() {
        Ok(EXIT_OK)
    } else {
        for c in outcome.failures() {
            eprintln!("threshold missed: {}", c.metric);
        }
        Ok(EXIT_THRESHOLD)
    }
}

const PLOT_SCRIPT: &str = r#"import sys
import pandas as pd
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = sys.argv[1] if len(sys.argv) > 1 else "."
df = pd.read_csv(f"{here}/samples.csv")
fig, axes = plt.subplots(4, 1, sharex=True, figsize=(7, 10))
for ax, col, log in zip(axes, ["sup_u", "L", "F", "identity_residual"], [True, False, False, False]):
    y = df[col].abs() if col == "identity_residual" else df[col]
    ax.plot(df["t"], y)
    ax.set_ylabel(col)
    if log or col == "identity_residual":
        ax.set_yscale("log")
axes[-1].set_xlabel("t")
fig.tight_layout()
fig.savefig(f"{here}/trajectories.png", dpi=120)
"#;
