//! `drivesim`: run FOC/DTC induction motor scenarios and compare them.
//!
//! Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use drivesim_core::config::KEYS;
use drivesim_core::harness::{replication_configs, REFERENCE_LOAD, REPLICATION_NAMES};
use drivesim_core::output::{
    comparison_text, comparison_to_kv, export_csv, read_csv, read_summary, replication_reports,
    summary_from_trace, summary_text, summary_to_kv, write_file,
};
use drivesim_core::{
    compare, load_config, replicate_paper, run_scenario, ControllerKind, Error, LoadProfile, RunSummary,
    ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "drivesim", version, about = "Induction motor FOC/DTC drive simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace, effective config and summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        controller: Option<ControllerKind>,
        /// Load torque (N·m) applied as a step at half the run duration; 0 removes the load.
        #[arg(long)]
        load_torque: Option<f64>,
        /// Speed setpoint (rpm).
        #[arg(long)]
        speed: Option<f64>,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Compare a FOC and a DTC run given as trace CSVs or summary files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Also write the comparison as key-value text.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run DTC and FOC unloaded and with a 10 N·m step, and report both comparisons.
    ReplicatePaper {
        #[arg(long)]
        out_dir: PathBuf,
        /// Base config; the controller and load profile are overridden per run.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            controller,
            load_torque,
            speed,
            out,
        } => simulate(&config, controller, load_torque, speed, &out),
        Command::Compare { a, b, out } => {
            let a = load_summary(&a)?;
            let b = load_summary(&b)?;
            let report = compare(&a, &b)?;
            print!("{}", comparison_text(&report));
            if let Some(out) = out {
                write_file(&out, &comparison_to_kv(&report))?;
            }
            Ok(())
        }
        Command::ReplicatePaper { out_dir, config } => replicate(&out_dir, config.as_deref()),
    }
}

fn simulate(
    path: &Path,
    controller: Option<ControllerKind>,
    load_torque: Option<f64>,
    speed: Option<f64>,
    out: &Path,
) -> Result<()> {
    let loaded = load_config(path)?;
    let mut config = loaded.config;
    let mut defaulted = loaded.defaulted;
    if let Some(kind) = controller {
        config.controller = kind;
        defaulted.retain(|k| *k != "controller");
    }
    if let Some(torque) = load_torque {
        config.load_profile = if torque == 0.0 {
            LoadProfile::none()
        } else {
            LoadProfile::step(config.duration / 2.0, torque)
        };
        defaulted.retain(|k| *k != "load_profile");
    }
    if let Some(rpm) = speed {
        config.speed_ref = rpm;
        defaulted.retain(|k| *k != "speed_ref");
    }
    config.validate()?;

    let run = run_scenario(&config)?;
    export_csv(&run.trace, out)?;
    write_file(&out.with_extension("config"), &effective_config(&config, &defaulted))?;
    write_file(&out.with_extension("summary"), &summary_to_kv(&run.summary, &defaulted))?;
    print!("{}", summary_text(&run.summary, &defaulted));
    Ok(())
}

fn effective_config(config: &ScenarioConfig, defaulted: &[&str]) -> String {
    let mut text = String::from("# effective scenario config\n");
    if !defaulted.is_empty() {
        text.push_str(&format!("# keys left at defaults: {}\n", defaulted.join(", ")));
    }
    text.push_str(&config.to_config_string());
    text
}

/// A summary file, or a trace CSV with a sibling `.summary` or `.config`.
fn load_summary(path: &Path) -> Result<RunSummary> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return Ok(read_summary(path)?);
    }
    let summary = path.with_extension("summary");
    if summary.exists() {
        return Ok(read_summary(&summary)?);
    }
    let config_path = path.with_extension("config");
    let config = load_config(&config_path)
        .with_context(|| format!("a trace CSV needs its run config at {}", config_path.display()))?;
    let trace = read_csv(path)?;
    Ok(summary_from_trace(&config.config, &trace)?)
}

fn replicate(out_dir: &Path, base: Option<&Path>) -> Result<()> {
    let (base, mut defaulted) = match base {
        Some(path) => {
            let loaded = load_config(path)?;
            (loaded.config, loaded.defaulted)
        }
        None => (ScenarioConfig::default(), KEYS.to_vec()),
    };
    defaulted.retain(|k| !["controller", "load_profile"].contains(k));
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;

    let rep = replicate_paper(&base)?;
    for ((name, run), config) in REPLICATION_NAMES.iter().zip(&rep.runs).zip(replication_configs(&base)) {
        let csv = out_dir.join(format!("{name}.csv"));
        export_csv(&run.trace, &csv)?;
        write_file(&csv.with_extension("config"), &effective_config(&config, &defaulted))?;
        write_file(&csv.with_extension("summary"), &summary_to_kv(&run.summary, &defaulted))?;
    }
    let (text, kv) = replication_reports(&rep, &defaulted);
    write_file(&out_dir.join("report.txt"), &text)?;
    write_file(&out_dir.join("report.kv"), &kv)?;
    println!(
        "load step: {} N·m at {} s\n",
        REFERENCE_LOAD.1, REFERENCE_LOAD.0
    );
    print!("{text}");
    Ok(())
}
