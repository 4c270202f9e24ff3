//! Command-line interface for the flotation column toolkit.
//!
//! Subcommands: `simulate` (run a scenario to CSV), `steady` (construct the
//! desired steady state), `chart` (sweep an operating chart), `check`
//! (feasibility report for one operating point) and `params` (derive the
//! closure constants from material data).
//!
//! Exit codes: 0 success, 1 input validation failure, 2 numerical failure
//! (CFL violation, infeasibility). Errors go to stderr as a JSON object.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use flotcol::chart::{export_chart, ChartSpec};
use flotcol::export::{outlets_csv, profile_csv, profile_svg, series_csv};
use flotcol::{
    check_conditions, desired_steady_state, evaluate_chart, run, ColumnGeometry,
    ConstitutiveParams, DerivationInputs, OperatingPoint, Scenario,
};

#[derive(Parser)]
#[command(name = "flotcol", about = "Froth flotation column toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a dynamic simulation from a scenario file.
    Simulate {
        scenario: PathBuf,
        /// Override the scenario's cell count.
        #[arg(long)]
        n_cells: Option<usize>,
        /// Override the scenario's final time (s).
        #[arg(long)]
        t_end: Option<f64>,
        /// Override the snapshot interval (s).
        #[arg(long)]
        output_every: Option<f64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Construct the desired steady state for an operating point.
    Steady {
        point: PathBuf,
        /// Profile sample count.
        #[arg(long, default_value_t = 3200)]
        n_cells: usize,
        #[command(flatten)]
        out: OutDir,
    },
    /// Sweep feasibility and froth height over a (Q_U, Q_F) grid.
    Chart {
        spec: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Print the feasibility report for an operating point.
    Check { point: PathBuf },
    /// Derive the closure constants from material data.
    Params { physical: PathBuf },
}

/// A point file: operating flows at top level, optional geometry and
/// parameter overrides.
#[derive(Deserialize)]
struct PointFile {
    #[serde(default)]
    geometry: ColumnGeometry,
    #[serde(default)]
    params: Option<ConstitutiveParams>,
    #[serde(default)]
    physical: Option<DerivationInputs>,
    #[serde(flatten)]
    point: OperatingPoint,
}

impl PointFile {
    fn resolved_params(&self) -> Result<ConstitutiveParams, flotcol::Error> {
        let p = match (&self.params, &self.physical) {
            (Some(p), _) => *p,
            (None, Some(inputs)) => inputs.derive()?,
            (None, None) => ConstitutiveParams::default(),
        };
        p.validate()?;
        Ok(p)
    }
}

struct CliError {
    code: u8,
    kind: String,
    message: String,
}

impl CliError {
    fn validation(kind: &str, message: String) -> Self {
        CliError {
            code: 1,
            kind: kind.into(),
            message,
        }
    }
}

impl From<flotcol::Error> for CliError {
    fn from(e: flotcol::Error) -> Self {
        CliError {
            code: if e.is_numerical() { 2 } else { 1 },
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation("Io", e.to_string())
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::validation("Io", format!("cannot read {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::validation("Parse", format!("{}: {e}", path.display()))
    })
}

fn init_thread_pool() {
    if let Ok(threads) = std::env::var("FLOTCOL_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.kind, "message": e.message })
            );
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            scenario,
            n_cells,
            t_end,
            output_every,
            out,
        } => {
            let mut scenario: Scenario = read_json(&scenario)?;
            if let Some(n) = n_cells {
                scenario.n_cells = n;
            }
            if let Some(t) = t_end {
                scenario.t_end = t;
            }
            if let Some(s) = output_every {
                scenario.output_every = s;
            }
            let series = run(&scenario)?;
            std::fs::create_dir_all(&out.out_dir)?;
            std::fs::write(out.out_dir.join("series.csv"), series_csv(&series))?;
            std::fs::write(out.out_dir.join("outlets.csv"), outlets_csv(&series))?;
            let meta = serde_json::json!({
                "dt": series.dt,
                "dt_max": series.dt_max,
                "steps": series.outlet_times.len(),
                "snapshots": series.snapshot_times.len(),
                "n_cells": scenario.n_cells,
            });
            std::fs::write(
                out.out_dir.join("run.json"),
                serde_json::to_string_pretty(&meta).expect("metadata serializes"),
            )?;
            Ok(())
        }
        Command::Steady { point, n_cells, out } => {
            let file: PointFile = read_json(&point)?;
            file.geometry.validate()?;
            file.point.validate()?;
            let p = file.resolved_params()?;
            let report = check_conditions(&file.point, &p, &file.geometry);
            let profile = desired_steady_state(&file.point, &p, &file.geometry, n_cells)?;
            std::fs::create_dir_all(&out.out_dir)?;
            std::fs::write(out.out_dir.join("profile.csv"), profile_csv(&profile))?;
            std::fs::write(out.out_dir.join("profile.svg"), profile_svg(&profile))?;
            std::fs::write(
                out.out_dir.join("report.json"),
                serde_json::to_string_pretty(&report).expect("report serializes"),
            )?;
            Ok(())
        }
        Command::Chart { spec, out } => {
            let spec: ChartSpec = read_json(&spec)?;
            let result = evaluate_chart(&spec)?;
            export_chart(&result, &out.out_dir)?;
            Ok(())
        }
        Command::Check { point } => {
            let file: PointFile = read_json(&point)?;
            file.geometry.validate()?;
            file.point.validate()?;
            let p = file.resolved_params()?;
            let report = check_conditions(&file.point, &p, &file.geometry);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(())
        }
        Command::Params { physical } => {
            let inputs: DerivationInputs = read_json(&physical)?;
            let derived = inputs.derive()?;
            println!(
                "{}",
                serde_json::to_string_pretty(&derived).expect("params serialize")
            );
            Ok(())
        }
    }
}
