//! `yuoh`: verify the ray table, compile pulse sequences, run the simulated
//! experiment and render its reports.
//!
//! Exit codes: 0 success, 1 check or claim failure, 2 usage or config error.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use yuoh_core::config::{parse_ray, RunConfig};
use yuoh_core::pulse::{compile_measurement, compile_preparation, CalibrationTable};
use yuoh_core::rays::{canonical_rays, export_table, import_table, RayRecord};
use yuoh_core::verify::{all_pass, run_checks};
use yuoh_core::{Experiment, ExperimentReport, Ray};

use output::{fmt6, pulse_rows};

/// Tolerance on the noiseless left-hand side.
const NOISELESS_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "yuoh", version, about = "Qutrit contextuality lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the algebraic checks on a ray table and print them as JSON.
    Verify {
        /// Ray table JSON (defaults to the built-in table).
        #[arg(long)]
        rays: Option<PathBuf>,
    },
    /// Print preparation and measurement pulses for a ray.
    Compile {
        /// Ray label such as `h0`, or a JSON vector such as `[0.6,0,0.8]`.
        ray: String,
        /// Run config supplying the calibration table.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Emit JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the simulated experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Also write every Rabi trace to traces.csv.
        #[arg(long)]
        dump_traces: bool,
    },
    /// Render the outcome matrix and LHS list of a report.
    Report {
        path: PathBuf,
        /// Write the matrix and LHS series as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the built-in ray table as JSON.
    Rays,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 2, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { rays } => cmd_verify(rays.as_deref()),
        Command::Compile { ray, config, json } => cmd_compile(&ray, config.as_deref(), json),
        Command::Run { config, dump_traces } => cmd_run(&config, dump_traces),
        Command::Report { path, csv } => cmd_report(&path, csv.as_deref()),
        Command::Rays => cmd_rays(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_rays(path: &Path) -> Result<Vec<Ray>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let records: Vec<RayRecord> = serde_json::from_str(&text).context("parsing ray table")?;
    Ok(import_table(&records)?)
}

fn cmd_verify(rays: Option<&Path>) -> Result<u8, Failure> {
    let rays = match rays {
        Some(p) => load_rays(p)?,
        None => canonical_rays(),
    };
    let checks = run_checks(rays);
    println!("{}", serde_json::to_string_pretty(&checks).map_err(usage)?);
    Ok(if all_pass(&checks) { 0 } else { 1 })
}

fn cmd_compile(arg: &str, config: Option<&Path>, json: bool) -> Result<u8, Failure> {
    let calibration = match config {
        Some(p) => RunConfig::load(p).map_err(usage)?.calibration,
        None => CalibrationTable::default(),
    };
    let ray = parse_ray(arg).map_err(usage)?;
    let prep = compile_preparation(&ray.state()).map_err(usage)?;
    let meas = compile_measurement(&ray.state()).map_err(usage)?;
    let prep_rows = pulse_rows(&prep, &calibration).map_err(usage)?;
    let meas_rows = pulse_rows(&meas, &calibration).map_err(usage)?;
    if json {
        let doc = serde_json::json!({
            "ray": RayRecord::from(&ray),
            "preparation": prep_rows,
            "measurement": meas_rows,
        });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(usage)?);
    } else {
        println!("ray {}: {}", ray.label(), output::vector_text(&ray));
        for (name, rows) in [("preparation", &prep_rows), ("measurement", &meas_rows)] {
            println!("{name}:");
            print!("{}", output::pulse_table(rows));
        }
    }
    Ok(0)
}

fn claim_holds(report: &ExperimentReport, noiseless: bool) -> bool {
    let lhs = report.lhs_values();
    if noiseless {
        lhs.iter().all(|x| (x - 25.0 / 3.0).abs() < NOISELESS_TOL)
    } else {
        lhs.iter().all(|&x| x > 8.0)
    }
}

fn cmd_run(config: &Path, dump_traces: bool) -> Result<u8, Failure> {
    let cfg = RunConfig::load(config).map_err(usage)?;
    let states = cfg.resolve_states().map_err(usage)?;
    let exp = Experiment::with_options(
        cfg.calibration,
        cfg.fluorescence,
        cfg.noise(),
        cfg.cache_conditionals,
        cfg.parallel,
    )
    .map_err(usage)?;
    let (report, traces) = exp
        .run_with_traces(&states, cfg.correlation_method, dump_traces)
        .map_err(|e| Failure {
            code: 1,
            error: e.into(),
        })?;

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))?;
    output::write_report(dir, &report)?;
    if dump_traces {
        output::write_traces(&dir.join("traces.csv"), &traces)?;
    }

    for s in &report.states {
        println!("{:<12} lhs {}  h_sum {}", s.label, fmt6(s.lhs), fmt6(s.h_sum));
    }
    println!(
        "mean lhs {}  min {}  max {}  written to {}",
        fmt6(report.summary.lhs_mean),
        fmt6(report.summary.lhs_min),
        fmt6(report.summary.lhs_max),
        dir.display()
    );
    if claim_holds(&report, cfg.noiseless) {
        Ok(0)
    } else {
        eprintln!("claim failed: not every state violates the bound of 8");
        Ok(1)
    }
}

fn cmd_report(path: &Path, csv: Option<&Path>) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: ExperimentReport = serde_json::from_str(&text).context("parsing report")?;
    print!("{}", output::render_report(&report));
    if let Some(out) = csv {
        output::write_plot_csv(out, &report)?;
    }
    Ok(0)
}

fn cmd_rays() -> Result<u8, Failure> {
    let table = export_table(&canonical_rays());
    println!("{}", serde_json::to_string_pretty(&table).map_err(usage)?);
    Ok(0)
}
