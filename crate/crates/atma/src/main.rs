use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process;

use atma::config::{Overrides, RunConfig};
use atma::error::{AppError, ExitCode, Result};
use atma::logfile::{self, Vehicle};
use atma::report::{self, ThresholdReport};
use atma::scenario::{write_trajectories, Scenario, SimResult};
use atma::stops;
use atma_core::calibration::{calibrate_deceleration, calibrate_gap_error_at, DecelCalibration};
use atma_core::guidance::threshold_table_with_step;
use atma_core::log::{session_summary, ModeFilter};
use atma_core::sim::verify_thresholds;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "atma",
    version,
    about = "Leader-follower truck-mounted attenuator toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse LT or FT telemetry logs
    Parse {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long, value_enum)]
        vehicle: Vehicle,
        /// Print a session summary instead of the records
        #[arg(long)]
        summary: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: RecordFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate deceleration from stop tests and/or epsilon from gap errors
    Calibrate {
        #[arg(long)]
        stops: Option<PathBuf>,
        /// `gap_error_ft` column CSV or a follower log
        #[arg(long = "gap-errors")]
        gap_errors: Option<PathBuf>,
        /// Operating modes used from a follower log: `all` or e.g. `run,rollout`
        #[arg(long, default_value = "run")]
        modes: String,
        #[arg(long, default_value_t = 0.95)]
        percentile: f64,
        #[arg(long = "bin-width", default_value_t = 1.0)]
        bin_width: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the guidance thresholds over a speed grid
    Thresholds {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_enum, default_value = "json")]
        format: TableFormat,
        /// Output file, or directory for `--format plot`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation scenario or verify thresholds against the simulator
    Simulate {
        #[arg(long, required_unless_present = "verify_thresholds")]
        scenario: Option<PathBuf>,
        #[arg(long = "verify-thresholds")]
        verify_thresholds: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Command gaps (ft) swept by --verify-thresholds
        #[arg(long, value_delimiter = ',')]
        gaps: Option<Vec<f64>>,
        /// CSV export of leader/follower trajectories (newell scenarios)
        #[arg(long = "trajectory-out")]
        trajectory_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RecordFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
    Plot,
    Table,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    process::exit(code as i32);
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Parse {
            paths,
            vehicle,
            summary,
            format,
            out,
        } => cmd_parse(&paths, vehicle, summary, format, out.as_deref()),
        Command::Calibrate {
            stops,
            gap_errors,
            modes,
            percentile,
            bin_width,
            out,
        } => cmd_calibrate(
            stops.as_deref(),
            gap_errors.as_deref(),
            &modes,
            percentile,
            bin_width,
            out.as_deref(),
        ),
        Command::Thresholds {
            config,
            overrides,
            format,
            out,
        } => cmd_thresholds(config.as_deref(), &overrides, format, out.as_deref()),
        Command::Simulate {
            scenario,
            verify_thresholds,
            config,
            overrides,
            gaps,
            trajectory_out,
            out,
        } => cmd_simulate(
            scenario.as_deref(),
            verify_thresholds,
            config.as_deref(),
            &overrides,
            gaps,
            trajectory_out.as_deref(),
            out.as_deref(),
        ),
    }
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| AppError::io(path, e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("<stdout>"));
    let io_err = |e: io::Error| AppError::io(&path, e);
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(e.into()))?;
    writeln!(w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn cmd_parse(
    paths: &[PathBuf],
    vehicle: Vehicle,
    summary: bool,
    format: RecordFormat,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let session = logfile::load_session(paths, vehicle)?;
    for w in &session.warnings {
        eprintln!("warning: {w}");
    }
    if summary {
        emit_json(
            out,
            &json!({
                "vehicle": vehicle,
                "sources": session.sources,
                "summary": session_summary(&session),
                "warnings": session.warnings,
            }),
        )?;
        return Ok(ExitCode::Success);
    }
    match format {
        RecordFormat::Json => {
            let records = match vehicle {
                Vehicle::Leader => serde_json::to_value(&session.leader),
                Vehicle::Follower => serde_json::to_value(&session.follower),
            }
            .map_err(|e| AppError::Invalid(e.to_string()))?;
            emit_json(
                out,
                &json!({
                    "vehicle": vehicle,
                    "sources": session.sources,
                    "records": records,
                    "warnings": session.warnings,
                }),
            )?;
        }
        RecordFormat::Csv => {
            let name = out
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("<stdout>"));
            let w = output(out)?;
            match vehicle {
                Vehicle::Leader => logfile::write_leader_csv(w, &session.leader),
                Vehicle::Follower => logfile::write_follower_csv(w, &session.follower),
            }
            .map_err(|e| AppError::io(name, e))?;
        }
    }
    Ok(ExitCode::Success)
}

fn decel_json(cal: &DecelCalibration) -> serde_json::Value {
    let r1 = |x: f64| (x * 10.0).round() / 10.0;
    let r2 = |x: f64| (x * 100.0).round() / 100.0;
    json!({
        "calibration": cal,
        "alpha_lt_recommended_fps2": cal.max_decel.fps2(),
        "paper_rounded": {
            "alpha_lt_fps2": r1(cal.max_decel.fps2()),
            "groups": cal.groups.iter().map(|g| json!({
                "set_speed_mph": r1(g.set_speed_mph),
                "avg_decel_fps2": r1(g.avg_decel.fps2()),
                "max_decel_fps2": r1(g.max_decel.fps2()),
                "sd_stop_time_s": r2(g.sd_stop_time),
                "sd_stop_distance_ft": r2(g.sd_stop_distance),
            })).collect::<Vec<_>>(),
        },
    })
}

fn cmd_calibrate(
    stops_path: Option<&Path>,
    gap_path: Option<&Path>,
    modes: &str,
    percentile: f64,
    bin_width: f64,
    out: Option<&Path>,
) -> Result<ExitCode> {
    if stops_path.is_none() && gap_path.is_none() {
        return Err(AppError::Invalid(
            "calibrate needs --stops and/or --gap-errors".into(),
        ));
    }
    let modes: ModeFilter = modes.parse()?;
    let mut result = serde_json::Map::new();
    if let Some(path) = stops_path {
        let runs = stops::load_stop_runs(path)?;
        let cal = calibrate_deceleration(&runs)?;
        result.insert("deceleration".into(), decel_json(&cal));
    }
    if let Some(path) = gap_path {
        let errors = stops::load_gap_errors(path, modes)?;
        if errors.is_empty() {
            return Err(AppError::format(
                path.display().to_string(),
                "no gap errors after mode filtering",
            ));
        }
        let cal = calibrate_gap_error_at(&errors, percentile, bin_width)?;
        if let Some(w) = &cal.warning {
            eprintln!("warning: {w}");
        }
        result.insert(
            "gap_error".into(),
            json!({
                "modes": modes,
                "calibration": cal,
                "epsilon_ft": cal.epsilon.feet(),
                "paper_rounded": { "epsilon_ft": cal.epsilon.feet().round() },
            }),
        );
    }
    emit_json(out, &result)?;
    Ok(ExitCode::Success)
}

fn cmd_thresholds(
    config: Option<&Path>,
    overrides: &Overrides,
    format: TableFormat,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let cfg = RunConfig::resolve(config, overrides)?;
    let p = cfg.params()?;
    let grid = cfg.speed_grid()?;
    let table = threshold_table_with_step(&grid, cfg.saf_step_mph, &p)?;
    match format {
        TableFormat::Json => emit_json(out, &ThresholdReport::new(&cfg, &table, &p)?)?,
        TableFormat::Csv => {
            let name = out
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("<stdout>"));
            report::write_csv(output(out)?, &table).map_err(|e| AppError::io(name, e))?;
        }
        TableFormat::Table => {
            let name = out
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("<stdout>"));
            let mut w = output(out)?;
            w.write_all(report::render_table(&table).as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| AppError::io(name, e))?;
        }
        TableFormat::Plot => {
            let dir = out.unwrap_or(Path::new("."));
            for path in report::write_plot_files(dir, &table)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(ExitCode::Success)
}

fn cmd_simulate(
    scenario: Option<&Path>,
    verify: bool,
    config: Option<&Path>,
    overrides: &Overrides,
    gaps: Option<Vec<f64>>,
    trajectory_out: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let mut cfg = RunConfig::resolve(config, overrides)?;
    if let Some(g) = gaps {
        cfg.verify_gaps_ft = g;
    }
    let p = cfg.params()?;
    let sim = cfg.sim_config()?;

    let mut result = serde_json::Map::new();
    result.insert("config".into(), json!(cfg));
    let mut code = ExitCode::Success;

    if let Some(path) = scenario {
        let scenario = Scenario::load(path)?;
        let outcome = scenario.run(&p, &sim)?;
        if let (Some(tpath), SimResult::Newell { leader, follower }) = (trajectory_out, &outcome) {
            let file = File::create(tpath).map_err(|e| AppError::io(tpath, e))?;
            write_trajectories(file, &[("leader", leader), ("follower", follower)])
                .map_err(|e| AppError::io(tpath, e))?;
        }
        result.insert("scenario".into(), json!(scenario));
        result.insert("result".into(), json!(outcome));
    }
    if verify {
        let report = verify_thresholds(&cfg.speed_grid()?, &cfg.verify_gaps_ft, &p, &sim)?;
        if !report.pass {
            eprintln!(
                "verification failed: max boundary difference {:.6} s exceeds dt = {} s",
                report.max_abs_difference, report.dt
            );
            code = ExitCode::VerificationFailed;
        }
        result.insert("verification".into(), json!(report));
    }
    emit_json(out, &result)?;
    Ok(code)
}
