//! Command-line interface to the equilibrium solver.
//!
//! Every subcommand reads a game configuration from a JSON file and writes
//! results to stdout (or, for sweeps, to an output file). Text output
//! rounds floats to nine significant digits; JSON output carries full
//! precision. Exit codes: 0 on success, 1 for validation or usage errors,
//! 2 for I/O failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stackelroute::{
    evaluate_utility, export_regions, follower_best_response, follower_reply_utility,
    oracle_solve, solve, sweep, tipping_time, validate_config, ActionProfile, BestResponse,
    CaseTag, Equilibrium, ExportFormat, GameConfig, InteractionKind, RawGameConfig, Route,
    SolveError, SweepError, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "stackelroute",
    version,
    about = "Equilibrium analysis for a two-agent Stackelberg timing-and-route game"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepFileFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for all subgame-perfect equilibria of a configuration.
    Solve {
        /// Path to a JSON game configuration.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Grid step for the oracle fallback on shapes without a closed
        /// form; defaults to a thousandth of the tipping-time distance.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Follower best response to a committed leader action.
    Br {
        #[arg(long)]
        config: PathBuf,
        /// Leader departure time.
        #[arg(long)]
        t1: f64,
        /// Leader route (1-based).
        #[arg(long)]
        x1: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Brute-force grid solve, reporting agreement with the closed form
    /// when one exists.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Grid step; defaults to a thousandth of the tipping-time distance.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Classify a window of the cost-risk / territory-gap plane.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Lowest cost-risk value; defaults to one resolution step above 0.
        #[arg(long)]
        x_min: Option<f64>,
        /// Highest cost-risk value; defaults to 2r/lambda.
        #[arg(long)]
        x_max: Option<f64>,
        /// Lowest territory gap; defaults to a sliver above 0.
        #[arg(long)]
        y_min: Option<f64>,
        /// Highest territory gap; defaults to a sliver below E_1.
        #[arg(long)]
        y_max: Option<f64>,
        /// Cells per axis.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        /// Output file path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SweepFileFormat::Csv)]
        format: SweepFileFormat,
    },
    /// Evaluate both utilities for an explicit action profile.
    Utility {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        x1: usize,
        #[arg(long)]
        t2: f64,
        #[arg(long)]
        x2: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

enum CliError {
    Usage(String),
    Io(String),
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Applies the `STACKELROUTE_THREADS` cap to the global thread pool.
fn configure_threads() {
    if let Ok(value) = std::env::var("STACKELROUTE_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid STACKELROUTE_THREADS value {value:?}"),
        }
    }
}

fn load_raw(path: &Path) -> Result<RawGameConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed configuration: {e}")))
}

fn load_config(path: &Path) -> Result<GameConfig, CliError> {
    let raw = load_raw(path)?;
    validate_config(&raw).map_err(|e| CliError::Usage(e.to_string()))
}

/// Rounds to nine significant digits and prints the shortest form.
fn sig9(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return value.to_string();
    }
    let exponent = value.abs().log10().floor() as i32;
    let scale = 10f64.powi(8 - exponent);
    ((value * scale).round() / scale).to_string()
}

fn default_step(config: &GameConfig) -> f64 {
    1e-3 * (config.optimal_time - tipping_time(config)).max(1.0)
}

#[derive(Serialize)]
struct SolveRecord {
    profile: ActionProfile,
    kind: InteractionKind,
    case: CaseTag,
    tipping_time: Option<f64>,
    utilities: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn solve_records(
    equilibria: &[Equilibrium],
    config: &GameConfig,
    note: Option<&str>,
) -> Vec<SolveRecord> {
    equilibria
        .iter()
        .map(|eq| {
            let (u1, u2) = evaluate_utility(&eq.profile, config)
                .expect("equilibrium profiles use validated routes");
            SolveRecord {
                profile: eq.profile,
                kind: eq.kind,
                case: eq.case,
                tipping_time: eq.tipping_time,
                utilities: [u1, u2],
                note: note.map(str::to_string),
            }
        })
        .collect()
}

fn record_line(record: &SolveRecord) -> String {
    let tipping = record
        .tipping_time
        .map(sig9)
        .unwrap_or_else(|| "-".to_string());
    format!(
        "kind={} case={} t1={} x1={} t2={} x2={} tipping_time={} u1={} u2={}",
        record.kind,
        record.case,
        sig9(record.profile.t1),
        record.profile.x1,
        sig9(record.profile.t2),
        record.profile.x2,
        tipping,
        sig9(record.utilities[0]),
        sig9(record.utilities[1]),
    )
}

fn print_records(records: &[SolveRecord], format: OutputFormat) -> Result<(), CliError> {
    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(records)
                .map_err(|e| CliError::Io(format!("cannot encode output: {e}")))?;
            println!("{text}");
        }
        OutputFormat::Text => {
            for record in records {
                println!("{}", record_line(record));
                if let Some(note) = &record.note {
                    println!("note: {note}");
                }
            }
        }
    }
    Ok(())
}

fn run_solve(config_path: &Path, format: OutputFormat, step: Option<f64>) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let (equilibria, note) = match solve(&config) {
        Ok(equilibria) => {
            let note = (equilibria.len() > 1).then(|| {
                format!(
                    "boundary case with {} tied equilibria; a grid oracle run reports exactly one",
                    equilibria.len()
                )
            });
            (equilibria, note)
        }
        Err(SolveError::NoClosedForm) => {
            let step = step.unwrap_or_else(|| default_step(&config));
            eprintln!(
                "warning: no closed form for heterogeneous costs over {} routes; \
                 falling back to the grid oracle with step {}",
                config.routes.len(),
                sig9(step)
            );
            let eq = oracle_solve(&config, step).map_err(|e| CliError::Usage(e.to_string()))?;
            let note = format!("grid oracle approximation with step {}", sig9(step));
            (vec![eq], Some(note))
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let records = solve_records(&equilibria, &config, note.as_deref());
    print_records(&records, format)
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum BrRecord {
    Concrete { t: f64, route: usize, utility: f64 },
    PreemptLeftLimit { t_ref: f64, route: usize, utility: f64 },
}

fn run_br(config_path: &Path, t1: f64, x1: usize, format: OutputFormat) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    if !t1.is_finite() {
        return Err(CliError::Usage("leader time must be finite".to_string()));
    }
    let reply = follower_best_response(t1, Route(x1), &config)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let utility = follower_reply_utility(t1, Route(x1), &reply, &config)
        .expect("best responses use validated routes");
    let record = match reply {
        BestResponse::Concrete { t, x } => BrRecord::Concrete {
            t,
            route: x.0,
            utility,
        },
        BestResponse::PreemptLeftLimit { t_ref, x } => BrRecord::PreemptLeftLimit {
            t_ref,
            route: x.0,
            utility,
        },
    };
    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&record)
                .map_err(|e| CliError::Io(format!("cannot encode output: {e}")))?;
            println!("{text}");
        }
        OutputFormat::Text => match record {
            BrRecord::Concrete { t, route, utility } => {
                println!("best response: depart t={} route={} utility={}", sig9(t), route, sig9(utility));
            }
            BrRecord::PreemptLeftLimit { t_ref, route, utility } => {
                println!(
                    "best response: preempt just before t={} route={} limit_utility={}",
                    sig9(t_ref),
                    route,
                    sig9(utility)
                );
            }
        },
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    oracle: SolveRecord,
    step: f64,
    closed_form: Option<Vec<SolveRecord>>,
    agrees: Option<bool>,
}

fn run_oracle(config_path: &Path, step: Option<f64>, format: OutputFormat) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let step = step.unwrap_or_else(|| default_step(&config));
    let eq = oracle_solve(&config, step).map_err(|e| CliError::Usage(e.to_string()))?;
    let closed_form = solve(&config).ok();
    let agrees = closed_form.as_ref().map(|eqs| {
        eqs.iter().any(|analytic| {
            analytic.kind == eq.kind
                && analytic.profile.x1 == eq.profile.x1
                && analytic.profile.x2 == eq.profile.x2
                && analytic.profile.t2 == eq.profile.t2
                && (analytic.profile.t1 - eq.profile.t1).abs() <= 2.0 * step
        })
    });
    let report = OracleReport {
        oracle: solve_records(&[eq], &config, None).remove(0),
        step,
        closed_form: closed_form.map(|eqs| solve_records(&eqs, &config, None)),
        agrees,
    };
    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Io(format!("cannot encode output: {e}")))?;
            println!("{text}");
        }
        OutputFormat::Text => {
            println!("oracle: {} step={}", record_line(&report.oracle), sig9(report.step));
            match (&report.closed_form, report.agrees) {
                (Some(records), Some(agrees)) => {
                    for record in records {
                        println!("closed form: {}", record_line(record));
                    }
                    println!("agreement: {}", if agrees { "yes" } else { "no" });
                }
                _ => println!("closed form: none"),
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    config_path: &Path,
    x_min: Option<f64>,
    x_max: Option<f64>,
    y_min: Option<f64>,
    y_max: Option<f64>,
    resolution: usize,
    out: &Path,
    format: SweepFileFormat,
) -> Result<(), CliError> {
    let raw = load_raw(config_path)?;
    if raw.delta.len() != 2 {
        return Err(CliError::Usage(
            "region sweeps require a two-route configuration".to_string(),
        ));
    }
    if resolution < 2 {
        return Err(CliError::Usage("resolution must be at least 2".to_string()));
    }
    let lambda = raw.delta[1] / raw.delta[0];
    let e1 = raw.territory_values[0];
    let x_max = x_max.unwrap_or(2.0 * raw.r / lambda);
    let x_min = x_min.unwrap_or(x_max / resolution as f64);
    let y_min = y_min.unwrap_or(e1 / (resolution + 1) as f64);
    let y_max = y_max.unwrap_or(e1 * resolution as f64 / (resolution + 1) as f64);
    let spec = SweepSpec {
        base: raw,
        x_range: (x_min, x_max),
        y_range: (y_min, y_max),
        x_resolution: resolution,
        y_resolution: resolution,
    };
    let grid = sweep(&spec).map_err(map_sweep_error)?;
    let export_format = match format {
        SweepFileFormat::Csv => ExportFormat::Csv,
        SweepFileFormat::Json => ExportFormat::Json,
    };
    export_regions(&grid, export_format, out).map_err(map_sweep_error)?;
    println!(
        "wrote {} cells and {} boundary curves to {}",
        spec.x_resolution * spec.y_resolution,
        grid.boundaries.len(),
        out.display()
    );
    Ok(())
}

fn map_sweep_error(error: SweepError) -> CliError {
    match error {
        SweepError::Io(e) => CliError::Io(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn run_utility(
    config_path: &Path,
    t1: f64,
    x1: usize,
    t2: f64,
    x2: usize,
    format: OutputFormat,
) -> Result<(), CliError> {
    let config = load_config(config_path)?;
    let profile = ActionProfile::new(t1, x1, t2, x2);
    let (u1, u2) = evaluate_utility(&profile, &config).map_err(|e| CliError::Usage(e.to_string()))?;
    match format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&serde_json::json!({ "u1": u1, "u2": u2 }))
                .map_err(|e| CliError::Io(format!("cannot encode output: {e}")))?;
            println!("{text}");
        }
        OutputFormat::Text => println!("u1={} u2={}", sig9(u1), sig9(u2)),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, format, step } => run_solve(&config, format, step),
        Command::Br { config, t1, x1, format } => run_br(&config, t1, x1, format),
        Command::Oracle { config, step, format } => run_oracle(&config, step, format),
        Command::Sweep {
            config,
            x_min,
            x_max,
            y_min,
            y_max,
            resolution,
            out,
            format,
        } => run_sweep(&config, x_min, x_max, y_min, y_max, resolution, &out, format),
        Command::Utility { config, t1, x1, t2, x2, format } => {
            run_utility(&config, t1, x1, t2, x2, format)
        }
    }
}
