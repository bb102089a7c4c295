//! `lasercom` command line. Exit codes: 0 success, 1 configuration error,
//! 2 runtime error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::amplifier::{assess, calibrate, CalibrationTarget, FreeParams};
use crate::geometry::PassWindow;
use crate::link_budget::LinkOutcome;

use super::{
    budget_at, load_scenario, passes_for, run_scenario, write_artifacts, ConfigError, RunError, Scenario,
    SourceConfig,
};

pub const SEED_ENV: &str = "LASERCOM_SEED";

#[derive(Debug, Parser)]
#[command(name = "lasercom", version, about = "Laser-communication terminal simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the scenario seed (also read from LASERCOM_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format; `run` writes only the chosen artifact.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario and write the time series and summary.
    Run { scenario: PathBuf },
    /// List visibility windows of a LEO pass scenario.
    Passes { scenario: PathBuf },
    /// Print the link ledger at one instant with zero pointing error.
    Budget {
        scenario: PathBuf,
        #[arg(long)]
        at: f64,
    },
    /// Calibrate the amplifier and check it over the scenario window.
    CalibrateEdfa { scenario: PathBuf },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Run the CLI with explicit arguments and streams; returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut s = load_scenario(path)?;
    let env = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|e| Failure::Config(format!("{SEED_ENV}={v:?}: {e}")))?,
        ),
        Err(_) => None,
    };
    if let Some(seed) = seed.or(env) {
        s.config.seed = seed;
    }
    Ok(s)
}

fn emit(stdout: &mut dyn Write, out_dir: Option<&Path>, name: &str, text: &str) -> Result<(), Failure> {
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            writeln!(stdout, "{}", p.display())?;
        }
        None => write!(stdout, "{text}")?,
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let out_dir = cli.out.as_deref();
    match &cli.command {
        Command::Run { scenario } => {
            let s = load(scenario, cli.seed)?;
            let output = run_scenario(&s)?;
            let dir = out_dir.unwrap_or(Path::new("out"));
            let (csv, js) = match cli.format {
                None => (true, true),
                Some(Format::Csv) => (true, false),
                Some(Format::Json) => (false, true),
            };
            let a = write_artifacts(dir, &output, csv, js)?;
            for p in a.csv.iter().chain(a.json.iter()) {
                writeln!(stdout, "{}", p.display())?;
            }
        }
        Command::Passes { scenario } => {
            let s = load(scenario, cli.seed)?;
            let passes = passes_for(&s.config)?.ok_or_else(|| {
                Failure::Config(format!(
                    "passes needs a LEO satellite and a ground or HAPS site; {} has none",
                    s.config.kind
                ))
            })?;
            let (name, text) = match cli.format {
                Some(Format::Json) => ("passes.json", json(&passes)?),
                Some(Format::Csv) => ("passes.csv", passes_csv(&passes)?),
                None => ("passes.txt", passes_text(&passes)),
            };
            emit(stdout, out_dir, name, &text)?;
        }
        Command::Budget { scenario, at } => {
            let s = load(scenario, cli.seed)?;
            let (g, outcome) = budget_at(&s.config, *at)?;
            let text = match cli.format {
                Some(Format::Json) => json(&BudgetJson {
                    t_s: *at,
                    range_m: g.range_m,
                    elevation_rad: g.elevation_rad,
                    outcome: &outcome,
                })?,
                Some(Format::Csv) => budget_csv(&outcome),
                None => {
                    let mut t = format!(
                        "t_s {}\nrange_m {:.1}\nelevation_deg {:.4}\n",
                        at,
                        g.range_m,
                        g.elevation_rad.to_degrees()
                    );
                    t += &match &outcome {
                        LinkOutcome::Available(r) => r.render(),
                        LinkOutcome::Unavailable { elevation_rad } => format!(
                            "status UNAVAILABLE: elevation {:.4} deg below the {} deg mask\n",
                            elevation_rad.to_degrees(),
                            s.config.channel.min_elevation_deg
                        ),
                        LinkOutcome::Blocked => "status BLOCKED: path occulted by the Earth\n".into(),
                    };
                    t
                }
            };
            let name = match cli.format {
                Some(Format::Json) => "budget.json",
                Some(Format::Csv) => "budget.csv",
                None => "budget.txt",
            };
            emit(stdout, out_dir, name, &text)?;
        }
        Command::CalibrateEdfa { scenario } => {
            let s = load(scenario, cli.seed)?;
            let (target, free) = match s.config.source {
                SourceConfig::Edfa { target, free } => (target, free),
                SourceConfig::Constant { .. } => (CalibrationTarget::default(), FreeParams::default()),
            };
            let cal = calibrate(target, free).map_err(|e| Failure::Config(e.to_string()))?;
            let m = cal.model;
            let report = EdfaJson {
                initial_power_w: m.initial_power_w,
                slope_w_per_c: m.slope_w_per_c,
                time_constant_s: m.time_constant_s,
                self_heating_c: m.self_heating_c,
                reference_temp_c: m.reference_temp_c,
                ambient_temp_c: m.ambient_temp_c,
                margin_w: cal.margin_w,
                under_determined: cal.under_determined,
                calibration_window: assess(&m, m.reference_temp_c, target.t1_s, target.min_power_w),
                scenario_window: assess(&m, m.reference_temp_c, s.config.duration_s, target.min_power_w),
            };
            let (name, text) = match cli.format {
                Some(Format::Json) => ("edfa.json", json(&report)?),
                Some(Format::Csv) => ("edfa.csv", edfa_csv(&report)),
                None => ("edfa.txt", edfa_text(&report)),
            };
            emit(stdout, out_dir, name, &text)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BudgetJson<'a> {
    t_s: f64,
    range_m: f64,
    elevation_rad: f64,
    outcome: &'a LinkOutcome,
}

#[derive(Serialize)]
struct EdfaJson {
    initial_power_w: f64,
    slope_w_per_c: f64,
    time_constant_s: f64,
    self_heating_c: f64,
    reference_temp_c: f64,
    ambient_temp_c: f64,
    margin_w: f64,
    under_determined: bool,
    calibration_window: crate::amplifier::ThermalAssessment,
    scenario_window: crate::amplifier::ThermalAssessment,
}

fn passes_text(p: &[PassWindow]) -> String {
    let mut t = format!(
        "{:>12} {:>12} {:>10} {:>10}\n",
        "rise_s", "set_s", "duration_s", "max_el_deg"
    );
    for w in p {
        t += &format!(
            "{:>12.3} {:>12.3} {:>10.3} {:>10.3}\n",
            w.rise_s,
            w.set_s,
            w.duration_s,
            w.max_elevation_rad.to_degrees()
        );
    }
    t += &format!("{} pass(es)\n", p.len());
    t
}

fn passes_csv(p: &[PassWindow]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for x in p {
        w.serialize(x).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    if p.is_empty() {
        w.write_record(["rise_s", "set_s", "max_elevation_rad", "duration_s"])
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn budget_csv(o: &LinkOutcome) -> String {
    let mut t = String::from("item,db\n");
    match o {
        LinkOutcome::Available(r) => {
            t += &format!("tx_power_dbm,{}\n", r.tx_power_dbm);
            for e in &r.terms {
                t += &format!("{},{}\n", e.name, e.db);
            }
            t += &format!(
                "received_dbm,{}\nrequired_dbm,{}\nmargin_db,{}\n",
                r.received_dbm, r.required_dbm, r.margin_db
            );
        }
        LinkOutcome::Unavailable { .. } => t += "status,UNAVAILABLE\n",
        LinkOutcome::Blocked => t += "status,BLOCKED\n",
    }
    t
}

fn edfa_rows(r: &EdfaJson) -> Vec<(&'static str, String)> {
    vec![
        ("initial_power_w", r.initial_power_w.to_string()),
        ("slope_w_per_c", r.slope_w_per_c.to_string()),
        ("time_constant_s", r.time_constant_s.to_string()),
        ("self_heating_c", r.self_heating_c.to_string()),
        ("reference_temp_c", r.reference_temp_c.to_string()),
        ("ambient_temp_c", r.ambient_temp_c.to_string()),
        ("margin_w", r.margin_w.to_string()),
        ("under_determined", r.under_determined.to_string()),
        (
            "calibration_window_s",
            r.calibration_window.duration_s.to_string(),
        ),
        (
            "calibration_min_power_w",
            r.calibration_window.min_power_w.to_string(),
        ),
        ("scenario_window_s", r.scenario_window.duration_s.to_string()),
        ("scenario_min_power_w", r.scenario_window.min_power_w.to_string()),
        ("scenario_end_power_w", r.scenario_window.end_power_w.to_string()),
        (
            "long_link_warning",
            r.scenario_window.long_link_warning.to_string(),
        ),
    ]
}

fn edfa_text(r: &EdfaJson) -> String {
    edfa_rows(r)
        .into_iter()
        .map(|(k, v)| format!("{k:<24} {v}\n"))
        .collect()
}

fn edfa_csv(r: &EdfaJson) -> String {
    let mut t = String::from("key,value\n");
    for (k, v) in edfa_rows(r) {
        t += &format!("{k},{v}\n");
    }
    t
}
