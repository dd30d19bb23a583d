use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadtrack_core::config::{parse_config, RunManifest};
use quadtrack_core::controller::validate_gains;
use quadtrack_core::csvlog::write_csv;
use quadtrack_core::plant::PlantState;
use quadtrack_core::simulator::{simulate, GainPreset, Scenario, SimConfig, CERT_GRID};
use quadtrack_core::Error;

const LOG_FILE: &str = "log.csv";
const MANIFEST_FILE: &str = "manifest";
const METRICS_FILE: &str = "metrics";

/// Exit statuses. Usage errors exit with 2 through clap.
mod code {
    pub const CONFIG: u8 = 3;
    pub const CERTIFICATION: u8 = 4;
    pub const SIMULATION: u8 = 5;
    pub const IO: u8 = 6;
}

#[derive(Parser)]
#[command(name = "quadtrack", version, about = "Quadrotor output-feedback trajectory tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write log.csv, manifest and metrics.
    Run {
        #[command(flatten)]
        setup: Setup,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the gain certification report without simulating.
    Certify {
        #[command(flatten)]
        setup: Setup,
    },
}

#[derive(Args)]
struct Setup {
    /// Scenario preset used when no config file is given.
    #[arg(long, value_enum, conflicts_with = "config")]
    scenario: Option<ScenarioArg>,
    /// Config file or manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    t_final: Option<f64>,
    /// Plant and observer step.
    #[arg(long)]
    dt: Option<f64>,
    /// Observer high-gain parameter; overrides the preset.
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long, value_enum)]
    internal_model: Option<Switch>,
    /// Initial state: x,vx,y,vy,z,vz,theta,dtheta,psi,dpsi.
    #[arg(long, value_parser = parse_state, allow_hyphen_values = true)]
    seed_state: Option<PlantState>,
}

fn parse_state(text: &str) -> Result<PlantState, String> {
    let v = text
        .split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|_| format!("`{f}` is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != PlantState::DIM {
        return Err(format!("expected {} comma-separated values, got {}", PlantState::DIM, v.len()));
    }
    Ok(PlantState::from_slice(&v))
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Periodic,
    Polynomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    /// Stock observer gain.
    #[value(name = "paper")]
    Nominal,
    Fast,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Self { code: code::IO, message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Certification(_) => code::CERTIFICATION,
            Error::OutOfEnvelope(_) | Error::NonFinite(_) | Error::Integration { .. } => code::SIMULATION,
            Error::Log(_) => code::IO,
            _ => code::CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

impl Setup {
    fn resolve(&self) -> Result<SimConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
                parse_config(&text).map_err(|e| Failure {
                    code: code::CONFIG,
                    message: format!("{}: {e}", path.display()),
                })?
            }
            None => SimConfig::for_scenario(match self.scenario.unwrap_or(ScenarioArg::Periodic) {
                ScenarioArg::Periodic => Scenario::Periodic,
                ScenarioArg::Polynomial => Scenario::Polynomial,
            }),
        };
        if let Some(p) = self.preset {
            c = c.with_preset(match p {
                PresetArg::Nominal => GainPreset::Nominal,
                PresetArg::Fast => GainPreset::Fast,
            });
        }
        if let Some(k) = self.kappa {
            c.kappa = k;
        }
        if let Some(t) = self.t_final {
            c.t_final = t;
        }
        if let Some(dt) = self.dt {
            c.dt_plant = dt;
            c.dt_observer = dt;
        }
        if let Some(s) = self.internal_model {
            c.internal_model = matches!(s, Switch::On);
        }
        if let Some(s) = self.seed_state {
            c.initial = s;
        }
        c.step_counts()?;
        c.observer_gains()?;
        Ok(c)
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Certify { setup } => {
            let c = setup.resolve()?;
            let report = validate_gains(&c.controller, &c.envelope, &c.beta_bounds(), CERT_GRID, c.g)?;
            println!("{report}");
            if !report.passed() {
                return Err(Error::Certification("see report above".into()).into());
            }
            Ok(())
        }
        Command::Run { setup, out } => {
            let c = setup.resolve()?;
            fs::create_dir_all(&out).map_err(|e| Failure::io(&out, e))?;
            let result = simulate(&c)?;
            let manifest = RunManifest {
                config: c,
                version: env!("CARGO_PKG_VERSION").into(),
                log_path: LOG_FILE.into(),
                metrics_path: METRICS_FILE.into(),
                certification: result.certification.to_string(),
            };
            let metrics = result.metrics.to_text();
            write(&out.join(LOG_FILE), &write_csv(&result.log))?;
            write(&out.join(METRICS_FILE), &metrics)?;
            write(&out.join(MANIFEST_FILE), &manifest.to_text())?;
            print!("{metrics}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("quadtrack: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
