use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use oamsense::config::{parse_config, ConfigFile};
use oamsense::figures::{reproduce, FigureId};
use oamsense::fock::OracleOptions;
use oamsense::sweep::{Axis, Param, Quantity, SweepResult, SweepSpec, TOOL};
use oamsense::validate::{validate, Preset, ValidateOptions};
use oamsense_core::metrology::OptimumSearch;

/// Angular-displacement sensitivity of an OAM SU(1,1)-SU(2) hybrid
/// interferometer with homodyne readout. All angles are in radians.
#[derive(Parser)]
#[command(name = "oamsense", version)]
struct Cli {
    /// Experiment or sweep file (key = value lines, `#` comments).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Points per axis for optimum searches over (phi, theta).
    #[arg(long, global = true, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    grid: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every quantity at the configuration in --config.
    Eval,
    /// Run the sweep described in --config.
    Sweep,
    /// Emit the dataset behind a built-in figure.
    Reproduce {
        #[arg(value_enum)]
        figure: FigureId,
    },
    /// Compare the Fock oracle, phase-space engine and closed forms.
    Validate {
        #[arg(long, value_enum, default_value_t = Preset::Quick)]
        preset: Preset,
        /// Rotation angle of the oracle's output splitter (diagnostics only).
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
        mixing_angle: f64,
    },
    /// Largest loss that keeps the optimum below the lossless shot-noise limit.
    MaxLoss,
}

enum Failure {
    Usage(String),
    Validation,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    let path = path.ok_or_else(|| Failure::Usage("this command needs --config <path>".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(Failure::from),
    }
}

fn emit_sweep(out: Option<&Path>, result: &SweepResult) -> Result<(), Failure> {
    emit(out, &result.to_csv(now()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let search = OptimumSearch::new(cli.grid as usize);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Eval => {
            let file = load(cli.config.as_deref())?;
            let c = file.base();
            let mut text = format!("# tool: {TOOL}\n# optimum_grid: {}\n# generated_unix: {}\n", cli.grid, now());
            for p in Param::ALL {
                text += &format!("# {}: {}\n", p.name(), p.get(c));
            }
            text += "quantity,value,flag\n";
            for (q, v, f) in oamsense::evaluate_all(c, &search)? {
                text += &format!("{},{v:?},{f}\n", q.name());
            }
            emit(out, &text)
        }
        Command::Sweep => match load(cli.config.as_deref())? {
            ConfigFile::Sweep(spec) => emit_sweep(out, &spec.run(&search)?),
            ConfigFile::Experiment(_) => Err(Failure::Usage("config has no `quantity`/`axis` lines to sweep".into())),
        },
        Command::Reproduce { figure } => emit_sweep(out, &reproduce(*figure, &search)?),
        Command::MaxLoss => {
            let c = *load(cli.config.as_deref())?.base();
            let spec = SweepSpec::new(c, vec![Axis::list(Param::G, &[c.g])?], Quantity::MaxLoss);
            emit_sweep(out, &spec.run(&search)?)
        }
        Command::Validate { preset, mixing_angle } => {
            let opts =
                ValidateOptions { preset: *preset, oracle: OracleOptions { mixing_angle: *mixing_angle, ..OracleOptions::default() } };
            let report = validate(&opts)?;
            emit(out, &report.to_csv())?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    eprintln!("note: angles (theta, phi) are in radians");
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation) => {
            eprintln!("validation failed");
            ExitCode::from(2)
        }
    }
}
