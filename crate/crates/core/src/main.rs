use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use planar_spdc::cli::{self, CliError};
use planar_spdc::config::{self, RunConfig};

#[derive(Parser)]
#[command(name = "planar-spdc", version, about = "Type-II SPDC in dual periodically poled planar waveguides")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config field by dot path, e.g. pump.wavelength_nm=406.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".", global = true)]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fundamental effective indices per wavelength and polarization.
    Modes,
    /// Dual-grating inverse design.
    Design,
    /// Joint spectra of both processes.
    Spectrum,
    /// Full and filtered concurrence.
    Concurrence,
    /// Planar vs bulk spectral and angular power densities.
    PowerCompare,
    /// Tuning with frozen gratings over pump wavelengths.
    Tune,
    /// Angular spectra for the hyper-entanglement layout.
    Hyper,
}

fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let cfg: RunConfig = config::load(args.config.as_deref(), &args.overrides)?;
    let out = args.out.as_path();
    match args.command {
        Command::Modes => cli::cmd_modes(&cfg, out),
        Command::Design => cli::cmd_design(&cfg, out),
        Command::Spectrum => cli::cmd_spectrum(&cfg, out),
        Command::Concurrence => cli::cmd_concurrence(&cfg, out),
        Command::PowerCompare => cli::cmd_power(&cfg, out),
        Command::Tune => cli::cmd_tune(&cfg, out),
        Command::Hyper => cli::cmd_hyper(&cfg, out),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
