use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patchlum::{Error, ErrorKind};

mod commands;
mod output;

#[derive(Debug, Parser)]
#[command(
    name = "patchlum",
    version,
    about = "Patch-antenna intersubband emitter models and fits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Device configuration (JSON). Omitted means all defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "patchlum_out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward models.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Parameter extraction from measured tables.
    #[command(subcommand)]
    Fit(Fit),
    /// Derived device quantities.
    #[command(subcommand)]
    Report(Report),
}

#[derive(Debug, Subcommand)]
pub enum Simulate {
    /// Sub-threshold photon density and optical power against current density.
    Li {
        #[command(flatten)]
        common: Common,
        /// Upper current density (kA/cm²).
        #[arg(long, default_value_t = 20.0)]
        jmax: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Mesa and cavity-filtered emission spectra.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Bias (V); defaults to the alignment bias, else the reference bias.
        #[arg(long)]
        bias: Option<f64>,
        #[arg(long, default_value_t = 4001)]
        points: usize,
    },
    /// Detector-plane intensity map and divergence.
    Farfield {
        #[command(flatten)]
        common: Common,
        /// Detector distance (mm); overrides the config.
        #[arg(long)]
        z: Option<f64>,
    },
    /// Purcell factor along the bias-current path.
    Purcell {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20.0)]
        jmax: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum Fit {
    /// Cavity reflectivity dip (`energy_meV,reflectivity`).
    Lorentzian {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Linear Stark shift (`bias_V,peak_meV`).
    Stark {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Threshold current density from normalized flux (`J_kA_cm2,flux_norm`).
    Threshold {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Quantum efficiency slope (`current_mA,power_uW`).
    Qe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Photon energy (meV); defaults to the cavity resonance.
        #[arg(long)]
        photon_mev: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Report {
    Device {
        #[command(flatten)]
        common: Common,
    },
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("PATCHLUM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Input(format!("PATCHLUM_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))
}

fn report_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error(
                "validation",
                e.to_string().lines().next().unwrap_or("invalid arguments"),
            );
            return ExitCode::from(1);
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Simulate(s) => commands::simulate(s),
        Command::Fit(f) => commands::fit(f),
        Command::Report(Report::Device { common }) => commands::report_device(&common),
    });
    match result {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => match e.kind() {
            ErrorKind::Validation => {
                report_error("validation", &e.to_string());
                ExitCode::from(1)
            }
            ErrorKind::Numerical => {
                report_error("numerical", &e.to_string());
                ExitCode::from(2)
            }
        },
    }
}
