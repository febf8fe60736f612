//! `irforge`: hybrid infrared scene generation from the command line.
//!
//! Exit status: 0 success, 1 runtime or scene failure, 2 configuration or
//! asset error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "irforge", version, about = "Hybrid infrared scene synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build every scene of a run configuration.
    Generate {
        config: PathBuf,
        /// Report feasibility per scene; write nothing.
        #[arg(long)]
        dry_run: bool,
        /// Archive the pre-sensor float image of each scene.
        #[arg(long)]
        keep_intermediate: bool,
        /// Worker threads (default: all cores).
        #[arg(long, short = 'j')]
        jobs: Option<usize>,
        /// Output root, overriding the config's `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Measure RSS, Q_D, SCR, R_x and K on an image.
    Metrics {
        #[arg(long)]
        image: PathBuf,
        /// Full target silhouette mask.
        #[arg(long)]
        c_full: PathBuf,
        /// Occultant mask; none if omitted.
        #[arg(long)]
        occultant: Option<PathBuf>,
        /// Visible target mask, cross-checked against c_full minus occultant.
        #[arg(long)]
        c_visible: Option<PathBuf>,
        /// Gray levels per Kelvin.
        #[arg(long)]
        nu_k: f64,
        #[arg(long, default_value_t = irforge::layout::DEFAULT_F1_RADIUS)]
        f1_radius: usize,
        #[arg(long, default_value_t = 1.0)]
        gray_scale: f64,
        #[arg(long, default_value_t = 0.0)]
        gray_offset: f64,
    },
    /// Mix TA/TF signatures under sampled thermal states.
    Expand {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Force every region's rate to this value (debugging).
        #[arg(long)]
        lambda_override: Option<f64>,
    },
    /// Validate a run configuration and its assets.
    Check { config: PathBuf },
}

/// Error carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

pub trait ExitStatus<T> {
    fn config_err(self) -> Result<T, Failure>;
    fn runtime_err(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitStatus<T> for Result<T, E> {
    fn config_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: EXIT_CONFIG,
            error: e.into(),
        })
    }

    fn runtime_err(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: EXIT_RUNTIME,
            error: e.into(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            config,
            dry_run,
            keep_intermediate,
            jobs,
            output_dir,
        } => commands::generate(
            &config,
            dry_run,
            keep_intermediate,
            jobs,
            output_dir.as_deref(),
        ),
        Command::Metrics {
            image,
            c_full,
            occultant,
            c_visible,
            nu_k,
            f1_radius,
            gray_scale,
            gray_offset,
        } => commands::metrics(commands::MetricsArgs {
            image,
            c_full,
            occultant,
            c_visible,
            nu_k,
            f1_radius,
            gray: irforge::io::GrayMapping {
                scale: gray_scale,
                offset: gray_offset,
            },
        }),
        Command::Expand {
            bundle,
            config,
            out,
            lambda_override,
        } => commands::expand(&bundle, &config, &out, lambda_override),
        Command::Check { config } => commands::check(&config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let kind = if f.code == EXIT_CONFIG {
                "error"
            } else {
                "failed"
            };
            eprintln!("irforge: {kind}: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
