//! Batch command-line front end: every pipeline of the toolkit behind one
//! binary, with TOML config files, flag overrides, deterministic seeding and
//! machine-readable exit codes (0 ok, 2 config, 3 algorithm, 4 i/o).

mod cmd_assay;
mod cmd_phantom;
mod cmd_reg;
mod cmd_seg;
mod common;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::{load_config_section, CliError, CliResult};

#[derive(Parser)]
#[command(name = "bioimg", version, about = "Classical biomedical image analysis toolkit")]
struct Cli {
    /// TOML config file; CLI flags override file keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Global threshold selection (IOTS or Otsu) and binarization.
    Threshold(cmd_seg::ThresholdArgs),
    /// Split-and-merge plus region-growing fibroid segmentation.
    Fibroid(cmd_seg::FibroidArgs),
    /// FCM brain tumor (GTV) segmentation.
    GtvFcm(cmd_seg::FcmPipelineArgs),
    /// FCM necrosis extraction inside a GTV mask.
    Next(cmd_seg::FcmPipelineArgs),
    /// Multispectral FCM prostate gland segmentation.
    Prostate(cmd_seg::ProstateArgs),
    /// Cellular-automaton tumor segmentation in a bounding box.
    Gtvcut(cmd_seg::GtvcutArgs),
    /// Random-walker segmentation from explicit seeds.
    Rw(cmd_seg::RwArgs),
    /// GA histogram enhancement of a masked region.
    MedgaEnhance(cmd_seg::MedgaArgs),
    /// GA-assisted threshold segmentation (fibroid or brain branch).
    MedgaSegment(cmd_seg::MedgaArgs),
    /// Clonogenic plate analysis: wells, colonies, ACC and SF.
    Colony(cmd_assay::ColonyArgs),
    /// Cell nuclei detection and counting.
    Acdc(cmd_assay::AcdcArgs),
    /// PSO affine registration of a moving image onto a fixed one.
    Register(cmd_reg::RegisterArgs),
    /// Segmentation/enhancement evaluation metrics.
    Metrics(cmd_reg::MetricsArgs),
    /// Deterministic synthetic images with ground truth.
    Phantom(cmd_phantom::PhantomArgs),
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Threshold(a) => cmd_seg::run_threshold(a, load_config_section(cfg, "threshold")?),
        Command::Fibroid(a) => cmd_seg::run_fibroid(a, load_config_section(cfg, "fibroid")?),
        Command::GtvFcm(a) => cmd_seg::run_gtv_fcm(a, load_config_section(cfg, "gtv-fcm")?),
        Command::Next(a) => cmd_seg::run_next(a, load_config_section(cfg, "next")?),
        Command::Prostate(a) => cmd_seg::run_prostate(a, load_config_section(cfg, "prostate")?),
        Command::Gtvcut(a) => cmd_seg::run_gtvcut(a, load_config_section(cfg, "gtvcut")?),
        Command::Rw(a) => cmd_seg::run_rw(a, load_config_section(cfg, "rw")?),
        Command::MedgaEnhance(a) => {
            cmd_seg::run_medga_enhance(a, load_config_section(cfg, "medga-enhance")?)
        }
        Command::MedgaSegment(a) => {
            cmd_seg::run_medga_segment(a, load_config_section(cfg, "medga-segment")?)
        }
        Command::Colony(a) => cmd_assay::run_colony(a, load_config_section(cfg, "colony")?),
        Command::Acdc(a) => cmd_assay::run_acdc(a, load_config_section(cfg, "acdc")?),
        Command::Register(a) => cmd_reg::run_register(a, load_config_section(cfg, "register")?),
        Command::Metrics(a) => cmd_reg::run_metrics(a, load_config_section(cfg, "metrics")?),
        Command::Phantom(a) => cmd_phantom::run_phantom(a, load_config_section(cfg, "phantom")?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
