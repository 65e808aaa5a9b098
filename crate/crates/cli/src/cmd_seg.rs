//! Segmentation-family subcommands: threshold, fibroid, FCM pipelines,
//! GTVcut, random walker and the GA enhancement/segmentation pair.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use bioimg_core::clusterseg;
use bioimg_core::graphseg::{self, SeedSet, Similarity};
use bioimg_core::imgcore::io;
use bioimg_core::imgcore::GrayImage;
use bioimg_core::medga::{self, MedGaConfig, SegmentTarget};
use bioimg_core::regionseg::{self, SplitMergeConfig};
use bioimg_core::threshold as th;

use crate::common::*;

#[derive(Args, Debug, Default, Deserialize)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// iots | otsu
    #[arg(long)]
    pub method: Option<String>,
    /// above | below
    #[arg(long)]
    pub polarity: Option<String>,
    #[arg(long)]
    pub eps_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<u32>,
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct ThresholdResolved {
    input: PathBuf,
    mask: Option<PathBuf>,
    method: String,
    polarity: String,
    eps_tol: f64,
    max_iter: u32,
    out_mask: Option<PathBuf>,
    report: Option<PathBuf>,
}

pub fn run_threshold(flag: ThresholdArgs, file: ThresholdArgs) -> CliResult<()> {
    let resolved = ThresholdResolved {
        input: pick_required(flag.input, file.input, "input")?,
        mask: flag.mask.or(file.mask),
        method: pick(flag.method, file.method, "iots".into()),
        polarity: pick(flag.polarity, file.polarity, "above".into()),
        eps_tol: pick(flag.eps_tol, file.eps_tol, th::IOTS_EPS_TOL),
        max_iter: pick(flag.max_iter, file.max_iter, th::IOTS_MAX_ITER),
        out_mask: flag.out_mask.or(file.out_mask),
        report: flag.report.or(file.report),
    };
    echo_resolved("threshold", &resolved);
    let img = io::load_gray(&resolved.input)?;
    let mask = resolved.mask.as_deref().map(io::load_mask).transpose()?;
    let hist = th::histogram(&img, mask.as_ref())?;
    let result = match resolved.method.as_str() {
        "iots" => th::iots(&hist, resolved.eps_tol, resolved.max_iter)?,
        "otsu" => th::otsu(&hist)?,
        other => return Err(CliError::Config(format!("unknown method `{other}`"))),
    };
    let polarity = parse_polarity(&resolved.polarity)?;
    if let Some(out) = &resolved.out_mask {
        ensure_parent(out)?;
        let bin = th::binarize(&img, result.theta_opt, polarity);
        io::save_mask(&bin, out)?;
    }
    if let Some(report) = &resolved.report {
        ensure_parent(report)?;
        let body = serde_json::json!({
            "method": resolved.method,
            "theta_opt": result.theta_opt,
            "mu1": result.mu1,
            "mu2": result.mu2,
            "iterations": result.iterations,
        });
        std::fs::write(report, serde_json::to_string_pretty(&body).expect("serializable"))?;
    }
    println!("theta_opt = {:.4} (mu1 {:.4}, mu2 {:.4})", result.theta_opt, result.mu1, result.mu2);
    Ok(())
}

fn parse_polarity(s: &str) -> CliResult<th::Polarity> {
    match s {
        "above" => Ok(th::Polarity::Above),
        "below" => Ok(th::Polarity::Below),
        other => Err(CliError::Config(format!("unknown polarity `{other}`"))),
    }
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct FibroidArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    pub mean_lo: Option<f64>,
    #[arg(long)]
    pub mean_hi: Option<f64>,
    #[arg(long)]
    pub rho_min: Option<u32>,
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
}

#[derive(Serialize)]
struct FibroidResolved {
    input: PathBuf,
    roi: PathBuf,
    mean_lo: f64,
    mean_hi: f64,
    rho_min: u32,
    out_mask: PathBuf,
}

pub fn run_fibroid(flag: FibroidArgs, file: FibroidArgs) -> CliResult<()> {
    let defaults = SplitMergeConfig::default();
    let resolved = FibroidResolved {
        input: pick_required(flag.input, file.input, "input")?,
        roi: pick_required(flag.roi, file.roi, "roi")?,
        mean_lo: pick(flag.mean_lo, file.mean_lo, defaults.mean_lo),
        mean_hi: pick(flag.mean_hi, file.mean_hi, defaults.mean_hi),
        rho_min: pick(flag.rho_min, file.rho_min, defaults.rho_min),
        out_mask: pick_required(flag.out_mask, file.out_mask, "out-mask")?,
    };
    echo_resolved("fibroid", &resolved);
    let img = io::load_gray(&resolved.input)?;
    let roi = io::load_mask(&resolved.roi)?;
    let cfg = SplitMergeConfig {
        mean_lo: resolved.mean_lo,
        mean_hi: resolved.mean_hi,
        rho_min: resolved.rho_min,
    };
    let mask = regionseg::fibroid_pipeline(&img, &roi, &cfg)?;
    ensure_parent(&resolved.out_mask)?;
    io::save_mask(&mask, &resolved.out_mask)?;
    println!("fibroid mask area = {}", mask.area());
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct FcmPipelineArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// ROI mask (gtv mask for the necrosis pipeline).
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
}

#[derive(Serialize)]
struct FcmPipelineResolved {
    input: PathBuf,
    roi: PathBuf,
    seed: u64,
    out_mask: PathBuf,
}

fn resolve_fcm(flag: FcmPipelineArgs, file: FcmPipelineArgs) -> CliResult<FcmPipelineResolved> {
    Ok(FcmPipelineResolved {
        input: pick_required(flag.input, file.input, "input")?,
        roi: pick_required(flag.roi, file.roi, "roi")?,
        seed: pick(flag.seed, file.seed, 0),
        out_mask: pick_required(flag.out_mask, file.out_mask, "out-mask")?,
    })
}

pub fn run_gtv_fcm(flag: FcmPipelineArgs, file: FcmPipelineArgs) -> CliResult<()> {
    let resolved = resolve_fcm(flag, file)?;
    echo_resolved("gtv-fcm", &resolved);
    let img = io::load_gray(&resolved.input)?;
    let roi = io::load_mask(&resolved.roi)?;
    let mask = clusterseg::gtv_pipeline(&img, &roi, resolved.seed)?;
    ensure_parent(&resolved.out_mask)?;
    io::save_mask(&mask, &resolved.out_mask)?;
    println!("gtv mask area = {}", mask.area());
    Ok(())
}

pub fn run_next(flag: FcmPipelineArgs, file: FcmPipelineArgs) -> CliResult<()> {
    let resolved = resolve_fcm(flag, file)?;
    echo_resolved("next", &resolved);
    let img = io::load_gray(&resolved.input)?;
    let gtv = io::load_mask(&resolved.roi)?;
    let mask = clusterseg::next_pipeline(&img, &gtv, resolved.seed)?;
    ensure_parent(&resolved.out_mask)?;
    io::save_mask(&mask, &resolved.out_mask)?;
    println!("necrosis mask area = {}", mask.area());
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct ProstateArgs {
    #[arg(long)]
    pub t2: Option<PathBuf>,
    #[arg(long)]
    pub t1: Option<PathBuf>,
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
}

#[derive(Serialize)]
struct ProstateResolved {
    t2: PathBuf,
    t1: PathBuf,
    roi: PathBuf,
    seed: u64,
    out_mask: PathBuf,
}

pub fn run_prostate(flag: ProstateArgs, file: ProstateArgs) -> CliResult<()> {
    let resolved = ProstateResolved {
        t2: pick_required(flag.t2, file.t2, "t2")?,
        t1: pick_required(flag.t1, file.t1, "t1")?,
        roi: pick_required(flag.roi, file.roi, "roi")?,
        seed: pick(flag.seed, file.seed, 0),
        out_mask: pick_required(flag.out_mask, file.out_mask, "out-mask")?,
    };
    echo_resolved("prostate", &resolved);
    let t2 = io::load_gray(&resolved.t2)?;
    let t1 = io::load_gray(&resolved.t1)?;
    let roi = io::load_mask(&resolved.roi)?;
    let mask = clusterseg::prostate_pipeline(&t2, &t1, &roi, resolved.seed)?;
    ensure_parent(&resolved.out_mask)?;
    io::save_mask(&mask, &resolved.out_mask)?;
    println!("prostate mask area = {}", mask.area());
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct GtvcutArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Bounding rectangle "x,y,w,h" centered on the target.
    #[arg(long)]
    pub bbox: Option<String>,
    /// gm | ifd
    #[arg(long)]
    pub similarity: Option<String>,
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
}

#[derive(Serialize)]
struct GtvcutResolved {
    input: PathBuf,
    bbox: String,
    similarity: String,
    out_mask: PathBuf,
}

pub fn run_gtvcut(flag: GtvcutArgs, file: GtvcutArgs) -> CliResult<()> {
    let resolved = GtvcutResolved {
        input: pick_required(flag.input, file.input, "input")?,
        bbox: pick_required(flag.bbox, file.bbox, "bbox")?,
        similarity: pick(flag.similarity, file.similarity, "gm".into()),
        out_mask: pick_required(flag.out_mask, file.out_mask, "out-mask")?,
    };
    echo_resolved("gtvcut", &resolved);
    let img = io::load_gray(&resolved.input)?;
    let bbox = parse_rect(&resolved.bbox)?;
    let similarity = match resolved.similarity.as_str() {
        "gm" => Similarity::Gm,
        "ifd" => Similarity::Ifd,
        other => return Err(CliError::Config(format!("unknown similarity `{other}`"))),
    };
    let mask = graphseg::gtvcut_pipeline(&img, bbox, similarity)?;
    ensure_parent(&resolved.out_mask)?;
    io::save_mask(&mask, &resolved.out_mask)?;
    println!("gtvcut mask area = {}", mask.area());
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct RwArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Foreground seeds "x,y;x,y;...".
    #[arg(long)]
    pub fg: Option<String>,
    /// Background seeds "x,y;x,y;...".
    #[arg(long)]
    pub bg: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Treat the input as activity (kBq/ml) and convert to SUV with this
    /// injected dose (kBq); requires --suv-weight.
    #[arg(long)]
    pub suv_dose: Option<f64>,
    /// Patient weight in grams for the SUV conversion.
    #[arg(long)]
    pub suv_weight: Option<f64>,
    /// Optional MRI mask for gain weighting.
    #[arg(long)]
    pub mri_mask: Option<PathBuf>,
    #[arg(long)]
    pub gain_in: Option<f64>,
    #[arg(long)]
    pub gain_out: Option<f64>,
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
    /// Probability raster as 16-bit PNG (p * 65535).
    #[arg(long)]
    pub out_prob: Option<PathBuf>,
}

#[derive(Serialize)]
struct RwResolved {
    input: PathBuf,
    fg: String,
    bg: String,
    beta: f64,
    threshold: f64,
    suv_dose: Option<f64>,
    suv_weight: Option<f64>,
    mri_mask: Option<PathBuf>,
    gain_in: f64,
    gain_out: f64,
    out_mask: PathBuf,
    out_prob: Option<PathBuf>,
}

pub fn run_rw(flag: RwArgs, file: RwArgs) -> CliResult<()> {
    let resolved = RwResolved {
        input: pick_required(flag.input, file.input, "input")?,
        fg: pick_required(flag.fg, file.fg, "fg")?,
        bg: pick_required(flag.bg, file.bg, "bg")?,
        beta: pick(flag.beta, file.beta, graphseg::DEFAULT_BETA),
        threshold: pick(flag.threshold, file.threshold, graphseg::DEFAULT_PROB_THRESHOLD),
        suv_dose: flag.suv_dose.or(file.suv_dose),
        suv_weight: flag.suv_weight.or(file.suv_weight),
        mri_mask: flag.mri_mask.or(file.mri_mask),
        gain_in: pick(flag.gain_in, file.gain_in, 1.1),
        gain_out: pick(flag.gain_out, file.gain_out, 0.9),
        out_mask: pick_required(flag.out_mask, file.out_mask, "out-mask")?,
        out_prob: flag.out_prob.or(file.out_prob),
    };
    echo_resolved("rw", &resolved);
    let img = io::load_gray(&resolved.input)?;
    let seeds = SeedSet::new(parse_points(&resolved.fg)?, parse_points(&resolved.bg)?)?;

    let (probs, mask) = if let Some(mri) = &resolved.mri_mask {
        let mri = io::load_mask(mri)?;
        let mask = graphseg::rw_weighted(
            &img,
            &mri,
            resolved.gain_in,
            resolved.gain_out,
            resolved.beta,
            &seeds,
            resolved.threshold,
        )?;
        (None, mask)
    } else {
        let graph = match (resolved.suv_dose, resolved.suv_weight) {
            (Some(dose), Some(weight)) => {
                let activity: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
                let suv = graphseg::suv_convert(&activity, dose, weight)?;
                graphseg::rw_build_from_values(&suv, img.width(), img.height(), resolved.beta, false)?
            }
            (None, None) => graphseg::rw_build(&img, resolved.beta)?,
            _ => {
                return Err(CliError::Config(
                    "--suv-dose and --suv-weight must be given together".into(),
                ))
            }
        };
        let (p, m) = graphseg::random_walker(&graph, &seeds, resolved.threshold)?;
        (Some(p), m)
    };
    ensure_parent(&resolved.out_mask)?;
    io::save_mask(&mask, &resolved.out_mask)?;
    if let (Some(prob_path), Some(probs)) = (&resolved.out_prob, probs) {
        ensure_parent(prob_path)?;
        let raster = GrayImage::new(
            img.width(),
            img.height(),
            16,
            probs.iter().map(|&p| (p * 65535.0).round() as u16).collect(),
        )?;
        io::save_gray(&raster, prob_path)?;
    }
    println!("rw mask area = {}", mask.area());
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct MedgaArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<u32>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub tournament: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// fibroid | brain (medga-segment only)
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub out_image: Option<PathBuf>,
    #[arg(long)]
    pub out_mask: Option<PathBuf>,
}

#[derive(Serialize)]
struct MedgaResolved {
    input: PathBuf,
    roi: PathBuf,
    population: usize,
    generations: u32,
    crossover_rate: f64,
    mutation_rate: f64,
    tournament: usize,
    seed: u64,
    target: Option<String>,
    out_image: Option<PathBuf>,
    out_mask: Option<PathBuf>,
}

fn resolve_medga(flag: MedgaArgs, file: MedgaArgs) -> CliResult<(MedgaResolved, MedGaConfig)> {
    let d = MedGaConfig::default();
    let resolved = MedgaResolved {
        input: pick_required(flag.input, file.input, "input")?,
        roi: pick_required(flag.roi, file.roi, "roi")?,
        population: pick(flag.population, file.population, d.population),
        generations: pick(flag.generations, file.generations, d.generations),
        crossover_rate: pick(flag.crossover_rate, file.crossover_rate, d.crossover_rate),
        mutation_rate: pick(flag.mutation_rate, file.mutation_rate, d.mutation_rate),
        tournament: pick(flag.tournament, file.tournament, d.tournament_size),
        seed: pick(flag.seed, file.seed, d.seed),
        target: flag.target.or(file.target),
        out_image: flag.out_image.or(file.out_image),
        out_mask: flag.out_mask.or(file.out_mask),
    };
    let cfg = MedGaConfig {
        population: resolved.population,
        crossover_rate: resolved.crossover_rate,
        mutation_rate: resolved.mutation_rate,
        tournament_size: resolved.tournament,
        generations: resolved.generations,
        seed: resolved.seed,
    };
    Ok((resolved, cfg))
}

pub fn run_medga_enhance(flag: MedgaArgs, file: MedgaArgs) -> CliResult<()> {
    let (resolved, cfg) = resolve_medga(flag, file)?;
    echo_resolved("medga-enhance", &resolved);
    let out_image = resolved
        .out_image
        .clone()
        .ok_or_else(|| CliError::Config("missing required parameter `out-image`".into()))?;
    let img = io::load_gray(&resolved.input)?;
    let roi = io::load_mask(&resolved.roi)?;
    let outcome = medga::medga_run(&img, &roi, &cfg)?;
    ensure_parent(&out_image)?;
    io::save_gray(&outcome.enhanced, &out_image)?;
    println!("best fitness = {:.6}", outcome.best_fitness);
    Ok(())
}

pub fn run_medga_segment(flag: MedgaArgs, file: MedgaArgs) -> CliResult<()> {
    let (resolved, cfg) = resolve_medga(flag, file)?;
    echo_resolved("medga-segment", &resolved);
    let out_mask = resolved
        .out_mask
        .clone()
        .ok_or_else(|| CliError::Config("missing required parameter `out-mask`".into()))?;
    let target = match resolved.target.as_deref() {
        Some("fibroid") => SegmentTarget::Fibroid,
        Some("brain") => SegmentTarget::Brain,
        Some(other) => return Err(CliError::Config(format!("unknown target `{other}`"))),
        None => return Err(CliError::Config("missing required parameter `target`".into())),
    };
    let img = io::load_gray(&resolved.input)?;
    let roi = io::load_mask(&resolved.roi)?;
    let mask = medga::medga_segment(&img, &roi, &cfg, target)?;
    ensure_parent(&out_mask)?;
    io::save_mask(&mask, &out_mask)?;
    println!("segmented area = {}", mask.area());
    Ok(())
}
