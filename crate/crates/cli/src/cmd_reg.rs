//! Registration and evaluation subcommands.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use bioimg_core::imgcore::io;
use bioimg_core::metrics::{distance_metrics, enhancement_metrics, overlap_metrics, volume_metrics};
use bioimg_core::register::{
    apply_transform, mutual_information, normalized_mi, register, Interp, Metric, PsoVariant,
    Refine, RegisterConfig,
};

use crate::common::*;

#[derive(Args, Debug, Default, Deserialize)]
pub struct RegisterArgs {
    #[arg(long)]
    pub moving: Option<PathBuf>,
    #[arg(long)]
    pub fixed: Option<PathBuf>,
    /// mi | nmi
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// standard | orientation | constriction | hybrid | decaying
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub iterations: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// none | coordinate-descent
    #[arg(long)]
    pub refine: Option<String>,
    #[arg(long)]
    pub out_transform: Option<PathBuf>,
    /// Optional moving image resampled under the recovered transform.
    #[arg(long)]
    pub out_image: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct RegisterResolved {
    moving: PathBuf,
    fixed: PathBuf,
    metric: String,
    bins: usize,
    variant: String,
    particles: usize,
    iterations: u32,
    seed: u64,
    refine: String,
    out_transform: PathBuf,
    out_image: Option<PathBuf>,
    report: Option<PathBuf>,
}

pub fn run_register(flag: RegisterArgs, file: RegisterArgs) -> CliResult<()> {
    let base = RegisterConfig::default();
    let resolved = RegisterResolved {
        moving: pick_required(flag.moving, file.moving, "moving")?,
        fixed: pick_required(flag.fixed, file.fixed, "fixed")?,
        metric: pick(flag.metric, file.metric, "nmi".into()),
        bins: pick(flag.bins, file.bins, base.bins),
        variant: pick(flag.variant, file.variant, "standard".into()),
        particles: pick(flag.particles, file.particles, base.pso.particles),
        iterations: pick(flag.iterations, file.iterations, base.pso.max_iterations),
        seed: pick(flag.seed, file.seed, 0),
        refine: pick(flag.refine, file.refine, "coordinate-descent".into()),
        out_transform: pick_required(flag.out_transform, file.out_transform, "out-transform")?,
        out_image: flag.out_image.or(file.out_image),
        report: flag.report.or(file.report),
    };
    echo_resolved("register", &resolved);
    let mut cfg = RegisterConfig::default();
    cfg.metric = match resolved.metric.as_str() {
        "mi" => Metric::MutualInformation,
        "nmi" => Metric::NormalizedMutualInformation,
        other => return Err(CliError::Config(format!("unknown metric `{other}`"))),
    };
    cfg.bins = resolved.bins;
    cfg.pso.particles = resolved.particles;
    cfg.pso.max_iterations = resolved.iterations;
    cfg.pso.seed = resolved.seed;
    cfg.pso.variant = match resolved.variant.as_str() {
        "standard" => PsoVariant::Standard,
        "orientation" => PsoVariant::InitialOrientation,
        "constriction" => PsoVariant::Constriction,
        "hybrid" => PsoVariant::Hybrid,
        "decaying" => PsoVariant::DecayingOrientation,
        other => return Err(CliError::Config(format!("unknown variant `{other}`"))),
    };
    if matches!(cfg.pso.variant, PsoVariant::InitialOrientation | PsoVariant::DecayingOrientation) {
        cfg.pso.x_init = Some(vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    }
    if matches!(cfg.pso.variant, PsoVariant::Constriction) {
        cfg.pso.c_soc = 2.05;
        cfg.pso.c_cog = 2.05;
    }
    if matches!(cfg.pso.variant, PsoVariant::Hybrid) {
        cfg.pso.crossover_rate = 0.2;
    }
    cfg.refine = match resolved.refine.as_str() {
        "none" => Refine::None,
        "coordinate-descent" => Refine::CoordinateDescent,
        other => return Err(CliError::Config(format!("unknown refine mode `{other}`"))),
    };

    let moving = io::load_gray(&resolved.moving)?;
    let fixed = io::load_gray(&resolved.fixed)?;
    let t = register(&moving, &fixed, &cfg)?;
    ensure_parent(&resolved.out_transform)?;
    std::fs::write(&resolved.out_transform, t.to_text())?;
    if let Some(out) = &resolved.out_image {
        ensure_parent(out)?;
        let warped = apply_transform(&moving, &t, Interp::Bilinear)?;
        io::save_gray(&warped, out)?;
    }
    if let Some(report) = &resolved.report {
        ensure_parent(report)?;
        let warped = apply_transform(&moving, &t, Interp::Bilinear)?;
        let body = serde_json::json!({
            "tx": t.tx, "ty": t.ty, "rotation": t.rotation,
            "scale_x": t.scale_x, "scale_y": t.scale_y, "shear": t.shear,
            "mi": mutual_information(&warped, &fixed, cfg.bins)?,
            "nmi": normalized_mi(&warped, &fixed, cfg.bins)?,
        });
        std::fs::write(report, serde_json::to_string_pretty(&body).expect("serializable"))?;
    }
    println!(
        "transform: t=({:.3}, {:.3}) rot={:.4} rad scale=({:.4}, {:.4}) shear={:.4}",
        t.tx, t.ty, t.rotation, t.scale_x, t.scale_y, t.shear
    );
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub seg: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Original image for enhancement metrics.
    #[arg(long)]
    pub orig: Option<PathBuf>,
    /// Enhanced image for enhancement metrics.
    #[arg(long)]
    pub enhanced: Option<PathBuf>,
    #[arg(long)]
    pub id: Option<String>,
    /// Report path; .json selects JSON, anything else CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct MetricsResolved {
    seg: Option<PathBuf>,
    gold: Option<PathBuf>,
    orig: Option<PathBuf>,
    enhanced: Option<PathBuf>,
    id: String,
    out: Option<PathBuf>,
}

pub fn run_metrics(flag: MetricsArgs, file: MetricsArgs) -> CliResult<()> {
    let resolved = MetricsResolved {
        seg: flag.seg.or(file.seg),
        gold: flag.gold.or(file.gold),
        orig: flag.orig.or(file.orig),
        enhanced: flag.enhanced.or(file.enhanced),
        id: pick(flag.id, file.id, "case".into()),
        out: flag.out.or(file.out),
    };
    echo_resolved("metrics", &resolved);

    let mut fields: Vec<(String, f64)> = Vec::new();
    match (&resolved.seg, &resolved.gold) {
        (Some(seg), Some(gold)) => {
            let s = io::load_mask(seg)?;
            let g = io::load_mask(gold)?;
            let o = overlap_metrics(&s, &g)?;
            let d = distance_metrics(&s, &g)?;
            let (avd, vs) = volume_metrics(&s, &g)?;
            fields.extend([
                ("dsc".into(), o.dsc),
                ("ji".into(), o.ji),
                ("sen".into(), o.sen),
                ("spc".into(), o.spc),
                ("fpr".into(), o.fpr),
                ("fnr".into(), o.fnr),
                ("avg_d".into(), d.avg_d),
                ("max_d".into(), d.max_d),
                ("hd".into(), d.hd),
                ("mhd".into(), d.mhd),
                ("avd".into(), avd),
                ("vs".into(), vs),
            ]);
        }
        (None, None) => {}
        _ => return Err(CliError::Config("--seg and --gold must be given together".into())),
    }
    match (&resolved.orig, &resolved.enhanced) {
        (Some(orig), Some(enh)) => {
            let o = io::load_gray(orig)?;
            let e = io::load_gray(enh)?;
            let m = enhancement_metrics(&o, &e, None)?;
            fields.extend([
                ("psnr".into(), m.psnr),
                ("num_edges".into(), m.num_edges as f64),
                ("ambe".into(), m.ambe),
                ("ssim".into(), m.ssim),
            ]);
        }
        (None, None) => {}
        _ => return Err(CliError::Config("--orig and --enhanced must be given together".into())),
    }
    if fields.is_empty() {
        return Err(CliError::Config("nothing to evaluate: give --seg/--gold or --orig/--enhanced".into()));
    }

    if let Some(out) = &resolved.out {
        ensure_parent(out)?;
        if out.extension().map(|e| e == "json").unwrap_or(false) {
            let mut map = serde_json::Map::new();
            map.insert("id".into(), serde_json::Value::String(resolved.id.clone()));
            for (k, v) in &fields {
                map.insert(k.clone(), serde_json::json!(v));
            }
            std::fs::write(out, serde_json::to_string_pretty(&map).expect("serializable"))?;
        } else {
            let mut csvf = std::fs::File::create(out)?;
            let header: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
            writeln!(csvf, "id,{}", header.join(","))?;
            let row: Vec<String> = fields.iter().map(|(_, v)| format!("{v:.6}")).collect();
            writeln!(csvf, "{},{}", resolved.id, row.join(","))?;
        }
    }
    for (k, v) in &fields {
        println!("{k} = {v:.6}");
    }
    Ok(())
}
