//! Laboratory-assay subcommands: colony plates and nuclei counting.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use bioimg_core::acdc::{acdc_segment, AcdcConfig};
use bioimg_core::colony::{
    acc, detect_wells, extract_colonies, order_wells, surviving_fraction, StainChannel,
};
use bioimg_core::imgcore::io;
use bioimg_core::imgcore::GrayImage;

use crate::common::*;

#[derive(Args, Debug, Default, Deserialize)]
pub struct ColonyArgs {
    #[arg(long)]
    pub plate: Option<PathBuf>,
    /// Well radius in pixels (known per plate type).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Expected number of wells.
    #[arg(long)]
    pub wells: Option<usize>,
    /// 1-based index of the untreated control well after row-major ordering.
    #[arg(long)]
    pub control_well: Option<usize>,
    /// Stain channel: u | v
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Directory for per-well colony masks (well_<index>.png).
    #[arg(long)]
    pub masks_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct ColonyResolved {
    plate: PathBuf,
    radius: f64,
    wells: usize,
    control_well: usize,
    channel: String,
    out_csv: PathBuf,
    masks_dir: Option<PathBuf>,
}

pub fn run_colony(flag: ColonyArgs, file: ColonyArgs) -> CliResult<()> {
    let resolved = ColonyResolved {
        plate: pick_required(flag.plate, file.plate, "plate")?,
        radius: pick_required(flag.radius, file.radius, "radius")?,
        wells: pick_required(flag.wells, file.wells, "wells")?,
        control_well: pick(flag.control_well, file.control_well, 1),
        channel: pick(flag.channel, file.channel, "u".into()),
        out_csv: pick_required(flag.out_csv, file.out_csv, "out-csv")?,
        masks_dir: flag.masks_dir.or(file.masks_dir),
    };
    echo_resolved("colony", &resolved);
    if resolved.control_well == 0 || resolved.control_well > resolved.wells {
        return Err(CliError::Config("control well index out of range".into()));
    }
    let channel = match resolved.channel.as_str() {
        "u" => StainChannel::UStar,
        "v" => StainChannel::VStar,
        other => return Err(CliError::Config(format!("unknown stain channel `{other}`"))),
    };
    let plate = io::load_rgb(&resolved.plate)?;
    let wells = detect_wells(&plate, resolved.radius, resolved.wells)?;
    let ordered = order_wells(&wells);

    let mut accs = Vec::with_capacity(ordered.len());
    for (i, well) in ordered.iter().enumerate() {
        let mask = extract_colonies(&plate, well, channel)?;
        if let Some(dir) = &resolved.masks_dir {
            std::fs::create_dir_all(dir)?;
            io::save_mask(&mask, &out_path(dir, &format!("well_{:02}.png", i + 1)))?;
        }
        accs.push(acc(&mask, well)?);
    }
    let control = accs[resolved.control_well - 1];

    ensure_parent(&resolved.out_csv)?;
    let mut csv = std::fs::File::create(&resolved.out_csv)?;
    writeln!(csv, "well_index,acc_percent,sf_percent")?;
    for (i, &a) in accs.iter().enumerate() {
        let sf = if control > 0.0 { surviving_fraction(a, control)? } else { f64::NAN };
        writeln!(csv, "{},{:.4},{:.4}", i + 1, a, sf)?;
    }
    println!("wells analyzed = {}", accs.len());
    Ok(())
}

#[derive(Args, Debug, Default, Deserialize)]
pub struct AcdcArgs {
    /// Single input image.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Newline-separated list of image paths (batch mode).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub min_area: Option<usize>,
    #[arg(long)]
    pub tophat_radius: Option<u32>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Directory for per-image label maps as 16-bit PNGs.
    #[arg(long)]
    pub labels_dir: Option<PathBuf>,
    /// Worker threads for batch mode (0 = rayon default).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Serialize)]
struct AcdcResolved {
    inputs: Vec<PathBuf>,
    min_area: usize,
    tophat_radius: u32,
    out_csv: PathBuf,
    labels_dir: Option<PathBuf>,
    jobs: usize,
}

pub fn run_acdc(flag: AcdcArgs, file: AcdcArgs) -> CliResult<()> {
    let input = flag.input.or(file.input);
    let manifest = flag.manifest.or(file.manifest);
    let mut inputs: Vec<PathBuf> = Vec::new();
    if let Some(p) = input {
        inputs.push(p);
    }
    if let Some(m) = manifest {
        let text = std::fs::read_to_string(&m)?;
        for line in text.lines() {
            let line = line.trim();
            if !line.is_empty() {
                inputs.push(PathBuf::from(line));
            }
        }
    }
    if inputs.is_empty() {
        return Err(CliError::Config("need --input or --manifest".into()));
    }
    let defaults = AcdcConfig::default();
    let resolved = AcdcResolved {
        inputs: inputs.clone(),
        min_area: pick(flag.min_area, file.min_area, defaults.min_area),
        tophat_radius: pick(flag.tophat_radius, file.tophat_radius, defaults.tophat_radius),
        out_csv: pick_required(flag.out_csv, file.out_csv, "out-csv")?,
        labels_dir: flag.labels_dir.or(file.labels_dir),
        jobs: pick(flag.jobs, file.jobs, 0),
    };
    echo_resolved("acdc", &resolved);
    let cfg = AcdcConfig {
        min_area: resolved.min_area,
        tophat_radius: resolved.tophat_radius,
        ..AcdcConfig::default()
    };
    if let Some(dir) = &resolved.labels_dir {
        std::fs::create_dir_all(dir)?;
    }
    if resolved.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(resolved.jobs)
            .build_global()
            .ok(); // a second invocation in-process keeps the existing pool
    }

    // Bounded worker pool over the batch; each job is an isolated pipeline run.
    let results: Vec<(PathBuf, CliResult<(usize, f64)>)> = inputs
        .par_iter()
        .map(|path| {
            let run = || -> CliResult<(usize, f64)> {
                let img = io::load_gray(path)?;
                let report = acdc_segment(&img, &cfg)?;
                if let Some(dir) = &resolved.labels_dir {
                    let stem = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "image".into());
                    let raster = GrayImage::new(
                        report.labels.width(),
                        report.labels.height(),
                        16,
                        report.labels.labels().iter().map(|&l| l.min(65535) as u16).collect(),
                    )?;
                    io::save_gray(&raster, &out_path(dir, &format!("{stem}_labels.png")))?;
                }
                let mean_area = if report.count > 0 {
                    report.features.iter().map(|f| f.area as f64).sum::<f64>() / report.count as f64
                } else {
                    0.0
                };
                Ok((report.count, mean_area))
            };
            (path.clone(), run())
        })
        .collect();

    ensure_parent(&resolved.out_csv)?;
    let mut csv = std::fs::File::create(&resolved.out_csv)?;
    writeln!(csv, "image,count,mean_area")?;
    let mut failures = Vec::new();
    for (path, res) in results {
        match res {
            Ok((count, mean_area)) => {
                writeln!(csv, "{},{},{:.2}", path.display(), count, mean_area)?;
            }
            Err(e) => {
                failures.push(format!("{}: {e}", path.display()));
            }
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("failed: {f}");
        }
        return Err(CliError::Algorithm(format!("{} of {} images failed", failures.len(), inputs.len())));
    }
    println!("images analyzed = {}", inputs.len());
    Ok(())
}
