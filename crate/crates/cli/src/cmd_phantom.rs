//! Deterministic phantom generation for acceptance and demo runs.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use bioimg_core::imgcore::io;
use bioimg_core::imgcore::GrayImage;
use bioimg_core::phantom::*;
use bioimg_core::register::AffineTransform2D;

use crate::common::*;

#[derive(Args, Debug, Default, Deserialize)]
pub struct PhantomArgs {
    /// bimodal-blob | mixture | plate | nuclei | register-pair
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Nuclei count (nuclei kind).
    #[arg(long)]
    pub count: Option<usize>,
    /// Blob/well radius, by kind.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Plate grid rows and columns.
    #[arg(long)]
    pub rows: Option<u32>,
    #[arg(long)]
    pub cols: Option<u32>,
    /// Dark core radius for bimodal-blob.
    #[arg(long)]
    pub core_radius: Option<f64>,
    /// Ground-truth transform "tx,ty,rot_deg" for register-pair.
    #[arg(long)]
    pub transform: Option<String>,
}

#[derive(Serialize)]
struct PhantomResolved {
    kind: String,
    seed: u64,
    out_dir: PathBuf,
    width: u32,
    height: u32,
    count: usize,
    radius: f64,
    rows: u32,
    cols: u32,
    core_radius: Option<f64>,
    transform: Option<String>,
}

pub fn run_phantom(flag: PhantomArgs, file: PhantomArgs) -> CliResult<()> {
    let resolved = PhantomResolved {
        kind: pick_required(flag.kind, file.kind, "kind")?,
        seed: pick(flag.seed, file.seed, 0),
        out_dir: pick_required(flag.out_dir, file.out_dir, "out-dir")?,
        width: pick(flag.width, file.width, 96),
        height: pick(flag.height, file.height, 96),
        count: pick(flag.count, file.count, 50),
        radius: pick(flag.radius, file.radius, 0.0),
        rows: pick(flag.rows, file.rows, 2),
        cols: pick(flag.cols, file.cols, 3),
        core_radius: flag.core_radius.or(file.core_radius),
        transform: flag.transform.or(file.transform),
    };
    echo_resolved("phantom", &resolved);
    std::fs::create_dir_all(&resolved.out_dir)?;
    let dir = &resolved.out_dir;
    match resolved.kind.as_str() {
        "bimodal-blob" => {
            let cfg = BlobPhantomConfig {
                radius: if resolved.radius > 0.0 { resolved.radius } else { 14.0 },
                core_radius: resolved.core_radius,
                ..Default::default()
            };
            let p = blob_phantom(resolved.width, resolved.height, &cfg, resolved.seed)?;
            io::save_gray(&p.image, &out_path(dir, "image.png"))?;
            io::save_mask(&p.truth, &out_path(dir, "truth.png"))?;
        }
        "mixture" => {
            let p = mixture_phantom(
                resolved.width,
                resolved.height,
                &MixturePhantomConfig::default(),
                resolved.seed,
            )?;
            io::save_gray(&p.image, &out_path(dir, "image.png"))?;
            io::save_mask(&p.class_mask, &out_path(dir, "truth.png"))?;
        }
        "plate" => {
            let cfg = PlatePhantomConfig {
                rows: resolved.rows,
                cols: resolved.cols,
                well_radius: if resolved.radius > 0.0 { resolved.radius } else { 24.0 },
                ..Default::default()
            };
            let p = plate_phantom(&cfg, resolved.seed)?;
            io::save_rgb(&p.image, &out_path(dir, "plate.png"))?;
            let mut csv = std::fs::File::create(out_path(dir, "centers.csv"))?;
            writeln!(csv, "well_index,x,y")?;
            for (i, (x, y)) in p.well_centers.iter().enumerate() {
                writeln!(csv, "{},{:.2},{:.2}", i + 1, x, y)?;
            }
        }
        "nuclei" => {
            let cfg = NucleiPhantomConfig { count: resolved.count, ..Default::default() };
            let p = nuclei_phantom(resolved.width.max(128), resolved.height.max(128), &cfg, resolved.seed)?;
            io::save_gray(&p.image, &out_path(dir, "image.png"))?;
            let labels = GrayImage::new(
                p.truth.width(),
                p.truth.height(),
                16,
                p.truth.labels().iter().map(|&l| l.min(65535) as u16).collect(),
            )?;
            io::save_gray(&labels, &out_path(dir, "truth_labels.png"))?;
            let mut csv = std::fs::File::create(out_path(dir, "truth.csv"))?;
            writeln!(csv, "count")?;
            writeln!(csv, "{}", p.truth.count())?;
        }
        "register-pair" => {
            let truth = match &resolved.transform {
                None => AffineTransform2D::translation(7.0, -4.0),
                Some(s) => {
                    let parts: Vec<&str> = s.split(',').collect();
                    if parts.len() != 3 {
                        return Err(CliError::Config("transform must be tx,ty,rot_deg".into()));
                    }
                    let vals: Vec<f64> = parts
                        .iter()
                        .map(|p| p.trim().parse())
                        .collect::<Result<_, _>>()
                        .map_err(|_| CliError::Config("bad transform component".into()))?;
                    AffineTransform2D {
                        tx: vals[0],
                        ty: vals[1],
                        rotation: vals[2].to_radians(),
                        ..AffineTransform2D::identity()
                    }
                }
            };
            let (moving, fixed) = register_pair(resolved.width, resolved.height, &truth, resolved.seed)?;
            io::save_gray(&moving, &out_path(dir, "moving.png"))?;
            io::save_gray(&fixed, &out_path(dir, "fixed.png"))?;
            std::fs::write(out_path(dir, "truth_transform.txt"), truth.to_text())?;
        }
        other => return Err(CliError::Config(format!("unknown phantom kind `{other}`"))),
    }
    println!("phantom written to {}", dir.display());
    Ok(())
}
