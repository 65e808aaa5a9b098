//! Intensity-based 2D affine registration: joint histograms, mutual
//! information similarity, transform application with interpolation, and a
//! PSO optimizer family with optional local refinement.

mod mi;
mod pso;
mod transform;

pub use mi::{
    joint_histogram, joint_histogram_masked, mutual_information, mutual_information_from,
    normalized_mi, normalized_mi_from, JointHistogram,
};
pub use pso::{coordinate_descent, pso_optimize, PsoConfig, PsoOutcome, PsoVariant};
pub use transform::{apply_transform, apply_transform_with_mask, AffineTransform2D, Interp};

use crate::error::{CoreError, Result};
use crate::imgcore::GrayImage;

/// Similarity metric used as the registration objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    MutualInformation,
    NormalizedMutualInformation,
}

/// Local refinement after the swarm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Refine {
    None,
    CoordinateDescent,
}

/// Registration driver settings.
#[derive(Clone, Debug)]
pub struct RegisterConfig {
    pub metric: Metric,
    pub bins: usize,
    /// Parzen-style one-bin smoothing of the joint table inside the
    /// objective (the public metric functions stay un-smoothed).
    pub smooth_histogram: bool,
    pub interp: Interp,
    pub pso: PsoConfig,
    pub refine: Refine,
    /// Coordinate-descent sweeps.
    pub refine_sweeps: u32,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        // Search box: translations in pixels, rotation in radians, scales
        // and shear dimensionless.
        let bounds = vec![
            (-20.0, 20.0),
            (-20.0, 20.0),
            (-0.35, 0.35),
            (0.85, 1.18),
            (0.85, 1.18),
            (-0.15, 0.15),
        ];
        let mut pso = PsoConfig::new(bounds);
        pso.particles = 40;
        pso.max_iterations = 150;
        pso.no_improve_limit = 25;
        Self {
            metric: Metric::NormalizedMutualInformation,
            bins: 32,
            smooth_histogram: true,
            interp: Interp::Bilinear,
            pso,
            refine: Refine::CoordinateDescent,
            refine_sweeps: 3,
        }
    }
}

/// Negated similarity of the moving image resampled under `params` against
/// the fixed image, over the valid-overlap mask.
fn objective_value(
    moving: &GrayImage,
    fixed: &GrayImage,
    params: &[f64],
    cfg: &RegisterConfig,
) -> f64 {
    let t = AffineTransform2D::from_params(&[
        params[0], params[1], params[2], params[3], params[4], params[5],
    ]);
    let Ok((resampled, valid)) = apply_transform_with_mask(moving, &t, cfg.interp) else {
        return f64::INFINITY;
    };
    // Guard against degenerate overlap.
    let overlap = valid.iter().filter(|&&v| v).count();
    if overlap < (moving.len() / 4).max(16) {
        return f64::INFINITY;
    }
    let Ok(mut jh) = mi::joint_histogram_masked(&resampled, fixed, cfg.bins, Some(&valid)) else {
        return f64::INFINITY;
    };
    if cfg.smooth_histogram {
        jh.smooth();
    }
    match cfg.metric {
        Metric::MutualInformation => -mi::mutual_information_from(&jh),
        Metric::NormalizedMutualInformation => match mi::normalized_mi_from(&jh) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        },
    }
}

/// Register `moving` onto `fixed`: maximize the metric over the 6-parameter
/// affine space with the configured PSO variant, then optionally polish with
/// cyclic coordinate descent.
pub fn register(
    moving: &GrayImage,
    fixed: &GrayImage,
    cfg: &RegisterConfig,
) -> Result<AffineTransform2D> {
    if moving.width() != fixed.width() || moving.height() != fixed.height() {
        return Err(CoreError::DimensionMismatch("moving vs fixed".into()));
    }
    let (mlo, mhi) = moving.min_max();
    let (flo, fhi) = fixed.min_max();
    if mlo == mhi || flo == fhi {
        return Err(CoreError::Degenerate("constant image cannot be registered".into()));
    }
    let outcome = pso_optimize(|p| objective_value(moving, fixed, p, cfg), &cfg.pso)?;
    let best = match cfg.refine {
        Refine::None => outcome.best_position,
        Refine::CoordinateDescent => {
            let (x, _) = coordinate_descent(
                |p| objective_value(moving, fixed, p, cfg),
                &outcome.best_position,
                &cfg.pso.bounds,
                cfg.refine_sweeps,
                0.05,
            );
            x
        }
    };
    Ok(AffineTransform2D::from_params(&[best[0], best[1], best[2], best[3], best[4], best[5]]))
}
