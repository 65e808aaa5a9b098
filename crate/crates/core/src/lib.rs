//! Classical (non-deep-learning) biomedical image analysis toolkit.
//!
//! The crate is organized around pipeline families that all build on the
//! raster containers and low-level operators in [`imgcore`]:
//!
//! - [`threshold`]: histograms, IOTS and Otsu threshold selection, local mean
//!   binarization.
//! - [`regionseg`]: quadtree split-and-merge seed detection plus adaptive
//!   multi-seeded region growing (uterine fibroid style segmentation).
//! - [`clusterseg`]: fuzzy C-means and the FCM-based brain GTV, necrosis
//!   (NeXt) and multispectral prostate pipelines.
//! - [`graphseg`]: GrowCut-style cellular automaton (GTVcut) and the Random
//!   Walker with intensity or SUV edge weights.
//! - [`medga`]: genetic-algorithm histogram enhancement with baseline
//!   enhancers and the GA-assisted threshold segmentation framework.
//! - [`colony`]: clonogenic-assay plate analysis (CHT well detection, colony
//!   extraction, ACC/SF evaluation).
//! - [`acdc`]: fluorescence cell-nuclei detection and counting via
//!   marker-controlled watershed.
//! - [`register`]: 2D affine registration with mutual-information metrics and
//!   a family of PSO optimizers.
//! - [`metrics`]: segmentation overlap/distance/volume metrics and image
//!   enhancement metrics.
//! - [`phantom`]: deterministic synthetic images with ground truth, used by
//!   the batch CLI and the validation suites.
//!
//! All operations are pure functions of their inputs; distinct images can be
//! processed in parallel without coordination.

pub mod acdc;
pub mod colony;
pub mod clusterseg;
pub mod error;
pub mod graphseg;
pub mod imgcore;
pub mod medga;
pub mod metrics;
pub mod phantom;
pub mod regionseg;
pub mod register;
pub mod threshold;

pub use error::{CoreError, Result};
