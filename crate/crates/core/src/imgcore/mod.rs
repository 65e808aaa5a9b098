//! Image and mask containers plus the shared low-level raster operators
//! every pipeline builds on: filters, binary and gray-scale morphology,
//! connected components, convex hull, distance transforms, regional maxima,
//! marker-controlled watershed and Canny edges.

mod canny;
mod components;
mod distance;
mod filter;
mod hull;
mod image;
pub mod io;
mod maxima;
mod morph;
mod watershed;

pub use canny::canny_edges;
pub use components::{connected_components, fill_holes, remove_small, shape_features, Connectivity};
pub use distance::{distance_transform, EdtMode};
pub use filter::{
    bilateral_default_window, bilateral_filter, contrast_stretch, contrast_stretch_masked,
    gray_dilate, gray_erode, gray_open, stick_filter, white_tophat,
};
pub use hull::convex_hull;
pub use image::{BinaryMask, ComponentFeatures, GrayImage, LabelMap, SeKind, StructuringElement};
pub use maxima::regional_maxima;
pub use morph::{close, dilate, erode, inner_boundary, morphology, open, MorphOp};
pub use watershed::{laplacian_relief, watershed};
