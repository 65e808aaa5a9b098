//! Random Walker segmentation: Gaussian edge weights on the 4-connected
//! lattice and the harmonic (Dirichlet) solve for seed-arrival probabilities.

use super::solver::{solve_spd, SparseSpd};
use super::SeedSet;
use crate::error::{CoreError, Result};
use crate::imgcore::{BinaryMask, GrayImage};

/// 4-connected lattice with Gaussian edge weights.
#[derive(Clone, Debug)]
pub struct RwGraph {
    width: u32,
    height: u32,
    /// Weight of the edge between (x, y) and (x+1, y).
    horizontal: Vec<f64>,
    /// Weight of the edge between (x, y) and (x, y+1).
    vertical: Vec<f64>,
    pub beta: f64,
}

impl RwGraph {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn horizontal_weight(&self, x: u32, y: u32) -> f64 {
        self.horizontal[(y * (self.width - 1) + x) as usize]
    }

    pub fn vertical_weight(&self, x: u32, y: u32) -> f64 {
        self.vertical[(y * self.width + x) as usize]
    }

    /// Scale every edge weight by a positive constant (test hook: the RW
    /// solution is invariant under this).
    pub fn scale_weights(&mut self, k: f64) {
        assert!(k > 0.0);
        for w in self.horizontal.iter_mut().chain(self.vertical.iter_mut()) {
            *w *= k;
        }
    }

    /// Edges adjacent to node (x, y) as (neighbor index, weight).
    fn neighbors(&self, x: u32, y: u32) -> Vec<(usize, f64)> {
        let w = self.width;
        let mut out = Vec::with_capacity(4);
        if x + 1 < w {
            out.push(((y * w + x + 1) as usize, self.horizontal_weight(x, y)));
        }
        if x > 0 {
            out.push(((y * w + x - 1) as usize, self.horizontal_weight(x - 1, y)));
        }
        if y + 1 < self.height {
            out.push((((y + 1) * w + x) as usize, self.vertical_weight(x, y)));
        }
        if y > 0 {
            out.push((((y - 1) * w + x) as usize, self.vertical_weight(x, y - 1)));
        }
        out
    }
}

/// Build the lattice from image intensities min-max normalized to `[0, 1]`,
/// with weights `exp(-beta * (g_i - g_j)^2)`.
pub fn rw_build(img: &GrayImage, beta: f64) -> Result<RwGraph> {
    let values: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    rw_build_from_values(&values, img.width(), img.height(), beta, true)
}

/// Build the lattice from arbitrary per-pixel values (e.g. SUVs). When
/// `normalize` is set, values are min-max rescaled to `[0, 1]` first;
/// SUV-space callers pass `false` to use raw differences.
pub fn rw_build_from_values(
    values: &[f64],
    width: u32,
    height: u32,
    beta: f64,
    normalize: bool,
) -> Result<RwGraph> {
    if beta <= 0.0 {
        return Err(CoreError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    if values.len() != (width as usize) * (height as usize) {
        return Err(CoreError::DimensionMismatch("values vs dimensions".into()));
    }
    if width < 1 || height < 1 {
        return Err(CoreError::InvalidInput("graph needs at least one node".into()));
    }
    let g: Vec<f64> = if normalize {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            values.iter().map(|&v| (v - lo) / (hi - lo)).collect()
        } else {
            vec![0.0; values.len()]
        }
    } else {
        values.to_vec()
    };
    let w = width as usize;
    let mut horizontal = Vec::with_capacity((width as usize - 1).max(0) * height as usize);
    for y in 0..height as usize {
        for x in 0..w - 1 {
            let d = g[y * w + x] - g[y * w + x + 1];
            horizontal.push((-beta * d * d).exp());
        }
    }
    let mut vertical = Vec::with_capacity(w * (height as usize - 1).max(0));
    for y in 0..height as usize - 1 {
        for x in 0..w {
            let d = g[y * w + x] - g[(y + 1) * w + x];
            vertical.push((-beta * d * d).exp());
        }
    }
    Ok(RwGraph { width, height, horizontal, vertical, beta })
}

/// Standardized uptake value: activity concentration normalized by injected
/// dose per unit body weight.
pub fn suv_convert(activity_kbq_ml: &[f64], injected_dose_kbq: f64, weight_g: f64) -> Result<Vec<f64>> {
    if injected_dose_kbq <= 0.0 || weight_g <= 0.0 {
        return Err(CoreError::InvalidParameter("dose and weight must be positive".into()));
    }
    let denom = injected_dose_kbq / weight_g;
    Ok(activity_kbq_ml.iter().map(|&c| c / denom).collect())
}

/// Linear-solver route for the Dirichlet system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RwSolver {
    /// Dense direct solve below 10^4 unknowns, conjugate gradients above.
    Auto,
    DenseDirect,
    ConjugateGradient,
}

/// Solve the combinatorial Dirichlet problem: seeds carry probability 1
/// (foreground) or 0 (background); every unlabeled node gets the probability
/// that a random walk first reaches a foreground seed. Returns the
/// probability raster and the thresholded mask.
pub fn random_walker(
    graph: &RwGraph,
    seeds: &SeedSet,
    prob_threshold: f64,
) -> Result<(Vec<f64>, BinaryMask)> {
    random_walker_with(graph, seeds, prob_threshold, RwSolver::Auto)
}

/// [`random_walker`] with an explicit solver route.
pub fn random_walker_with(
    graph: &RwGraph,
    seeds: &SeedSet,
    prob_threshold: f64,
    solver: RwSolver,
) -> Result<(Vec<f64>, BinaryMask)> {
    if !(0.0..1.0).contains(&prob_threshold) || prob_threshold <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "probability threshold must be in (0, 1), got {prob_threshold}"
        )));
    }
    seeds.check_bounds(graph.width, graph.height)?;
    let n = (graph.width as usize) * (graph.height as usize);
    let w = graph.width as usize;

    // Mark seeds.
    let mut boundary = vec![f64::NAN; n]; // probability of marked nodes
    for &(x, y) in &seeds.foreground {
        boundary[y as usize * w + x as usize] = 1.0;
    }
    for &(x, y) in &seeds.background {
        boundary[y as usize * w + x as usize] = 0.0;
    }

    // Index the unlabeled nodes.
    let mut unknown_index = vec![usize::MAX; n];
    let mut unknown_nodes = Vec::new();
    for i in 0..n {
        if boundary[i].is_nan() {
            unknown_index[i] = unknown_nodes.len();
            unknown_nodes.push(i);
        }
    }
    let nu = unknown_nodes.len();
    if nu == 0 {
        let probs: Vec<f64> = boundary.clone();
        let mask = mask_from_probs(&probs, graph.width, graph.height, prob_threshold);
        return Ok((probs, mask));
    }

    // Reachability check: every unlabeled component must touch a seed
    // through an edge of nonzero weight, otherwise L_U is singular.
    check_reachability(graph, &boundary)?;

    // Assemble L_U and the right-hand side -B^T m (only foreground seeds
    // contribute since background probability is 0).
    let mut diag = vec![0.0f64; nu];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(4); nu];
    let mut rhs = vec![0.0f64; nu];
    for (ui, &node) in unknown_nodes.iter().enumerate() {
        let x = (node % w) as u32;
        let y = (node / w) as u32;
        for (nb, weight) in graph.neighbors(x, y) {
            diag[ui] += weight;
            if boundary[nb].is_nan() {
                rows[ui].push((unknown_index[nb], -weight));
            } else {
                rhs[ui] += weight * boundary[nb];
            }
        }
    }
    let a = SparseSpd { n: nu, diag, rows };
    let x = solve_spd(&a, &rhs)?;

    let mut probs = boundary;
    for (ui, &node) in unknown_nodes.iter().enumerate() {
        probs[node] = x[ui].clamp(0.0, 1.0);
    }
    let mask = mask_from_probs(&probs, graph.width, graph.height, prob_threshold);
    Ok((probs, mask))
}

fn mask_from_probs(probs: &[f64], width: u32, height: u32, threshold: f64) -> BinaryMask {
    let data = probs.iter().map(|&p| (p >= threshold) as u8).collect();
    BinaryMask::new(width, height, data).expect("consistent dims")
}

fn check_reachability(graph: &RwGraph, boundary: &[f64]) -> Result<()> {
    let w = graph.width as usize;
    let n = boundary.len();
    let mut reached = vec![false; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| !boundary[i].is_nan()).collect();
    for &s in &stack {
        reached[s] = true;
    }
    while let Some(i) = stack.pop() {
        let x = (i % w) as u32;
        let y = (i / w) as u32;
        for (nb, weight) in graph.neighbors(x, y) {
            if weight > 0.0 && !reached[nb] {
                reached[nb] = true;
                stack.push(nb);
            }
        }
    }
    if let Some(first) = (0..n).find(|&i| !reached[i]) {
        let count = reached.iter().filter(|&&r| !r).count();
        return Err(CoreError::SingularSystem(format!(
            "{count} unlabeled pixels unreachable from any seed (first at index {first})"
        )));
    }
    Ok(())
}

/// PET-guided variant: scale activity by `gain_in` inside the MRI mask and
/// `gain_out` outside before building the graph, then run the walker.
pub fn rw_weighted(
    pet: &GrayImage,
    mri_mask: &BinaryMask,
    gain_in: f64,
    gain_out: f64,
    beta: f64,
    seeds: &SeedSet,
    prob_threshold: f64,
) -> Result<BinaryMask> {
    if gain_in <= 0.0 || gain_out <= 0.0 {
        return Err(CoreError::InvalidParameter("gains must be positive".into()));
    }
    if pet.width() != mri_mask.width() || pet.height() != mri_mask.height() {
        return Err(CoreError::DimensionMismatch("pet vs mri mask".into()));
    }
    let values: Vec<f64> = pet
        .data()
        .iter()
        .zip(mri_mask.data())
        .map(|(&v, &m)| v as f64 * if m == 1 { gain_in } else { gain_out })
        .collect();
    let graph = rw_build_from_values(&values, pet.width(), pet.height(), beta, true)?;
    let (_, mask) = random_walker(&graph, seeds, prob_threshold)?;
    Ok(mask)
}

/// Default weighting parameter for intensity graphs.
pub const DEFAULT_BETA: f64 = 90.0;
/// Default probability threshold.
pub const DEFAULT_PROB_THRESHOLD: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain(n: u32) -> RwGraph {
        rw_build(&GrayImage::filled(n, 1, 8, 7), DEFAULT_BETA).unwrap()
    }

    #[test]
    fn constant_image_gives_unit_weights() {
        let g = rw_build(&GrayImage::filled(4, 3, 8, 99), 90.0).unwrap();
        for y in 0..3 {
            for x in 0..3 {
                assert_relative_eq!(g.horizontal_weight(x, y), 1.0);
            }
        }
        for y in 0..2 {
            for x in 0..4 {
                assert_relative_eq!(g.vertical_weight(x, y), 1.0);
            }
        }
    }

    #[test]
    fn beta_zero_rejected() {
        assert!(rw_build(&GrayImage::zeros(3, 3, 8), 0.0).is_err());
    }

    #[test]
    fn binary_step_weight_is_exp_minus_beta() {
        let img = GrayImage::new(2, 1, 8, vec![0, 1]).unwrap();
        // Min-max normalization maps {0, 1} to {0, 1}; w = exp(-90).
        let g = rw_build(&img, 90.0).unwrap();
        assert_relative_eq!(g.horizontal_weight(0, 0), (-90.0f64).exp());
    }

    #[test]
    fn suv_conversion() {
        let suv = suv_convert(&[1.0], 70_000.0, 70_000.0).unwrap();
        assert_relative_eq!(suv[0], 1.0);
        assert_relative_eq!(suv_convert(&[0.0], 1000.0, 500.0).unwrap()[0], 0.0);
        let a = suv_convert(&[2.5], 1000.0, 500.0).unwrap()[0];
        let b = suv_convert(&[2.5], 1000.0, 1000.0).unwrap()[0];
        assert_relative_eq!(b, 2.0 * a); // doubling weight doubles SUV
        assert!(suv_convert(&[1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn chain_midpoint_probability() {
        let g = chain(3);
        let seeds = SeedSet::new(vec![(0, 0)], vec![(2, 0)]).unwrap();
        let (p, _) = random_walker(&g, &seeds, 0.5).unwrap();
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn chain_harmonic_interpolation() {
        let g = chain(4);
        let seeds = SeedSet::new(vec![(0, 0)], vec![(3, 0)]).unwrap();
        let (p, mask) = random_walker(&g, &seeds, 0.5).unwrap();
        assert_relative_eq!(p[1], 2.0 / 3.0, epsilon = 1e-10);
        assert_relative_eq!(p[2], 1.0 / 3.0, epsilon = 1e-10);
        assert!(mask.get(0, 0) && mask.get(1, 0));
        assert!(!mask.get(2, 0) && !mask.get(3, 0));
    }

    #[test]
    fn probabilities_complement_and_mean_value_property() {
        let mut img = GrayImage::zeros(8, 8, 8);
        for y in 0..8 {
            for x in 0..8 {
                img.set(x, y, ((x * 31 + y * 17) % 220) as u16);
            }
        }
        let g = rw_build(&img, 50.0).unwrap();
        let seeds = SeedSet::new(vec![(1, 1), (2, 1)], vec![(6, 6)]).unwrap();
        let (p, _) = random_walker(&g, &seeds, 0.5).unwrap();
        // Complement: running with swapped seed classes gives 1 - p.
        let swapped = SeedSet::new(vec![(6, 6)], vec![(1, 1), (2, 1)]).unwrap();
        let (q, _) = random_walker(&g, &swapped, 0.5).unwrap();
        for i in 0..p.len() {
            assert!((p[i] + q[i] - 1.0).abs() < 1e-8);
            assert!((0.0..=1.0).contains(&p[i]));
        }
        // Mean-value property at unlabeled nodes.
        for y in 0..8u32 {
            for x in 0..8u32 {
                let i = (y * 8 + x) as usize;
                let is_seed = seeds.foreground.contains(&(x, y)) || seeds.background.contains(&(x, y));
                if is_seed {
                    continue;
                }
                let nbs = g.neighbors(x, y);
                let wsum: f64 = nbs.iter().map(|&(_, w)| w).sum();
                let avg: f64 = nbs.iter().map(|&(j, w)| w * p[j]).sum::<f64>() / wsum;
                assert!((p[i] - avg).abs() < 1e-8, "node ({x},{y})");
            }
        }
    }

    #[test]
    fn solution_invariant_under_weight_scaling() {
        let mut img = GrayImage::zeros(6, 6, 8);
        for y in 0..6 {
            for x in 0..6 {
                img.set(x, y, ((x * 43 + y * 11) % 200) as u16);
            }
        }
        let g = rw_build(&img, 30.0).unwrap();
        let mut g2 = g.clone();
        g2.scale_weights(7.5);
        let seeds = SeedSet::new(vec![(0, 0)], vec![(5, 5)]).unwrap();
        let (p1, _) = random_walker(&g, &seeds, 0.5).unwrap();
        let (p2, _) = random_walker(&g2, &seeds, 0.5).unwrap();
        for i in 0..p1.len() {
            assert!((p1[i] - p2[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_gains_match_plain_walker() {
        let mut img = GrayImage::zeros(7, 7, 8);
        for y in 0..7 {
            for x in 0..7 {
                img.set(x, y, ((x * 29 + y * 13) % 180) as u16);
            }
        }
        let seeds = SeedSet::new(vec![(3, 3)], vec![(0, 0)]).unwrap();
        let mri = BinaryMask::filled(7, 7);
        let weighted = rw_weighted(&img, &mri, 1.0, 1.0, 60.0, &seeds, 0.5).unwrap();
        let (_, plain) = random_walker(&rw_build(&img, 60.0).unwrap(), &seeds, 0.5).unwrap();
        assert_eq!(weighted, plain);
    }

    #[test]
    fn full_mri_mask_equals_uniform_scaling() {
        // Scaling all values uniformly cancels in the min-max normalization,
        // so the mask matches the un-gained run exactly.
        let mut img = GrayImage::zeros(7, 7, 8);
        for y in 0..7 {
            for x in 0..7 {
                img.set(x, y, ((x * 37 + y * 3) % 150) as u16);
            }
        }
        let seeds = SeedSet::new(vec![(3, 3)], vec![(6, 6)]).unwrap();
        let full = BinaryMask::filled(7, 7);
        let a = rw_weighted(&img, &full, 2.0, 2.0, 45.0, &seeds, 0.5).unwrap();
        let (_, b) = random_walker(&rw_build(&img, 45.0).unwrap(), &seeds, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shrinking_gain_out_shrinks_mask_toward_mri() {
        // Phantom with spill-out: bright blob extending beyond the MRI mask.
        let (w, h) = (20u32, 20u32);
        let mut img = GrayImage::filled(w, h, 8, 20);
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                if (x - 10).pow(2) + (y - 10).pow(2) <= 36 {
                    img.set(x as u32, y as u32, 200);
                }
            }
        }
        let mut mri = BinaryMask::zeros(w, h);
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                if (x - 10).pow(2) + (y - 10).pow(2) <= 16 {
                    mri.set(x as u32, y as u32, true);
                }
            }
        }
        let seeds = SeedSet::new(vec![(10, 10)], vec![(0, 0), (19, 0), (0, 19), (19, 19)]).unwrap();
        let baseline = rw_weighted(&img, &mri, 1.0, 1.0, 90.0, &seeds, 0.5).unwrap();
        let mut prev = baseline.area();
        for gain_out in [0.6, 0.3, 0.1] {
            let m = rw_weighted(&img, &mri, 1.1, gain_out, 90.0, &seeds, 0.5).unwrap();
            assert!(m.area() <= prev, "gain_out {gain_out}: {} > {prev}", m.area());
            prev = m.area();
        }
    }

    #[test]
    fn random_lattice_matches_dense_oracle() {
        // Dense linear-algebra oracle built with nalgebra, independent of the
        // production solver.
        use nalgebra::{DMatrix, DVector};
        let mut img = GrayImage::zeros(8, 8, 8);
        let mut state = 99u64;
        for y in 0..8 {
            for x in 0..8 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                img.set(x, y, ((state >> 33) % 256) as u16);
            }
        }
        let g = rw_build(&img, 25.0).unwrap();
        let seeds = SeedSet::new(vec![(2, 2), (3, 2)], vec![(7, 7), (0, 7)]).unwrap();
        let (p, _) = random_walker(&g, &seeds, 0.5).unwrap();

        // Oracle: assemble the full Laplacian and solve the reduced system.
        let n = 64usize;
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for y in 0..8u32 {
            for x in 0..8u32 {
                let i = (y * 8 + x) as usize;
                for (j, w) in g.neighbors(x, y) {
                    lap[(i, i)] += w / 2.0; // each edge visited twice
                    lap[(i, j)] -= w / 2.0;
                    lap[(j, j)] += w / 2.0;
                    lap[(j, i)] -= w / 2.0;
                }
            }
        }
        let seeded: Vec<(usize, f64)> = seeds
            .foreground
            .iter()
            .map(|&(x, y)| ((y * 8 + x) as usize, 1.0))
            .chain(seeds.background.iter().map(|&(x, y)| ((y * 8 + x) as usize, 0.0)))
            .collect();
        let unknown: Vec<usize> =
            (0..n).filter(|i| !seeded.iter().any(|&(s, _)| s == *i)).collect();
        let m = unknown.len();
        let mut lu = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for (a, &ia) in unknown.iter().enumerate() {
            for (b, &ib) in unknown.iter().enumerate() {
                lu[(a, b)] = lap[(ia, ib)];
            }
            for &(s, val) in &seeded {
                rhs[a] -= lap[(ia, s)] * val;
            }
        }
        let sol = lu.lu().solve(&rhs).expect("oracle solve");
        for (a, &ia) in unknown.iter().enumerate() {
            assert!(
                (p[ia] - sol[a]).abs() < 1e-8,
                "node {ia}: {} vs oracle {}",
                p[ia],
                sol[a]
            );
        }
    }
}
