//! Genetic-algorithm histogram enhancement for images with a roughly
//! bimodal gray-level distribution, the baseline enhancers it is compared
//! against, and the GA-assisted threshold segmentation framework.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::imgcore::{
    connected_components, convex_hull, erode, fill_holes, open, remove_small, shape_features,
    BinaryMask, Connectivity, GrayImage, StructuringElement,
};
use crate::threshold::{binarize, histogram, iots, Histogram, Polarity, IOTS_MAX_ITER};

/// One candidate gray-level mapping: an ascending array of `n` levels drawn
/// from the extended input range `[1, l_in_max]`, one per populated nonzero
/// input level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Individual {
    pub genes: Vec<u32>,
}

impl Individual {
    fn sorted(mut genes: Vec<u32>) -> Self {
        genes.sort_unstable();
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    fn assert_invariants(&self, l_max: u32) {
        debug_assert!(self.genes.windows(2).all(|w| w[0] <= w[1]), "genes sorted");
        debug_assert!(self.genes.iter().all(|&g| (1..=l_max).contains(&g)), "genes in range");
    }
}

/// GA parameters; the defaults are the calibrated setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MedGaConfig {
    pub population: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub generations: u32,
    pub seed: u64,
}

impl Default for MedGaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            crossover_rate: 0.9,
            mutation_rate: 0.01,
            tournament_size: 20,
            generations: 100,
            seed: 0,
        }
    }
}

impl MedGaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(CoreError::InvalidParameter("population must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(CoreError::InvalidParameter("rates must be in [0, 1]".into()));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return Err(CoreError::InvalidParameter("tournament size must be in [1, |P|]".into()));
        }
        Ok(())
    }
}

/// The three fitness terms and the statistics they derive from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitnessTerms {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub theta_opt: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl FitnessTerms {
    pub fn total(&self) -> f64 {
        self.tau1 + self.tau2 + self.tau3
    }
}

/// Frequencies of the populated nonzero input levels, in ascending level
/// order; the structure every individual maps onto.
#[derive(Clone, Debug)]
pub struct InputLevels {
    /// Populated nonzero gray levels, ascending.
    pub levels: Vec<u32>,
    /// Frequency of each level.
    pub freqs: Vec<u64>,
    /// Top of the extended range `L'_in = [1, l_in_max]`.
    pub l_in_max: u32,
}

impl InputLevels {
    pub fn from_histogram(hist: &Histogram) -> Result<Self> {
        let mut levels = Vec::new();
        let mut freqs = Vec::new();
        for (r, &c) in hist.bins().iter().enumerate().skip(1) {
            if c > 0 {
                levels.push(r as u32);
                freqs.push(c);
            }
        }
        if levels.len() < 2 {
            return Err(CoreError::Degenerate("need at least two populated nonzero levels".into()));
        }
        let l_in_max = *levels.last().expect("non-empty");
        Ok(Self { levels, freqs, l_in_max })
    }

    pub fn n(&self) -> usize {
        self.levels.len()
    }
}

/// Histogram induced by an individual: input frequencies land on the gene
/// levels, duplicate genes summing their frequencies.
fn induced_histogram(ind: &Individual, input: &InputLevels) -> Histogram {
    let top = input.l_in_max.max(*ind.genes.last().expect("non-empty individual"));
    let mut bins = vec![0u64; top as usize + 1];
    for (g, &f) in ind.genes.iter().zip(&input.freqs) {
        bins[*g as usize] += f;
    }
    Histogram::from_bins(bins).expect("non-empty bins")
}

/// Fitness of an individual: run IOTS on the induced histogram, then
/// `tau1 = |2*theta - mu1 - mu2|`, and `tau2/tau3` compare each
/// sub-histogram's half-width against three of its standard deviations
/// (3-sigma rule).
pub fn fitness(ind: &Individual, input: &InputLevels) -> Result<FitnessTerms> {
    if ind.len() != input.n() {
        return Err(CoreError::DimensionMismatch("individual vs input levels".into()));
    }
    let hist = induced_histogram(ind, input);
    if hist.populated_levels() < 2 {
        return Err(CoreError::Degenerate("induced histogram has a single level".into()));
    }
    let r = iots(&hist, 0.5, IOTS_MAX_ITER)?;
    let theta = r.theta_opt;

    // Frequency-weighted standard deviations of the two sub-histograms.
    let (mut n1, mut s1, mut n2, mut s2) = (0f64, 0f64, 0f64, 0f64);
    for (lvl, &c) in hist.bins().iter().enumerate() {
        if c == 0 {
            continue;
        }
        if (lvl as f64) <= theta {
            n1 += c as f64;
            s1 += lvl as f64 * c as f64;
        } else {
            n2 += c as f64;
            s2 += lvl as f64 * c as f64;
        }
    }
    let mu1 = s1 / n1;
    let mu2 = s2 / n2;
    let (mut v1, mut v2) = (0f64, 0f64);
    for (lvl, &c) in hist.bins().iter().enumerate() {
        if c == 0 {
            continue;
        }
        if (lvl as f64) <= theta {
            v1 += c as f64 * (lvl as f64 - mu1).powi(2);
        } else {
            v2 += c as f64 * (lvl as f64 - mu2).powi(2);
        }
    }
    let sigma1 = (v1 / n1).sqrt();
    let sigma2 = (v2 / n2).sqrt();
    let min_gene = *ind.genes.first().expect("non-empty") as f64;
    let max_gene = *ind.genes.last().expect("non-empty") as f64;
    let omega1 = 0.5 * (theta - min_gene);
    let omega2 = 0.5 * (max_gene - theta);
    Ok(FitnessTerms {
        tau1: (2.0 * theta - mu1 - mu2).abs(),
        tau2: (omega1 - 3.0 * sigma1).abs(),
        tau3: (omega2 - 3.0 * sigma2).abs(),
        theta_opt: theta,
        mu1,
        mu2,
        sigma1,
        sigma2,
        omega1,
        omega2,
    })
}

/// Tournament selection with reinsertion: `k` contestants are sampled with
/// replacement and the lowest-fitness one wins deterministically.
pub fn tournament_select<'a>(
    pop: &'a [(Individual, f64)],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<&'a Individual> {
    if pop.is_empty() {
        return Err(CoreError::InvalidInput("empty population".into()));
    }
    if k > pop.len() {
        return Err(CoreError::InvalidParameter("tournament larger than population".into()));
    }
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k {
        let challenger = rng.gen_range(0..pop.len());
        if pop[challenger].1 < pop[best].1 {
            best = challenger;
        }
    }
    Ok(&pop[best].0)
}

/// Single-point crossover with a fixed 0.5 mixing ratio over the circular
/// gene array: a half-length window anchored at the crossover point swaps
/// between the parents; offspring are re-sorted ascending.
pub fn crossover(
    p1: &Individual,
    p2: &Individual,
    rng: &mut ChaCha8Rng,
) -> Result<(Individual, Individual)> {
    let n = p1.len();
    if n != p2.len() {
        return Err(CoreError::DimensionMismatch("parents differ in length".into()));
    }
    // Crossover point in [1, n] (1-based), half length = round(n/2).
    let cp = rng.gen_range(1..=n);
    let hp = (n as f64 / 2.0).round() as usize;
    let (a, b) = crossover_at(&p1.genes, &p2.genes, cp, hp);
    Ok((Individual::sorted(a), Individual::sorted(b)))
}

/// The index arithmetic of the half-window exchange, 1-based `cp`.
fn crossover_at(p1: &[u32], p2: &[u32], cp: usize, hp: usize) -> (Vec<u32>, Vec<u32>) {
    let n = p1.len();
    let pick = |primary: &[u32], secondary: &[u32]| -> Vec<u32> {
        let mut child = Vec::with_capacity(n);
        if cp > hp {
            // Genes [1, cp-hp-1] and [cp, n] from the primary parent,
            // genes [cp-hp, cp-1] from the secondary.
            for i in 1..=n {
                let from_secondary = (cp - hp..=cp - 1).contains(&i);
                child.push(if from_secondary { secondary[i - 1] } else { primary[i - 1] });
            }
        } else {
            // Genes [cp, cp+hp-1] from the primary parent, the rest from the
            // secondary.
            for i in 1..=n {
                let from_primary = (cp..=cp + hp - 1).contains(&i);
                child.push(if from_primary { primary[i - 1] } else { secondary[i - 1] });
            }
        }
        child
    };
    (pick(p1, p2), pick(p2, p1))
}

/// Per-gene mutation: with probability `p_m` a gene below the individual's
/// current IOTS threshold is resampled from `[l_out_min, theta-1]`, one at
/// or above it from `[theta, l_out_max]`; empty intervals leave the gene
/// unchanged. The result is re-sorted.
pub fn mutate(
    ind: &Individual,
    p_m: f64,
    theta_opt_current: f64,
    rng: &mut ChaCha8Rng,
) -> Individual {
    let l_out_min = *ind.genes.first().expect("non-empty");
    let l_out_max = *ind.genes.last().expect("non-empty");
    let theta = theta_opt_current.round().max(0.0) as u32;
    let mut genes = ind.genes.clone();
    for g in genes.iter_mut() {
        if rng.gen_range(0.0..1.0) >= p_m {
            continue;
        }
        if *g < theta {
            if theta >= 1 && l_out_min <= theta - 1 {
                *g = rng.gen_range(l_out_min..=theta - 1);
            }
        } else if theta <= l_out_max {
            *g = rng.gen_range(theta.max(1)..=l_out_max);
        }
    }
    Individual::sorted(genes)
}

/// Result of a MedGA run.
pub struct MedGaOutcome {
    pub enhanced: GrayImage,
    pub best: Individual,
    pub best_fitness: f64,
    /// Best fitness after every generation (non-increasing under elitism).
    pub fitness_history: Vec<f64>,
}

/// Run the GA on the ROI of an image and remap each populated input level to
/// the best individual's gene at the same rank. The output image keeps the
/// input size with non-ROI pixels zeroed.
pub fn medga_run(img: &GrayImage, roi: &BinaryMask, cfg: &MedGaConfig) -> Result<MedGaOutcome> {
    cfg.validate()?;
    // Mask + stretch to the extended range [1, l_in_max].
    let (_, hi) = {
        let mut lo = u16::MAX;
        let mut hi = 0u16;
        for (i, &v) in img.data().iter().enumerate() {
            if roi.data().get(i) == Some(&1) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if lo > hi {
            return Err(CoreError::EmptyMask("roi".into()));
        }
        (lo, hi)
    };
    if hi == 0 {
        return Err(CoreError::Degenerate("roi is entirely zero".into()));
    }
    let stretched = crate::imgcore::contrast_stretch_masked(img, roi, 1, hi)?;
    let hist = histogram(&stretched, Some(roi))?;
    let input = InputLevels::from_histogram(&hist)?;
    let n = input.n();
    let l_max = input.l_in_max;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let evaluate = |ind: &Individual| -> f64 {
        fitness(ind, &input).map(|t| t.total()).unwrap_or(f64::INFINITY)
    };

    // Uniform random initialization over L'_in, sorted.
    let mut pop: Vec<(Individual, f64)> = (0..cfg.population)
        .map(|_| {
            let genes: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=l_max)).collect();
            let ind = Individual::sorted(genes);
            let f = evaluate(&ind);
            (ind, f)
        })
        .collect();

    let mut history = Vec::with_capacity(cfg.generations as usize);
    for _gen in 0..cfg.generations {
        let elite = pop
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN fitness"))
            .expect("non-empty population")
            .clone();

        let mut next: Vec<(Individual, f64)> = Vec::with_capacity(cfg.population);
        while next.len() + 1 < cfg.population {
            let parent1 = tournament_select(&pop, cfg.tournament_size, &mut rng)?.clone();
            let parent2 = tournament_select(&pop, cfg.tournament_size, &mut rng)?.clone();
            let (mut c1, mut c2) = if rng.gen_range(0.0..1.0) < cfg.crossover_rate {
                crossover(&parent1, &parent2, &mut rng)?
            } else {
                (parent1, parent2)
            };
            for child in [&mut c1, &mut c2] {
                let theta = fitness(child, &input).map(|t| t.theta_opt).unwrap_or_else(|_| {
                    // Degenerate child: mutate around its own midpoint.
                    (child.genes[0] + child.genes[child.len() - 1]) as f64 / 2.0
                });
                *child = mutate(child, cfg.mutation_rate, theta, &mut rng);
                child.assert_invariants(l_max);
            }
            let f1 = evaluate(&c1);
            let f2 = evaluate(&c2);
            next.push((c1, f1));
            next.push((c2, f2));
        }
        if next.len() < cfg.population {
            // Odd population: fill the last slot with a tournament winner.
            let extra = tournament_select(&pop, cfg.tournament_size, &mut rng)?.clone();
            let f = evaluate(&extra);
            next.push((extra, f));
        }
        // Elitism: the best individual replaces the worst offspring.
        let worst = next
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("no NaN fitness"))
            .map(|(i, _)| i)
            .expect("non-empty");
        if elite.1 < next[worst].1 {
            next[worst] = elite.clone();
        }
        pop = next;
        let best_now = pop.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        history.push(best_now);
    }

    let (best, best_fitness) = pop
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("no NaN fitness"))
        .expect("non-empty population");

    // Remap: input level at rank j -> best gene j.
    let mut map = vec![0u32; l_max as usize + 1];
    for (j, &lvl) in input.levels.iter().enumerate() {
        map[lvl as usize] = best.genes[j];
    }
    let mut enhanced = GrayImage::zeros(img.width(), img.height(), img.depth());
    for (i, &v) in stretched.data().iter().enumerate() {
        if roi.data()[i] == 1 {
            enhanced.data_mut()[i] = map[v as usize] as u16;
        }
    }
    Ok(MedGaOutcome { enhanced, best, best_fitness, fitness_history: history })
}

/// Baseline gray-level enhancers used as comparison methods.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaselineEnhancer {
    /// Histogram equalization (CDF remap over the full range).
    HistogramEqualization,
    /// HE applied independently to the two sub-histograms split at the
    /// global mean.
    BiHistogramEqualization,
    /// Power-law `s = c * r^gamma` with `c = 1` on the normalized range.
    Gamma(f64),
    /// Sigmoid stretch with steepness `lambda` around the range midpoint.
    Sigmoid(f64),
}

/// Apply a baseline enhancer over the whole image.
pub fn baseline_enhance(img: &GrayImage, kind: BaselineEnhancer) -> Result<GrayImage> {
    let max = img.max_value();
    match kind {
        BaselineEnhancer::HistogramEqualization => {
            let hist = histogram(img, None)?;
            Ok(equalize_range(img, hist.bins(), 0, max))
        }
        BaselineEnhancer::BiHistogramEqualization => {
            let mean = img.mean().floor() as u16;
            let hist = histogram(img, None)?;
            // Split at the global mean; equalize each side into its own
            // half of the output range.
            let mut lo_bins = hist.bins().to_vec();
            let mut hi_bins = hist.bins().to_vec();
            for (r, (lo, hi)) in lo_bins.iter_mut().zip(hi_bins.iter_mut()).enumerate() {
                if r as u16 <= mean {
                    *hi = 0;
                } else {
                    *lo = 0;
                }
            }
            let left = equalize_range(img, &lo_bins, 0, mean);
            let right = equalize_range(img, &hi_bins, mean.saturating_add(1).min(max), max);
            let data = img
                .data()
                .iter()
                .enumerate()
                .map(|(i, &v)| if v <= mean { left.data()[i] } else { right.data()[i] })
                .collect();
            GrayImage::new(img.width(), img.height(), img.depth(), data)
        }
        BaselineEnhancer::Gamma(gamma) => {
            if gamma <= 0.0 {
                return Err(CoreError::InvalidParameter("gamma must be positive".into()));
            }
            let data = img
                .data()
                .iter()
                .map(|&v| {
                    let r = v as f64 / max as f64;
                    (r.powf(gamma) * max as f64).round() as u16
                })
                .collect();
            GrayImage::new(img.width(), img.height(), img.depth(), data)
        }
        BaselineEnhancer::Sigmoid(lambda) => {
            if lambda <= 0.0 {
                return Err(CoreError::InvalidParameter("lambda must be positive".into()));
            }
            let (lo, hi) = img.min_max();
            let alpha = 0.5 * (hi as f64 - lo as f64);
            let l_max = hi as f64;
            let data = img
                .data()
                .iter()
                .map(|&v| {
                    let s = l_max / (1.0 + (-(lambda) * (v as f64 - alpha)).exp());
                    s.round().clamp(0.0, max as f64) as u16
                })
                .collect();
            GrayImage::new(img.width(), img.height(), img.depth(), data)
        }
    }
}

/// CDF remap of the levels selected by `bins` onto `[out_lo, out_hi]`.
fn equalize_range(img: &GrayImage, bins: &[u64], out_lo: u16, out_hi: u16) -> GrayImage {
    let total: u64 = bins.iter().sum();
    let mut cdf = vec![0u64; bins.len()];
    let mut acc = 0u64;
    for (r, &c) in bins.iter().enumerate() {
        acc += c;
        cdf[r] = acc;
    }
    let cdf_min = bins
        .iter()
        .zip(&cdf)
        .find(|(&c, _)| c > 0)
        .map(|(_, &v)| v)
        .unwrap_or(0);
    let span = (out_hi - out_lo) as f64;
    let mut out = img.clone();
    if total == 0 || total == cdf_min {
        return out;
    }
    for v in out.data_mut() {
        let r = *v as usize;
        if bins.get(r).copied().unwrap_or(0) > 0 || cdf[r] > 0 {
            let num = cdf[r].saturating_sub(cdf_min) as f64;
            let mapped = out_lo as f64 + num / (total - cdf_min) as f64 * span;
            *v = mapped.round() as u16;
        }
    }
    out
}

/// Post-processing branch of [`medga_segment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentTarget {
    /// Dark ROI (treated fibroid): binarize below the threshold.
    Fibroid,
    /// Bright ROI (enhancing tumor): binarize above the threshold.
    Brain,
}

/// MedGA-assisted segmentation: enhance the ROI, threshold with IOTS, then
/// apply the branch-specific morphological refinement.
pub fn medga_segment(
    img: &GrayImage,
    roi: &BinaryMask,
    cfg: &MedGaConfig,
    target: SegmentTarget,
) -> Result<BinaryMask> {
    let (bx, by, bw, bh) = roi
        .bounding_box()
        .ok_or_else(|| CoreError::EmptyMask("roi".into()))?;
    let outcome = medga_run(img, roi, cfg)?;
    let crop = outcome.enhanced.crop(bx, by, bw, bh)?;
    let roi_crop = roi.crop(bx, by, bw, bh)?;
    let hist = histogram(&crop, Some(&roi_crop))?;
    let theta = iots(&hist, 0.5, IOTS_MAX_ITER)?.theta_opt;
    let polarity = match target {
        SegmentTarget::Fibroid => Polarity::Below,
        SegmentTarget::Brain => Polarity::Above,
    };
    let raw = binarize(&crop, theta, polarity).and(&roi_crop)?;
    let refined = match target {
        SegmentTarget::Fibroid => refine_fibroid(&raw, &roi_crop)?,
        SegmentTarget::Brain => refine_brain(&raw)?,
    };
    BinaryMask::uncrop(&refined, roi.width(), roi.height(), bx, by)
}

fn refine_fibroid(mask: &BinaryMask, roi: &BinaryMask) -> Result<BinaryMask> {
    let m = open(mask, &StructuringElement::disk(2));
    let eroded_roi = erode(roi, &StructuringElement::disk(5));
    let m = m.and(&eroded_roi)?;
    let m = fill_holes(&m);
    let m = remove_small(&m, 120, Connectivity::Eight);
    // Shape control: fibroids are roughly spherical.
    let labels = connected_components(&m, Connectivity::Eight);
    let (w, h) = (mask.width() as f64, mask.height() as f64);
    let max_dist = (w * w + h * h).sqrt() / 3.0;
    let (cx, cy) = ((w - 1.0) / 2.0, (h - 1.0) / 2.0);
    let mut out = BinaryMask::zeros(mask.width(), mask.height());
    for label in 1..=labels.count() {
        let f = shape_features(&labels, label)?;
        let keep_shape = (0.3..0.8).contains(&f.extent) && f.eccentricity < 0.8;
        let dist = ((f.centroid.0 - cx).powi(2) + (f.centroid.1 - cy).powi(2)).sqrt();
        if keep_shape && dist <= max_dist {
            out = out.or(&labels.mask_of(label))?;
        }
    }
    Ok(out)
}

fn refine_brain(mask: &BinaryMask) -> Result<BinaryMask> {
    let m = fill_holes(mask);
    let crop_area = (m.width() as usize) * (m.height() as usize);
    let min_area = if crop_area > 300 { 30 } else { 10 };
    let m = remove_small(&m, min_area, Connectivity::Four);
    let labels = connected_components(&m, Connectivity::Eight);
    let m = if labels.count() >= 2 {
        let mut kept = BinaryMask::zeros(m.width(), m.height());
        for label in 1..=labels.count() {
            let f = shape_features(&labels, label)?;
            if f.extent >= 0.6 && f.eccentricity < 0.8 {
                kept = kept.or(&labels.mask_of(label))?;
            }
        }
        kept
    } else {
        m
    };
    if m.is_all_zero() {
        return Ok(m);
    }
    convex_hull(&m)
}
