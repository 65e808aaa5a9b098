//! Particle swarm optimizer family: standard inertia form, initial-position
//! attractor, constriction factor, arithmetic-crossover hybrid, and decaying
//! orientation influence.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

/// Optimizer variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsoVariant {
    /// Inertia-weight velocity update.
    Standard,
    /// Standard plus an attractor toward the caller-supplied initial
    /// position.
    InitialOrientation,
    /// Constriction-factor update (requires `phi > 4`).
    Constriction,
    /// Standard update plus arithmetic crossover between particle pairs.
    Hybrid,
    /// Initial-orientation attractor whose influence decays each iteration.
    DecayingOrientation,
}

/// Swarm parameters.
#[derive(Clone, Debug)]
pub struct PsoConfig {
    pub particles: usize,
    pub inertia: f64,
    pub c_soc: f64,
    pub c_cog: f64,
    /// Attractor constant toward `x_init` (orientation variants).
    pub c_ret: f64,
    /// Constriction kappa in [0, 1].
    pub kappa: f64,
    /// Pair-crossover rate for the hybrid variant.
    pub crossover_rate: f64,
    pub max_iterations: u32,
    /// Stop after this many stagnant iterations.
    pub no_improve_limit: u32,
    /// Improvements closer than this to the current best position still
    /// count as stagnant.
    pub epsilon: f64,
    pub variant: PsoVariant,
    pub seed: u64,
    /// Per-dimension search bounds.
    pub bounds: Vec<(f64, f64)>,
    /// Per-dimension velocity cap as a fraction of the bound range.
    pub v_max_fraction: f64,
    /// Initial orientation, required by the orientation variants.
    pub x_init: Option<Vec<f64>>,
}

impl PsoConfig {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self {
            particles: 30,
            inertia: 0.72,
            c_soc: 1.49,
            c_cog: 1.49,
            c_ret: 0.5,
            kappa: 1.0,
            crossover_rate: 0.0,
            max_iterations: 200,
            no_improve_limit: 20,
            epsilon: 1e-9,
            variant: PsoVariant::Standard,
            seed: 0,
            bounds,
            v_max_fraction: 0.5,
            x_init: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(CoreError::InvalidParameter("need at least one particle".into()));
        }
        if self.bounds.is_empty() || self.bounds.iter().any(|&(lo, hi)| lo >= hi) {
            return Err(CoreError::InvalidParameter("bounds must be non-empty and well-ordered".into()));
        }
        if !(0.0..=1.0).contains(&self.kappa) || !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(CoreError::InvalidParameter("kappa and crossover rate must be in [0, 1]".into()));
        }
        if matches!(self.variant, PsoVariant::Constriction) {
            let phi = self.c_soc + self.c_cog + if self.x_init.is_some() { self.c_ret } else { 0.0 };
            if phi <= 4.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "constriction needs phi > 4, got {phi}"
                )));
            }
        }
        if matches!(self.variant, PsoVariant::InitialOrientation | PsoVariant::DecayingOrientation)
            && self.x_init.is_none()
        {
            return Err(CoreError::InvalidParameter("orientation variants need x_init".into()));
        }
        if let Some(x) = &self.x_init {
            if x.len() != self.bounds.len() {
                return Err(CoreError::DimensionMismatch("x_init vs bounds".into()));
            }
        }
        Ok(())
    }
}

/// Optimization result: best position, its value, and the best value after
/// every iteration (monotone non-increasing).
pub struct PsoOutcome {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<f64>,
    pub iterations: u32,
}

struct Particle {
    x: Vec<f64>,
    v: Vec<f64>,
    best_x: Vec<f64>,
    best_f: f64,
}

/// Minimize `objective` over the configured box.
pub fn pso_optimize<F: FnMut(&[f64]) -> f64>(mut objective: F, cfg: &PsoConfig) -> Result<PsoOutcome> {
    cfg.validate()?;
    let dim = cfg.bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let v_max: Vec<f64> = cfg.bounds.iter().map(|&(lo, hi)| cfg.v_max_fraction * (hi - lo)).collect();

    let chi = if matches!(cfg.variant, PsoVariant::Constriction) {
        let phi = cfg.c_soc + cfg.c_cog + if cfg.x_init.is_some() { cfg.c_ret } else { 0.0 };
        2.0 * cfg.kappa / (2.0 - phi - (phi * phi - 4.0 * phi).sqrt()).abs()
    } else {
        1.0
    };

    // Decay step for the decaying-orientation variant; both c_soc and c_ret
    // decrease by it each iteration, clamped at zero.
    let delta_phi = cfg.c_ret / cfg.max_iterations.max(1) as f64;

    let mut swarm: Vec<Particle> = (0..cfg.particles)
        .map(|_| {
            let x: Vec<f64> =
                cfg.bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
            let v = vec![0.0; dim];
            let f = objective(&x);
            Particle { best_x: x.clone(), best_f: f, x, v }
        })
        .collect();

    let mut g_x = swarm[0].best_x.clone();
    let mut g_f = swarm[0].best_f;
    for p in &swarm[1..] {
        if p.best_f < g_f {
            g_f = p.best_f;
            g_x = p.best_x.clone();
        }
    }

    let mut trace = Vec::with_capacity(cfg.max_iterations as usize);
    let mut stagnant = 0u32;
    let mut iterations = 0u32;
    let mut c_soc = cfg.c_soc;
    let mut c_ret = cfg.c_ret;

    for _it in 0..cfg.max_iterations {
        iterations += 1;
        for p in swarm.iter_mut() {
            for d in 0..dim {
                let r1: f64 = rng.gen_range(0.0..1.0);
                let r2: f64 = rng.gen_range(0.0..1.0);
                let mut v = cfg.inertia * p.v[d]
                    + c_soc * r1 * (g_x[d] - p.x[d])
                    + cfg.c_cog * r2 * (p.best_x[d] - p.x[d]);
                if let Some(init) = &cfg.x_init {
                    if matches!(
                        cfg.variant,
                        PsoVariant::InitialOrientation
                            | PsoVariant::DecayingOrientation
                            | PsoVariant::Constriction
                    ) {
                        let r3: f64 = rng.gen_range(0.0..1.0);
                        v += c_ret * r3 * (init[d] - p.x[d]);
                    }
                }
                v *= chi;
                p.v[d] = v.clamp(-v_max[d], v_max[d]);
            }
            for d in 0..dim {
                p.x[d] += p.v[d];
                let (lo, hi) = cfg.bounds[d];
                // Damping boundary: clamp and bounce back with a random
                // fraction of the velocity.
                if p.x[d] < lo {
                    p.x[d] = lo;
                    p.v[d] = -p.v[d] * rng.gen_range(0.0..1.0);
                } else if p.x[d] > hi {
                    p.x[d] = hi;
                    p.v[d] = -p.v[d] * rng.gen_range(0.0..1.0);
                }
            }
        }

        // Hybrid crossover: random disjoint pairs recombine arithmetically.
        if matches!(cfg.variant, PsoVariant::Hybrid) && cfg.crossover_rate > 0.0 && swarm.len() >= 2 {
            let mut order: Vec<usize> = (0..swarm.len()).collect();
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            for pair in order.chunks_exact(2) {
                if rng.gen_range(0.0..1.0) >= cfg.crossover_rate {
                    continue;
                }
                let (i, j) = (pair[0], pair[1]);
                let mix: f64 = rng.gen_range(0.0..1.0);
                let (xi, xj): (Vec<f64>, Vec<f64>) = (0..dim)
                    .map(|d| {
                        let a = swarm[i].x[d];
                        let b = swarm[j].x[d];
                        (mix * a + (1.0 - mix) * b, mix * b + (1.0 - mix) * a)
                    })
                    .unzip();
                // Child velocities: renormalized parent-velocity sum keeping
                // each parent's speed.
                let sum: Vec<f64> = (0..dim).map(|d| swarm[i].v[d] + swarm[j].v[d]).collect();
                let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
                let speed_i = swarm[i].v.iter().map(|v| v * v).sum::<f64>().sqrt();
                let speed_j = swarm[j].v.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for d in 0..dim {
                        swarm[i].v[d] = sum[d] / norm * speed_i;
                        swarm[j].v[d] = sum[d] / norm * speed_j;
                    }
                }
                for d in 0..dim {
                    let (lo, hi) = cfg.bounds[d];
                    swarm[i].x[d] = xi[d].clamp(lo, hi);
                    swarm[j].x[d] = xj[d].clamp(lo, hi);
                }
                // Children restart their personal memory at their position.
                for idx in [i, j] {
                    let f = objective(&swarm[idx].x);
                    swarm[idx].best_x = swarm[idx].x.clone();
                    swarm[idx].best_f = f;
                }
            }
        }

        let mut improved = false;
        for p in swarm.iter_mut() {
            let f = objective(&p.x);
            if f < p.best_f {
                p.best_f = f;
                p.best_x = p.x.clone();
            }
            if f < g_f {
                // Improvements within epsilon of the incumbent position
                // still count as stagnant (relaxed convergence criterion).
                let dist: f64 = p
                    .x
                    .iter()
                    .zip(&g_x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                g_f = f;
                g_x = p.x.clone();
                if dist >= cfg.epsilon {
                    improved = true;
                }
            }
        }
        trace.push(g_f);
        if improved {
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= cfg.no_improve_limit {
                break;
            }
        }

        if matches!(cfg.variant, PsoVariant::DecayingOrientation) {
            c_soc = (c_soc - delta_phi).max(0.0);
            c_ret = (c_ret - delta_phi).max(0.0);
        }
    }

    Ok(PsoOutcome { best_position: g_x, best_value: g_f, trace, iterations })
}

/// Cyclic coordinate descent with golden-section line search, used as the
/// local polish after the swarm.
pub fn coordinate_descent<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    start: &[f64],
    bounds: &[(f64, f64)],
    sweeps: u32,
    initial_radius_fraction: f64,
) -> (Vec<f64>, f64) {
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut x = start.to_vec();
    let mut fx = objective(&x);
    let mut radius: Vec<f64> =
        bounds.iter().map(|&(lo, hi)| (hi - lo) * initial_radius_fraction).collect();
    for _ in 0..sweeps {
        for d in 0..x.len() {
            let (lo, hi) = bounds[d];
            let mut a = (x[d] - radius[d]).max(lo);
            let mut b = (x[d] + radius[d]).min(hi);
            let mut c1 = b - gr * (b - a);
            let mut c2 = a + gr * (b - a);
            let eval = |xd: f64, x: &mut Vec<f64>, obj: &mut F| {
                let old = x[d];
                x[d] = xd;
                let f = obj(x);
                x[d] = old;
                f
            };
            let mut f1 = eval(c1, &mut x, &mut objective);
            let mut f2 = eval(c2, &mut x, &mut objective);
            for _ in 0..40 {
                if f1 < f2 {
                    b = c2;
                    c2 = c1;
                    f2 = f1;
                    c1 = b - gr * (b - a);
                    f1 = eval(c1, &mut x, &mut objective);
                } else {
                    a = c1;
                    c1 = c2;
                    f1 = f2;
                    c2 = a + gr * (b - a);
                    f2 = eval(c2, &mut x, &mut objective);
                }
                if (b - a).abs() < 1e-10 {
                    break;
                }
            }
            let xd = 0.5 * (a + b);
            let fd = eval(xd, &mut x, &mut objective);
            if fd < fx {
                x[d] = xd;
                fx = fd;
            }
        }
        for r in radius.iter_mut() {
            *r *= 0.5;
        }
    }
    (x, fx)
}
