//! Straight-through estimation and stochastic rounding, the comparison baselines.
//!
//! Neither rule carries a descent guarantee; their traces may go up.

use rand::Rng;

use crate::adam::{adam_direction, AdamState, DEFAULT_V_STEP_LR};
use crate::error::{Error, Result};
use crate::objective::{checked_gradient, checked_value, Objective};
use crate::pv::{check_dim, p_step, RunResult};
use crate::quant::{nearest_index, QuantizedVector};
use crate::rng::substream;
use crate::trace::{Phase, Recorder};
use crate::vq::VQCodebook;

/// Continuous latent copy of the weights plus its optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct STEState {
    pub latent: Vec<f64>,
    pub optimizer: AdamState,
}

impl STEState {
    /// Latent initialized to `dequantize(y)`.
    pub fn new(y: &QuantizedVector, learning_rate: f64) -> Self {
        Self { latent: y.dequantize(), optimizer: AdamState::new(y.dim(), learning_rate) }
    }
}

/// One straight-through update: the gradient is taken at the quantized point `y`,
/// applied to the latent by Adam, and the latent is rounded onto `V(y)`.
pub fn ste_step(obj: &dyn Objective, state: &mut STEState, y: &QuantizedVector) -> Result<QuantizedVector> {
    check_dim(obj, y)?;
    if state.latent.len() != y.dim() {
        return Err(Error::DimensionMismatch { expected: y.dim(), found: state.latent.len() });
    }
    let g = checked_gradient(obj, &y.dequantize())?;
    let disp = adam_direction(&mut state.optimizer, &g)?;
    for (z, dz) in state.latent.iter_mut().zip(&disp) {
        *z += dz;
    }
    let grid = y.values();
    let assignments = state.latent.iter().map(|&z| nearest_index(grid, z)).collect();
    QuantizedVector::with_assignments(grid, assignments, y.max_unique())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SRConfig {
    /// Rounding weights are `distance^(−1/temperature)`; 1 is unbiased.
    pub temperature: f64,
    /// Number of nearest codes sampled from in the vector variant.
    pub k_nearest: usize,
}

impl Default for SRConfig {
    fn default() -> Self {
        Self { temperature: 1.0, k_nearest: 2 }
    }
}

impl SRConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Invalid("temperature must be positive".into()));
        }
        if self.k_nearest < 2 {
            return Err(Error::Invalid("k_nearest must be >= 2".into()));
        }
        Ok(())
    }
}

/// Probability of rounding to the left neighbour, `d_l^{-1/t} / (d_l^{-1/t} + d_r^{-1/t})`.
pub fn sr_left_probability(dist_left: f64, dist_right: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + (dist_left / dist_right).powf(1.0 / temperature))
}

/// Rounds `target` to one of its two grid neighbours at random. Targets on a grid
/// point or outside the grid's hull round deterministically to the nearest point.
pub fn stochastic_round_scalar<R: Rng + ?Sized>(target: f64, grid: &[f64], cfg: &SRConfig, rng: &mut R) -> f64 {
    assert!(!grid.is_empty(), "stochastic rounding needs a nonempty grid");
    let right = grid.partition_point(|&g| g < target);
    if right == grid.len() || right == 0 || grid[right] == target {
        return grid[nearest_index(grid, target)];
    }
    let (lo, hi) = (grid[right - 1], grid[right]);
    let p_left = sr_left_probability(target - lo, hi - target, cfg.temperature);
    if rng.gen::<f64>() < p_left {
        lo
    } else {
        hi
    }
}

/// The `k` nearest codes to `target` with their sampling probabilities.
///
/// Weights are `‖target − code‖^{−1/t}` normalized over the `k` nearest codes
/// (ties in distance go to the lower index). A code at distance zero takes all
/// the mass. This restriction makes the rounding biased in general.
pub fn sr_vector_probabilities(target: &[f64], codebook: &VQCodebook, cfg: &SRConfig) -> Vec<(usize, f64)> {
    let mut dists: Vec<(usize, f64)> = codebook
        .codes()
        .iter()
        .enumerate()
        .map(|(k, code)| (k, code.iter().zip(target).map(|(c, t)| (c - t) * (c - t)).sum::<f64>().sqrt()))
        .collect();
    dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    dists.truncate(cfg.k_nearest.min(dists.len()));
    let nearest = dists[0].1;
    if nearest == 0.0 {
        return vec![(dists[0].0, 1.0)];
    }
    let weights: Vec<f64> = dists.iter().map(|&(_, dist)| (nearest / dist).powf(1.0 / cfg.temperature)).collect();
    let total: f64 = weights.iter().sum();
    dists.iter().zip(&weights).map(|(&(k, _), w)| (k, w / total)).collect()
}

/// Samples a code index among the `k` nearest codes.
pub fn stochastic_round_vector<R: Rng + ?Sized>(
    target: &[f64],
    codebook: &VQCodebook,
    cfg: &SRConfig,
    rng: &mut R,
) -> usize {
    let probs = sr_vector_probabilities(target, codebook, cfg);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(k, p) in &probs {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs[probs.len() - 1].0
}

/// Shared settings of the baseline training loops.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub iterations: usize,
    /// Adam learning rate for the STE latent.
    pub learning_rate: f64,
    /// Step constant for the SR gradient target `y − ∇φ(y)/l`.
    pub smoothness_l: f64,
    pub sr: SRConfig,
}

impl BaselineConfig {
    pub fn new(iterations: usize, smoothness_l: f64) -> Self {
        Self { iterations, learning_rate: DEFAULT_V_STEP_LR, smoothness_l, sr: SRConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Invalid("iterations must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Invalid("learning_rate must be positive".into()));
        }
        if !(self.smoothness_l > 0.0) {
            return Err(Error::Invalid("smoothness_l must be positive".into()));
        }
        self.sr.validate()
    }
}

/// P step followed by a straight-through V step, every iteration. The latent is
/// initialized from the first P step's output.
pub fn run_ste_training(
    obj: &dyn Objective,
    x0: &QuantizedVector,
    cfg: &BaselineConfig,
    run_seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    check_dim(obj, x0)?;
    let mut x = x0.clone();
    let mut rec = Recorder::start(run_seed, &x, checked_value(obj, &x.dequantize())?);
    let mut state: Option<STEState> = None;
    for k in 1..=cfg.iterations {
        let y = p_step(obj, &x)?;
        rec.record(k, Phase::P, &y, checked_value(obj, &y.dequantize())?, None, None);
        let st = state.get_or_insert_with(|| STEState::new(&y, cfg.learning_rate));
        x = ste_step(obj, st, &y)?;
        rec.record(k, Phase::V, &x, checked_value(obj, &x.dequantize())?, None, None);
    }
    Ok(RunResult { solution: x, trace: rec.finish() })
}

/// P step followed by stochastic rounding of the gradient target onto `V(y)`.
/// Coordinate `i` at iteration `k` draws from its own stream `(run_seed, k, i)`.
pub fn run_sr_training(
    obj: &dyn Objective,
    x0: &QuantizedVector,
    cfg: &BaselineConfig,
    run_seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    check_dim(obj, x0)?;
    let mut x = x0.clone();
    let mut rec = Recorder::start(run_seed, &x, checked_value(obj, &x.dequantize())?);
    for k in 1..=cfg.iterations {
        let y = p_step(obj, &x)?;
        rec.record(k, Phase::P, &y, checked_value(obj, &y.dequantize())?, None, None);
        let dense = y.dequantize();
        let g = checked_gradient(obj, &dense)?;
        let grid = y.values();
        let assignments = dense
            .iter()
            .zip(&g)
            .enumerate()
            .map(|(i, (yi, gi))| {
                let mut rng = substream(run_seed, k as u64, i as u64);
                let v = stochastic_round_scalar(yi - gi / cfg.smoothness_l, grid, &cfg.sr, &mut rng);
                nearest_index(grid, v)
            })
            .collect();
        x = QuantizedVector::with_assignments(grid, assignments, y.max_unique())?;
        rec.record(k, Phase::V, &x, checked_value(obj, &x.dequantize())?, None, None);
    }
    Ok(RunResult { solution: x, trace: rec.finish() })
}
