//! Linearized and subspace V steps, and the PV-tuning loop built on them.
//!
//! The linearized V step replaces the objective with its quadratic upper model
//! around `y`; minimizing that model over `V(x) ⊆ V(y)` reduces to rounding the
//! gradient-step target `y − ∇φ(y)/L` to the nearest value of `V(y)` coordinate
//! by coordinate. The subspace variant only moves a selected index set `S`, with
//! the (smaller) smoothness constant `L_S` of that subspace.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adam::{adam_direction, AdamState, DEFAULT_P_STEP_LR, DEFAULT_V_STEP_LR};
use crate::error::{Error, Result};
use crate::objective::{checked_gradient, checked_value, Objective};
use crate::pv::{check_dim, p_step, PvConfig, RunResult};
use crate::quant::{nearest_index, QuantizedVector};
use crate::rng::derive_seed;
use crate::smoothness::{schema_estimate_subspace, PowerIterConfig, Schema};
use crate::trace::{Phase, Recorder};

/// Mixing weights `α_t` for the Halpern-accelerated multi-step V step.
#[derive(Debug, Clone, PartialEq)]
pub enum HalpernSchedule {
    /// `α_t = 1 / (t + 1)`.
    Harmonic,
    /// Explicit weights; must cover every inner step.
    Custom(Vec<f64>),
}

impl HalpernSchedule {
    pub fn alpha(&self, t: usize) -> f64 {
        match self {
            HalpernSchedule::Harmonic => 1.0 / (t as f64 + 1.0),
            HalpernSchedule::Custom(a) => a.get(t).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedConfig {
    pub smoothness_l: f64,
    pub inner_steps: usize,
    pub halpern: bool,
    pub schedule: HalpernSchedule,
}

impl LinearizedConfig {
    pub fn new(smoothness_l: f64) -> Self {
        Self { smoothness_l, inner_steps: 1, halpern: false, schedule: HalpernSchedule::Harmonic }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.smoothness_l > 0.0 && self.smoothness_l.is_finite()) {
            return Err(Error::Invalid("smoothness_l must be positive".into()));
        }
        if self.inner_steps == 0 {
            return Err(Error::Invalid("inner_steps must be >= 1".into()));
        }
        if self.halpern {
            if self.schedule.alpha(0) != 1.0 {
                return Err(Error::Invalid("Halpern schedule must start at alpha_0 = 1".into()));
            }
            if let HalpernSchedule::Custom(a) = &self.schedule {
                if a.len() < self.inner_steps {
                    return Err(Error::Invalid("Halpern schedule shorter than inner_steps".into()));
                }
                if a.windows(2).any(|w| !(w[1] < w[0]) || w[1] < 0.0) {
                    return Err(Error::Invalid("Halpern schedule must be strictly decreasing and >= 0".into()));
                }
            }
        }
        Ok(())
    }
}

/// `y⁺ = y − ∇φ(y)/l`.
pub fn gd_target(obj: &dyn Objective, y: &QuantizedVector, l: f64) -> Result<Vec<f64>> {
    check_dim(obj, y)?;
    if !(l > 0.0) {
        return Err(Error::Invalid("step constant l must be positive".into()));
    }
    let dense = y.dequantize();
    let g = checked_gradient(obj, &dense)?;
    Ok(dense_gd_target(&dense, &g, l))
}

fn dense_gd_target(x: &[f64], g: &[f64], l: f64) -> Vec<f64> {
    x.iter().zip(g).map(|(xi, gi)| xi - gi / l).collect()
}

/// Nearest-value rounding of every target coordinate onto a sorted grid.
pub fn round_to_grid(grid: &[f64], target: &[f64]) -> Vec<usize> {
    target.iter().map(|&t| nearest_index(grid, t)).collect()
}

/// Linearized V step: nearest element of `V(y)` to `y⁺_i` for every coordinate.
pub fn linearized_v_step(obj: &dyn Objective, y: &QuantizedVector, l: f64) -> Result<QuantizedVector> {
    let target = gd_target(obj, y, l)?;
    QuantizedVector::with_assignments(y.values(), round_to_grid(y.values(), &target), y.max_unique())
}

/// Multi-step approximation of the exact V step.
///
/// Without Halpern mixing this repeats the linearized step `T` times, always
/// rounding onto the initial value set `V(y⁰)`. With Halpern mixing the iterate
/// `z^{t+1} = (1 − α_t)·M(z^t) + α_t·z⁰` is kept continuous (the convex
/// combination generally leaves the feasible set) and only the final iterate is
/// rounded onto `V(y⁰)`.
pub fn approx_v_multi(obj: &dyn Objective, y: &QuantizedVector, cfg: &LinearizedConfig) -> Result<QuantizedVector> {
    cfg.validate()?;
    check_dim(obj, y)?;
    let grid = y.values();
    let l = cfg.smoothness_l;
    if !cfg.halpern {
        let mut z = y.clone();
        for _ in 0..cfg.inner_steps {
            let target = gd_target(obj, &z, l)?;
            z = QuantizedVector::with_assignments(grid, round_to_grid(grid, &target), y.max_unique())?;
        }
        return Ok(z);
    }

    let z0 = y.dequantize();
    let mut z = z0.clone();
    for t in 0..cfg.inner_steps {
        let g = checked_gradient(obj, &z)?;
        let target = dense_gd_target(&z, &g, l);
        let alpha = cfg.schedule.alpha(t);
        z = target
            .iter()
            .zip(&z0)
            .map(|(&tg, &start)| {
                let rounded = grid[nearest_index(grid, tg)];
                (1.0 - alpha) * rounded + alpha * start
            })
            .collect();
    }
    QuantizedVector::with_assignments(grid, round_to_grid(grid, &z), y.max_unique())
}

/// How candidate coordinates are ranked or sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    GreedyTopK,
    UniformRandom,
    GradientProportional,
}

/// How many coordinates enter the subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    Fixed(usize),
    /// Admit as many coordinates as the trust ratio allows (at least one).
    TrustRatio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceConfig {
    pub selection: Selection,
    pub tau_rule: TauRule,
    /// Cap on `‖x_new − x_old‖ / ‖x_old‖` for one discrete update.
    pub trust_ratio_rho: f64,
}

impl SubspaceConfig {
    pub fn fixed(selection: Selection, tau: usize) -> Self {
        Self { selection, tau_rule: TauRule::Fixed(tau), trust_ratio_rho: 0.01 }
    }

    pub fn trust_ratio(selection: Selection, rho: f64) -> Self {
        Self { selection, tau_rule: TauRule::TrustRatio, trust_ratio_rho: rho }
    }

    pub fn validate(&self) -> Result<()> {
        if let TauRule::Fixed(0) = self.tau_rule {
            return Err(Error::Invalid("tau must be >= 1".into()));
        }
        if !(self.trust_ratio_rho > 0.0) {
            return Err(Error::Invalid("trust ratio rho must be positive".into()));
        }
        Ok(())
    }
}

/// A selected coordinate set with its smoothness constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    indices: Vec<usize>,
    l_sub: f64,
}

impl Subspace {
    pub fn new(indices: Vec<usize>, l_sub: f64, dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Invalid("subspace must contain at least one index".into()));
        }
        let mut seen = vec![false; dim];
        for &i in &indices {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, len: dim });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Invalid(format!("index {i} repeated in subspace")));
            }
        }
        if !(l_sub > 0.0 && l_sub.is_finite()) {
            return Err(Error::Invalid("subspace smoothness must be positive".into()));
        }
        Ok(Self { indices, l_sub })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn tau(&self) -> usize {
        self.indices.len()
    }

    pub fn l_sub(&self) -> f64 {
        self.l_sub
    }
}

/// All coordinates in priority order under `selection`.
fn priority_order<R: Rng + ?Sized>(direction: &[f64], selection: Selection, rng: &mut R) -> Vec<usize> {
    let d = direction.len();
    let mut order: Vec<usize> = (0..d).collect();
    match selection {
        Selection::GreedyTopK => {
            order.sort_by(|&i, &j| direction[j].abs().total_cmp(&direction[i].abs()).then(i.cmp(&j)));
        }
        Selection::UniformRandom => order.shuffle(rng),
        Selection::GradientProportional => {
            // Weighted sampling without replacement via exponential keys
            // ln(u)/w; zero-weight coordinates come last in random order.
            let keys: Vec<(f64, f64)> = direction
                .iter()
                .map(|w| {
                    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let w = w.abs();
                    (if w > 0.0 { u.ln() / w } else { f64::NEG_INFINITY }, u)
                })
                .collect();
            order.sort_by(|&i, &j| keys[j].0.total_cmp(&keys[i].0).then(keys[j].1.total_cmp(&keys[i].1)));
        }
    }
    order
}

/// Chooses the coordinates to update.
///
/// `direction` is the proposed displacement `target − y`; greedy selection ranks
/// by `|direction_i|`, proportional sampling draws with probability
/// `∝ |direction_i|`. Under the trust-ratio rule candidates are admitted in
/// chunks of 1% of `d` until the rounded update `‖Δ‖/‖y‖` would exceed `ρ`; the
/// last chunk is then rolled back one coordinate at a time until the constraint
/// holds. At least one coordinate is always admitted.
pub fn select_subspace<R: Rng + ?Sized>(
    direction: &[f64],
    cfg: &SubspaceConfig,
    y: &QuantizedVector,
    rng: &mut R,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    let d = y.dim();
    if direction.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: direction.len() });
    }
    let order = priority_order(direction, cfg.selection, rng);
    match cfg.tau_rule {
        TauRule::Fixed(tau) => Ok(order[..tau.min(d)].to_vec()),
        TauRule::TrustRatio => {
            let grid = y.values();
            let delta_sq = |i: usize| {
                let current = y.value_at(i);
                let moved = grid[nearest_index(grid, current + direction[i])];
                (moved - current) * (moved - current)
            };
            let norm_sq: f64 = y.dequantize().iter().map(|v| v * v).sum();
            let budget = cfg.trust_ratio_rho * cfg.trust_ratio_rho * norm_sq;
            let chunk = ((d as f64) * 0.01).ceil().max(1.0) as usize;

            let mut admitted: Vec<usize> = Vec::new();
            let mut used = 0.0;
            for block in order.chunks(chunk) {
                let mut costs: Vec<f64> = Vec::with_capacity(block.len());
                for &i in block {
                    let c = delta_sq(i);
                    costs.push(c);
                    admitted.push(i);
                    used += c;
                }
                if used > budget {
                    while used > budget && admitted.len() > 1 && !costs.is_empty() {
                        used -= costs.pop().unwrap_or(0.0);
                        admitted.pop();
                    }
                    break;
                }
            }
            if admitted.is_empty() {
                admitted.push(order[0]);
            }
            Ok(admitted)
        }
    }
}

/// Smoothness constant of `phi` on the coordinate subspace spanned by `indices`.
///
/// Exact when the objective knows it (for the weighted quadratic `2·max_{i∈S} a_i`);
/// otherwise a restricted power-iteration estimate at `at`.
pub fn subspace_smoothness(obj: &dyn Objective, indices: &[usize], at: &[f64]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::Invalid("subspace must contain at least one index".into()));
    }
    if let Some(l) = obj.subspace_smoothness(indices) {
        return Ok(l);
    }
    schema_estimate_subspace(obj, at, indices, &Schema::PowerIteration, &PowerIterConfig::default())
}

/// Subspace linearized V step: coordinates in `S` are rounded from
/// `y_i − ∇_iφ(y)/L_S`; all others keep their assignment.
pub fn subspace_linearized_v_step(obj: &dyn Objective, y: &QuantizedVector, s: &Subspace) -> Result<QuantizedVector> {
    check_dim(obj, y)?;
    let dense = y.dequantize();
    let g = checked_gradient(obj, &dense)?;
    let targets: Vec<(usize, f64)> = s.indices().iter().map(|&i| (i, dense[i] - g[i] / s.l_sub())).collect();
    round_selected(y, &targets)
}

/// Rounds the listed `(index, target)` pairs onto `V(y)`, leaving other coordinates untouched.
fn round_selected(y: &QuantizedVector, targets: &[(usize, f64)]) -> Result<QuantizedVector> {
    let grid = y.values();
    let mut assignments = y.assignments().to_vec();
    for &(i, t) in targets {
        assignments[i] = nearest_index(grid, t);
    }
    QuantizedVector::with_assignments(grid, assignments, y.max_unique())
}

/// Linearized PV: exact P step followed by [`approx_v_multi`].
pub fn run_linearized_pv(
    obj: &dyn Objective,
    x0: &QuantizedVector,
    pv_cfg: &PvConfig,
    lin_cfg: &LinearizedConfig,
    run_seed: u64,
) -> Result<RunResult> {
    pv_cfg.validate()?;
    lin_cfg.validate()?;
    check_dim(obj, x0)?;
    let d = x0.dim();
    let mut x = x0.clone();
    let mut loss = checked_value(obj, &x.dequantize())?;
    let mut rec = Recorder::start(run_seed, &x, loss);
    let mut conv = pv_cfg.convergence();
    for k in 1..=pv_cfg.max_iterations {
        let before = loss;
        let y = p_step(obj, &x)?;
        let y_loss = checked_value(obj, &y.dequantize())?;
        rec.record(k, Phase::P, &y, y_loss, None, None);

        x = approx_v_multi(obj, &y, lin_cfg)?;
        loss = checked_value(obj, &x.dequantize())?;
        rec.record(k, Phase::V, &x, loss, Some(lin_cfg.smoothness_l), Some(d));
        if conv.update(before, loss) {
            break;
        }
    }
    Ok(RunResult { solution: x, trace: rec.finish() })
}

/// How the continuous value set is updated in [`run_pv_tuning`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PStepMode {
    /// Exact minimization over the value set (closed form or inner gradient descent).
    #[default]
    Exact,
    /// One Adam step on the group values per iteration.
    Adam { learning_rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvTuningConfig {
    pub pv: PvConfig,
    pub linearized: LinearizedConfig,
    pub subspace: SubspaceConfig,
    /// Use a bias-corrected Adam displacement instead of the raw gradient step.
    pub use_adam: bool,
    pub adam_learning_rate: f64,
    /// Accumulate the displacement of unselected coordinates in a straight-through buffer.
    pub combine_ste: bool,
    pub p_step: PStepMode,
}

impl PvTuningConfig {
    pub fn new(pv: PvConfig, linearized: LinearizedConfig, subspace: SubspaceConfig) -> Self {
        Self {
            pv,
            linearized,
            subspace,
            use_adam: false,
            adam_learning_rate: DEFAULT_V_STEP_LR,
            combine_ste: false,
            p_step: PStepMode::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pv.validate()?;
        self.linearized.validate()?;
        self.subspace.validate()?;
        if !(self.adam_learning_rate > 0.0) {
            return Err(Error::Invalid("adam learning rate must be positive".into()));
        }
        if let PStepMode::Adam { learning_rate } = self.p_step {
            if !(learning_rate > 0.0) {
                return Err(Error::Invalid("P-step learning rate must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Default learning rate for the Adam P step.
pub const fn default_adam_p_step() -> PStepMode {
    PStepMode::Adam { learning_rate: DEFAULT_P_STEP_LR }
}

struct AdamValues {
    state: AdamState,
}

impl AdamValues {
    fn step(&mut self, obj: &dyn Objective, y: &QuantizedVector, lr: f64) -> Result<QuantizedVector> {
        if self.state.dim() != y.num_unique() {
            self.state = AdamState::new(y.num_unique(), lr);
        }
        let g = checked_gradient(obj, &y.dequantize())?;
        let mut grad = vec![0.0; y.num_unique()];
        for (&a, gi) in y.assignments().iter().zip(&g) {
            grad[a] += gi;
        }
        let disp = adam_direction(&mut self.state, &grad)?;
        let values: Vec<f64> = y.values().iter().zip(&disp).map(|(v, dv)| v + dv).collect();
        y.with_values(&values)
    }
}

/// The PV-tuning loop: one P step, then one subspace linearized V step per iteration.
///
/// With `use_adam` the update direction is an Adam displacement and coordinates
/// in `S` are rounded from `y + displacement`; otherwise they are rounded from
/// `y − ∇φ(y)/L_S`. The subspace is chosen from the proposed displacement
/// (`−∇φ(y)/L` with the global `L` in gradient mode). With `combine_ste`, the
/// displacement of unselected coordinates accumulates in a straight-through
/// buffer; buffered coordinates whose rounding changes are applied in order of
/// buffer magnitude within what is left of the trust-ratio budget, and a
/// coordinate's buffer is cleared whenever its value changes or it is selected.
pub fn run_pv_tuning(
    obj: &dyn Objective,
    x0: &QuantizedVector,
    cfg: &PvTuningConfig,
    run_seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    check_dim(obj, x0)?;
    let d = x0.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, 0x005E_1EC7));
    let mut adam = AdamState::new(d, cfg.adam_learning_rate);
    let mut adam_values = AdamValues { state: AdamState::new(0, DEFAULT_P_STEP_LR) };
    let mut buffer = vec![0.0; d];

    let mut x = x0.clone();
    let mut loss = checked_value(obj, &x.dequantize())?;
    let mut rec = Recorder::start(run_seed, &x, loss);
    let mut conv = cfg.pv.convergence();
    for k in 1..=cfg.pv.max_iterations {
        let before = loss;
        let y = match cfg.p_step {
            PStepMode::Exact => p_step(obj, &x)?,
            PStepMode::Adam { learning_rate } => adam_values.step(obj, &x, learning_rate)?,
        };
        let y_loss = checked_value(obj, &y.dequantize())?;
        rec.record(k, Phase::P, &y, y_loss, None, None);

        let dense = y.dequantize();
        let g = checked_gradient(obj, &dense)?;
        let direction = if cfg.use_adam {
            adam_direction(&mut adam, &g)?
        } else {
            g.iter().map(|gi| -gi / cfg.linearized.smoothness_l).collect()
        };
        let selected = select_subspace(&direction, &cfg.subspace, &y, &mut rng)?;
        let (targets, l_sub): (Vec<(usize, f64)>, Option<f64>) = if cfg.use_adam {
            (selected.iter().map(|&i| (i, dense[i] + direction[i])).collect(), None)
        } else {
            let l_sub = subspace_smoothness(obj, &selected, &dense)?;
            (selected.iter().map(|&i| (i, dense[i] - g[i] / l_sub)).collect(), Some(l_sub))
        };

        let grid = y.values();
        let mut assignments = y.assignments().to_vec();
        let mut used = 0.0;
        for &(i, t) in &targets {
            assignments[i] = nearest_index(grid, t);
            let dv = grid[assignments[i]] - dense[i];
            used += dv * dv;
        }

        if cfg.combine_ste {
            let mut in_s = vec![false; d];
            for &i in &selected {
                in_s[i] = true;
                buffer[i] = 0.0;
            }
            let mut flips: Vec<(usize, usize)> = Vec::new();
            for i in 0..d {
                if in_s[i] {
                    continue;
                }
                buffer[i] += direction[i];
                let a = nearest_index(grid, dense[i] + buffer[i]);
                if a != y.assignments()[i] {
                    flips.push((i, a));
                }
            }
            flips.sort_by(|p, q| buffer[q.0].abs().total_cmp(&buffer[p.0].abs()).then(p.0.cmp(&q.0)));
            let norm_sq: f64 = dense.iter().map(|v| v * v).sum();
            let budget = cfg.subspace.trust_ratio_rho * cfg.subspace.trust_ratio_rho * norm_sq;
            for (i, a) in flips {
                let dv = grid[a] - dense[i];
                if used + dv * dv > budget {
                    continue;
                }
                used += dv * dv;
                assignments[i] = a;
                buffer[i] = 0.0;
            }
        }

        x = QuantizedVector::with_assignments(grid, assignments, y.max_unique())?;
        loss = checked_value(obj, &x.dequantize())?;
        rec.record(k, Phase::V, &x, loss, l_sub, Some(selected.len()));
        if conv.update(before, loss) {
            break;
        }
    }
    Ok(RunResult { solution: x, trace: rec.finish() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::WeightedQuadratic;

    fn quad(a: &[f64], t: &[f64]) -> WeightedQuadratic {
        WeightedQuadratic::new(a.to_vec(), t.to_vec()).unwrap()
    }

    #[test]
    fn gd_target_examples() {
        let q = quad(&[1.0, 1.0], &[0.6, 0.4]);
        let y = QuantizedVector::from_dense(&[0.0, 1.0], 2).unwrap();
        let t = gd_target(&q, &y, 2.0).unwrap();
        assert!((t[0] - 0.6).abs() < 1e-15 && (t[1] - 0.4).abs() < 1e-15);

        let y = QuantizedVector::from_dense(&[0.6, 0.4], 2).unwrap();
        assert_eq!(gd_target(&q, &y, 5.0).unwrap(), vec![0.6, 0.4]);
        assert!(gd_target(&q, &y, 0.0).is_err());
    }

    #[test]
    fn linearized_step_rounds_target() {
        // y = (0, 1) with target (0.6, 0.4) rounds to (1, 0).
        let q = quad(&[1.0, 1.0], &[0.6, 0.4]);
        let y = QuantizedVector::from_dense(&[0.0, 1.0], 2).unwrap();
        assert_eq!(linearized_v_step(&q, &y, 2.0).unwrap().dequantize(), vec![1.0, 0.0]);
    }

    #[test]
    fn linearized_step_stalls_with_large_l() {
        let q = quad(&[1.0, 1.0], &[0.6, 0.4]);
        let y = QuantizedVector::from_dense(&[0.0, 1.0], 2).unwrap();
        assert_eq!(linearized_v_step(&q, &y, 100.0).unwrap(), y);
    }

    #[test]
    fn multi_step_reduces_to_single_step() {
        let q = quad(&[0.3, 0.9, 0.5], &[0.2, 1.7, -0.4]);
        let y = QuantizedVector::from_dense(&[0.0, 1.0, 1.0], 2).unwrap();
        let cfg = LinearizedConfig::new(2.0);
        assert_eq!(approx_v_multi(&q, &y, &cfg).unwrap(), linearized_v_step(&q, &y, 2.0).unwrap());
    }

    #[test]
    fn halpern_first_mix_returns_start() {
        let q = quad(&[0.3, 0.9, 0.5], &[5.0, -5.0, 3.0]);
        let y = QuantizedVector::from_dense(&[0.0, 1.0, 1.0], 2).unwrap();
        let cfg = LinearizedConfig { halpern: true, ..LinearizedConfig::new(1.0) };
        assert_eq!(approx_v_multi(&q, &y, &cfg).unwrap(), y);
    }

    #[test]
    fn halpern_schedule_validation() {
        let mut cfg = LinearizedConfig { halpern: true, inner_steps: 3, ..LinearizedConfig::new(1.0) };
        cfg.schedule = HalpernSchedule::Custom(vec![0.5, 0.25, 0.1]);
        assert!(cfg.validate().is_err());
        cfg.schedule = HalpernSchedule::Custom(vec![1.0, 0.5, 0.5]);
        assert!(cfg.validate().is_err());
        cfg.schedule = HalpernSchedule::Custom(vec![1.0, 0.5]);
        assert!(cfg.validate().is_err());
        cfg.schedule = HalpernSchedule::Custom(vec![1.0, 0.5, 0.2]);
        assert!(cfg.validate().is_ok());
        assert!(LinearizedConfig { inner_steps: 0, ..LinearizedConfig::new(1.0) }.validate().is_err());
        assert!(LinearizedConfig::new(-1.0).validate().is_err());
    }

    #[test]
    fn greedy_selection_examples() {
        let y = QuantizedVector::from_dense(&[0.0, 1.0, 2.0], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let dir = [3.0, -5.0, 1.0];
        let s = select_subspace(&dir, &SubspaceConfig::fixed(Selection::GreedyTopK, 1), &y, &mut rng).unwrap();
        assert_eq!(s, vec![1]);
        let mut s = select_subspace(&dir, &SubspaceConfig::fixed(Selection::GreedyTopK, 3), &y, &mut rng).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1, 2]);
    }

    #[test]
    fn random_selections_are_distinct_indices() {
        let y = QuantizedVector::from_labels(&(0..50).map(|i| i % 5).collect::<Vec<_>>(), &[0., 1., 2., 3., 4.], 5)
            .unwrap();
        let dir: Vec<f64> = (0..50).map(|i| (i as f64 - 25.0) / 10.0).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for sel in [Selection::UniformRandom, Selection::GradientProportional] {
            let mut s = select_subspace(&dir, &SubspaceConfig::fixed(sel, 10), &y, &mut rng).unwrap();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 10);
        }
    }

    #[test]
    fn proportional_sampling_never_prefers_zero_weight() {
        let y = QuantizedVector::from_dense(&[0.0, 1.0, 2.0, 3.0], 4).unwrap();
        let dir = [0.0, 2.0, 0.0, 1.0];
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s =
                select_subspace(&dir, &SubspaceConfig::fixed(Selection::GradientProportional, 2), &y, &mut rng)
                    .unwrap();
            s.sort();
            assert_eq!(s, vec![1, 3]);
        }
    }

    #[test]
    fn trust_ratio_always_allows_one() {
        // Every candidate move is far larger than 1% of ‖y‖.
        let y = QuantizedVector::from_labels(&[0, 1, 0, 1], &[0.0, 10.0], 2).unwrap();
        let dir = [9.0, -9.0, 8.0, -8.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = SubspaceConfig::trust_ratio(Selection::GreedyTopK, 0.01);
        let s = select_subspace(&dir, &cfg, &y, &mut rng).unwrap();
        assert_eq!(s, vec![0]);
    }

    #[test]
    fn trust_ratio_admits_until_budget() {
        // 200 coordinates, chunk of 2; every move costs 1 and the budget is 3.5
        // moves, so the second chunk is partially rolled back to 3 moves.
        let d = 200;
        let labels: Vec<usize> = (0..d).map(|i| if i < 100 { 0 } else { 1 }).collect();
        let y = QuantizedVector::from_labels(&labels, &[0.0, 1.0], 2).unwrap();
        let norm = (100.0f64).sqrt();
        let rho = 3.5f64.sqrt() / norm;
        let dir: Vec<f64> = (0..d).map(|i| if i < 100 { 1.0 - i as f64 * 1e-3 } else { 0.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = select_subspace(&dir, &SubspaceConfig::trust_ratio(Selection::GreedyTopK, rho), &y, &mut rng)
            .unwrap();
        assert_eq!(s, vec![0, 1, 2]);
    }

    #[test]
    fn subspace_smoothness_examples() {
        let q = quad(&[0.1, 0.5, 1.0], &[0.0; 3]);
        assert!((subspace_smoothness(&q, &[0], &[0.0; 3]).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(subspace_smoothness(&q, &[0, 1, 2], &[0.0; 3]).unwrap(), 2.0);
        let q = WeightedQuadratic::with_linear_weights(vec![0.0; 100]).unwrap();
        let s: Vec<usize> = (0..10).collect();
        let l = subspace_smoothness(&q, &s, &[0.0; 100]).unwrap();
        assert!((l - 0.2).abs() < 1e-15);
        assert!(l * 10.0 <= q.smoothness().unwrap() + 1e-12);
    }

    #[test]
    fn subspace_step_touches_only_selected() {
        let q = quad(&[1.0, 1.0, 1.0], &[0.9, 0.1, 0.8]);
        let y = QuantizedVector::from_dense(&[0.0, 0.0, 1.0], 2).unwrap();
        let s = Subspace::new(vec![0], 2.0, 3).unwrap();
        let x = subspace_linearized_v_step(&q, &y, &s).unwrap();
        assert_eq!(x.dequantize(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn full_subspace_equals_linearized() {
        let q = quad(&[0.3, 0.9, 0.5, 0.7], &[0.2, 1.7, -0.4, 0.6]);
        let y = QuantizedVector::from_dense(&[0.0, 1.0, 1.0, 0.5], 3).unwrap();
        let s = Subspace::new(vec![0, 1, 2, 3], 1.8, 4).unwrap();
        assert_eq!(subspace_linearized_v_step(&q, &y, &s).unwrap(), linearized_v_step(&q, &y, 1.8).unwrap());
    }

    #[test]
    fn subspace_validation() {
        assert!(Subspace::new(vec![], 1.0, 3).is_err());
        assert!(Subspace::new(vec![0, 0], 1.0, 3).is_err());
        assert!(Subspace::new(vec![3], 1.0, 3).is_err());
        assert!(Subspace::new(vec![1], 0.0, 3).is_err());
    }
}
