//! The exact PV method: alternate a continuous P step (optimize the value set
//! with the partition fixed) and a discrete V step (optimize the assignments
//! with the value set fixed).
//!
//! Two V steps are provided: exhaustive enumeration for tiny instances, and the
//! per-coordinate search that is exact for separable objectives and costs
//! `O(c·d)`.

use crate::error::{Error, Result};
use crate::objective::{checked_gradient, checked_value, Objective};
use crate::quant::QuantizedVector;
use crate::trace::{Convergence, Phase, Recorder, TraceRecord};

/// Largest number of assignments the brute-force V step will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

const GD_GRAD_TOL: f64 = 1e-10;
const GD_MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VStepMode {
    BruteForce,
    Separable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvConfig {
    pub max_iterations: usize,
    /// Stop once the relative loss decrease over a full iteration stays below
    /// this for `patience` consecutive iterations. Zero disables early stopping.
    pub convergence_tol: f64,
    pub patience: usize,
    pub v_step_mode: VStepMode,
}

impl Default for PvConfig {
    fn default() -> Self {
        Self { max_iterations: 200, convergence_tol: 1e-12, patience: 3, v_step_mode: VStepMode::Separable }
    }
}

impl PvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Invalid("max_iterations must be >= 1".into()));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::Invalid("convergence_tol must be >= 0".into()));
        }
        Ok(())
    }

    pub(crate) fn convergence(&self) -> Convergence {
        Convergence::new(self.convergence_tol, self.patience)
    }
}

/// Output of an iterative run: the final point and one record per half-step.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub solution: QuantizedVector,
    pub trace: Vec<TraceRecord>,
}

impl RunResult {
    pub fn final_loss(&self) -> f64 {
        self.trace.last().map(|r| r.loss).unwrap_or(f64::NAN)
    }
}

/// P step: minimizes `phi` over all `y` with `P(y) ⊇ P(x)`.
///
/// Uses the objective's closed form when available and otherwise runs gradient
/// descent on the value vector. The result never has a higher loss than `x`.
pub fn p_step(obj: &dyn Objective, x: &QuantizedVector) -> Result<QuantizedVector> {
    check_dim(obj, x)?;
    let partition = x.partition();
    let candidate = match obj.exact_group_values(&partition) {
        Some(values) => QuantizedVector::from_labels(partition.labels(), &values, x.max_unique())?,
        None => p_step_gradient_descent(obj, x)?,
    };
    keep_better(obj, x, candidate)
}

/// P step by backtracking gradient descent on the `u` group values, stopping when
/// the value-space gradient norm drops below `1e-10` or after 10 000 steps.
pub fn p_step_gradient_descent(obj: &dyn Objective, x: &QuantizedVector) -> Result<QuantizedVector> {
    check_dim(obj, x)?;
    let values = fit_values(obj, x.assignments(), x.values())?;
    QuantizedVector::from_labels(x.assignments(), &values, x.max_unique())
}

/// Gradient descent over per-label values: coordinate `i` takes `values[labels[i]]`.
pub(crate) fn fit_values(obj: &dyn Objective, labels: &[usize], init: &[f64]) -> Result<Vec<f64>> {
    let expand = |v: &[f64]| labels.iter().map(|&l| v[l]).collect::<Vec<_>>();
    let mut sizes = vec![0usize; init.len()];
    for &l in labels {
        sizes[l] += 1;
    }
    let max_group = sizes.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut step = obj.smoothness().map(|l| 1.0 / (l * max_group)).unwrap_or(1.0);

    let value_grad = |v: &[f64]| -> Result<Vec<f64>> {
        let g = checked_gradient(obj, &expand(v))?;
        let mut grad = vec![0.0; v.len()];
        for (&l, gi) in labels.iter().zip(&g) {
            grad[l] += gi;
        }
        Ok(grad)
    };
    let sq_norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>();

    let mut values = init.to_vec();
    let mut loss = checked_value(obj, &expand(&values))?;
    let mut grad = value_grad(&values)?;
    for _ in 0..GD_MAX_STEPS {
        let sq = sq_norm(&grad);
        if sq.sqrt() < GD_GRAD_TOL {
            break;
        }
        // Armijo backtracking; the step is allowed to grow again after a success.
        // Near the minimum the loss decrease drops below rounding error, so a
        // step that keeps the loss level within roundoff and shrinks the gradient
        // is accepted as well.
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = values.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
            let trial_loss = checked_value(obj, &expand(&trial))?;
            let armijo = trial_loss <= loss - 0.5 * step * sq;
            let level = trial_loss <= loss + 8.0 * f64::EPSILON * loss.abs();
            if armijo || level {
                let trial_grad = value_grad(&trial)?;
                if armijo || sq_norm(&trial_grad) < sq {
                    values = trial;
                    loss = trial_loss;
                    grad = trial_grad;
                    accepted = true;
                    step *= 2.0;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(values)
}

/// V step by exhaustive enumeration of all `u^d` assignments over `V(y)`.
pub fn v_step_brute_force(obj: &dyn Objective, y: &QuantizedVector) -> Result<QuantizedVector> {
    v_step_brute_force_over(obj, y, y.values())
}

/// Exhaustive V step over an explicit candidate value list (sorted and deduplicated
/// internally). Among equal-loss assignments the lexicographically smallest wins.
pub fn v_step_brute_force_over(
    obj: &dyn Objective,
    y: &QuantizedVector,
    candidates: &[f64],
) -> Result<QuantizedVector> {
    check_dim(obj, y)?;
    let grid = sorted_grid(candidates)?;
    let d = y.dim();
    let u = grid.len();
    let states = (u as f64).powi(d as i32);
    if states > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge { states, limit: BRUTE_FORCE_LIMIT });
    }

    let mut digits = vec![0usize; d];
    let mut point = vec![grid[0]; d];
    let mut best_digits = digits.clone();
    let mut best = checked_value(obj, &point)?;
    loop {
        // Odometer increment, least significant digit last so the enumeration is
        // lexicographic in (digit_0, .., digit_{d-1}).
        let mut pos = d;
        loop {
            if pos == 0 {
                return QuantizedVector::with_assignments(&grid, best_digits, y.max_unique());
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < u {
                point[pos] = grid[digits[pos]];
                break;
            }
            digits[pos] = 0;
            point[pos] = grid[0];
        }
        let v = checked_value(obj, &point)?;
        if v < best {
            best = v;
            best_digits.copy_from_slice(&digits);
        }
    }
}

/// Optimized V step for separable objectives: each coordinate independently
/// takes the value in `V(y)` minimizing its own term. Ties go to the smaller value.
pub fn v_step_separable(obj: &dyn Objective, y: &QuantizedVector) -> Result<QuantizedVector> {
    v_step_separable_over(obj, y, y.values())
}

/// Separable V step over an explicit candidate value list.
pub fn v_step_separable_over(
    obj: &dyn Objective,
    y: &QuantizedVector,
    candidates: &[f64],
) -> Result<QuantizedVector> {
    check_dim(obj, y)?;
    if !obj.capabilities().is_separable {
        return Err(Error::MissingCapability("separable terms"));
    }
    let grid = sorted_grid(candidates)?;
    let mut assignments = Vec::with_capacity(y.dim());
    for i in 0..y.dim() {
        let mut best = (0usize, f64::INFINITY);
        for (k, &v) in grid.iter().enumerate() {
            let term = obj.separable_term(i, v).ok_or(Error::MissingCapability("separable terms"))?;
            if !term.is_finite() {
                return Err(Error::NonFiniteObjective { what: "separable term" });
            }
            if term < best.1 {
                best = (k, term);
            }
        }
        assignments.push(best.0);
    }
    QuantizedVector::with_assignments(&grid, assignments, y.max_unique())
}

/// Dispatches to the configured V step over `candidates`.
pub(crate) fn v_step_over(
    obj: &dyn Objective,
    y: &QuantizedVector,
    candidates: &[f64],
    mode: VStepMode,
) -> Result<QuantizedVector> {
    match mode {
        VStepMode::BruteForce => v_step_brute_force_over(obj, y, candidates),
        VStepMode::Separable => v_step_separable_over(obj, y, candidates),
    }
}

/// Runs the PV method from `x0`, recording the loss after every half-step.
pub fn run_pv(obj: &dyn Objective, x0: &QuantizedVector, cfg: &PvConfig, run_seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    check_dim(obj, x0)?;
    let mut x = x0.clone();
    let mut loss = checked_value(obj, &x.dequantize())?;
    let mut rec = Recorder::start(run_seed, &x, loss);
    let mut conv = cfg.convergence();
    for k in 1..=cfg.max_iterations {
        let before = loss;
        let y = p_step(obj, &x)?;
        let y_loss = checked_value(obj, &y.dequantize())?;
        rec.record(k, Phase::P, &y, y_loss, None, None);

        x = v_step_over(obj, &y, y.values(), cfg.v_step_mode)?;
        loss = checked_value(obj, &x.dequantize())?;
        rec.record(k, Phase::V, &x, loss, None, None);
        if conv.update(before, loss) {
            break;
        }
    }
    Ok(RunResult { solution: x, trace: rec.finish() })
}

pub(crate) fn check_dim(obj: &dyn Objective, x: &QuantizedVector) -> Result<()> {
    if obj.dim() == x.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: obj.dim(), found: x.dim() })
    }
}

pub(crate) fn keep_better(
    obj: &dyn Objective,
    old: &QuantizedVector,
    new: QuantizedVector,
) -> Result<QuantizedVector> {
    let old_loss = checked_value(obj, &old.dequantize())?;
    let new_loss = checked_value(obj, &new.dequantize())?;
    Ok(if new_loss <= old_loss { new } else { old.clone() })
}

pub(crate) fn sorted_grid(candidates: &[f64]) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::Invalid("candidate value set is empty".into()));
    }
    let mut grid = candidates.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup_by(|a, b| a == b);
    Ok(grid)
}
