//! L-smoothness estimators.
//!
//! * Trajectory-pairwise (Schema I): `max ‖∇f(x_i) − ∇f(x_j)‖ / ‖x_i − x_j‖` over a
//!   sequence of points, typically a short gradient-descent trajectory.
//! * Power iteration (Schema II): matrix-free power iteration on forward-difference
//!   Hessian-vector products, estimating `max |λ(∇²f(x))|`.
//!
//! Both can be restricted to a coordinate subspace, in which case perturbations,
//! displacements and gradient differences are masked to the chosen indices.
//! Power iteration does not converge when the two largest-magnitude eigenvalues
//! have equal magnitude and opposite sign; the estimate is returned as is.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::{checked_gradient, Objective};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIterConfig {
    /// Number of power iterations `K`; `K + 1` Hessian-vector products are taken.
    pub num_iters: usize,
    /// Perturbation scale: `γ = max(gamma_scale · ‖x‖, 1e-8)`.
    pub gamma_scale: f64,
    pub seed: u64,
}

impl Default for PowerIterConfig {
    fn default() -> Self {
        Self { num_iters: 10, gamma_scale: 1e-5, seed: 0 }
    }
}

impl PowerIterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_iters == 0 {
            return Err(Error::Invalid("power iteration needs K >= 1".into()));
        }
        if !(self.gamma_scale > 0.0) {
            return Err(Error::Invalid("gamma_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Which estimator to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Schema {
    /// Pairwise ratios along a gradient-descent trajectory of `num_points` points
    /// (the start plus `num_points − 1` steps of size `step_size`).
    TrajectoryPairwise { num_points: usize, step_size: f64 },
    PowerIteration,
}

impl Schema {
    /// Ten trajectory points with step size `1e-4`.
    pub fn trajectory_default() -> Self {
        Schema::TrajectoryPairwise { num_points: 10, step_size: 1e-4 }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn mask_of(dim: usize, indices: Option<&[usize]>) -> Result<Vec<bool>> {
    match indices {
        None => Ok(vec![true; dim]),
        Some(idx) => {
            if idx.is_empty() {
                return Err(Error::Invalid("index set must be nonempty".into()));
            }
            let mut mask = vec![false; dim];
            for &i in idx {
                if i >= dim {
                    return Err(Error::IndexOutOfRange { index: i, len: dim });
                }
                mask[i] = true;
            }
            Ok(mask)
        }
    }
}

/// Trajectory-pairwise estimate. Pairs closer than `1e-12` are skipped.
pub fn schema1_estimate(obj: &dyn Objective, trajectory: &[Vec<f64>]) -> Result<f64> {
    schema1_masked(obj, trajectory, &vec![true; obj.dim()])
}

fn schema1_masked(obj: &dyn Objective, trajectory: &[Vec<f64>], mask: &[bool]) -> Result<f64> {
    if trajectory.len() < 2 {
        return Err(Error::DegenerateTrajectory);
    }
    let grads: Vec<Vec<f64>> = trajectory
        .iter()
        .map(|x| {
            checked_gradient(obj, x)
                .map(|g| g.iter().zip(mask).map(|(v, &m)| if m { *v } else { 0.0 }).collect())
        })
        .collect::<Result<_>>()?;
    let mut best: Option<f64> = None;
    for i in 0..trajectory.len() {
        for j in i + 1..trajectory.len() {
            let dx: Vec<f64> = trajectory[i].iter().zip(&trajectory[j]).map(|(a, b)| a - b).collect();
            let nx = norm(&dx);
            if nx < 1e-12 {
                continue;
            }
            let dg: Vec<f64> = grads[i].iter().zip(&grads[j]).map(|(a, b)| a - b).collect();
            let ratio = norm(&dg) / nx;
            best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
        }
    }
    best.ok_or(Error::DegenerateTrajectory)
}

/// Gradient-descent trajectory from `x0` with displacements masked to the index set.
pub fn gd_trajectory(
    obj: &dyn Objective,
    x0: &[f64],
    num_points: usize,
    step_size: f64,
    indices: Option<&[usize]>,
) -> Result<Vec<Vec<f64>>> {
    let mask = mask_of(obj.dim(), indices)?;
    let mut points = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for _ in 1..num_points {
        let g = checked_gradient(obj, &x)?;
        for ((xi, gi), &m) in x.iter_mut().zip(&g).zip(&mask) {
            if m {
                *xi -= step_size * gi;
            }
        }
        points.push(x.clone());
    }
    Ok(points)
}

/// Power-iteration estimate of `‖∇²f(x)‖` from finite-difference Hessian-vector
/// products. Returns `‖r^{K+1}‖`.
pub fn schema2_hessian_norm(obj: &dyn Objective, x: &[f64], cfg: &PowerIterConfig) -> Result<f64> {
    power_iteration(obj, x, &vec![true; obj.dim()], cfg)
}

fn power_iteration(obj: &dyn Objective, x: &[f64], mask: &[bool], cfg: &PowerIterConfig) -> Result<f64> {
    cfg.validate()?;
    let g = checked_gradient(obj, x)?;
    let gamma = (cfg.gamma_scale * norm(x)).max(1e-8);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut r: Vec<f64> = mask
        .iter()
        .map(|&m| {
            let v: f64 = rng.gen_range(-1.0..1.0);
            if m {
                v
            } else {
                0.0
            }
        })
        .collect();
    if norm(&r) == 0.0 {
        let first = mask.iter().position(|&m| m).unwrap_or(0);
        r[first] = 1.0;
    }

    let mut probe = vec![0.0; x.len()];
    for _ in 0..=cfg.num_iters {
        let n = norm(&r);
        if n == 0.0 {
            return Ok(0.0);
        }
        for ((p, xi), ri) in probe.iter_mut().zip(x).zip(&r) {
            *p = xi + gamma * ri / n;
        }
        let gp = checked_gradient(obj, &probe)?;
        for (((ri, gpi), gi), &m) in r.iter_mut().zip(&gp).zip(&g).zip(mask) {
            *ri = if m { (gpi - gi) / gamma } else { 0.0 };
        }
    }
    Ok(norm(&r))
}

/// Runs the chosen estimator restricted to the coordinates in `indices`.
pub fn schema_estimate_subspace(
    obj: &dyn Objective,
    x: &[f64],
    indices: &[usize],
    schema: &Schema,
    cfg: &PowerIterConfig,
) -> Result<f64> {
    let mask = mask_of(obj.dim(), Some(indices))?;
    match schema {
        Schema::PowerIteration => power_iteration(obj, x, &mask, cfg),
        Schema::TrajectoryPairwise { num_points, step_size } => {
            let traj = gd_trajectory(obj, x, *num_points, *step_size, Some(indices))?;
            schema1_masked(obj, &traj, &mask)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{BlackBoxObjective, WeightedQuadratic};

    fn quad(a: &[f64]) -> WeightedQuadratic {
        WeightedQuadratic::new(a.to_vec(), vec![0.3; a.len()]).unwrap()
    }

    #[test]
    fn schema1_single_axis_displacement() {
        let q = quad(&[0.5, 1.0]);
        let traj = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        assert!((schema1_estimate(&q, &traj).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schema1_bounded_by_hessian_norm() {
        let q = quad(&[0.5, 1.0]);
        let traj = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, -1.0]];
        let est = schema1_estimate(&q, &traj).unwrap();
        assert!(est <= 2.0 + 1e-12 && est > 1.0);
    }

    #[test]
    fn schema1_linear_objective_is_zero() {
        let lin = BlackBoxObjective::new(2, |x| 3.0 * x[0] - x[1], |_| vec![3.0, -1.0]);
        let traj = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert_eq!(schema1_estimate(&lin, &traj).unwrap(), 0.0);
    }

    #[test]
    fn schema1_degenerate() {
        let q = quad(&[1.0]);
        assert_eq!(schema1_estimate(&q, &[vec![1.0]]), Err(Error::DegenerateTrajectory));
        assert_eq!(schema1_estimate(&q, &[vec![1.0], vec![1.0]]), Err(Error::DegenerateTrajectory));
    }

    #[test]
    fn schema2_isotropic_converges_immediately() {
        let q = quad(&[0.7; 5]);
        let cfg = PowerIterConfig { num_iters: 1, ..PowerIterConfig::default() };
        let est = schema2_hessian_norm(&q, &[1.0, 2.0, 3.0, 4.0, 5.0], &cfg).unwrap();
        assert!((est - 1.4).abs() < 1e-6, "{est}");
    }

    #[test]
    fn schema2_two_dim() {
        let q = quad(&[0.5, 1.0]);
        let cfg = PowerIterConfig { num_iters: 40, ..PowerIterConfig::default() };
        let est = schema2_hessian_norm(&q, &[1.0, -2.0], &cfg).unwrap();
        assert!((est - 2.0).abs() < 1e-6, "{est}");
    }

    #[test]
    fn restricted_power_iteration_uses_restricted_block() {
        let d = 100;
        let q = WeightedQuadratic::with_linear_weights(vec![0.0; d]).unwrap();
        let x = vec![1.0; d];
        let smallest: Vec<usize> = (0..5).collect();
        let cfg = PowerIterConfig { num_iters: 200, ..PowerIterConfig::default() };
        let est = schema_estimate_subspace(&q, &x, &smallest, &Schema::PowerIteration, &cfg).unwrap();
        assert!((est - 0.1).abs() < 1e-4, "{est}");
        let all: Vec<usize> = (0..d).collect();
        let full = schema_estimate_subspace(&q, &x, &all, &Schema::PowerIteration, &cfg).unwrap();
        let plain = schema2_hessian_norm(&q, &x, &cfg).unwrap();
        assert_eq!(full, plain);
    }

    #[test]
    fn restricted_trajectory_estimate_below_bound() {
        let q = WeightedQuadratic::with_linear_weights((0..20).map(|i| i as f64 * 0.1).collect()).unwrap();
        let x = vec![-1.0; 20];
        let idx: Vec<usize> = (0..4).collect();
        let est = schema_estimate_subspace(&q, &x, &idx, &Schema::trajectory_default(), &PowerIterConfig::default())
            .unwrap();
        assert!(est > 0.0 && est <= 2.0 * 4.0 / 20.0 + 1e-9, "{est}");
    }

    #[test]
    fn invalid_inputs() {
        let q = quad(&[1.0, 1.0]);
        let bad = PowerIterConfig { num_iters: 0, ..PowerIterConfig::default() };
        assert!(schema2_hessian_norm(&q, &[0.0, 0.0], &bad).is_err());
        assert!(schema_estimate_subspace(&q, &[0.0, 0.0], &[], &Schema::PowerIteration, &PowerIterConfig::default())
            .is_err());
        assert!(schema_estimate_subspace(&q, &[0.0, 0.0], &[3], &Schema::PowerIteration, &PowerIterConfig::default())
            .is_err());
    }
}
