//! The objective contract shared by every algorithm.

use crate::error::{Error, Result};
use crate::quant::Partition;

/// What an objective can do beyond evaluating its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub has_gradient: bool,
    pub is_separable: bool,
    pub has_exact_p_step: bool,
    pub has_known_smoothness: bool,
}

/// A differentiable function bounded from below on `R^d`.
///
/// Implementors must return a finite value for finite input. Optional
/// capabilities are advertised through [`Objective::capabilities`] and the
/// matching methods return `None` when unsupported.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn capabilities(&self) -> Capabilities;

    /// `phi_i(v)` for separable objectives `phi(x) = sum_i phi_i(x_i)`.
    fn separable_term(&self, _i: usize, _v: f64) -> Option<f64> {
        None
    }

    /// Exact minimizer over vectors that are constant on each group of
    /// `partition`: one optimal value per group, in canonical group order.
    fn exact_group_values(&self, _partition: &Partition) -> Option<Vec<f64>> {
        None
    }

    /// A global smoothness constant `L` (gradient Lipschitz constant).
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Smoothness restricted to the coordinate subspace spanned by `indices`.
    fn subspace_smoothness(&self, _indices: &[usize]) -> Option<f64> {
        None
    }
}

/// Evaluates `obj` at `x`, checking the dimension and finiteness.
pub fn checked_value(obj: &dyn Objective, x: &[f64]) -> Result<f64> {
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x.len() });
    }
    let v = obj.value(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective { what: "value" })
    }
}

/// Evaluates the gradient of `obj` at `x`, checking the dimension and finiteness.
pub fn checked_gradient(obj: &dyn Objective, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x.len() });
    }
    let g = obj.gradient(x);
    if g.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: g.len() });
    }
    if g.iter().all(|v| v.is_finite()) {
        Ok(g)
    } else {
        Err(Error::NonFiniteObjective { what: "gradient" })
    }
}
