//! Concrete objectives: the weighted separable quadratic used by the desk-scale
//! experiments, a dense quadratic for stress tests, and a black-box adapter.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objective::{Capabilities, Objective};
use crate::quant::{Partition, QuantizedVector};

/// `phi(x) = sum_i a_i (x_i − x*_i)^2` with positive weights `a`.
///
/// The Hessian is `2·diag(a)`, so the smoothness constant is `2·max a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuadratic {
    weights: Vec<f64>,
    target: Vec<f64>,
}

impl WeightedQuadratic {
    pub fn new(weights: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("quadratic must have d >= 1".into()));
        }
        if weights.len() != target.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), found: target.len() });
        }
        if let Some(a) = weights.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Invalid(format!("weights must be positive and finite, got {a}")));
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("target must be finite".into()));
        }
        Ok(Self { weights, target })
    }

    /// Weights `a_i = i/d` for `i = 1..=d`.
    pub fn with_linear_weights(target: Vec<f64>) -> Result<Self> {
        let d = target.len() as f64;
        let weights = (1..=target.len()).map(|i| i as f64 / d).collect();
        Self::new(weights, target)
    }

    /// Linear weights and a standard-normal minimizer drawn from `rng`.
    pub fn random_linear<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        let target = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        Self::with_linear_weights(target)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len == self.weights.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.weights.len(), found: len })
        }
    }

    pub fn quadratic_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.value(x))
    }

    pub fn quadratic_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(self.gradient(x))
    }

    /// `a_i (v − x*_i)^2`.
    pub fn quadratic_separable_term(&self, i: usize, v: f64) -> Result<f64> {
        if i >= self.weights.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.weights.len() });
        }
        let r = v - self.target[i];
        Ok(self.weights[i] * r * r)
    }

    /// Weighted mean of the minimizer over one group.
    fn group_value(&self, group: &[usize]) -> f64 {
        if let [i] = group {
            return self.target[*i];
        }
        let (num, den) = group.iter().fold((0.0, 0.0), |(n, d), &i| {
            (n + self.weights[i] * self.target[i], d + self.weights[i])
        });
        num / den
    }

    /// Closed-form P step: the minimizer over all `y` with `P(y) ⊇ partition`.
    /// Groups whose optimal values coincide are merged.
    pub fn exact_p_step(&self, partition: &Partition, max_unique: usize) -> Result<QuantizedVector> {
        self.check_dim(partition.dim())?;
        let values: Vec<f64> = partition.groups().iter().map(|g| self.group_value(g)).collect();
        QuantizedVector::from_labels(partition.labels(), &values, max_unique)
    }
}

impl Objective for WeightedQuadratic {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.target)
            .zip(x)
            .map(|((a, t), v)| {
                let r = v - t;
                a * r * r
            })
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.target)
            .zip(x)
            .map(|((a, t), v)| 2.0 * a * (v - t))
            .collect()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_gradient: true,
            is_separable: true,
            has_exact_p_step: true,
            has_known_smoothness: true,
        }
    }

    fn separable_term(&self, i: usize, v: f64) -> Option<f64> {
        self.quadratic_separable_term(i, v).ok()
    }

    fn exact_group_values(&self, partition: &Partition) -> Option<Vec<f64>> {
        if partition.dim() != self.dim() {
            return None;
        }
        Some(partition.groups().iter().map(|g| self.group_value(g)).collect())
    }

    fn smoothness(&self) -> Option<f64> {
        Some(2.0 * self.weights.iter().cloned().fold(f64::MIN, f64::max))
    }

    fn subspace_smoothness(&self, indices: &[usize]) -> Option<f64> {
        if indices.is_empty() {
            return None;
        }
        let mut max = f64::MIN;
        for &i in indices {
            max = max.max(*self.weights.get(i)?);
        }
        Some(2.0 * max)
    }
}

/// `phi(x) = (x − x*)ᵀ A (x − x*)` with a symmetric positive definite `A`.
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    matrix: DMatrix<f64>,
    target: DVector<f64>,
    smoothness: f64,
}

impl DenseQuadratic {
    pub fn new(matrix: DMatrix<f64>, target: Vec<f64>) -> Result<Self> {
        let d = target.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        if (&matrix - matrix.transpose()).abs().max() > 1e-12 * matrix.abs().max().max(1.0) {
            return Err(Error::Invalid("quadratic form must be symmetric".into()));
        }
        let eig = SymmetricEigen::new(matrix.clone());
        if eig.eigenvalues.min() <= 0.0 {
            return Err(Error::Invalid("quadratic form must be positive definite".into()));
        }
        let smoothness = 2.0 * eig.eigenvalues.max();
        Ok(Self { matrix, target: DVector::from_vec(target), smoothness })
    }

    /// `A = BᵀB/d + 0.1·I` with a standard-normal `B`, and a standard-normal minimizer.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        let b = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut a = b.transpose() * &b / d as f64;
        for i in 0..d {
            a[(i, i)] += 0.1;
        }
        let a = (&a + a.transpose()) * 0.5;
        let target = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        Self::new(a, target)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn target(&self) -> &[f64] {
        self.target.as_slice()
    }
}

impl Objective for DenseQuadratic {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = DVector::from_column_slice(x) - &self.target;
        r.dot(&(&self.matrix * &r))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(x) - &self.target;
        (&self.matrix * r * 2.0).as_slice().to_vec()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_gradient: true,
            is_separable: false,
            has_exact_p_step: true,
            has_known_smoothness: true,
        }
    }

    /// Solves `(Mᵀ A M) v = Mᵀ A x*` where `M` is the group indicator matrix.
    fn exact_group_values(&self, partition: &Partition) -> Option<Vec<f64>> {
        if partition.dim() != self.dim() {
            return None;
        }
        let d = self.dim();
        let u = partition.num_groups();
        let labels = partition.labels();
        let m = DMatrix::from_fn(d, u, |i, k| if labels[i] == k { 1.0 } else { 0.0 });
        let am = &self.matrix * &m;
        let lhs = m.transpose() * &am;
        let rhs = am.transpose() * &self.target;
        let sol = lhs.clone().cholesky().map(|c| c.solve(&rhs)).or_else(|| lhs.lu().solve(&rhs))?;
        Some(sol.as_slice().to_vec())
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }

    fn subspace_smoothness(&self, indices: &[usize]) -> Option<f64> {
        if indices.is_empty() || indices.iter().any(|&i| i >= self.dim()) {
            return None;
        }
        let sub = DMatrix::from_fn(indices.len(), indices.len(), |r, c| self.matrix[(indices[r], indices[c])]);
        Some(2.0 * SymmetricEigen::new(sub).eigenvalues.max())
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Adapter for an arbitrary differentiable function given as callbacks.
/// Reports no separability and no exact P step.
#[derive(Clone)]
pub struct BlackBoxObjective {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
    smoothness: Option<f64>,
}

impl BlackBoxObjective {
    pub fn new<V, G>(dim: usize, value: V, gradient: G) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self { dim, value: Arc::new(value), gradient: Arc::new(gradient), smoothness: None }
    }

    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = Some(l);
        self
    }
}

impl fmt::Debug for BlackBoxObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxObjective")
            .field("dim", &self.dim)
            .field("smoothness", &self.smoothness)
            .finish_non_exhaustive()
    }
}

impl Objective for BlackBoxObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            has_gradient: true,
            is_separable: false,
            has_exact_p_step: false,
            has_known_smoothness: self.smoothness.is_some(),
        }
    }

    fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }
}
