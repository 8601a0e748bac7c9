//! Quantization-constrained vectors and the partitions they induce.
//!
//! A [`QuantizedVector`] stores a point of the set of `d`-dimensional vectors with
//! at most `c` distinct entries as a sorted value set plus per-coordinate
//! assignment indices. The assignments induce a [`Partition`] of the coordinate
//! indices: two coordinates share a group exactly when they hold the same value.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Normalizes `-0.0` to `0.0` so exact equality and hashing agree.
#[inline]
fn canonical_bits(v: f64) -> u64 {
    if v == 0.0 {
        0.0f64.to_bits()
    } else {
        v.to_bits()
    }
}

/// A vector whose entries take at most `max_unique` distinct values.
///
/// Invariants, enforced by every constructor:
/// - `values` is sorted ascending, pairwise distinct and finite;
/// - every value is referenced by at least one coordinate;
/// - every assignment indexes into `values`;
/// - `values.len() <= max_unique`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedVector {
    max_unique: usize,
    values: Vec<f64>,
    assignments: Vec<usize>,
}

impl QuantizedVector {
    /// Builds a vector from a (possibly unsorted, redundant) value list and
    /// assignments. Unused values are dropped and equal values are merged.
    pub fn from_parts(values: Vec<f64>, assignments: Vec<usize>, max_unique: usize) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::Invalid("quantized vector must have d >= 1".into()));
        }
        if max_unique == 0 {
            return Err(Error::InvalidArity { c: 0, d: assignments.len() });
        }
        for &a in &assignments {
            if a >= values.len() {
                return Err(Error::IndexOutOfRange { index: a, len: values.len() });
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value {v} in value set")));
        }

        // Distinct used values in first-use order.
        let mut first_use: Vec<f64> = Vec::new();
        let mut slot_of: HashMap<u64, usize> = HashMap::new();
        let mut remap = vec![usize::MAX; values.len()];
        for &a in &assignments {
            if remap[a] != usize::MAX {
                continue;
            }
            let v = values[a];
            let bits = canonical_bits(v);
            let slot = *slot_of.entry(bits).or_insert_with(|| {
                first_use.push(if v == 0.0 { 0.0 } else { v });
                first_use.len() - 1
            });
            remap[a] = slot;
        }
        if first_use.len() > max_unique {
            return Err(Error::TooManyUniqueValues { found: first_use.len(), max: max_unique });
        }

        let mut order: Vec<usize> = (0..first_use.len()).collect();
        order.sort_by(|&i, &j| first_use[i].total_cmp(&first_use[j]));
        let mut rank = vec![0usize; first_use.len()];
        for (r, &slot) in order.iter().enumerate() {
            rank[slot] = r;
        }
        let sorted: Vec<f64> = order.iter().map(|&slot| first_use[slot]).collect();
        let assignments = assignments.iter().map(|&a| rank[remap[a]]).collect();
        Ok(Self { max_unique, values: sorted, assignments })
    }

    /// Quantizes a dense vector that already has at most `c` distinct entries.
    pub fn from_dense(x: &[f64], c: usize) -> Result<Self> {
        let assignments = (0..x.len()).collect();
        Self::from_parts(x.to_vec(), assignments, c)
    }

    /// Builds from per-coordinate group labels and one value per label.
    pub fn from_labels(labels: &[usize], label_values: &[f64], max_unique: usize) -> Result<Self> {
        Self::from_parts(label_values.to_vec(), labels.to_vec(), max_unique)
    }

    pub fn dim(&self) -> usize {
        self.assignments.len()
    }

    pub fn max_unique(&self) -> usize {
        self.max_unique
    }

    /// The sorted value set `V(x)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn num_unique(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn value_at(&self, i: usize) -> f64 {
        self.values[self.assignments[i]]
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.assignments.iter().map(|&a| self.values[a]).collect()
    }

    /// Replaces the value set while keeping the assignments (a P-step update).
    /// Values that coincide are merged, so the result may have fewer groups.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), found: values.len() });
        }
        Self::from_parts(values.to_vec(), self.assignments.clone(), self.max_unique)
    }

    /// Replaces the assignments against a candidate value list (a V-step update).
    pub fn with_assignments(values: &[f64], assignments: Vec<usize>, max_unique: usize) -> Result<Self> {
        Self::from_parts(values.to_vec(), assignments, max_unique)
    }

    /// Same vector with a different cap on the number of distinct values.
    pub fn with_max_unique(&self, max_unique: usize) -> Result<Self> {
        if self.values.len() > max_unique {
            return Err(Error::TooManyUniqueValues { found: self.values.len(), max: max_unique });
        }
        Ok(Self { max_unique, ..self.clone() })
    }

    pub fn partition(&self) -> Partition {
        partition_of(self)
    }
}

/// Index of the element of a sorted, non-empty `grid` nearest to `target`.
/// Ties go to the smaller value.
pub fn nearest_index(grid: &[f64], target: f64) -> usize {
    debug_assert!(!grid.is_empty());
    let pos = grid.partition_point(|&v| v < target);
    if pos == 0 {
        return 0;
    }
    if pos == grid.len() {
        return grid.len() - 1;
    }
    let below = target - grid[pos - 1];
    let above = grid[pos] - target;
    if above < below {
        pos
    } else {
        pos - 1
    }
}

/// Dense view of `q`: `out[i] = values[assignments[i]]`.
pub fn dequantize(q: &QuantizedVector) -> Vec<f64> {
    q.dequantize()
}

/// A partition of `{0, .., d-1}` into disjoint non-empty groups.
///
/// Stored canonically: each group sorted ascending, groups ordered by their
/// smallest member. Two canonical partitions are equal iff they are the same
/// set partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    dim: usize,
    groups: Vec<Vec<usize>>,
    label: Vec<usize>,
}

impl Partition {
    pub fn new(dim: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut label = vec![usize::MAX; dim];
        for (g, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::Invalid("partition contains an empty group".into()));
            }
            for &i in group {
                if i >= dim {
                    return Err(Error::IndexOutOfRange { index: i, len: dim });
                }
                if label[i] != usize::MAX {
                    return Err(Error::Invalid(format!("index {i} appears in two groups")));
                }
                label[i] = g;
            }
        }
        if let Some(i) = label.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Invalid(format!("index {i} is not covered by the partition")));
        }
        Ok(Self::from_label_vec(&label))
    }

    /// Builds the partition whose groups are the level sets of `labels`.
    pub fn from_labels(labels: &[usize]) -> Self {
        Self::from_label_vec(labels)
    }

    fn from_label_vec(labels: &[usize]) -> Self {
        let mut canon: HashMap<usize, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut label = Vec::with_capacity(labels.len());
        for (i, &l) in labels.iter().enumerate() {
            let g = *canon.entry(l).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
            label.push(g);
        }
        Self { dim: labels.len(), groups, label }
    }

    /// Every coordinate in its own group.
    pub fn singletons(dim: usize) -> Self {
        Self::from_label_vec(&(0..dim).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Canonical group index of every coordinate.
    pub fn labels(&self) -> &[usize] {
        &self.label
    }

    pub fn same_group(&self, i: usize, j: usize) -> bool {
        self.label[i] == self.label[j]
    }
}

/// The partition `P(x)` induced by equal values.
pub fn partition_of(q: &QuantizedVector) -> Partition {
    Partition::from_labels(q.assignments())
}

/// True iff every group of `fine` lies inside one group of `coarse`,
/// i.e. `P(coarse) ⊇ P(fine)` in the containment order on partitions.
pub fn refines(coarse: &Partition, fine: &Partition) -> Result<bool> {
    if coarse.dim() != fine.dim() {
        return Err(Error::DimensionMismatch { expected: coarse.dim(), found: fine.dim() });
    }
    Ok(fine.groups().iter().all(|group| {
        let owner = coarse.labels()[group[0]];
        group.iter().all(|&i| coarse.labels()[i] == owner)
    }))
}
