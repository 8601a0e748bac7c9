//! Vector quantization: the dense vector is split into groups of `m` consecutive
//! coordinates and every group is replaced by one of at most `c` codes.
//!
//! The linearized V step minimizes `‖x − B‖²` over assignments for a target `B`.
//! Reassigning group `j` from code `o` to code `k` changes that loss by
//! `(‖c_k‖² − ‖c_o‖²) − 2(⟨c_k, B_j⟩ − ⟨c_o, B_j⟩)`; the first bracket only depends
//! on the code pair and the second on the group, so both are tabulated once and
//! every candidate move is then priced in O(1).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objective::{checked_gradient, checked_value, Objective};
use crate::pv::{fit_values, PvConfig, RunResult};
use crate::quant::Partition;
use crate::trace::{Phase, Recorder};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A list of pairwise distinct codes of a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct VQCodebook {
    code_dim: usize,
    codes: Vec<Vec<f64>>,
}

impl VQCodebook {
    pub fn new(code_dim: usize, codes: Vec<Vec<f64>>) -> Result<Self> {
        if code_dim == 0 {
            return Err(Error::Invalid("code_dim must be >= 1".into()));
        }
        if codes.is_empty() {
            return Err(Error::Invalid("codebook must not be empty".into()));
        }
        for (k, code) in codes.iter().enumerate() {
            if code.len() != code_dim {
                return Err(Error::DimensionMismatch { expected: code_dim, found: code.len() });
            }
            if code.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("code {k} is not finite")));
            }
            if codes[..k].iter().any(|other| other == code) {
                return Err(Error::Invalid(format!("code {k} duplicates an earlier code")));
            }
        }
        Ok(Self { code_dim, codes })
    }

    pub fn code_dim(&self) -> usize {
        self.code_dim
    }

    pub fn codes(&self) -> &[Vec<f64>] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// Index of the code nearest to `target` in squared distance; ties go to the lowest index.
pub fn vq_nearest_code(codebook: &VQCodebook, target: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, code) in codebook.codes.iter().enumerate() {
        let dist = sq_dist(code, target);
        if dist < best.1 {
            best = (k, dist);
        }
    }
    best.0
}

/// A vector-quantized point: coordinate `j·m + r` equals `codes[assignments[j]][r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VQVector {
    codebook: VQCodebook,
    assignments: Vec<usize>,
    max_codes: usize,
}

impl VQVector {
    /// Merges equal codes and drops unused ones; codes end up in order of first use.
    pub fn new(code_dim: usize, codes: Vec<Vec<f64>>, assignments: Vec<usize>, max_codes: usize) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::Invalid("at least one group is required".into()));
        }
        let mut kept: Vec<Vec<f64>> = Vec::new();
        let mut remap = vec![usize::MAX; codes.len()];
        let mut new_assign = Vec::with_capacity(assignments.len());
        for &a in &assignments {
            let code = codes.get(a).ok_or(Error::IndexOutOfRange { index: a, len: codes.len() })?;
            if remap[a] == usize::MAX {
                remap[a] = match kept.iter().position(|c| c == code) {
                    Some(p) => p,
                    None => {
                        kept.push(code.clone());
                        kept.len() - 1
                    }
                };
            }
            new_assign.push(remap[a]);
        }
        if kept.len() > max_codes {
            return Err(Error::TooManyUniqueValues { found: kept.len(), max: max_codes });
        }
        Ok(Self { codebook: VQCodebook::new(code_dim, kept)?, assignments: new_assign, max_codes })
    }

    pub fn codebook(&self) -> &VQCodebook {
        &self.codebook
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn num_groups(&self) -> usize {
        self.assignments.len()
    }

    pub fn dim(&self) -> usize {
        self.assignments.len() * self.codebook.code_dim
    }

    pub fn num_codes(&self) -> usize {
        self.codebook.len()
    }

    pub fn max_codes(&self) -> usize {
        self.max_codes
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.assignments.iter().flat_map(|&a| self.codebook.codes[a].iter().copied()).collect()
    }

    /// Per-coordinate labels `code·m + slot`, one label per (code, slot) pair.
    fn slot_labels(&self) -> Vec<usize> {
        let m = self.codebook.code_dim;
        self.assignments.iter().flat_map(|&a| (0..m).map(move |r| a * m + r)).collect()
    }
}

/// Tables for pricing single-group reassignments against a fixed target.
#[derive(Debug, Clone)]
pub struct VQLocalSearchState {
    codebook: VQCodebook,
    target: Vec<f64>,
    assignments: Vec<usize>,
    /// `red[o][k] = ‖c_k‖² − ‖c_o‖²`.
    red: Vec<Vec<f64>>,
    /// `blue[j][k] = ⟨c_k, B_j⟩`.
    blue: Vec<Vec<f64>>,
    current_loss: f64,
}

impl VQLocalSearchState {
    pub fn new(codebook: VQCodebook, target: Vec<f64>, assignments: Vec<usize>) -> Result<Self> {
        let m = codebook.code_dim;
        let g = assignments.len();
        if target.len() != g * m {
            return Err(Error::DimensionMismatch { expected: g * m, found: target.len() });
        }
        if let Some(&a) = assignments.iter().find(|&&a| a >= codebook.len()) {
            return Err(Error::IndexOutOfRange { index: a, len: codebook.len() });
        }
        let norms: Vec<f64> = codebook.codes.iter().map(|c| dot(c, c)).collect();
        let red = norms.iter().map(|no| norms.iter().map(|nk| nk - no).collect()).collect();
        let blue = target.chunks(m).map(|bj| codebook.codes.iter().map(|c| dot(c, bj)).collect()).collect();
        let mut state = Self { codebook, target, assignments, red, blue, current_loss: 0.0 };
        state.current_loss = state.recompute_loss();
        Ok(state)
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn current_loss(&self) -> f64 {
        self.current_loss
    }

    pub fn codebook(&self) -> &VQCodebook {
        &self.codebook
    }

    /// `‖x − B‖²` evaluated from scratch.
    pub fn recompute_loss(&self) -> f64 {
        self.loss_of(&self.assignments)
    }

    fn loss_of(&self, assignments: &[usize]) -> f64 {
        let m = self.codebook.code_dim;
        assignments.iter().zip(self.target.chunks(m)).map(|(&a, bj)| sq_dist(&self.codebook.codes[a], bj)).sum()
    }

    fn delta_from(&self, j: usize, old: usize, new: usize) -> f64 {
        self.red[old][new] - 2.0 * (self.blue[j][new] - self.blue[j][old])
    }

    /// Loss change from moving group `j` to code `k`.
    pub fn delta(&self, j: usize, k: usize) -> f64 {
        self.delta_from(j, self.assignments[j], k)
    }

    pub fn apply(&mut self, j: usize, k: usize) {
        self.current_loss += self.delta(j, k);
        self.assignments[j] = k;
    }
}

/// Loss change of reassigning group `j` to code `k`, from the precomputed tables.
pub fn vq_delta_loss(state: &VQLocalSearchState, j: usize, k: usize) -> f64 {
    state.delta(j, k)
}

/// Steepest descent over single-group reassignments: every pass scans all moves
/// and applies the best strictly improving one. Returns the number of moves made.
pub fn vq_local_search(state: &mut VQLocalSearchState, max_passes: usize) -> usize {
    let mut moves = 0;
    for _ in 0..max_passes {
        let mut best: Option<(usize, usize, f64)> = None;
        for j in 0..state.assignments.len() {
            for k in 0..state.codebook.len() {
                let delta = state.delta(j, k);
                if delta < best.map_or(0.0, |b| b.2) {
                    best = Some((j, k, delta));
                }
            }
        }
        match best {
            Some((j, k, _)) => {
                state.apply(j, k);
                moves += 1;
            }
            None => break,
        }
    }
    moves
}

/// Beam search over assignments: each sweep visits the groups in order, expands
/// every beam entry with all codes for the current group, and keeps the `width`
/// lowest-loss distinct assignment vectors. The best entry found is written back.
pub fn vq_beam_search(state: &mut VQLocalSearchState, width: usize, sweeps: usize) -> Result<()> {
    if width == 0 {
        return Err(Error::Invalid("beam width must be >= 1".into()));
    }
    let mut beam: Vec<(Vec<usize>, f64)> = vec![(state.assignments.clone(), state.current_loss)];
    for _ in 0..sweeps {
        let before = beam[0].1;
        for j in 0..state.assignments.len() {
            let mut seen: HashSet<Vec<usize>> = HashSet::new();
            let mut next: Vec<(Vec<usize>, f64)> = Vec::new();
            for (assign, loss) in &beam {
                for k in 0..state.codebook.len() {
                    let mut cand = assign.clone();
                    let delta = state.delta_from(j, assign[j], k);
                    cand[j] = k;
                    if seen.insert(cand.clone()) {
                        next.push((cand, loss + delta));
                    }
                }
            }
            next.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            next.truncate(width);
            beam = next;
        }
        if !(beam[0].1 < before) {
            break;
        }
    }
    let (best, _) = beam.swap_remove(0);
    if state.loss_of(&best) < state.current_loss {
        state.current_loss = state.loss_of(&best);
        state.assignments = best;
    }
    Ok(())
}

/// P step for a VQ point: the codes are refit with the assignments fixed, one
/// free value per (code, slot) pair.
pub fn vq_p_step(obj: &dyn Objective, x: &VQVector) -> Result<VQVector> {
    if obj.dim() != x.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), found: x.dim() });
    }
    let m = x.codebook.code_dim;
    let labels = x.slot_labels();
    let partition = Partition::from_labels(&labels);
    let per_label: Vec<f64> = match obj.exact_group_values(&partition) {
        Some(group_values) => {
            let mut vals = vec![0.0; x.num_codes() * m];
            for (i, &l) in labels.iter().enumerate() {
                vals[l] = group_values[partition.labels()[i]];
            }
            vals
        }
        None => {
            let init: Vec<f64> = x.codebook.codes.iter().flatten().copied().collect();
            fit_values(obj, &labels, &init)?
        }
    };
    let codes: Vec<Vec<f64>> = per_label.chunks(m).map(|c| c.to_vec()).collect();
    let candidate = VQVector::new(m, codes, x.assignments.clone(), x.max_codes)?;
    let old = checked_value(obj, &x.dequantize())?;
    let new = checked_value(obj, &candidate.dequantize())?;
    Ok(if new <= old { candidate } else { x.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqPvConfig {
    pub pv: PvConfig,
    pub smoothness_l: f64,
    pub beam_width: usize,
    pub max_passes: usize,
}

impl VqPvConfig {
    pub fn new(pv: PvConfig, smoothness_l: f64) -> Self {
        Self { pv, smoothness_l, beam_width: 1, max_passes: 100_000 }
    }

    pub fn validate(&self) -> Result<()> {
        self.pv.validate()?;
        if !(self.smoothness_l > 0.0) {
            return Err(Error::Invalid("smoothness_l must be positive".into()));
        }
        if self.beam_width == 0 {
            return Err(Error::Invalid("beam width must be >= 1".into()));
        }
        Ok(())
    }
}

/// Linearized V step for a VQ point: reassign groups to minimize `‖x − (y − ∇φ(y)/l)‖²`.
pub fn vq_linearized_v_step(obj: &dyn Objective, y: &VQVector, l: f64, cfg: &VqPvConfig) -> Result<VQVector> {
    let dense = y.dequantize();
    let g = checked_gradient(obj, &dense)?;
    let target: Vec<f64> = dense.iter().zip(&g).map(|(yi, gi)| yi - gi / l).collect();
    let mut state = VQLocalSearchState::new(y.codebook.clone(), target, y.assignments.clone())?;
    if cfg.beam_width > 1 {
        vq_beam_search(&mut state, cfg.beam_width, cfg.max_passes)?;
    } else {
        vq_local_search(&mut state, cfg.max_passes);
    }
    VQVector::new(y.codebook.code_dim, y.codebook.codes.clone(), state.assignments, y.max_codes)
}

/// PV with a VQ P step and the linearized VQ V step.
pub fn run_vq_pv(obj: &dyn Objective, x0: &VQVector, cfg: &VqPvConfig, run_seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    let mut x = x0.clone();
    let mut loss = checked_value(obj, &x.dequantize())?;
    let mut rec = Recorder::start_dense(run_seed, x.dequantize(), x.num_codes(), loss);
    let mut conv = cfg.pv.convergence();
    for k in 1..=cfg.pv.max_iterations {
        let before = loss;
        let y = vq_p_step(obj, &x)?;
        let y_loss = checked_value(obj, &y.dequantize())?;
        rec.record_dense(k, Phase::P, y.dequantize(), y.num_codes(), y_loss, None, None);

        x = vq_linearized_v_step(obj, &y, cfg.smoothness_l, cfg)?;
        loss = checked_value(obj, &x.dequantize())?;
        rec.record_dense(k, Phase::V, x.dequantize(), x.num_codes(), loss, Some(cfg.smoothness_l), None);
        if conv.update(before, loss) {
            break;
        }
    }
    let solution = crate::quant::QuantizedVector::from_dense(&x.dequantize(), x.dim())?;
    Ok(RunResult { solution, trace: rec.finish() })
}

/// Random VQ point with exactly `c` codes: standard normal code entries times
/// `scale`, the first `c` groups take one code each, the rest pick uniformly,
/// and the groups are then shuffled.
pub fn vq_random_init<R: Rng + ?Sized>(
    d: usize,
    code_dim: usize,
    c: usize,
    scale: f64,
    rng: &mut R,
) -> Result<VQVector> {
    if code_dim == 0 || d % code_dim != 0 {
        return Err(Error::Invalid(format!("dimension {d} is not divisible by code_dim {code_dim}")));
    }
    let g = d / code_dim;
    if c == 0 || c > g {
        return Err(Error::InvalidArity { c, d: g });
    }
    let mut codes: Vec<Vec<f64>> = Vec::with_capacity(c);
    while codes.len() < c {
        let code: Vec<f64> = (0..code_dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        if !codes.contains(&code) {
            codes.push(code);
        }
    }
    let mut assignments: Vec<usize> = (0..c).collect();
    assignments.extend((c..g).map(|_| rng.gen_range(0..c)));
    assignments.shuffle(rng);
    VQVector::new(code_dim, codes, assignments, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::WeightedQuadratic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_book(vals: &[f64]) -> VQCodebook {
        VQCodebook::new(1, vals.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn nearest_code_examples() {
        let cb = VQCodebook::new(2, vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(vq_nearest_code(&cb, &[0.4, 0.4]), 0);
        assert_eq!(vq_nearest_code(&cb, &[1.0, 1.0]), 1);
        assert_eq!(vq_nearest_code(&cb, &[0.5, 0.5]), 0);
    }

    #[test]
    fn delta_example() {
        let st = VQLocalSearchState::new(scalar_book(&[0.0, 1.0]), vec![0.6], vec![0]).unwrap();
        assert!((vq_delta_loss(&st, 0, 1) + 0.2).abs() < 1e-15);
        assert_eq!(vq_delta_loss(&st, 0, 0), 0.0);
    }

    #[test]
    fn local_search_example() {
        let mut st = VQLocalSearchState::new(scalar_book(&[0.0, 1.0]), vec![0.6, 0.2], vec![0, 1]).unwrap();
        vq_local_search(&mut st, 100);
        assert_eq!(st.assignments(), &[1, 0]);
        assert!((st.current_loss() - 0.2).abs() < 1e-12);
        assert_eq!(vq_local_search(&mut st, 100), 0);
    }

    #[test]
    fn beam_search_matches_local_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let codes: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let cb = VQCodebook::new(2, codes).unwrap();
            let target: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut a = VQLocalSearchState::new(cb.clone(), target.clone(), vec![0; 5]).unwrap();
            let mut b = a.clone();
            vq_local_search(&mut a, 1000);
            vq_beam_search(&mut b, 3, 10).unwrap();
            assert!((a.current_loss() - b.current_loss()).abs() < 1e-12);
            assert!((b.current_loss() - b.recompute_loss()).abs() < 1e-12);
        }
    }

    #[test]
    fn vq_vector_merges_and_drops() {
        let v = VQVector::new(1, vec![vec![3.0], vec![1.0], vec![3.0]], vec![2, 0, 0], 3).unwrap();
        assert_eq!(v.num_codes(), 1);
        assert_eq!(v.dequantize(), vec![3.0, 3.0, 3.0]);
        assert!(VQVector::new(1, vec![vec![1.0], vec![2.0]], vec![0, 1], 1).is_err());
        assert!(VQCodebook::new(2, vec![vec![1.0, 2.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn p_step_fits_code_slots() {
        let q = WeightedQuadratic::new(vec![1.0; 4], vec![1.0, 2.0, 3.0, 6.0]).unwrap();
        let x = VQVector::new(2, vec![vec![0.0, 0.0]], vec![0, 0], 1).unwrap();
        let y = vq_p_step(&q, &x).unwrap();
        assert_eq!(y.dequantize(), vec![2.0, 4.0, 2.0, 4.0]);
    }

    #[test]
    fn vq_pv_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = WeightedQuadratic::random_linear(40, &mut rng).unwrap();
        let x0 = vq_random_init(40, 2, 6, 1.0, &mut rng).unwrap();
        let cfg = VqPvConfig::new(PvConfig { max_iterations: 50, ..PvConfig::default() }, 2.0);
        let run = run_vq_pv(&q, &x0, &cfg, 0).unwrap();
        for w in run.trace.windows(2) {
            assert!(w[1].loss <= w[0].loss + 1e-12);
            assert!(w[1].num_unique <= 6);
        }
    }
}
