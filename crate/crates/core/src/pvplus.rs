//! PV+, which lets the V step reuse values from a replenishment pool so that the
//! value set cannot shrink for good, plus the two initial-point generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objective::{checked_value, Objective};
use crate::pv::{check_dim, p_step, v_step_over, PvConfig, RunResult};
use crate::quant::QuantizedVector;
use crate::trace::{Phase, Recorder};

#[derive(Debug, Clone, PartialEq)]
pub struct PVPlusConfig {
    pub pv: PvConfig,
    pub max_unique: usize,
    /// Candidate values offered back to the V step, e.g. the distinct entries of the optimum.
    pub pool: Vec<f64>,
}

impl PVPlusConfig {
    pub fn validate(&self) -> Result<()> {
        self.pv.validate()?;
        if self.max_unique == 0 {
            return Err(Error::Invalid("max_unique must be >= 1".into()));
        }
        if self.pool.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("pool values must be finite".into()));
        }
        Ok(())
    }
}

/// Up to `c − |V(y)|` pool values not already in `V(y)`, smallest first.
pub fn build_w_set(y: &QuantizedVector, pool: &[f64], c: usize) -> Vec<f64> {
    let room = c.saturating_sub(y.num_unique());
    let mut candidates: Vec<f64> = pool.iter().copied().filter(|v| !y.values().contains(v)).collect();
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();
    candidates.truncate(room);
    candidates
}

/// PV with the V step searched over `V(y) ∪ W(y)`.
pub fn run_pv_plus(obj: &dyn Objective, x0: &QuantizedVector, cfg: &PVPlusConfig, run_seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    check_dim(obj, x0)?;
    let mut x = x0.with_max_unique(cfg.max_unique)?;
    let mut loss = checked_value(obj, &x.dequantize())?;
    let mut rec = Recorder::start(run_seed, &x, loss);
    let mut conv = cfg.pv.convergence();
    for k in 1..=cfg.pv.max_iterations {
        let before = loss;
        let y = p_step(obj, &x)?;
        let y_loss = checked_value(obj, &y.dequantize())?;
        rec.record(k, Phase::P, &y, y_loss, None, None);

        let mut candidates = y.values().to_vec();
        candidates.extend(build_w_set(&y, &cfg.pool, cfg.max_unique));
        x = v_step_over(obj, &y, &candidates, cfg.pv.v_step_mode)?;
        loss = checked_value(obj, &x.dequantize())?;
        rec.record(k, Phase::V, &x, loss, None, None);
        if conv.update(before, loss) {
            break;
        }
    }
    Ok(RunResult { solution: x, trace: rec.finish() })
}

/// Keeps the `c` smallest distinct values of `x`; every other entry is mapped
/// to the largest kept value.
pub fn clip_init(x: &[f64], c: usize) -> Result<QuantizedVector> {
    if c == 0 {
        return Err(Error::Invalid("c must be >= 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective { what: "clip_init input" });
    }
    let mut kept = x.to_vec();
    kept.sort_by(|a, b| a.total_cmp(b));
    kept.dedup_by(|a, b| a == b);
    kept.truncate(c);
    let ceiling = kept[kept.len() - 1];
    let clipped: Vec<f64> = x.iter().map(|&v| if v > ceiling { ceiling } else { v }).collect();
    QuantizedVector::from_dense(&clipped, c)
}

/// A random point with exactly `c` distinct values.
///
/// Values are standard normal draws times `scale` (for instance the range of the
/// optimum). The first `c` coordinates receive one value each, the remaining
/// coordinates pick uniformly among them, and the coordinates are then shuffled.
pub fn random_init<R: Rng + ?Sized>(d: usize, c: usize, scale: f64, rng: &mut R) -> Result<QuantizedVector> {
    if c == 0 || c > d {
        return Err(Error::InvalidArity { c, d });
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Invalid("scale must be positive".into()));
    }
    let mut values: Vec<f64> = Vec::with_capacity(c);
    while values.len() < c {
        let v = scale * rng.sample::<f64, _>(StandardNormal);
        if !values.contains(&v) {
            values.push(v);
        }
    }
    let mut labels: Vec<usize> = (0..c).collect();
    labels.extend((c..d).map(|_| rng.gen_range(0..c)));
    labels.shuffle(rng);
    QuantizedVector::from_labels(&labels, &values, c)
}
