//! Per-half-step diagnostics emitted by every training loop.

use std::fmt;

use crate::quant::QuantizedVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Init,
    P,
    V,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::P => "P",
            Phase::V => "V",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "init" => Some(Phase::Init),
            "P" => Some(Phase::P),
            "V" => Some(Phase::V),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub run_seed: u64,
    pub iteration: usize,
    pub phase: Phase,
    pub loss: f64,
    pub num_unique: usize,
    /// `‖x_new − x_old‖ / ‖x_old‖`; the absolute step norm when `x_old = 0`.
    pub step_norm_rel: f64,
    pub l_subspace: Option<f64>,
    pub tau_used: Option<usize>,
}

/// Relative step norm between two dense points.
pub fn step_norm_rel(old: &[f64], new: &[f64]) -> f64 {
    let diff: f64 = old.iter().zip(new).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let base: f64 = old.iter().map(|a| a * a).sum::<f64>().sqrt();
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

/// Accumulates trace records for one run.
#[derive(Debug, Clone)]
pub struct Recorder {
    run_seed: u64,
    records: Vec<TraceRecord>,
    last_dense: Vec<f64>,
}

impl Recorder {
    pub fn start(run_seed: u64, x0: &QuantizedVector, loss: f64) -> Self {
        Self::start_dense(run_seed, x0.dequantize(), x0.num_unique(), loss)
    }

    /// Like [`Recorder::start`] for representations other than a scalar quantized vector.
    pub fn start_dense(run_seed: u64, last_dense: Vec<f64>, num_unique: usize, loss: f64) -> Self {
        let records = vec![TraceRecord {
            run_seed,
            iteration: 0,
            phase: Phase::Init,
            loss,
            num_unique,
            step_norm_rel: 0.0,
            l_subspace: None,
            tau_used: None,
        }];
        Self { run_seed, records, last_dense }
    }

    pub fn record(
        &mut self,
        iteration: usize,
        phase: Phase,
        x: &QuantizedVector,
        loss: f64,
        l_subspace: Option<f64>,
        tau_used: Option<usize>,
    ) {
        self.record_dense(iteration, phase, x.dequantize(), x.num_unique(), loss, l_subspace, tau_used);
    }

    #[allow(clippy::too_many_arguments)]
    pub fn record_dense(
        &mut self,
        iteration: usize,
        phase: Phase,
        dense: Vec<f64>,
        num_unique: usize,
        loss: f64,
        l_subspace: Option<f64>,
        tau_used: Option<usize>,
    ) {
        let step = step_norm_rel(&self.last_dense, &dense);
        self.records.push(TraceRecord {
            run_seed: self.run_seed,
            iteration,
            phase,
            loss,
            num_unique,
            step_norm_rel: step,
            l_subspace,
            tau_used,
        });
        self.last_dense = dense;
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn last_loss(&self) -> f64 {
        self.records.last().map(|r| r.loss).unwrap_or(f64::NAN)
    }

    pub fn finish(self) -> Vec<TraceRecord> {
        self.records
    }
}

/// Stopping rule shared by the iterative loops: the relative loss decrease over
/// one full iteration stays below `tol` for `patience` consecutive iterations.
/// A tolerance of zero disables early stopping.
#[derive(Debug, Clone)]
pub(crate) struct Convergence {
    tol: f64,
    patience: usize,
    streak: usize,
}

impl Convergence {
    pub(crate) fn new(tol: f64, patience: usize) -> Self {
        Self { tol, patience: patience.max(1), streak: 0 }
    }

    /// Feeds the losses at the start and end of an iteration; returns true once converged.
    pub(crate) fn update(&mut self, before: f64, after: f64) -> bool {
        if self.tol <= 0.0 {
            return false;
        }
        let decrease = before - after;
        let rel = if before.abs() > 0.0 { decrease / before.abs() } else { 0.0 };
        if rel < self.tol {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.streak >= self.patience
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_norm_is_relative() {
        assert_eq!(step_norm_rel(&[3.0, 4.0], &[3.0, 4.0]), 0.0);
        assert!((step_norm_rel(&[3.0, 4.0], &[3.0, 5.0]) - 0.2).abs() < 1e-15);
        assert_eq!(step_norm_rel(&[0.0, 0.0], &[0.0, 2.0]), 2.0);
    }

    #[test]
    fn convergence_needs_patience() {
        let mut c = Convergence::new(1e-12, 3);
        assert!(!c.update(1.0, 0.5));
        assert!(!c.update(0.5, 0.5));
        assert!(!c.update(0.5, 0.5));
        assert!(c.update(0.5, 0.5));

        let mut off = Convergence::new(0.0, 1);
        assert!(!off.update(1.0, 1.0));
    }

    #[test]
    fn phase_round_trips_through_text() {
        for p in [Phase::Init, Phase::P, Phase::V] {
            assert_eq!(Phase::parse(p.as_str()), Some(p));
        }
        assert_eq!(Phase::parse("X"), None);
    }
}
