//! Alternating optimization over vectors with at most `c` distinct values.
//!
//! A quantized point is split into its value set (continuous) and its partition
//! of coordinates into equal-value groups (discrete). The P step refits the
//! values with the partition fixed; the V step reassigns coordinates to values
//! with the values fixed. Besides the exact method this crate has linearized,
//! multi-step and subspace V steps, the straight-through and stochastic-rounding
//! baselines, the value-replenishing PV+ variant, vector quantization, and two
//! smoothness estimators.

pub mod adam;
pub mod baselines;
pub mod error;
pub mod linearized;
pub mod objective;
pub mod objectives;
pub mod pv;
pub mod pvplus;
pub mod quant;
pub mod rng;
pub mod smoothness;
pub mod trace;
pub mod vq;

pub use error::{Error, Result};
pub use objective::{Capabilities, Objective};
pub use objectives::{BlackBoxObjective, DenseQuadratic, WeightedQuadratic};
pub use pv::{run_pv, PvConfig, RunResult, VStepMode};
pub use quant::{Partition, QuantizedVector};
pub use trace::{Phase, TraceRecord};
