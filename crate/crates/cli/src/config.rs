//! Experiment configuration, read from flat TOML.
//!
//! ```toml
//! name = "fig-tiny"          # label, also used in output headers
//! kind = "trace"             # "trace" (loss curves) or "smoothness" (L estimate table)
//! d = 6                      # problem dimension
//! weights = "linear"         # "linear" (a_i = i/d) or "ones"
//! # target_seed = 7          # seed for the optimum; derived from master_seed when absent
//! master_seed = 0
//! algorithms = ["pv_exact"]  # see `algorithm` for the accepted names
//! c_values = [1, 2, 3]       # value budgets; each must be <= d
//! num_seeds = 50             # runs per (algorithm, c)
//! max_iterations = 200
//! init = "random"            # "random" or "clip_of_optimum"
//! convergence_tol = 1e-12    # 0 disables early stopping
//! patience = 3
//! # smoothness_l = 2.0       # step constant; defaults to 2 * max weight
//! tau = 1                    # subspace size for fixed-size subspace rules
//! trust_ratio_rho = 0.01
//! learning_rate = 3e-3       # Adam rate for STE and Adam-driven subspace steps
//! subspace_sizes = [1, 5]    # smoothness kind only
//! power_iters = 10           # smoothness kind only
//! # out_dir = "out/fig-tiny" # overridden by --out
//! ```

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

use crate::algorithm::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Trace,
    Smoothness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    Linear,
    Ones,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRule {
    Random,
    ClipOfOptimum,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    #[serde(default = "default_kind")]
    kind: Kind,
    d: usize,
    #[serde(default = "default_weights")]
    weights: WeightRule,
    target_seed: Option<u64>,
    #[serde(default)]
    master_seed: u64,
    #[serde(default)]
    algorithms: Vec<String>,
    c_values: Vec<usize>,
    #[serde(default = "default_num_seeds")]
    num_seeds: usize,
    #[serde(default = "default_max_iterations")]
    max_iterations: usize,
    #[serde(default = "default_init")]
    init: InitRule,
    #[serde(default = "default_tol")]
    convergence_tol: f64,
    #[serde(default = "default_patience")]
    patience: usize,
    smoothness_l: Option<f64>,
    #[serde(default = "default_tau")]
    tau: usize,
    #[serde(default = "default_rho")]
    trust_ratio_rho: f64,
    #[serde(default = "default_lr")]
    learning_rate: f64,
    #[serde(default)]
    subspace_sizes: Vec<usize>,
    #[serde(default = "default_power_iters")]
    power_iters: usize,
    out_dir: Option<PathBuf>,
}

fn default_kind() -> Kind {
    Kind::Trace
}
fn default_weights() -> WeightRule {
    WeightRule::Linear
}
fn default_num_seeds() -> usize {
    50
}
fn default_max_iterations() -> usize {
    200
}
fn default_init() -> InitRule {
    InitRule::Random
}
fn default_tol() -> f64 {
    1e-12
}
fn default_patience() -> usize {
    3
}
fn default_tau() -> usize {
    1
}
fn default_rho() -> f64 {
    0.01
}
fn default_lr() -> f64 {
    3e-3
}
fn default_power_iters() -> usize {
    10
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: Kind,
    pub d: usize,
    pub weights: WeightRule,
    pub target_seed: Option<u64>,
    pub master_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub c_values: Vec<usize>,
    pub num_seeds: usize,
    pub max_iterations: usize,
    pub init: InitRule,
    pub convergence_tol: f64,
    pub patience: usize,
    pub smoothness_l: Option<f64>,
    pub tau: usize,
    pub trust_ratio_rho: f64,
    pub learning_rate: f64,
    pub subspace_sizes: Vec<usize>,
    pub power_iters: usize,
    pub out_dir: Option<PathBuf>,
}

/// A config problem, located by line (when known) and field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line on which `key` is assigned, if it appears at the start of a line.
fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| ConfigError {
            line: e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1),
            field: None,
            message: e.message().trim().to_string(),
        })?;
        let fail = |field: &str, message: String| ConfigError {
            line: line_of(src, field),
            field: Some(field.to_string()),
            message,
        };

        let mut algorithms = Vec::with_capacity(raw.algorithms.len());
        for name in &raw.algorithms {
            algorithms.push(name.parse::<Algorithm>().map_err(|m| fail("algorithms", m))?);
        }

        if raw.d == 0 {
            return Err(fail("d", "must be >= 1".into()));
        }
        if raw.num_seeds == 0 {
            return Err(fail("num_seeds", "must be >= 1".into()));
        }
        if raw.max_iterations == 0 {
            return Err(fail("max_iterations", "must be >= 1".into()));
        }
        if !(raw.convergence_tol >= 0.0) {
            return Err(fail("convergence_tol", "must be >= 0".into()));
        }
        if let Some(l) = raw.smoothness_l {
            if !(l > 0.0 && l.is_finite()) {
                return Err(fail("smoothness_l", "must be a positive number".into()));
            }
        }
        if raw.tau == 0 || raw.tau > raw.d {
            return Err(fail("tau", format!("must be in 1..={}, got {}", raw.d, raw.tau)));
        }
        if !(raw.trust_ratio_rho > 0.0 && raw.trust_ratio_rho.is_finite()) {
            return Err(fail("trust_ratio_rho", "must be a positive number".into()));
        }
        if !(raw.learning_rate > 0.0 && raw.learning_rate.is_finite()) {
            return Err(fail("learning_rate", "must be a positive number".into()));
        }
        if raw.power_iters == 0 {
            return Err(fail("power_iters", "must be >= 1".into()));
        }
        if raw.c_values.is_empty() {
            return Err(fail("c_values", "must list at least one value".into()));
        }
        for &c in &raw.c_values {
            if c == 0 || c > raw.d {
                return Err(fail("c_values", format!("c = {c} is outside 1..={}", raw.d)));
            }
        }
        match raw.kind {
            Kind::Trace => {
                if algorithms.is_empty() {
                    return Err(fail("algorithms", "must list at least one algorithm".into()));
                }
                for a in &algorithms {
                    if let Algorithm::VqPv(m) = a {
                        if raw.d % m != 0 {
                            return Err(fail("algorithms", format!("{a}: d = {} is not divisible by {m}", raw.d)));
                        }
                        if let Some(&c) = raw.c_values.iter().find(|&&c| c > raw.d / m) {
                            return Err(fail("c_values", format!("{a}: c = {c} exceeds the {} code groups", raw.d / m)));
                        }
                    }
                }
            }
            Kind::Smoothness => {
                if raw.subspace_sizes.is_empty() {
                    return Err(fail("subspace_sizes", "must list at least one size".into()));
                }
                if let Some(&s) = raw.subspace_sizes.iter().find(|&&s| s == 0 || s > raw.d) {
                    return Err(fail("subspace_sizes", format!("size {s} is outside 1..={}", raw.d)));
                }
            }
        }

        Ok(Self {
            name: raw.name,
            kind: raw.kind,
            d: raw.d,
            weights: raw.weights,
            target_seed: raw.target_seed,
            master_seed: raw.master_seed,
            algorithms,
            c_values: raw.c_values,
            num_seeds: raw.num_seeds,
            max_iterations: raw.max_iterations,
            init: raw.init,
            convergence_tol: raw.convergence_tol,
            patience: raw.patience,
            smoothness_l: raw.smoothness_l,
            tau: raw.tau,
            trust_ratio_rho: raw.trust_ratio_rho,
            learning_rate: raw.learning_rate,
            subspace_sizes: raw.subspace_sizes,
            power_iters: raw.power_iters,
            out_dir: raw.out_dir,
        })
    }
}
