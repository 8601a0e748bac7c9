//! Algorithm names accepted in experiment configs.
//!
//! | name | method |
//! |---|---|
//! | `pv_exact` | PV with the exact V step (separable search when the objective allows it, brute force otherwise) |
//! | `pv_brute` | PV with the brute-force V step |
//! | `pv_separable` | PV with the separable V step |
//! | `linearized` | linearized PV, one gradient step per V step |
//! | `linearized_multi:T` | linearized PV with `T` rounded inner steps |
//! | `halpern:T` | linearized PV with `T` Halpern-anchored inner steps |
//! | `subspace:RULE[:trust]` | subspace PV; `RULE` is `greedy`, `uniform` or `proportional`; fixed `tau` unless `:trust` |
//! | `subspace_adam:RULE[:trust]` | subspace PV driven by Adam displacements |
//! | `ste` | straight-through training |
//! | `sr:T` | stochastic-rounding training at temperature `T` |
//! | `pv_ste_hybrid` | greedy trust-ratio subspace PV with the straight-through buffer |
//! | `pv_plus` | PV+ with the optimum's entries as the replenishment pool |
//! | `vq_pv:M` | vector-quantized PV with `M`-dimensional codes |

use std::fmt;
use std::str::FromStr;

use pvtune_core::linearized::Selection;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    PvExact,
    PvBrute,
    PvSeparable,
    Linearized,
    LinearizedMulti(usize),
    Halpern(usize),
    Subspace { selection: Selection, trust: bool, adam: bool },
    Ste,
    Sr(f64),
    PvSteHybrid,
    PvPlus,
    VqPv(usize),
}

impl Algorithm {
    /// Whether a run can be stopped once the loss stops moving. Randomized
    /// updates can sit still for a few iterations without being at a fixed point.
    pub fn stops_early(&self) -> bool {
        match self {
            Algorithm::Subspace { selection, .. } => *selection == Selection::GreedyTopK,
            Algorithm::Ste | Algorithm::Sr(_) => false,
            _ => true,
        }
    }

    /// Name safe for file names.
    pub fn slug(&self) -> String {
        self.to_string().replace([':', '.'], "-")
    }
}

fn selection_name(s: Selection) -> &'static str {
    match s {
        Selection::GreedyTopK => "greedy",
        Selection::UniformRandom => "uniform",
        Selection::GradientProportional => "proportional",
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::PvExact => f.write_str("pv_exact"),
            Algorithm::PvBrute => f.write_str("pv_brute"),
            Algorithm::PvSeparable => f.write_str("pv_separable"),
            Algorithm::Linearized => f.write_str("linearized"),
            Algorithm::LinearizedMulti(t) => write!(f, "linearized_multi:{t}"),
            Algorithm::Halpern(t) => write!(f, "halpern:{t}"),
            Algorithm::Subspace { selection, trust, adam } => {
                let head = if *adam { "subspace_adam" } else { "subspace" };
                write!(f, "{head}:{}", selection_name(*selection))?;
                if *trust {
                    f.write_str(":trust")?;
                }
                Ok(())
            }
            Algorithm::Ste => f.write_str("ste"),
            Algorithm::Sr(t) => write!(f, "sr:{t}"),
            Algorithm::PvSteHybrid => f.write_str("pv_ste_hybrid"),
            Algorithm::PvPlus => f.write_str("pv_plus"),
            Algorithm::VqPv(m) => write!(f, "vq_pv:{m}"),
        }
    }
}

fn positive_int(s: &str, what: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("{what} must be a positive integer, got `{s}`")),
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let algo = match parts.as_slice() {
            ["pv_exact"] => Algorithm::PvExact,
            ["pv_brute"] => Algorithm::PvBrute,
            ["pv_separable"] => Algorithm::PvSeparable,
            ["linearized"] => Algorithm::Linearized,
            ["linearized_multi", t] => Algorithm::LinearizedMulti(positive_int(t, "inner steps")?),
            ["halpern", t] => Algorithm::Halpern(positive_int(t, "inner steps")?),
            [head @ ("subspace" | "subspace_adam"), rule, rest @ ..] => {
                let selection = match *rule {
                    "greedy" => Selection::GreedyTopK,
                    "uniform" => Selection::UniformRandom,
                    "proportional" => Selection::GradientProportional,
                    other => return Err(format!("unknown selection rule `{other}` in `{s}`")),
                };
                let trust = match rest {
                    [] => false,
                    ["trust"] => true,
                    _ => return Err(format!("expected `{head}:{rule}` or `{head}:{rule}:trust`, got `{s}`")),
                };
                Algorithm::Subspace { selection, trust, adam: *head == "subspace_adam" }
            }
            ["ste"] => Algorithm::Ste,
            ["sr", t] => match t.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Algorithm::Sr(v),
                _ => return Err(format!("temperature must be a positive number, got `{t}`")),
            },
            ["pv_ste_hybrid"] => Algorithm::PvSteHybrid,
            ["pv_plus"] => Algorithm::PvPlus,
            ["vq_pv", m] => Algorithm::VqPv(positive_int(m, "code dimension")?),
            _ => return Err(format!("unknown algorithm `{s}`")),
        };
        Ok(algo)
    }
}
