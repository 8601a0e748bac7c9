//! Built-in figure presets. All use master seed 0.

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig-tiny",
        about: "exact PV on d=6 for every c from 1 to 6",
        toml: r#"name = "fig-tiny"
d = 6
algorithms = ["pv_exact"]
c_values = [1, 2, 3, 4, 5, 6]
num_seeds = 50
max_iterations = 200
master_seed = 0
"#,
    },
    Preset {
        name: "fig-small",
        about: "exact PV on d=100 for c = 10, 20, ..., 100",
        toml: r#"name = "fig-small"
d = 100
algorithms = ["pv_exact"]
c_values = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
num_seeds = 50
max_iterations = 2000
master_seed = 0
"#,
    },
    Preset {
        name: "fig-linearized-T",
        about: "exact PV against linearized PV with 1 and 5 inner steps, plain and Halpern-anchored",
        toml: r#"name = "fig-linearized-T"
d = 100
algorithms = ["pv_exact", "linearized", "linearized_multi:5", "halpern:5"]
c_values = [10]
num_seeds = 50
max_iterations = 2000
master_seed = 0
"#,
    },
    Preset {
        name: "fig-sparse",
        about: "exact PV, linearized PV and single-coordinate subspace PV under three selection rules",
        toml: r#"name = "fig-sparse"
d = 100
algorithms = ["pv_exact", "linearized", "subspace:greedy", "subspace:uniform", "subspace:proportional"]
c_values = [80]
num_seeds = 50
max_iterations = 2000
tau = 1
master_seed = 0
"#,
    },
    Preset {
        name: "fig-sampling",
        about: "subspace PV with 10 coordinates per step under greedy, uniform and proportional selection",
        toml: r#"name = "fig-sampling"
d = 100
algorithms = ["subspace:greedy", "subspace:uniform", "subspace:proportional"]
c_values = [80]
num_seeds = 50
max_iterations = 2000
tau = 10
master_seed = 0
"#,
    },
    Preset {
        name: "fig-lsub",
        about: "trust-ratio subspace PV; traces carry the subspace constant and size per step",
        toml: r#"name = "fig-lsub"
d = 100
algorithms = ["subspace:greedy:trust", "subspace:uniform:trust", "subspace:proportional:trust"]
c_values = [80]
num_seeds = 50
max_iterations = 2000
master_seed = 0
"#,
    },
    Preset {
        name: "fig-vdim",
        about: "number of distinct values over time for linearized PV and the rounding baselines",
        toml: r#"name = "fig-vdim"
d = 100
algorithms = ["pv_exact", "linearized", "ste", "sr:0.2"]
c_values = [80]
num_seeds = 50
max_iterations = 2000
master_seed = 0
"#,
    },
    Preset {
        name: "fig-smoothness",
        about: "trajectory and power-iteration L estimates against subspace size",
        toml: r#"name = "fig-smoothness"
kind = "smoothness"
d = 100
c_values = [80]
subspace_sizes = [1, 2, 5, 10, 20, 50, 100]
num_seeds = 50
power_iters = 10
master_seed = 0
"#,
    },
    Preset {
        name: "fig-pvplus",
        about: "exact PV against PV+ with the optimum's entries as the replenishment pool",
        toml: r#"name = "fig-pvplus"
d = 100
algorithms = ["pv_exact", "pv_plus"]
c_values = [10, 20, 40, 80]
num_seeds = 50
max_iterations = 2000
master_seed = 0
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn every_preset_parses_with_seed_zero() {
        for p in PRESETS {
            let cfg = ExperimentConfig::from_toml(p.toml).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(cfg.name, p.name);
            assert_eq!(cfg.master_seed, 0);
            let budget = if cfg.d == 6 { 200 } else { 2000 };
            if cfg.kind == crate::config::Kind::Trace {
                assert_eq!(cfg.max_iterations, budget, "{}", p.name);
            }
        }
        assert_eq!(PRESETS.len(), 9);
    }
}
