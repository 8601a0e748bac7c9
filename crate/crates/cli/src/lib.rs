//! Experiment harness for pvtune: configs and presets, seeded sweeps writing
//! trace CSVs, and SVG loss plots.

pub mod algorithm;
pub mod config;
pub mod error;
pub mod harness;
pub mod output;
pub mod plot;
pub mod presets;

pub use algorithm::Algorithm;
pub use config::{ConfigError, ExperimentConfig};
pub use error::CliError;
pub use harness::{run_experiment, Outcome};
pub use plot::plot_dir;

/// Loads a config from a preset name or a file path.
pub fn load_config(source: &str) -> Result<ExperimentConfig, CliError> {
    if let Some(p) = presets::find(source) {
        return Ok(ExperimentConfig::from_toml(p.toml)?);
    }
    let src = std::fs::read_to_string(source)
        .map_err(|e| CliError::Io(format!("{source}: {e} (not a file and not a preset; see `pvtune presets`)")))?;
    Ok(ExperimentConfig::from_toml(&src)?)
}
