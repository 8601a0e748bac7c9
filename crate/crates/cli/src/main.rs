use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use pvtune_cli::{load_config, plot_dir, presets, run_experiment, CliError};

#[derive(Parser)]
#[command(name = "pvtune", version, about = "Seeded PV experiments: traces, summaries and plots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a preset name.
    Run {
        config: String,
        /// Output directory; defaults to the config's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Render the CSVs in a run directory to SVG.
    Plot { dir: PathBuf },
    /// List the built-in presets, or print one as TOML.
    Presets { name: Option<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Interrupted { .. } => ExitCode::from(130),
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out, seed, threads } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            let out = out.or_else(|| cfg.out_dir.clone()).ok_or_else(|| {
                CliError::Io("no output directory: pass --out or set out_dir in the config".into())
            })?;
            let stop = Arc::new(AtomicBool::new(false));
            let flag = Arc::clone(&stop);
            ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed))
                .map_err(|e| CliError::Io(format!("cannot install interrupt handler: {e}")))?;
            let outcome = run_experiment(&cfg, &out, threads, &stop)?;
            for f in &outcome.files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Plot { dir } => {
            for f in plot_dir(&dir)? {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Presets { name: None } => {
            for p in presets::PRESETS {
                println!("{:<18} {}", p.name, p.about);
            }
            Ok(())
        }
        Command::Presets { name: Some(name) } => {
            let p = presets::find(&name).ok_or_else(|| CliError::Io(format!("unknown preset `{name}`")))?;
            print!("{}", p.toml);
            Ok(())
        }
    }
}
