//! Seeded multi-run sweeps.
//!
//! Seed scheme: run `i` of an experiment gets `derive_seed(master_seed, i)`, and
//! that run seed is the same for every algorithm and every `c`. Its initial point
//! is drawn from `ChaCha8Rng::seed_from_u64(derive_seed(run_seed, 1))`; the
//! algorithms derive their own streams from the run seed. The optimum is drawn
//! from `target_seed`, or from `derive_seed(master_seed, u64::MAX)` when absent.
//! Adding runs therefore never changes the streams of earlier runs.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use pvtune_core::baselines::{run_sr_training, run_ste_training, BaselineConfig, SRConfig};
use pvtune_core::linearized::{
    run_linearized_pv, run_pv_tuning, LinearizedConfig, PvTuningConfig, Selection, SubspaceConfig,
};
use pvtune_core::pvplus::{clip_init, random_init, run_pv_plus, PVPlusConfig};
use pvtune_core::rng::derive_seed;
use pvtune_core::smoothness::{schema_estimate_subspace, PowerIterConfig, Schema};
use pvtune_core::vq::{run_vq_pv, vq_random_init, VqPvConfig};
use pvtune_core::{run_pv, Objective, PvConfig, QuantizedVector, RunResult, TraceRecord, VStepMode, WeightedQuadratic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::algorithm::Algorithm;
use crate::config::{ExperimentConfig, InitRule, Kind, WeightRule};
use crate::error::CliError;
use crate::output::{fmt_f64, median, write_summary, write_table, write_trace_csv, SummaryRow};

const TARGET_STREAM: u64 = u64::MAX;
const INIT_STREAM: u64 = 1;

pub fn run_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}

/// The experiment objective with the scale used for random initial points.
pub struct Problem {
    pub objective: WeightedQuadratic,
    /// Range of the optimum's entries (1 when they are all equal).
    pub scale: f64,
    pub smoothness_l: f64,
}

impl Problem {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let seed = cfg.target_seed.unwrap_or_else(|| derive_seed(cfg.master_seed, TARGET_STREAM));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target: Vec<f64> = (0..cfg.d).map(|_| rand::Rng::sample(&mut rng, StandardNormal)).collect();
        let objective = match cfg.weights {
            WeightRule::Linear => WeightedQuadratic::with_linear_weights(target)?,
            WeightRule::Ones => WeightedQuadratic::new(vec![1.0; cfg.d], target)?,
        };
        let t = objective.target();
        let range = t.iter().copied().fold(f64::MIN, f64::max) - t.iter().copied().fold(f64::MAX, f64::min);
        let scale = if range > 0.0 { range } else { 1.0 };
        let smoothness_l = match cfg.smoothness_l {
            Some(l) => l,
            None => objective.smoothness().expect("quadratics know their smoothness"),
        };
        Ok(Self { objective, scale, smoothness_l })
    }

    fn init(&self, cfg: &ExperimentConfig, c: usize, run_seed: u64) -> Result<QuantizedVector, CliError> {
        match cfg.init {
            InitRule::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, INIT_STREAM));
                Ok(random_init(cfg.d, c, self.scale, &mut rng)?)
            }
            InitRule::ClipOfOptimum => Ok(clip_init(self.objective.target(), c)?),
        }
    }
}

/// One run of `algo` at value budget `c`.
pub fn run_one(
    cfg: &ExperimentConfig,
    problem: &Problem,
    algo: Algorithm,
    c: usize,
    run_seed: u64,
) -> Result<RunResult, CliError> {
    let q = &problem.objective;
    let l = problem.smoothness_l;
    let exact_mode = if q.capabilities().is_separable { VStepMode::Separable } else { VStepMode::BruteForce };
    let pv = PvConfig {
        max_iterations: cfg.max_iterations,
        convergence_tol: if algo.stops_early() { cfg.convergence_tol } else { 0.0 },
        patience: cfg.patience,
        v_step_mode: exact_mode,
    };
    if let Algorithm::VqPv(m) = algo {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, INIT_STREAM));
        let x0 = vq_random_init(cfg.d, m, c, problem.scale, &mut rng)?;
        return Ok(run_vq_pv(q, &x0, &VqPvConfig::new(pv, l), run_seed)?);
    }
    let x0 = problem.init(cfg, c, run_seed)?;
    let baseline = |sr: SRConfig| BaselineConfig {
        iterations: cfg.max_iterations,
        learning_rate: cfg.learning_rate,
        smoothness_l: l,
        sr,
    };
    let subspace = |selection: Selection, trust: bool| {
        if trust {
            SubspaceConfig::trust_ratio(selection, cfg.trust_ratio_rho)
        } else {
            SubspaceConfig::fixed(selection, cfg.tau)
        }
    };
    let run = match algo {
        Algorithm::PvExact => run_pv(q, &x0, &pv, run_seed)?,
        Algorithm::PvBrute => run_pv(q, &x0, &PvConfig { v_step_mode: VStepMode::BruteForce, ..pv }, run_seed)?,
        Algorithm::PvSeparable => run_pv(q, &x0, &PvConfig { v_step_mode: VStepMode::Separable, ..pv }, run_seed)?,
        Algorithm::Linearized => run_linearized_pv(q, &x0, &pv, &LinearizedConfig::new(l), run_seed)?,
        Algorithm::LinearizedMulti(t) => {
            let lin = LinearizedConfig { inner_steps: t, ..LinearizedConfig::new(l) };
            run_linearized_pv(q, &x0, &pv, &lin, run_seed)?
        }
        Algorithm::Halpern(t) => {
            let lin = LinearizedConfig { inner_steps: t, halpern: true, ..LinearizedConfig::new(l) };
            run_linearized_pv(q, &x0, &pv, &lin, run_seed)?
        }
        Algorithm::Subspace { selection, trust, adam } => {
            let mut tuning = PvTuningConfig::new(pv, LinearizedConfig::new(l), subspace(selection, trust));
            tuning.use_adam = adam;
            tuning.adam_learning_rate = cfg.learning_rate;
            run_pv_tuning(q, &x0, &tuning, run_seed)?
        }
        Algorithm::PvSteHybrid => {
            let mut tuning =
                PvTuningConfig::new(pv, LinearizedConfig::new(l), subspace(Selection::GreedyTopK, true));
            tuning.combine_ste = true;
            run_pv_tuning(q, &x0, &tuning, run_seed)?
        }
        Algorithm::Ste => run_ste_training(q, &x0, &baseline(SRConfig::default()), run_seed)?,
        Algorithm::Sr(t) => {
            run_sr_training(q, &x0, &baseline(SRConfig { temperature: t, ..SRConfig::default() }), run_seed)?
        }
        Algorithm::PvPlus => {
            let plus = PVPlusConfig { pv, max_unique: c, pool: q.target().to_vec() };
            run_pv_plus(q, &x0, &plus, run_seed)?
        }
        Algorithm::VqPv(_) => unreachable!("handled above"),
    };
    Ok(run)
}

/// What a finished (or interrupted) experiment wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<SummaryRow>,
}

/// Trace file name for one `(algorithm, c)` group.
pub fn trace_file_name(algo: &Algorithm, c: usize) -> String {
    format!("trace_{}_c{c}.csv", algo.slug())
}

/// Builds a worker pool; zero threads means one per core.
fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Io(e.to_string()))
}

/// Runs every `(algorithm, c, seed)` combination and writes the CSVs into `out`.
///
/// When `stop` is raised, runs that have not started are skipped, everything
/// that finished is written, and [`CliError::Interrupted`] is returned.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: &Path,
    threads: usize,
    stop: &AtomicBool,
) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    match cfg.kind {
        Kind::Trace => run_traces(cfg, out, threads, stop),
        Kind::Smoothness => run_smoothness(cfg, out, threads, stop),
    }
}

fn run_traces(cfg: &ExperimentConfig, out: &Path, threads: usize, stop: &AtomicBool) -> Result<Outcome, CliError> {
    let problem = Problem::new(cfg)?;
    let groups: Vec<(Algorithm, usize)> =
        cfg.algorithms.iter().flat_map(|&a| cfg.c_values.iter().map(move |&c| (a, c))).collect();
    let tasks: Vec<(usize, usize)> =
        (0..groups.len()).flat_map(|g| (0..cfg.num_seeds).map(move |i| (g, i))).collect();

    let results: Vec<Option<Result<RunResult, CliError>>> = pool(threads)?.install(|| {
        tasks
            .par_iter()
            .map(|&(g, i)| {
                if stop.load(Ordering::Relaxed) {
                    return None;
                }
                let (algo, c) = groups[g];
                let seed = run_seed(cfg.master_seed, i);
                Some(run_one(cfg, &problem, algo, c, seed).map_err(|e| match e {
                    CliError::Core(source) => {
                        CliError::Run { algorithm: algo.to_string(), c, run_seed: seed, source }
                    }
                    other => other,
                }))
            })
            .collect()
    });

    let total = results.len();
    let mut per_group: Vec<Vec<Vec<TraceRecord>>> = vec![Vec::new(); groups.len()];
    for (&(g, _), res) in tasks.iter().zip(results) {
        if let Some(res) = res {
            per_group[g].push(res?.trace);
        }
    }
    let completed: usize = per_group.iter().map(Vec::len).sum();

    let mut files = Vec::new();
    let mut summary = Vec::new();
    for ((algo, c), runs) in groups.iter().zip(&per_group) {
        if runs.is_empty() {
            continue;
        }
        let path = out.join(trace_file_name(algo, *c));
        write_trace_csv(&path, runs)?;
        files.push(path);
        summary.push(SummaryRow::from_runs(algo.to_string(), *c, runs));
    }
    let summary_path = out.join("summary.csv");
    write_summary(&summary_path, &summary)?;
    files.push(summary_path);

    if completed < total {
        return Err(CliError::Interrupted { completed, total });
    }
    Ok(Outcome { files, summary })
}

pub const SMOOTHNESS_COLUMNS: [&str; 5] = ["run_seed", "subspace_size", "trajectory", "power_iteration", "exact"];

/// For each run, ranks coordinates by gradient magnitude at the initial point
/// and estimates L on the top-`k` coordinates for every configured size `k`.
fn run_smoothness(cfg: &ExperimentConfig, out: &Path, threads: usize, stop: &AtomicBool) -> Result<Outcome, CliError> {
    let problem = Problem::new(cfg)?;
    let q = &problem.objective;
    let c = cfg.c_values[0];
    let rows: Vec<Option<Result<Vec<[f64; 3]>, CliError>>> = pool(threads)?.install(|| {
        (0..cfg.num_seeds)
            .into_par_iter()
            .map(|i| {
                if stop.load(Ordering::Relaxed) {
                    return None;
                }
                let seed = run_seed(cfg.master_seed, i);
                Some((|| {
                    let x = problem.init(cfg, c, seed)?.dequantize();
                    let g = q.gradient(&x);
                    let mut order: Vec<usize> = (0..cfg.d).collect();
                    order.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()).then(a.cmp(&b)));
                    let power = PowerIterConfig { num_iters: cfg.power_iters, seed, ..PowerIterConfig::default() };
                    cfg.subspace_sizes
                        .iter()
                        .map(|&k| {
                            let s = &order[..k];
                            let traj = schema_estimate_subspace(q, &x, s, &Schema::trajectory_default(), &power)?;
                            let pi = schema_estimate_subspace(q, &x, s, &Schema::PowerIteration, &power)?;
                            let exact = q.subspace_smoothness(s).expect("quadratics know their smoothness");
                            Ok([traj, pi, exact])
                        })
                        .collect::<Result<Vec<_>, CliError>>()
                })())
            })
            .collect()
    });

    let total = rows.len();
    let mut table = Vec::new();
    let mut per_size: Vec<Vec<[f64; 3]>> = vec![Vec::new(); cfg.subspace_sizes.len()];
    for (i, r) in rows.into_iter().enumerate() {
        let Some(r) = r else { continue };
        for (k, est) in r?.into_iter().enumerate() {
            table.push(vec![
                run_seed(cfg.master_seed, i).to_string(),
                cfg.subspace_sizes[k].to_string(),
                fmt_f64(est[0]),
                fmt_f64(est[1]),
                fmt_f64(est[2]),
            ]);
            per_size[k].push(est);
        }
    }
    let completed = per_size.first().map_or(0, Vec::len);
    let path = out.join("smoothness.csv");
    write_table(&path, &SMOOTHNESS_COLUMNS, &table)?;

    let summary_rows: Vec<Vec<String>> = cfg
        .subspace_sizes
        .iter()
        .zip(&per_size)
        .filter(|(_, v)| !v.is_empty())
        .map(|(k, v)| {
            let col = |j: usize| fmt_f64(median(&v.iter().map(|e| e[j]).collect::<Vec<_>>()));
            vec![k.to_string(), v.len().to_string(), col(0), col(1), col(2)]
        })
        .collect();
    let summary_path = out.join("smoothness_summary.csv");
    write_table(
        &summary_path,
        &["subspace_size", "num_runs", "median_trajectory", "median_power_iteration", "median_exact"],
        &summary_rows,
    )?;
    if completed < total {
        return Err(CliError::Interrupted { completed, total });
    }
    Ok(Outcome { files: vec![path, summary_path], summary: Vec::new() })
}
