//! Batch experiment harness: eps sweeps over seed batteries, aggregation
//! with standard errors, and machine-readable CSV outputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{BeliefProfile, NormalFormGame};
use crate::learn::{
    default_window, detect_convergence, run_fp, ConvergenceVerdict, FilterSpec, FpConfig,
    StepSchedule, BELIEF_FLOOR,
};
use crate::lffp::{run_lffp, LffpConfig, StateMode};
use crate::posg::Posg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixAlgo {
    Gwfp,
    Ffp,
}

impl MatrixAlgo {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixAlgo::Gwfp => "gwfp",
            MatrixAlgo::Ffp => "ffp",
        }
    }

    pub fn filter(&self, eps: f64, assumed_eps: Option<f64>) -> FilterSpec {
        match self {
            MatrixAlgo::Gwfp => FilterSpec::Identity,
            MatrixAlgo::Ffp => FilterSpec::Bayes {
                assumed_eps: assumed_eps.unwrap_or(eps),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosgAlgo {
    Lffp,
    Lgwfp,
}

impl PosgAlgo {
    pub fn name(&self) -> &'static str {
        match self {
            PosgAlgo::Lffp => "lffp",
            PosgAlgo::Lgwfp => "lgwfp",
        }
    }

    pub fn filter(&self, eps: f64, assumed_eps: Option<f64>) -> FilterSpec {
        match self {
            PosgAlgo::Lgwfp => FilterSpec::Identity,
            PosgAlgo::Lffp => FilterSpec::Bayes {
                assumed_eps: assumed_eps.unwrap_or(eps),
            },
        }
    }
}

/// Sweep parameters for repeated normal-form games.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSweepParams {
    pub algos: Vec<MatrixAlgo>,
    pub eps_grid: Vec<f64>,
    pub seeds: u64,
    pub base_seed: u64,
    pub iterations: u64,
    pub schedule: StepSchedule,
    /// Filter coefficient; defaults to the cell's true eps.
    #[serde(default)]
    pub assumed_eps: Option<f64>,
    /// Start all beliefs at (a floored point mass on) this joint action
    /// instead of uniform.
    #[serde(default)]
    pub initial_joint: Option<Vec<usize>>,
    #[serde(default)]
    pub window: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl MatrixSweepParams {
    pub fn fig1_defaults() -> Self {
        Self {
            algos: vec![MatrixAlgo::Gwfp, MatrixAlgo::Ffp],
            eps_grid: (0..=10).map(|k| k as f64 * 0.05).collect(),
            seeds: 100,
            base_seed: 2024,
            iterations: 10_000,
            schedule: StepSchedule::classical(),
            assumed_eps: None,
            initial_joint: None,
            window: None,
            tol: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.algos.is_empty() {
            return Err(Error::Argument("sweep needs at least one algorithm".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Argument("sweep needs at least one seed".into()));
        }
        if self.eps_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Argument("eps grid entries must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Sweep parameters for POSG runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosgSweepParams {
    pub algos: Vec<PosgAlgo>,
    pub eps_grid: Vec<f64>,
    pub seeds: u64,
    pub base_seed: u64,
    pub total_steps: u64,
    pub horizon: u64,
    pub depth: usize,
    pub xi0: f64,
    pub schedule: StepSchedule,
    #[serde(default)]
    pub assumed_eps: Option<f64>,
    #[serde(default = "default_state_mode")]
    pub state_mode: StateMode,
}

fn default_state_mode() -> StateMode {
    StateMode::PointEstimate
}

impl PosgSweepParams {
    pub fn fig2_defaults() -> Self {
        Self {
            algos: vec![PosgAlgo::Lffp, PosgAlgo::Lgwfp],
            eps_grid: vec![0.0, 0.1, 0.2, 0.3],
            seeds: 20,
            base_seed: 2024,
            total_steps: 20_000,
            horizon: 100,
            depth: 3,
            xi0: 0.3,
            schedule: StepSchedule::classical(),
            assumed_eps: None,
            state_mode: StateMode::PointEstimate,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.algos.is_empty() {
            return Err(Error::Argument("sweep needs at least one algorithm".into()));
        }
        if self.seeds == 0 {
            return Err(Error::Argument("sweep needs at least one seed".into()));
        }
        if self.eps_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::Argument("eps grid entries must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One sweep cell's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub algo: String,
    pub eps: f64,
    pub seed: u64,
    pub converged: u8,
    pub converged_to: String,
    pub mean_episode_reward: Option<f64>,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algo: String,
    pub eps: f64,
    pub metric: String,
    pub value: f64,
    pub two_se: f64,
    pub n: u64,
}

#[derive(Debug, Clone)]
pub struct SweepTables {
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

fn run_cells<C, F>(cells: Vec<C>, f: F, workers: usize) -> Vec<ResultRow>
where
    C: Send + Sync,
    F: Fn(&C) -> ResultRow + Sync + Send,
{
    let mut rows = run_cells_impl(cells, f, workers);
    rows.sort_by(|a, b| {
        (a.algo.as_str(), a.eps, a.seed)
            .partial_cmp(&(b.algo.as_str(), b.eps, b.seed))
            .expect("finite eps")
    });
    rows
}

#[cfg(feature = "parallel")]
fn run_cells_impl<C, F>(cells: Vec<C>, f: F, workers: usize) -> Vec<ResultRow>
where
    C: Send + Sync,
    F: Fn(&C) -> ResultRow + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 1 {
        return cells.iter().map(|c| f(c)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers) // 0 keeps rayon's default
        .build()
        .expect("thread pool");
    pool.install(|| cells.par_iter().map(|c| f(c)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_cells_impl<C, F>(cells: Vec<C>, f: F, _workers: usize) -> Vec<ResultRow>
where
    C: Send + Sync,
    F: Fn(&C) -> ResultRow + Sync + Send,
{
    cells.iter().map(|c| f(c)).collect()
}

/// Runs one repeated-game cell and reports its convergence verdict.
pub fn run_matrix_cell(
    game: &NormalFormGame,
    algo: MatrixAlgo,
    eps: f64,
    params: &MatrixSweepParams,
    seed: u64,
) -> Result<ConvergenceVerdict> {
    let mut config = FpConfig::new(
        eps,
        algo.filter(eps, params.assumed_eps),
        params.schedule,
        params.iterations,
    );
    if let Some(joint) = &params.initial_joint {
        config.initial_beliefs =
            Some(floored_pure_profile(joint, game.action_counts()));
    }
    let trace = run_fp(game, &config, seed)?;
    let window = params.window.unwrap_or_else(|| default_window(params.iterations));
    let tol = params.tol.unwrap_or(0.05);
    detect_convergence(&trace, window, tol, game)
}

fn floored_pure_profile(joint: &[usize], action_counts: &[usize]) -> BeliefProfile {
    let strategies = joint
        .iter()
        .zip(action_counts)
        .map(|(&a, &n)| crate::game::MixedStrategy::pure(a, n).floored(BELIEF_FLOOR))
        .collect();
    BeliefProfile::new(strategies)
}

/// Sweeps (algo, eps, seed) cells of repeated-game runs. Deterministic for a
/// fixed base seed regardless of worker count; per-cell failures become
/// error-labelled rows instead of aborting the sweep.
pub fn sweep_matrix(
    game: &NormalFormGame,
    params: &MatrixSweepParams,
    workers: usize,
) -> Result<SweepTables> {
    params.validate()?;
    let mut cells = Vec::new();
    for &algo in &params.algos {
        for &eps in &params.eps_grid {
            for k in 0..params.seeds {
                cells.push((algo, eps, params.base_seed.wrapping_add(k)));
            }
        }
    }
    let rows = run_cells(
        cells,
        |&(algo, eps, seed)| match run_matrix_cell(game, algo, eps, params, seed) {
            Ok(verdict) => ResultRow {
                algo: algo.name().into(),
                eps,
                seed,
                converged: verdict.converged() as u8,
                converged_to: verdict.label(),
                mean_episode_reward: None,
                iterations: params.iterations,
            },
            Err(err) => ResultRow {
                algo: algo.name().into(),
                eps,
                seed,
                converged: 0,
                converged_to: format!("error:{err}"),
                mean_episode_reward: None,
                iterations: params.iterations,
            },
        },
        workers,
    );
    let aggregates = aggregate_matrix(&rows);
    Ok(SweepTables { rows, aggregates })
}

/// Runs one POSG cell and reports the final-quartile mean episode reward.
pub fn run_posg_cell(
    posg: &Posg,
    algo: PosgAlgo,
    eps: f64,
    params: &PosgSweepParams,
    seed: u64,
) -> Result<f64> {
    let mut config = LffpConfig::new(
        params.depth,
        params.xi0,
        algo.filter(eps, params.assumed_eps),
        params.schedule,
    )?;
    config.state_mode = params.state_mode;
    let trace = run_lffp(posg, eps, &config, params.total_steps, params.horizon, seed)?;
    Ok(trace.final_quartile_reward())
}

/// Sweeps (algo, eps, seed) cells of POSG learning runs.
pub fn sweep_posg(posg: &Posg, params: &PosgSweepParams, workers: usize) -> Result<SweepTables> {
    params.validate()?;
    let mut cells = Vec::new();
    for &algo in &params.algos {
        for &eps in &params.eps_grid {
            for k in 0..params.seeds {
                cells.push((algo, eps, params.base_seed.wrapping_add(k)));
            }
        }
    }
    let rows = run_cells(
        cells,
        |&(algo, eps, seed)| match run_posg_cell(posg, algo, eps, params, seed) {
            Ok(reward) => ResultRow {
                algo: algo.name().into(),
                eps,
                seed,
                converged: 0,
                converged_to: String::new(),
                mean_episode_reward: Some(reward),
                iterations: params.total_steps,
            },
            Err(err) => ResultRow {
                algo: algo.name().into(),
                eps,
                seed,
                converged: 0,
                converged_to: format!("error:{err}"),
                mean_episode_reward: None,
                iterations: params.total_steps,
            },
        },
        workers,
    );
    let aggregates = aggregate_posg(&rows);
    Ok(SweepTables { rows, aggregates })
}

fn mean_and_two_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 2.0 * (var / n).sqrt())
}

fn group_cells(rows: &[ResultRow]) -> Vec<(String, f64)> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for row in rows {
        let key = (row.algo.clone(), row.eps);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys
}

/// Percentage of seeds converged per (algo, eps), with two-standard-error
/// bounds over the seed battery.
pub fn aggregate_matrix(rows: &[ResultRow]) -> Vec<AggregateRow> {
    group_cells(rows)
        .into_iter()
        .map(|(algo, eps)| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.algo == algo && r.eps == eps)
                .map(|r| r.converged as f64 * 100.0)
                .collect();
            let (value, two_se) = mean_and_two_se(&values);
            AggregateRow {
                algo,
                eps,
                metric: "pct_converged".into(),
                value,
                two_se,
                n: values.len() as u64,
            }
        })
        .collect()
}

/// Mean final-quartile episode reward per (algo, eps).
pub fn aggregate_posg(rows: &[ResultRow]) -> Vec<AggregateRow> {
    group_cells(rows)
        .into_iter()
        .map(|(algo, eps)| {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| r.algo == algo && r.eps == eps)
                .filter_map(|r| r.mean_episode_reward)
                .collect();
            let (value, two_se) = mean_and_two_se(&values);
            AggregateRow {
                algo,
                eps,
                metric: "final_quartile_reward".into(),
                value,
                two_se,
                n: values.len() as u64,
            }
        })
        .collect()
}

pub const ROWS_HEADER: &str =
    "algo,eps,seed,converged,converged_to,mean_episode_reward,iterations,wall_time";
pub const AGGREGATE_HEADER: &str = "algo,eps,metric,value,two_se,n";

/// Renders rows.csv as a string (UTF-8, LF, '.' decimal separator). The
/// wall_time column is left empty so outputs stay byte-identical across
/// repeated invocations; timing lives in the manifest.
pub fn render_rows_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(ROWS_HEADER);
    out.push('\n');
    for r in rows {
        let reward = r
            .mean_episode_reward
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},\n",
            r.algo, r.eps, r.seed, r.converged, r.converged_to, reward, r.iterations
        ));
    }
    out
}

pub fn render_aggregate_csv(aggregates: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            a.algo, a.eps, a.metric, a.value, a.two_se, a.n
        ));
    }
    out
}

/// Writes rows.csv, aggregate.csv, and manifest.json under `dir`. All file
/// contents are rendered before anything touches disk.
pub fn emit_outputs(tables: &SweepTables, manifest: &serde_json::Value, dir: &Path) -> Result<()> {
    if tables.rows.is_empty() {
        return Err(Error::Argument("refusing to emit an empty result table".into()));
    }
    let rows_csv = render_rows_csv(&tables.rows);
    let aggregate_csv = render_aggregate_csv(&tables.aggregates);
    let manifest_json =
        serde_json::to_string_pretty(manifest).map_err(|e| Error::Parse(e.to_string()))?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("rows.csv"), rows_csv)?;
    fs::write(dir.join("aggregate.csv"), aggregate_csv)?;
    fs::write(dir.join("manifest.json"), manifest_json)?;
    Ok(())
}
