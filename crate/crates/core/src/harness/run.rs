//! Running batches of independent searches and writing their outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::trace::{write_trace, TraceHeader};
use super::{ExperimentSpec, MctsParams, SimSpec, SolverSpec};
use crate::dast::CombinedSimulator;
use crate::error::{config_err, Result};
use crate::mcts::search;
use crate::montecarlo::{mc_search, McConfig};
use crate::sim::SeedActionSimulator;
use crate::solver::{BestPathList, Budget};

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Where to write summaries and traces; nothing is written when `None`.
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    pub workers: usize,
}

/// One search of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchRecord {
    pub index: usize,
    pub rng_seed: u64,
    pub init_seed: u64,
    pub best_return: Option<f64>,
    /// Whether the best path reached the event. In a differential run this is
    /// the differential event.
    pub event: bool,
    /// Log likelihood of the best path, excluding its terminal step.
    pub best_log_likelihood: Option<f64>,
    pub episodes: u64,
    pub steps: u64,
    pub wall_seconds: f64,
    pub paths: BestPathList,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub spec: ExperimentSpec,
    pub records: Vec<SearchRecord>,
}

impl RunSummary {
    /// Share of searches whose best path reached the event.
    pub fn find_rate(&self) -> f64 {
        let found = self.records.iter().filter(|r| r.event).count();
        found as f64 / self.records.len().max(1) as f64
    }

    pub fn total_steps(&self) -> u64 {
        self.records.iter().map(|r| r.steps).sum()
    }
}

fn build(spec: &ExperimentSpec, init_seed: u64) -> Result<Box<dyn SeedActionSimulator>> {
    let test = spec.simulation.build(init_seed)?;
    Ok(match &spec.baseline {
        None => test,
        Some(b) => Box::new(CombinedSimulator::new(test, b.build(init_seed)?)),
    })
}

fn search_one(spec: &ExperimentSpec, solver: &SolverSpec, index: usize) -> Result<SearchRecord> {
    let (rng_seed, init_seed) = spec.search_seeds(index);
    let mut sim = build(spec, init_seed)?;
    let started = Instant::now();
    let result = match solver {
        SolverSpec::Mcts(p) => {
            let cfg = SolverSpec::mcts_config(p, spec.budget, spec.top_k, rng_seed);
            search(&mut sim, &spec.reward, &cfg)?
        }
        SolverSpec::MonteCarlo { seed_space } => {
            let cfg = McConfig {
                budget: spec.budget,
                top_k: spec.top_k,
                rng_seed,
                seed_space: seed_space.clone(),
            };
            mc_search(&mut sim, &spec.reward, &cfg)?
        }
    };
    let wall_seconds = started.elapsed().as_secs_f64();
    let best = result.paths.best();
    Ok(SearchRecord {
        index,
        rng_seed,
        init_seed,
        best_return: best.map(|p| p.return_value),
        event: result.found_event(),
        best_log_likelihood: best.map(|p| p.trajectory.log_likelihood()),
        episodes: result.episodes,
        steps: result.steps,
        wall_seconds,
        paths: result.paths,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| config_err(format!("cannot start {workers} workers: {e}")))
}

fn run_batch(spec: &ExperimentSpec, solver: &SolverSpec, workers: usize) -> Result<Vec<SearchRecord>> {
    pool(workers)?.install(|| {
        (0..spec.searches)
            .into_par_iter()
            .map(|i| search_one(spec, solver, i))
            .collect()
    })
}

/// Runs `spec.searches` independent searches and writes the outputs.
///
/// The set of written files and their contents depend only on the spec,
/// except `timing.csv`, which holds wall-clock times.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunSummary> {
    spec.validate()?;
    if spec.baseline.is_some() {
        return Err(config_err("spec has a baseline; run it as a differential experiment"));
    }
    run_validated(spec, opts)
}

/// Runs a differential experiment: test and baseline simulators composed
/// into one, searched with the differential reward.
pub fn run_dast(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunSummary> {
    spec.validate()?;
    if spec.baseline.is_none() {
        return Err(config_err("a differential experiment needs a [baseline] simulator"));
    }
    run_validated(spec, opts)
}

fn run_validated(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunSummary> {
    let records = run_batch(spec, &spec.solver, opts.workers)?;
    let summary = RunSummary {
        spec: spec.clone(),
        records,
    };
    if let Some(out) = &opts.out {
        write_outputs(&summary, out)?;
    }
    Ok(summary)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    search: usize,
    solver: &'a str,
    rng_seed: u64,
    init_seed: u64,
    event: bool,
    best_return: Option<f64>,
    best_log_likelihood: Option<f64>,
    episodes: u64,
    steps: u64,
    paths: usize,
}

#[derive(Serialize)]
struct TimingRow {
    search: usize,
    wall_seconds: f64,
}

#[derive(Serialize)]
struct TrackRow<'a> {
    t: usize,
    time: u64,
    aircraft: usize,
    north: f64,
    east: f64,
    altitude: f64,
    vertical_rate: f64,
    heading: f64,
    airspeed: f64,
    advisory: &'a str,
    responding: bool,
}

pub(crate) fn trace_name(search: usize, rank: usize) -> String {
    if rank == 0 {
        format!("trace_{search}.jsonl")
    } else {
        format!("trace_{search}_{rank}.jsonl")
    }
}

fn write_outputs(summary: &RunSummary, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let spec = &summary.spec;
    let solver = spec.solver.name();

    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    for r in &summary.records {
        w.serialize(SummaryRow {
            search: r.index,
            solver,
            rng_seed: r.rng_seed,
            init_seed: r.init_seed,
            event: r.event,
            best_return: r.best_return,
            best_log_likelihood: r.best_log_likelihood,
            episodes: r.episodes,
            steps: r.steps,
            paths: r.paths.len(),
        })?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("timing.csv"))?;
    for r in &summary.records {
        w.serialize(TimingRow {
            search: r.index,
            wall_seconds: r.wall_seconds,
        })?;
    }
    w.flush()?;

    for r in &summary.records {
        for (rank, path) in r.paths.iter().enumerate() {
            let header = TraceHeader {
                simulation: spec.simulation.clone(),
                baseline: spec.baseline.clone(),
                reward: spec.reward,
                solver: solver.into(),
                search: r.index,
                rank,
                rng_seed: r.rng_seed,
                init_seed: r.init_seed,
            };
            write_trace(&out.join(trace_name(r.index, rank)), &header, &path.trajectory)?;
        }
        let encounter = matches!(spec.simulation, SimSpec::Encounter(_)) && spec.baseline.is_none();
        if let (true, Some(best)) = (encounter, r.paths.best()) {
            write_tracks(&out.join(format!("tracks_{}.csv", r.index)), &best.trajectory.details)?;
        }
    }
    Ok(())
}

/// Per-aircraft state rows for plotting an encounter path.
fn write_tracks(path: &Path, details: &[Option<Value>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (t, d) in details.iter().enumerate() {
        let Some(d) = d else { continue };
        let time = d["time"].as_u64().unwrap_or(t as u64);
        let Some(aircraft) = d["aircraft"].as_array() else { continue };
        for (i, a) in aircraft.iter().enumerate() {
            let f = |k: &str| a[k].as_f64().unwrap_or(f64::NAN);
            w.serialize(TrackRow {
                t,
                time,
                aircraft: i,
                north: f("north"),
                east: f("east"),
                altitude: f("altitude"),
                vertical_rate: f("vertical_rate"),
                heading: f("heading"),
                airspeed: f("airspeed"),
                advisory: a["advisory"].as_str().unwrap_or(""),
                responding: a["responding"].as_bool().unwrap_or(false),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One cell of a budget sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub budget_mode: &'static str,
    pub budget: f64,
    pub solver: &'static str,
    pub searches: usize,
    /// Mean best return over searches that kept at least one path.
    pub mean_return: f64,
    /// Sample standard deviation over sqrt of the count; 0 for one search.
    pub sem_return: f64,
    pub find_rate: f64,
    pub mean_steps: f64,
}

fn budget_parts(b: Budget) -> (&'static str, f64) {
    match b {
        Budget::Iterations(n) => ("iterations", n as f64),
        Budget::Steps(n) => ("steps", n as f64),
        Budget::Seconds(s) => ("seconds", s),
    }
}

pub(crate) fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs both solvers at every budget on the same searches. The tree search
/// uses the spec's parameters when the spec names it, library defaults
/// otherwise.
pub fn compare_budgets(spec: &ExperimentSpec, budgets: &[Budget], opts: &RunOptions) -> Result<Vec<CompareRow>> {
    spec.validate()?;
    if budgets.is_empty() {
        return Err(config_err("compare needs at least one budget"));
    }
    let (mcts, mc_space) = match &spec.solver {
        SolverSpec::Mcts(p) => (p.clone(), Default::default()),
        SolverSpec::MonteCarlo { seed_space } => (MctsParams::default(), seed_space.clone()),
    };
    let solvers = [SolverSpec::Mcts(mcts), SolverSpec::MonteCarlo { seed_space: mc_space }];
    let mut rows = Vec::new();
    for &budget in budgets {
        let at = ExperimentSpec {
            budget,
            ..spec.clone()
        };
        at.validate()?;
        for solver in &solvers {
            let records = run_batch(&at, solver, opts.workers)?;
            let returns: Vec<f64> = records.iter().filter_map(|r| r.best_return).collect();
            let (mean_return, sem_return) = mean_sem(&returns);
            let n = records.len() as f64;
            let (budget_mode, value) = budget_parts(budget);
            rows.push(CompareRow {
                budget_mode,
                budget: value,
                solver: solver.name(),
                searches: records.len(),
                mean_return,
                sem_return,
                find_rate: records.iter().filter(|r| r.event).count() as f64 / n,
                mean_steps: records.iter().map(|r| r.steps as f64).sum::<f64>() / n,
            });
        }
    }
    if let Some(out) = &opts.out {
        fs::create_dir_all(out)?;
        write_compare_csv(&out.join("compare.csv"), &rows)?;
    }
    Ok(rows)
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
