//! Seeded ensemble sweeps over drone altitude and UE count, with CSV output.
//!
//! Each seed draws one UE realization; the workload sweep takes nested
//! prefixes of it, so a larger UE count always contains the smaller sets.
//! Results are aggregated in (point, seed) order, so the output does not
//! depend on the worker count.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{validate_assignment, Violation};
use crate::error::{ScenarioError, SolveError};
use crate::placement::SearchOptions;
use crate::scenario::{generate_ues, load_scenario, MaternCluster, Scenario, ScenarioConfig};
use crate::solver::{solve, solved_model, Algorithm};

pub const CSV_HEADER: [&str; 7] = [
    "sweep_var",
    "x",
    "algorithm",
    "mean_throughput_bps",
    "std_throughput_bps",
    "mean_block_ratio",
    "n_seeds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    AltitudeM,
    UeCount,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::AltitudeM => "altitude_m",
            SweepVar::UeCount => "ue_count",
        }
    }
}

/// One algorithm's ensemble statistics at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoStats {
    pub algorithm: Algorithm,
    pub mean_throughput_bps: f64,
    /// Sample standard deviation (0 for a single seed).
    pub std_throughput_bps: f64,
    /// Blocked demand over total demand, averaged over seeds.
    pub mean_block_ratio: f64,
    pub mean_served_demand_bps: f64,
    pub mean_blocked_demand_bps: f64,
    pub mean_total_demand_bps: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub stats: Vec<AlgoStats>,
}

impl SweepPoint {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgoStats> {
        self.stats.iter().find(|s| s.algorithm == algorithm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSeries {
    pub sweep_var: SweepVar,
    pub points: Vec<SweepPoint>,
    pub seeds: Vec<u64>,
}

/// Result of one solver run, as needed for aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSample {
    pub throughput_bps: f64,
    pub served_demand_bps: f64,
    pub blocked_demand_bps: f64,
    pub total_demand_bps: f64,
}

impl RunSample {
    pub fn block_ratio(&self) -> f64 {
        if self.total_demand_bps > 0.0 {
            self.blocked_demand_bps / self.total_demand_bps
        } else {
            0.0
        }
    }
}

/// World template plus the UE generator; one scenario per (seed, UE count).
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub template: Scenario,
    pub area_m: f64,
    pub cluster: MaternCluster,
    pub ue_count: usize,
    pub search: SearchOptions,
}

impl Ensemble {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        Ok(Self {
            template: config.build(0)?,
            area_m: config.area_m,
            cluster: config.cluster.clone(),
            ue_count: config.ue_count,
            search: SearchOptions::default(),
        })
    }

    /// Scenario for `seed` with the first `n` UEs of that seed's realization.
    pub fn scenario(&self, seed: u64, n: usize) -> Result<Scenario, ScenarioError> {
        let mut ues = generate_ues(self.ue_count.max(n), self.area_m, &self.cluster, seed)?;
        ues.truncate(n);
        let mut s = self.template.with_ues(ues);
        s.seed = seed;
        s.validate()?;
        Ok(s)
    }
}

/// Solves `scenario` with `algorithm` and validates the output, returning the aggregation sample.
pub fn run_once(scenario: &Scenario, algorithm: Algorithm, search: SearchOptions) -> Result<RunSample, ExperimentError> {
    let result = solve(scenario, algorithm, search)?;
    let a = &result.solution.assignment;
    validate_assignment(&solved_model(scenario, algorithm), &result.solution.positions, a).map_err(|violation| ExperimentError::InvalidOutput {
        seed: scenario.seed,
        algorithm,
        violation,
    })?;
    Ok(RunSample {
        throughput_bps: result.solution.throughput_bps,
        served_demand_bps: a.served_demand_bps(scenario),
        blocked_demand_bps: a.blocked_demand_bps(scenario),
        total_demand_bps: scenario.total_demand_bps(),
    })
}

fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        0.0
    } else {
        values.sum::<f64>() / n as f64
    }
}

/// Aggregates per-seed samples (in seed order) for one algorithm.
pub fn aggregate(algorithm: Algorithm, samples: &[RunSample]) -> AlgoStats {
    let t = samples.iter().map(|s| s.throughput_bps);
    let m = mean(t.clone());
    let std = if samples.len() > 1 {
        (t.map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    AlgoStats {
        algorithm,
        mean_throughput_bps: m,
        std_throughput_bps: std,
        mean_block_ratio: mean(samples.iter().map(RunSample::block_ratio)),
        mean_served_demand_bps: mean(samples.iter().map(|s| s.served_demand_bps)),
        mean_blocked_demand_bps: mean(samples.iter().map(|s| s.blocked_demand_bps)),
        mean_total_demand_bps: mean(samples.iter().map(|s| s.total_demand_bps)),
        n_seeds: samples.len(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{algorithm} output for seed {seed} is infeasible: {violation}")]
    InvalidOutput {
        seed: u64,
        algorithm: Algorithm,
        violation: Violation,
    },
    #[error("invalid experiment config: {0}")]
    Config(String),
}

fn sweep(
    sweep_var: SweepVar,
    xs: &[f64],
    algorithms: &[Algorithm],
    seeds: &[u64],
    search: SearchOptions,
    make: impl Fn(f64, u64) -> Result<Scenario, ScenarioError> + Sync,
) -> Result<ExperimentSeries, ExperimentError> {
    let jobs: Vec<(usize, u64)> = (0..xs.len()).flat_map(|p| seeds.iter().map(move |&s| (p, s))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(p, seed)| -> Result<Vec<RunSample>, ExperimentError> {
            let scenario = make(xs[p], seed)?;
            algorithms
                .iter()
                .map(|&a| run_once(&scenario, a, search))
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let points = xs
        .iter()
        .enumerate()
        .map(|(p, &x)| {
            let rows = &samples[p * seeds.len()..(p + 1) * seeds.len()];
            SweepPoint {
                x,
                stats: algorithms
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| aggregate(a, &rows.iter().map(|r| r[k]).collect::<Vec<_>>()))
                    .collect(),
            }
        })
        .collect();
    Ok(ExperimentSeries {
        sweep_var,
        points,
        seeds: seeds.to_vec(),
    })
}

/// Drones restricted to each altitude in turn; the horizontal search still runs.
pub fn altitude_sweep(
    ensemble: &Ensemble,
    altitudes_m: &[f64],
    algorithms: &[Algorithm],
    seeds: &[u64],
) -> Result<ExperimentSeries, ExperimentError> {
    sweep(SweepVar::AltitudeM, altitudes_m, algorithms, seeds, ensemble.search, |h, seed| {
        Ok(ensemble.scenario(seed, ensemble.ue_count)?.at_altitude(h))
    })
}

/// Varying UE count at a fixed drone altitude.
pub fn workload_sweep(
    ensemble: &Ensemble,
    ue_counts: &[usize],
    altitude_m: f64,
    algorithms: &[Algorithm],
    seeds: &[u64],
) -> Result<ExperimentSeries, ExperimentError> {
    let xs: Vec<f64> = ue_counts.iter().map(|&n| n as f64).collect();
    sweep(SweepVar::UeCount, &xs, algorithms, seeds, ensemble.search, |n, seed| {
        Ok(ensemble.scenario(seed, n as usize)?.at_altitude(altitude_m))
    })
}

/// Writes one row per (point, algorithm) under [`CSV_HEADER`].
pub fn emit_csv(series: &ExperimentSeries, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(CSV_HEADER)?;
    for point in &series.points {
        for s in &point.stats {
            w.write_record([
                series.sweep_var.name().to_string(),
                point.x.to_string(),
                s.algorithm.name().to_string(),
                s.mean_throughput_bps.to_string(),
                s.std_throughput_bps.to_string(),
                s.mean_block_ratio.to_string(),
                s.n_seeds.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: path.as_ref().to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Seeds `start, start + 1, ..., start + count - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRange {
    pub start: u64,
    pub count: usize,
}

impl Default for SeedRange {
    fn default() -> Self {
        Self { start: 0, count: 50 }
    }
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.count as u64).map(|k| self.start.wrapping_add(k)).collect()
    }
}

fn default_altitudes() -> Vec<f64> {
    crate::scenario::altitude_range(100.0, 300.0, 20.0)
}

fn default_altitude_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::AaBud, Algorithm::HdDbs]
}

fn default_ue_counts() -> Vec<usize> {
    (100..=170).step_by(10).collect()
}

fn default_workload_altitude() -> f64 {
    160.0
}

fn default_workload_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::AaBud, Algorithm::HdDbs, Algorithm::SMbs]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltitudeSweepConfig {
    #[serde(default = "default_altitudes")]
    pub altitudes_m: Vec<f64>,
    #[serde(default = "default_altitude_algorithms")]
    pub algorithms: Vec<Algorithm>,
}

impl Default for AltitudeSweepConfig {
    fn default() -> Self {
        Self {
            altitudes_m: default_altitudes(),
            algorithms: default_altitude_algorithms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSweepConfig {
    #[serde(default = "default_ue_counts")]
    pub ue_counts: Vec<usize>,
    #[serde(default = "default_workload_altitude")]
    pub altitude_m: f64,
    #[serde(default = "default_workload_algorithms")]
    pub algorithms: Vec<Algorithm>,
}

impl Default for WorkloadSweepConfig {
    fn default() -> Self {
        Self {
            ue_counts: default_ue_counts(),
            altitude_m: default_workload_altitude(),
            algorithms: default_workload_algorithms(),
        }
    }
}

/// Experiment file: the world (generated from `base`, or the stations,
/// channel and grid of a scenario file), the seeds and the sweeps to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub base: ScenarioConfig,
    /// Scenario file whose stations, channel and grid replace the generated
    /// ones (relative paths resolve against the config file's directory).
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub seeds: SeedRange,
    #[serde(default)]
    pub altitude_sweep: Option<AltitudeSweepConfig>,
    #[serde(default)]
    pub workload_sweep: Option<WorkloadSweepConfig>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let mut config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            ExperimentError::Config(format!("{}: {}", e.path(), e.inner()))
        })?;
        if let (Some(p), Some(dir)) = (&config.scenario, path.parent()) {
            if p.is_relative() {
                config.scenario = Some(dir.join(p));
            }
        }
        Ok(config)
    }

    pub fn ensemble(&self) -> Result<Ensemble, ExperimentError> {
        let mut ensemble = Ensemble::from_config(&self.base)?;
        if let Some(path) = &self.scenario {
            let file = load_scenario(path)?;
            ensemble.template = Scenario {
                ues: ensemble.template.ues.clone(),
                ..file
            };
        }
        Ok(ensemble)
    }
}

/// Runs every configured sweep and writes `altitude_sweep.csv` and/or
/// `workload_sweep.csv` into `out_dir` (created if missing).
pub fn run_experiments(config: &ExperimentConfig, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ExperimentError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|source| ExperimentError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    if config.altitude_sweep.is_none() && config.workload_sweep.is_none() {
        return Err(ExperimentError::Config("no sweep configured".into()));
    }
    let ensemble = config.ensemble()?;
    let seeds = config.seeds.seeds();
    let mut written = Vec::new();
    if let Some(a) = &config.altitude_sweep {
        let series = altitude_sweep(&ensemble, &a.altitudes_m, &a.algorithms, &seeds)?;
        let path = out_dir.join("altitude_sweep.csv");
        emit_csv(&series, &path)?;
        written.push(path);
    }
    if let Some(w) = &config.workload_sweep {
        let series = workload_sweep(&ensemble, &w.ue_counts, w.altitude_m, &w.algorithms, &seeds)?;
        let path = out_dir.join("workload_sweep.csv");
        emit_csv(&series, &path)?;
        written.push(path);
    }
    Ok(written)
}
