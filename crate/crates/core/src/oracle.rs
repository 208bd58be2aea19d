//! Exact and fractional reference solvers for micro-instances.
//!
//! Everything here is exponential or dense-LP and guarded by [`OracleCaps`].

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{Assignment, CostTable, ProblemData, UpbProblem, UpbSolution};
use crate::channel::{ChannelParams, Duplex, Point3};
use crate::error::SolveError;
use crate::placement::{opt_dbs_placement, Candidate, Evaluator, PlacementSolution, SearchOptions, SearchResult};
use crate::scenario::{altitude_range, MaternCluster, Scenario, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCaps {
    pub max_ues: usize,
    pub max_stations: usize,
    pub max_sc_per_station: u32,
    pub max_sites: usize,
    pub max_altitudes: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        Self {
            max_ues: 12,
            max_stations: 3,
            max_sc_per_station: 16,
            max_sites: 4,
            max_altitudes: 2,
        }
    }
}

impl OracleCaps {
    /// Checks the assignment-level caps (UEs, stations, budgets).
    pub fn check_problem(&self, n_ues: usize, capacities: &[u32]) -> Result<(), SolveError> {
        if n_ues > self.max_ues {
            return Err(SolveError::CapsExceeded(format!("{n_ues} UEs > {}", self.max_ues)));
        }
        if capacities.len() > self.max_stations {
            return Err(SolveError::CapsExceeded(format!(
                "{} stations > {}",
                capacities.len(),
                self.max_stations
            )));
        }
        if let Some(&c) = capacities.iter().find(|&&c| c > self.max_sc_per_station) {
            return Err(SolveError::CapsExceeded(format!(
                "station budget {c} > {}",
                self.max_sc_per_station
            )));
        }
        Ok(())
    }

    pub fn check_scenario(&self, scenario: &Scenario) -> Result<(), SolveError> {
        let caps: Vec<u32> = scenario.stations.iter().map(|s| s.sc_budget).collect();
        self.check_problem(scenario.ues.len(), &caps)
    }

    pub fn check_grid(&self, scenario: &Scenario) -> Result<(), SolveError> {
        let (sites, alts) = (scenario.grid.horizontal.len(), scenario.grid.vertical.len());
        if sites > self.max_sites || alts > self.max_altitudes {
            return Err(SolveError::CapsExceeded(format!(
                "grid {sites} sites x {alts} altitudes > {} x {}",
                self.max_sites, self.max_altitudes
            )));
        }
        Ok(())
    }
}

/// Exact optimum over a cost table by depth-first enumeration of every
/// UE -> (blocked | station) map. Maps are visited in lexicographic order of
/// the association vector (blocked = 0, station j = j + 1) and only strict
/// improvements replace the incumbent, so the lexicographically smallest
/// optimal vector is returned.
pub fn exact_table(problem: &UpbProblem<'_>) -> UpbSolution {
    struct Search<'p, 'a> {
        p: &'p UpbProblem<'a>,
        /// `suffix[i]` = total demand of UEs `i..`, for pruning.
        suffix: Vec<f64>,
        residual: Vec<u32>,
        current: Vec<Option<(usize, u32)>>,
        best: UpbSolution,
    }

    impl Search<'_, '_> {
        fn go(&mut self, i: usize, value: f64) {
            if i == self.p.n_ues() {
                if value > self.best.throughput_bps {
                    self.best = UpbSolution {
                        links: self.current.clone(),
                        throughput_bps: value,
                    };
                }
                return;
            }
            if value + self.suffix[i] <= self.best.throughput_bps {
                return;
            }
            self.current[i] = None;
            self.go(i + 1, value);
            for j in 0..self.p.n_stations() {
                let Some(c) = self.p.costs.get(i, j) else { continue };
                if c > self.residual[j] {
                    continue;
                }
                self.residual[j] -= c;
                self.current[i] = Some((j, c));
                self.go(i + 1, value + self.p.demands_bps[i]);
                self.residual[j] += c;
            }
            self.current[i] = None;
        }
    }

    let n = problem.n_ues();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + problem.demands_bps[i];
    }
    let mut search = Search {
        p: problem,
        suffix,
        residual: problem.capacities.to_vec(),
        current: vec![None; n],
        best: UpbSolution {
            links: vec![None; n],
            throughput_bps: 0.0,
        },
    };
    search.go(0, 0.0);
    search.best
}

/// Optimal assignment for drones fixed at `positions`.
pub fn exact_assignment(scenario: &Scenario, positions: &[Point3]) -> Result<Assignment, SolveError> {
    exact_assignment_capped(scenario, positions, &OracleCaps::default())
}

pub fn exact_assignment_capped(
    scenario: &Scenario,
    positions: &[Point3],
    caps: &OracleCaps,
) -> Result<Assignment, SolveError> {
    caps.check_scenario(scenario)?;
    let table = CostTable::for_positions(scenario, positions)?;
    let data = ProblemData::new(scenario);
    let sol = exact_table(&data.problem(&table));
    Assignment::from_solution(scenario, positions, &sol)
}

/// Maximizes `c·x` subject to `A x <= b`, `x >= 0`, with `b >= 0`.
///
/// Dense tableau simplex with Bland's rule (no cycling). Returns the optimal
/// value and a primal solution; `None` if unbounded.
pub fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    const EPS: f64 = 1e-12;
    let m = a.len();
    let n = c.len();
    assert!(b.iter().all(|&v| v >= 0.0), "origin must be feasible");
    // rows 0..m constraints, row m objective (reduced costs, negated)
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    while let Some(enter) = (0..n + m).find(|&j| t[m][j] < -EPS) {
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = t[l][width - 1] / t[l][enter];
                        if ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let r = leave?;
        let pivot = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            let f = row[enter];
            if i != r && f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        basis[r] = enter;
    }
    let mut x = vec![0.0; n];
    for (i, &v) in basis.iter().enumerate() {
        if v < n {
            x[v] = t[i][width - 1];
        }
    }
    Some((t[m][width - 1], x))
}

/// Optimal value of the LP relaxation (0 <= x <= 1, at most one unit of
/// association per UE, station budgets) over the feasible pairs of the table.
pub fn lp_relaxation(problem: &UpbProblem<'_>) -> f64 {
    let (n, s) = (problem.n_ues(), problem.n_stations());
    let pairs: Vec<(usize, usize, u32)> = (0..n)
        .flat_map(|i| (0..s).filter_map(move |j| problem.costs.get(i, j).map(|c| (i, j, c))))
        .filter(|&(_, j, c)| c <= problem.capacities[j])
        .collect();
    if pairs.is_empty() {
        return 0.0;
    }
    let mut a = vec![vec![0.0; pairs.len()]; n + s];
    for (k, &(i, j, c)) in pairs.iter().enumerate() {
        a[i][k] = 1.0;
        a[n + j][k] = f64::from(c);
    }
    let b: Vec<f64> = std::iter::repeat_n(1.0, n)
        .chain(problem.capacities.iter().map(|&c| f64::from(c)))
        .collect();
    let c: Vec<f64> = pairs.iter().map(|&(i, _, _)| problem.demands_bps[i]).collect();
    simplex_max(&a, &b, &c).expect("bounded by total demand").0
}

/// Density-greedy fractional value: each UE priced at its cheapest station,
/// each station filled by descending demand per subcarrier with the last UE
/// taken fractionally. Equals the LP optimum when there is one station; with
/// several stations it is not an upper bound in general.
pub fn density_greedy_bound(problem: &UpbProblem<'_>) -> f64 {
    let mut per_station: Vec<Vec<(f64, u32)>> = vec![Vec::new(); problem.n_stations()];
    for i in 0..problem.n_ues() {
        if let Some((j, c)) = problem.cheapest_station(i, problem.capacities) {
            per_station[j].push((problem.demands_bps[i], c));
        }
    }
    let mut total = 0.0;
    for (j, mut items) in per_station.into_iter().enumerate() {
        items.sort_by(|x, y| (y.0 / f64::from(y.1)).total_cmp(&(x.0 / f64::from(x.1))));
        let mut room = f64::from(problem.capacities[j]);
        for (r, c) in items {
            let c = f64::from(c);
            if c <= room {
                total += r;
                room -= c;
            } else {
                total += r * room / c;
                break;
            }
        }
    }
    total
}

/// Fractional optimum at `positions`, in bps.
pub fn fractional_optimum(scenario: &Scenario, positions: &[Point3]) -> Result<f64, SolveError> {
    OracleCaps::default().check_scenario(scenario)?;
    let table = CostTable::for_positions(scenario, positions)?;
    let data = ProblemData::new(scenario);
    Ok(lp_relaxation(&data.problem(&table)))
}

/// Placement evaluator running the exact assignment.
pub struct ExactEvaluator<'a> {
    pub scenario: &'a Scenario,
    pub caps: OracleCaps,
}

impl Evaluator for ExactEvaluator<'_> {
    fn evaluate(&self, _candidate: &Candidate, positions: &[Point3]) -> Result<Assignment, SolveError> {
        exact_assignment_capped(self.scenario, positions, &self.caps)
    }
}

/// Exact optimum over every placement and every assignment.
pub fn exact_bud(scenario: &Scenario) -> Result<PlacementSolution, SolveError> {
    Ok(exact_bud_with(scenario, SearchOptions::default())?.solution)
}

pub fn exact_bud_with(scenario: &Scenario, options: SearchOptions) -> Result<SearchResult, SolveError> {
    let caps = OracleCaps::default();
    caps.check_scenario(scenario)?;
    caps.check_grid(scenario)?;
    let options = SearchOptions {
        mode: crate::placement::SearchMode::Joint,
        ..options
    };
    opt_dbs_placement(scenario, &ExactEvaluator { scenario, caps }, options)
}

/// Shape of generated micro-scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroConfig {
    pub area_m: f64,
    pub max_ues: usize,
    pub max_drones: usize,
    pub sc_budget_range: (u32, u32),
    /// Wide subcarriers keep per-UE costs inside small budgets.
    pub sc_bandwidth_hz: f64,
    /// Largest grid: 4 sites (2 x 2) by this many altitudes.
    pub max_altitudes: usize,
}

impl Default for MicroConfig {
    fn default() -> Self {
        Self {
            area_m: 400.0,
            max_ues: 8,
            max_drones: 2,
            sc_budget_range: (4, 12),
            sc_bandwidth_hz: 60e3,
            max_altitudes: 2,
        }
    }
}

/// Random micro-scenario drawn from the regular channel model.
pub fn micro_scenario(config: &MicroConfig, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ue_count = rng.random_range(1..=config.max_ues);
    let drone_count = rng.random_range(0..=config.max_drones);
    let (lo, hi) = config.sc_budget_range;
    let mbs_sc_budget = rng.random_range(lo..=hi);
    let drone_sc_budget = rng.random_range(lo..=hi);
    let grid_sites = if drone_count <= 1 && rng.random_bool(0.5) { 1 } else { 4 };
    let n_alts = rng.random_range(1..=config.max_altitudes);
    let first_alt = *[60.0, 100.0, 140.0].choose(&mut rng).expect("non-empty");
    let cfg = ScenarioConfig {
        area_m: config.area_m,
        ue_count,
        drone_count,
        mbs_sc_budget,
        drone_sc_budget,
        total_sc: mbs_sc_budget + drone_count as u32 * drone_sc_budget,
        grid_sites,
        altitudes_m: altitude_range(first_alt, first_alt + 40.0 * (n_alts as f64 - 1.0), 40.0),
        cluster: MaternCluster {
            parent_density_per_km2: 12.0,
            radius_m: 80.0,
            mean_daughters: Some(3.0),
        },
        channel: ChannelParams {
            sc_bandwidth_hz: config.sc_bandwidth_hz,
            ..ChannelParams::default()
        },
        drone_duplex: if rng.random_bool(0.75) { Duplex::Full } else { Duplex::Half },
        ..ScenarioConfig::default()
    };
    cfg.build(rng.random()).expect("micro config is valid")
}

/// Random synthetic table instance (costs not tied to any geometry).
#[derive(Debug, Clone, PartialEq)]
pub struct TableInstance {
    pub demands_bps: Vec<f64>,
    pub ue_ids: Vec<u32>,
    pub station_ids: Vec<u32>,
    pub capacities: Vec<u32>,
    pub costs: CostTable,
}

impl TableInstance {
    pub fn problem(&self) -> UpbProblem<'_> {
        UpbProblem {
            demands_bps: &self.demands_bps,
            ue_ids: &self.ue_ids,
            station_ids: &self.station_ids,
            capacities: &self.capacities,
            costs: &self.costs,
        }
    }
}

/// Up to 8 UEs, 3 stations, 12 subcarriers per station; about one pair in
/// six is infeasible.
pub fn random_table(seed: u64) -> TableInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=8);
    let s = rng.random_range(1..=3);
    let capacities: Vec<u32> = (0..s).map(|_| rng.random_range(1..=12)).collect();
    let mut costs = CostTable::new(n, s);
    for i in 0..n {
        for (j, &cap) in capacities.iter().enumerate() {
            if rng.random_range(0..6) > 0 {
                costs.set(i, j, Some(rng.random_range(1..=cap)));
            }
        }
    }
    let mut ue_ids: Vec<u32> = (0..n as u32).collect();
    ue_ids.shuffle(&mut rng);
    TableInstance {
        demands_bps: (0..n)
            .map(|_| *crate::scenario::DEMAND_SET_BPS.choose(&mut rng).expect("non-empty"))
            .collect(),
        ue_ids,
        station_ids: (1..=s as u32).collect(),
        capacities,
        costs,
    }
}
