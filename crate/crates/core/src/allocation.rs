//! UE association and subcarrier/power assignment for fixed DBS positions.
//!
//! Each station's subcarrier requirement per UE is resolved up front into a
//! [`CostTable`]; the assignment itself then works on that table alone,
//! which makes it a generalized assignment problem with UE demands as
//! profits and subcarrier requirements as sizes.
//!
//! The solver runs two phases and keeps the better one:
//!
//! 1. *Greedy by weight.* Each UE is priced at its cheapest station that
//!    still has room; the UE with the largest `demand / subcarriers` weight is
//!    admitted next. Whenever the head UE's preferred station has filled up,
//!    its price is recomputed against residual capacities; a UE that fits
//!    nowhere is blocked.
//! 2. *Top demand.* Up to one UE per station, taken in descending demand
//!    order, each placed on its cheapest station with room.
//!
//! Ties: equal weights (or demands) go to the lower UE id; equal subcarrier
//! costs go to the lower station id, so the MBS (id 1) wins.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::channel::Point3;
use crate::error::SolveError;
use crate::link::{LinkBudget, ScRequirement};
use crate::scenario::Scenario;

/// Minimum subcarrier cost for every (UE, station) pair; `None` = infeasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    n_stations: usize,
    cells: Vec<Option<u32>>,
}

impl CostTable {
    pub fn new(n_ues: usize, n_stations: usize) -> Self {
        Self {
            n_stations,
            cells: vec![None; n_ues * n_stations],
        }
    }

    pub fn from_rows(rows: &[Vec<Option<u32>>]) -> Self {
        let n_stations = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_stations), "ragged cost rows");
        Self {
            n_stations,
            cells: rows.concat(),
        }
    }

    /// Costs at the given drone positions.
    pub fn for_positions(scenario: &Scenario, positions: &[Point3]) -> Result<Self, SolveError> {
        let stations = station_positions(scenario, positions)?;
        let mut table = Self::new(scenario.ues.len(), stations.len());
        for i in 0..scenario.ues.len() {
            for (j, pos) in stations.iter().enumerate() {
                table.set(i, j, min_bandwidth(scenario, i, j, pos)?.map(|r| r.budget));
            }
        }
        Ok(table)
    }

    pub fn n_ues(&self) -> usize {
        self.cells.len().checked_div(self.n_stations).unwrap_or(0)
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    #[inline]
    pub fn get(&self, ue: usize, station: usize) -> Option<u32> {
        self.cells[ue * self.n_stations + station]
    }

    #[inline]
    pub fn set(&mut self, ue: usize, station: usize, cost: Option<u32>) {
        self.cells[ue * self.n_stations + station] = cost;
    }

    pub fn row(&self, ue: usize) -> &[Option<u32>] {
        &self.cells[ue * self.n_stations..(ue + 1) * self.n_stations]
    }

    /// Overwrites one station's column.
    pub fn set_column(&mut self, station: usize, column: &[Option<u32>]) {
        for (ue, &c) in column.iter().enumerate() {
            self.set(ue, station, c);
        }
    }
}

/// Positions of all stations: the MBS where the scenario puts it, drones at `positions`.
pub fn station_positions(scenario: &Scenario, positions: &[Point3]) -> Result<Vec<Point3>, SolveError> {
    let expected = scenario.drone_count();
    if positions.len() != expected {
        return Err(SolveError::PositionCount {
            expected,
            got: positions.len(),
        });
    }
    let mut drones = positions.iter();
    Ok(scenario
        .stations
        .iter()
        .map(|s| if s.is_drone() { *drones.next().unwrap() } else { s.position })
        .collect())
}

/// Fewest subcarriers letting station `station` (placed at `position`)
/// carry UE `ue`'s demand, or `None` if its budget cannot.
pub fn min_bandwidth(
    scenario: &Scenario,
    ue: usize,
    station: usize,
    position: &Point3,
) -> Result<Option<ScRequirement>, SolveError> {
    let st = &scenario.stations[station];
    let u = &scenario.ues[ue];
    let budget = LinkBudget::resolve(&scenario.channel, u, scenario.mbs(), st, position)?;
    Ok(budget.min_subcarriers(u.rate_demand_bps, st.sc_budget, &scenario.channel))
}

/// One instance of the assignment problem over a cost table.
#[derive(Debug, Clone, Copy)]
pub struct UpbProblem<'a> {
    pub demands_bps: &'a [f64],
    /// Stable UE labels used for tie-breaking.
    pub ue_ids: &'a [u32],
    pub station_ids: &'a [u32],
    pub capacities: &'a [u32],
    pub costs: &'a CostTable,
}

impl UpbProblem<'_> {
    pub fn n_ues(&self) -> usize {
        self.demands_bps.len()
    }

    pub fn n_stations(&self) -> usize {
        self.capacities.len()
    }

    /// Cheapest station for `ue` among those with `residual` room, ties to the lower id.
    pub fn cheapest_station(&self, ue: usize, residual: &[u32]) -> Option<(usize, u32)> {
        self.costs
            .row(ue)
            .iter()
            .enumerate()
            .filter_map(|(j, c)| c.filter(|&c| c <= residual[j]).map(|c| (j, c)))
            .min_by_key(|&(j, c)| (c, self.station_ids[j]))
    }

    /// Weights against full capacities, in admission order.
    pub fn weight_order(&self) -> Vec<WeightEntry> {
        let mut entries: Vec<WeightEntry> = (0..self.n_ues())
            .filter_map(|i| {
                self.cheapest_station(i, self.capacities).map(|(j, c)| WeightEntry {
                    ue: i,
                    best_station: j,
                    sc_needed: c,
                    weight: self.demands_bps[i] / f64::from(c),
                })
            })
            .collect();
        entries.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then(self.ue_ids[a.ue].cmp(&self.ue_ids[b.ue]))
        });
        entries
    }
}

/// A UE priced at its cheapest station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEntry {
    pub ue: usize,
    pub best_station: usize,
    pub sc_needed: u32,
    /// Demand per subcarrier (bps per SC).
    pub weight: f64,
}

/// Association over a cost table: `links[ue] = Some((station, subcarriers))`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpbSolution {
    pub links: Vec<Option<(usize, u32)>>,
    pub throughput_bps: f64,
}

impl UpbSolution {
    fn empty(n_ues: usize) -> Self {
        Self {
            links: vec![None; n_ues],
            throughput_bps: 0.0,
        }
    }

    fn admit(&mut self, ue: usize, station: usize, sc: u32, demand: f64) {
        self.links[ue] = Some((station, sc));
        self.throughput_bps += demand;
    }

    pub fn served(&self) -> usize {
        self.links.iter().flatten().count()
    }

    /// Subcarriers used per station.
    pub fn loads(&self, n_stations: usize) -> Vec<u32> {
        let mut used = vec![0; n_stations];
        for &(j, b) in self.links.iter().flatten() {
            used[j] += b;
        }
        used
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Greedy,
    TopDemand,
}

/// Both candidate solutions and which one was returned.
#[derive(Debug, Clone, PartialEq)]
pub struct UpbOutcome {
    pub greedy: UpbSolution,
    pub top_demand: UpbSolution,
    pub chosen: Phase,
}

impl UpbOutcome {
    pub fn best(&self) -> &UpbSolution {
        match self.chosen {
            Phase::Greedy => &self.greedy,
            Phase::TopDemand => &self.top_demand,
        }
    }

    pub fn into_best(self) -> UpbSolution {
        match self.chosen {
            Phase::Greedy => self.greedy,
            Phase::TopDemand => self.top_demand,
        }
    }

    /// True when some UE with a feasible station was left out by the greedy phase.
    pub fn greedy_blocked_any(&self) -> bool {
        self.greedy.links.iter().any(Option::is_none)
    }
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    weight: f64,
    ue_id: u32,
    ue: usize,
    station: usize,
    cost: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // max-heap: larger weight first, then smaller UE id
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| other.ue_id.cmp(&self.ue_id))
    }
}

/// Greedy-by-weight phase.
///
/// Heap entries carry the price computed at the UE's last re-pricing.
/// Residual capacities only shrink, so an entry whose station still fits is
/// still the UE's current price, and every stale price is an upper bound.
/// Popping the top entry therefore admits exactly the UE a full re-sort would.
pub fn greedy_phase(problem: &UpbProblem<'_>) -> UpbSolution {
    let mut residual = problem.capacities.to_vec();
    let mut sol = UpbSolution::empty(problem.n_ues());
    let entry = |ue: usize, (station, cost): (usize, u32)| HeapEntry {
        weight: problem.demands_bps[ue] / f64::from(cost),
        ue_id: problem.ue_ids[ue],
        ue,
        station,
        cost,
    };
    let mut heap: BinaryHeap<HeapEntry> = (0..problem.n_ues())
        .filter_map(|i| problem.cheapest_station(i, &residual).map(|p| entry(i, p)))
        .collect();
    while let Some(top) = heap.pop() {
        if top.cost <= residual[top.station] {
            residual[top.station] -= top.cost;
            sol.admit(top.ue, top.station, top.cost, problem.demands_bps[top.ue]);
        } else if let Some(p) = problem.cheapest_station(top.ue, &residual) {
            heap.push(entry(top.ue, p));
        }
    }
    sol
}

/// Top-demand phase: at most one admission per station count.
pub fn top_demand_phase(problem: &UpbProblem<'_>) -> UpbSolution {
    let mut order: Vec<usize> = (0..problem.n_ues()).collect();
    order.sort_by(|&a, &b| {
        problem.demands_bps[b]
            .total_cmp(&problem.demands_bps[a])
            .then(problem.ue_ids[a].cmp(&problem.ue_ids[b]))
    });
    let mut residual = problem.capacities.to_vec();
    let mut sol = UpbSolution::empty(problem.n_ues());
    let mut admitted = 0;
    for i in order {
        if admitted == problem.n_stations() {
            break;
        }
        if let Some((j, c)) = problem.cheapest_station(i, &residual) {
            residual[j] -= c;
            sol.admit(i, j, c, problem.demands_bps[i]);
            admitted += 1;
        }
    }
    sol
}

/// Runs both phases; the greedy result wins ties.
pub fn aa_upb_table(problem: &UpbProblem<'_>) -> UpbOutcome {
    let greedy = greedy_phase(problem);
    let top_demand = top_demand_phase(problem);
    let chosen = if top_demand.throughput_bps > greedy.throughput_bps {
        Phase::TopDemand
    } else {
        Phase::Greedy
    };
    UpbOutcome {
        greedy,
        top_demand,
        chosen,
    }
}

/// Scenario-level view of the problem data, borrowed by [`UpbProblem`].
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub demands_bps: Vec<f64>,
    pub ue_ids: Vec<u32>,
    pub station_ids: Vec<u32>,
    pub capacities: Vec<u32>,
}

impl ProblemData {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            demands_bps: scenario.ues.iter().map(|u| u.rate_demand_bps).collect(),
            ue_ids: scenario.ues.iter().map(|u| u.id).collect(),
            station_ids: scenario.stations.iter().map(|s| s.id).collect(),
            capacities: scenario.stations.iter().map(|s| s.sc_budget).collect(),
        }
    }

    pub fn problem<'a>(&'a self, costs: &'a CostTable) -> UpbProblem<'a> {
        UpbProblem {
            demands_bps: &self.demands_bps,
            ue_ids: &self.ue_ids,
            station_ids: &self.station_ids,
            capacities: &self.capacities,
            costs,
        }
    }
}

/// A served UE's link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeLink {
    /// Index into `Scenario::stations`.
    pub station: usize,
    /// Subcarriers charged to the station's budget.
    pub subcarriers: u32,
    pub access_subcarriers: u32,
    pub backhaul_subcarriers: u32,
    pub backhaul_power_w: f64,
    pub rate_bps: f64,
}

/// Association, subcarrier and power decisions plus achieved rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Indexed like `Scenario::ues`; `None` = blocked.
    pub links: Vec<Option<UeLink>>,
    pub total_throughput_bps: f64,
}

impl Assignment {
    pub fn empty(n_ues: usize) -> Self {
        Self {
            links: vec![None; n_ues],
            total_throughput_bps: 0.0,
        }
    }

    /// Expands a table solution with per-link physics at `positions`.
    pub fn from_solution(
        scenario: &Scenario,
        positions: &[Point3],
        sol: &UpbSolution,
    ) -> Result<Self, SolveError> {
        let stations = station_positions(scenario, positions)?;
        let params = &scenario.channel;
        let mut links = Vec::with_capacity(sol.links.len());
        let mut total = 0.0;
        for (i, link) in sol.links.iter().enumerate() {
            let Some((j, _)) = *link else {
                links.push(None);
                continue;
            };
            let ue = &scenario.ues[i];
            let st = &scenario.stations[j];
            let budget = LinkBudget::resolve(params, ue, scenario.mbs(), st, &stations[j])?;
            let req = budget
                .min_subcarriers(ue.rate_demand_bps, st.sc_budget, params)
                .expect("solution uses an infeasible pair");
            total += ue.rate_demand_bps;
            links.push(Some(UeLink {
                station: j,
                subcarriers: req.budget,
                access_subcarriers: req.access,
                backhaul_subcarriers: req.backhaul,
                backhaul_power_w: f64::from(req.backhaul) * st.psd_w_per_sc(),
                rate_bps: budget.achieved_rate_bps(&req, params),
            }));
        }
        Ok(Self {
            links,
            total_throughput_bps: total,
        })
    }

    pub fn served_count(&self) -> usize {
        self.links.iter().flatten().count()
    }

    pub fn served_demand_bps(&self, scenario: &Scenario) -> f64 {
        self.links
            .iter()
            .zip(&scenario.ues)
            .filter(|(l, _)| l.is_some())
            .map(|(_, u)| u.rate_demand_bps)
            .fold(0.0, |a, b| a + b)
    }

    pub fn blocked_demand_bps(&self, scenario: &Scenario) -> f64 {
        self.links
            .iter()
            .zip(&scenario.ues)
            .filter(|(l, _)| l.is_none())
            .map(|(_, u)| u.rate_demand_bps)
            .fold(0.0, |a, b| a + b)
    }

    /// Blocked demand over total demand (0 when nothing is demanded).
    pub fn block_ratio(&self, scenario: &Scenario) -> f64 {
        let total = scenario.total_demand_bps();
        if total > 0.0 {
            self.blocked_demand_bps(scenario) / total
        } else {
            0.0
        }
    }
}

/// Solves the assignment for drones fixed at `positions` (in drone order).
pub fn aa_upb(scenario: &Scenario, positions: &[Point3]) -> Result<Assignment, SolveError> {
    let table = CostTable::for_positions(scenario, positions)?;
    let data = ProblemData::new(scenario);
    let outcome = aa_upb_table(&data.problem(&table));
    Assignment::from_solution(scenario, positions, outcome.best())
}

/// A broken constraint found by [`validate_assignment`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("assignment covers {got} UEs, scenario has {expected}")]
    UeCount { expected: usize, got: usize },
    #[error("UE {ue} is linked to unknown station index {station}")]
    UnknownStation { ue: usize, station: usize },
    #[error("station {station} uses {used} subcarriers of {budget}")]
    Subcarriers { station: usize, used: u64, budget: u32 },
    #[error("drone {station} uses {used_w} W of backhaul power, budget {budget_w} W")]
    Power { station: usize, used_w: f64, budget_w: f64 },
    #[error("UE {ue} gets {rate_bps} bps, below its demand of {demand_bps} bps")]
    Rate { ue: usize, rate_bps: f64, demand_bps: f64 },
    #[error("reported throughput {reported} bps, served demand is {expected} bps")]
    Throughput { reported: f64, expected: f64 },
    #[error(transparent)]
    Model(#[from] SolveError),
}

/// Checks single association, subcarrier and power budgets, rate demands
/// (recomputed from the channel model) and the reported objective.
pub fn validate_assignment(
    scenario: &Scenario,
    positions: &[Point3],
    assignment: &Assignment,
) -> Result<(), Violation> {
    if assignment.links.len() != scenario.ues.len() {
        return Err(Violation::UeCount {
            expected: scenario.ues.len(),
            got: assignment.links.len(),
        });
    }
    let stations = station_positions(scenario, positions)?;
    let params = &scenario.channel;
    let mut sc_used = vec![0u64; scenario.stations.len()];
    let mut power_used = vec![0.0f64; scenario.stations.len()];
    let mut served = 0.0;
    for (i, link) in assignment.links.iter().enumerate() {
        let Some(link) = link else { continue };
        let j = link.station;
        let st = scenario
            .stations
            .get(j)
            .ok_or(Violation::UnknownStation { ue: i, station: j })?;
        sc_used[j] += u64::from(link.subcarriers);
        power_used[j] += link.backhaul_power_w;
        let ue = &scenario.ues[i];
        let budget = LinkBudget::resolve(params, ue, scenario.mbs(), st, &stations[j])
            .map_err(SolveError::from)?;
        let req = ScRequirement {
            access: link.access_subcarriers,
            backhaul: link.backhaul_subcarriers,
            budget: link.subcarriers,
        };
        let rate = budget.achieved_rate_bps(&req, params);
        if rate < ue.rate_demand_bps * (1.0 - 1e-12) {
            return Err(Violation::Rate {
                ue: i,
                rate_bps: rate,
                demand_bps: ue.rate_demand_bps,
            });
        }
        served += ue.rate_demand_bps;
    }
    for (j, st) in scenario.stations.iter().enumerate() {
        if sc_used[j] > u64::from(st.sc_budget) {
            return Err(Violation::Subcarriers {
                station: j,
                used: sc_used[j],
                budget: st.sc_budget,
            });
        }
        if st.is_drone() && power_used[j] > st.power_budget_w * (1.0 + 1e-12) {
            return Err(Violation::Power {
                station: j,
                used_w: power_used[j],
                budget_w: st.power_budget_w,
            });
        }
    }
    if (served - assignment.total_throughput_bps).abs() > 1e-6 {
        return Err(Violation::Throughput {
            reported: assignment.total_throughput_bps,
            expected: served,
        });
    }
    Ok(())
}
