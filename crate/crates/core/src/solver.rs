//! End-to-end solvers: the full placement + assignment pipeline and the
//! two baselines (macro station alone, half-duplex drones).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::allocation::{aa_upb, aa_upb_table, Assignment, CostTable, ProblemData};
use crate::channel::{Duplex, Point3};
use crate::error::SolveError;
use crate::link::LinkBudget;
use crate::placement::{opt_dbs_placement, Candidate, Evaluator, PlacementSolution, SearchOptions, SearchResult};
use crate::scenario::Scenario;

/// Placement evaluator running the assignment solver on precomputed costs.
///
/// Subcarrier costs depend only on the UE and on where a drone hovers, so
/// they are computed once per (drone class, site, altitude); each candidate
/// then only assembles a table and runs the greedy passes.
pub struct UpbEvaluator<'a> {
    scenario: &'a Scenario,
    data: ProblemData,
    mbs_column: Vec<Option<u32>>,
    /// Class index per drone (drones with identical budgets and duplex share costs).
    drone_class: Vec<usize>,
    /// `columns[class][site * n_alts + alt][ue]`
    columns: Vec<Vec<Vec<Option<u32>>>>,
}

impl<'a> UpbEvaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, SolveError> {
        let params = &scenario.channel;
        let mbs = scenario.mbs();
        let cost = |station: usize, pos: &Point3| -> Result<Vec<Option<u32>>, SolveError> {
            let st = &scenario.stations[station];
            scenario
                .ues
                .iter()
                .map(|ue| {
                    let budget = LinkBudget::resolve(params, ue, mbs, st, pos)?;
                    Ok(budget
                        .min_subcarriers(ue.rate_demand_bps, st.sc_budget, params)
                        .map(|r| r.budget))
                })
                .collect()
        };

        let mut class_reps: Vec<usize> = Vec::new();
        let mut drone_class = Vec::new();
        for i in scenario.drone_indices() {
            let st = &scenario.stations[i];
            let found = class_reps.iter().position(|&r| {
                let o = &scenario.stations[r];
                o.sc_budget == st.sc_budget && o.power_budget_w == st.power_budget_w && o.duplex == st.duplex
            });
            drone_class.push(found.unwrap_or_else(|| {
                class_reps.push(i);
                class_reps.len() - 1
            }));
        }
        let grid = &scenario.grid;
        let columns = class_reps
            .iter()
            .map(|&rep| {
                (0..grid.horizontal.len())
                    .flat_map(|s| (0..grid.vertical.len()).map(move |a| (s, a)))
                    .map(|(s, a)| cost(rep, &grid.position(s, a)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            scenario,
            data: ProblemData::new(scenario),
            mbs_column: cost(0, &mbs.position)?,
            drone_class,
            columns,
        })
    }

    pub fn cost_table(&self, candidate: &Candidate) -> CostTable {
        let n_alts = self.scenario.grid.vertical.len();
        let mut table = CostTable::new(self.scenario.ues.len(), self.scenario.stations.len());
        table.set_column(0, &self.mbs_column);
        for (d, (station, &site)) in self.scenario.drone_indices().zip(&candidate.sites).enumerate() {
            let column = &self.columns[self.drone_class[d]][site * n_alts + candidate.altitude];
            table.set_column(station, column);
        }
        table
    }
}

impl Evaluator for UpbEvaluator<'_> {
    fn evaluate(&self, candidate: &Candidate, positions: &[Point3]) -> Result<Assignment, SolveError> {
        let table = self.cost_table(candidate);
        let outcome = aa_upb_table(&self.data.problem(&table));
        Assignment::from_solution(self.scenario, positions, outcome.best())
    }

    fn throughput(&self, candidate: &Candidate, _positions: &[Point3]) -> Result<f64, SolveError> {
        let table = self.cost_table(candidate);
        Ok(aa_upb_table(&self.data.problem(&table)).best().throughput_bps)
    }
}

/// Placement search with the assignment solver as evaluator.
pub fn aa_bud_with(scenario: &Scenario, options: SearchOptions) -> Result<SearchResult, SolveError> {
    let evaluator = UpbEvaluator::new(scenario)?;
    opt_dbs_placement(scenario, &evaluator, options)
}

pub fn aa_bud(scenario: &Scenario) -> Result<PlacementSolution, SolveError> {
    Ok(aa_bud_with(scenario, SearchOptions::default())?.solution)
}

/// Macro station only. Station indices in the result match `scenario`
/// because the macro station is always first.
pub fn s_mbs(scenario: &Scenario) -> Result<Assignment, SolveError> {
    aa_upb(&scenario.without_drones(), &[])
}

/// Same pipeline with every drone in half-duplex mode.
pub fn hd_dbs_with(scenario: &Scenario, options: SearchOptions) -> Result<SearchResult, SolveError> {
    aa_bud_with(&scenario.with_drone_duplex(Duplex::Half), options)
}

pub fn hd_dbs(scenario: &Scenario) -> Result<PlacementSolution, SolveError> {
    Ok(hd_dbs_with(scenario, SearchOptions::default())?.solution)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    AaBud,
    HdDbs,
    SMbs,
    /// Exhaustive optimum; micro instances only.
    ExactBud,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::AaBud, Algorithm::HdDbs, Algorithm::SMbs, Algorithm::ExactBud];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::AaBud => "aa-bud",
            Algorithm::HdDbs => "hd-dbs",
            Algorithm::SMbs => "s-mbs",
            Algorithm::ExactBud => "exact-bud",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm `{0}` (expected one of: aa-bud, hd-dbs, s-mbs, exact-bud)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

/// The network model `algorithm` plans for; its outputs validate against this.
pub fn solved_model(scenario: &Scenario, algorithm: Algorithm) -> Scenario {
    match algorithm {
        Algorithm::AaBud | Algorithm::ExactBud => scenario.clone(),
        Algorithm::HdDbs => scenario.with_drone_duplex(Duplex::Half),
        Algorithm::SMbs => scenario.without_drones(),
    }
}

/// Runs `algorithm`. Baselines without drones report an empty placement.
pub fn solve(scenario: &Scenario, algorithm: Algorithm, options: SearchOptions) -> Result<SearchResult, SolveError> {
    match algorithm {
        Algorithm::AaBud => aa_bud_with(scenario, options),
        Algorithm::HdDbs => hd_dbs_with(scenario, options),
        Algorithm::SMbs => {
            let assignment = s_mbs(scenario)?;
            Ok(SearchResult {
                solution: PlacementSolution {
                    candidate: Candidate { sites: vec![], altitude: 0 },
                    positions: vec![],
                    throughput_bps: assignment.total_throughput_bps,
                    assignment,
                },
                trace: vec![],
                evaluations: 1,
            })
        }
        Algorithm::ExactBud => crate::oracle::exact_bud_with(scenario, options),
    }
}
