//! DBS placement search over the candidate grid.
//!
//! The joint search enumerates every assignment of distinct horizontal sites
//! to the fleet, crossed with the shared altitude set, and keeps the
//! candidate with the highest evaluator throughput. Ties go to the
//! lexicographically smallest position tuple `[(site₁, alt), (site₂, alt), …]`
//! in grid-index order, so the result does not depend on evaluation order.

use std::cmp::Ordering;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::Assignment;
use crate::channel::Point3;
use crate::error::SolveError;
use crate::scenario::{CandidateGrid, Scenario};

/// One joint placement, as grid indices. `sites[d]` is drone `d`'s site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub sites: Vec<usize>,
    pub altitude: usize,
}

impl Candidate {
    pub fn positions(&self, grid: &CandidateGrid) -> Vec<Point3> {
        self.sites
            .iter()
            .map(|&s| grid.position(s, self.altitude))
            .collect()
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let ord = a.cmp(b).then(self.altitude.cmp(&other.altitude));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.sites
            .len()
            .cmp(&other.sites.len())
            .then(self.altitude.cmp(&other.altitude))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Scores a placement by the assignment it induces.
pub trait Evaluator: Sync {
    fn evaluate(&self, candidate: &Candidate, positions: &[Point3]) -> Result<Assignment, SolveError>;

    /// Total throughput only; override when it is cheaper than a full assignment.
    fn throughput(&self, candidate: &Candidate, positions: &[Point3]) -> Result<f64, SolveError> {
        Ok(self.evaluate(candidate, positions)?.total_throughput_bps)
    }
}

impl<F> Evaluator for F
where
    F: Fn(&[Point3]) -> Result<Assignment, SolveError> + Sync,
{
    fn evaluate(&self, _candidate: &Candidate, positions: &[Point3]) -> Result<Assignment, SolveError> {
        self(positions)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Every joint placement; optimal for the evaluator.
    #[default]
    Joint,
    /// One drone (or the shared altitude) at a time until no move improves.
    /// Not guaranteed optimal; meant for grids too large for the joint search.
    CoordinateDescent,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    pub mode: SearchMode,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub candidate: Candidate,
    pub positions: Vec<Point3>,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSolution {
    pub candidate: Candidate,
    /// Drone positions in drone order.
    pub positions: Vec<Point3>,
    pub assignment: Assignment,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub solution: PlacementSolution,
    /// Every evaluated candidate in evaluation order (empty unless requested).
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

/// True when every drone shares budgets and duplex mode, so site tuples
/// that are permutations of each other are equivalent.
fn fleet_is_homogeneous(scenario: &Scenario) -> bool {
    scenario
        .drone_indices()
        .map(|i| &scenario.stations[i])
        .tuple_windows()
        .all(|(a, b)| a.sc_budget == b.sc_budget && a.power_budget_w == b.power_budget_w && a.duplex == b.duplex)
}

fn check_grid(scenario: &Scenario) -> Result<usize, SolveError> {
    let drones = scenario.drone_count();
    if drones == 0 {
        return Ok(0);
    }
    if scenario.grid.horizontal.is_empty() {
        return Err(SolveError::EmptyGrid("horizontal"));
    }
    if scenario.grid.vertical.is_empty() {
        return Err(SolveError::EmptyGrid("vertical"));
    }
    if scenario.grid.horizontal.len() < drones {
        return Err(SolveError::TooFewSites {
            sites: scenario.grid.horizontal.len(),
            drones,
        });
    }
    Ok(drones)
}

/// All joint candidates: site combinations (permutations for mixed fleets)
/// for each altitude. A fleet of zero drones has the single empty candidate.
pub fn enumerate_candidates(scenario: &Scenario) -> Result<Vec<Candidate>, SolveError> {
    let drones = check_grid(scenario)?;
    if drones == 0 {
        return Ok(vec![Candidate { sites: vec![], altitude: 0 }]);
    }
    let n_sites = scenario.grid.horizontal.len();
    let tuples: Vec<Vec<usize>> = if fleet_is_homogeneous(scenario) {
        (0..n_sites).combinations(drones).collect()
    } else {
        (0..n_sites).permutations(drones).collect()
    };
    Ok((0..scenario.grid.vertical.len())
        .flat_map(|altitude| {
            tuples.iter().map(move |sites| Candidate {
                sites: sites.clone(),
                altitude,
            })
        })
        .collect())
}

fn better(a: (f64, &Candidate), b: (f64, &Candidate)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.1 < b.1,
    }
}

/// Index of the best `(throughput, candidate)` pair.
pub fn argmax(candidates: &[Candidate], throughputs: &[f64]) -> Option<usize> {
    (0..candidates.len()).reduce(|best, i| {
        if better((throughputs[i], &candidates[i]), (throughputs[best], &candidates[best])) {
            i
        } else {
            best
        }
    })
}

/// Searches the candidate grid for the placement the evaluator scores highest.
pub fn opt_dbs_placement(
    scenario: &Scenario,
    evaluator: &impl Evaluator,
    options: SearchOptions,
) -> Result<SearchResult, SolveError> {
    match options.mode {
        SearchMode::Joint => joint_search(scenario, evaluator, options.trace),
        SearchMode::CoordinateDescent => coordinate_descent(scenario, evaluator, options.trace),
    }
}

fn finish(
    scenario: &Scenario,
    evaluator: &impl Evaluator,
    candidate: Candidate,
    trace: Vec<TraceRow>,
    evaluations: usize,
) -> Result<SearchResult, SolveError> {
    let positions = candidate.positions(&scenario.grid);
    let assignment = evaluator.evaluate(&candidate, &positions)?;
    Ok(SearchResult {
        solution: PlacementSolution {
            throughput_bps: assignment.total_throughput_bps,
            candidate,
            positions,
            assignment,
        },
        trace,
        evaluations,
    })
}

fn joint_search(
    scenario: &Scenario,
    evaluator: &impl Evaluator,
    want_trace: bool,
) -> Result<SearchResult, SolveError> {
    let candidates = enumerate_candidates(scenario)?;
    let throughputs = candidates
        .par_iter()
        .map(|c| evaluator.throughput(c, &c.positions(&scenario.grid)))
        .collect::<Result<Vec<f64>, _>>()?;
    let best = argmax(&candidates, &throughputs).expect("at least one candidate");
    let trace = if want_trace {
        candidates
            .iter()
            .zip(&throughputs)
            .map(|(c, &t)| TraceRow {
                candidate: c.clone(),
                positions: c.positions(&scenario.grid),
                throughput_bps: t,
            })
            .collect()
    } else {
        Vec::new()
    };
    let evaluations = candidates.len();
    finish(scenario, evaluator, candidates[best].clone(), trace, evaluations)
}

fn coordinate_descent(
    scenario: &Scenario,
    evaluator: &impl Evaluator,
    want_trace: bool,
) -> Result<SearchResult, SolveError> {
    const MAX_ROUNDS: usize = 1000;
    let drones = check_grid(scenario)?;
    let n_sites = scenario.grid.horizontal.len();
    let n_alts = scenario.grid.vertical.len().max(1);
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut score = |c: &Candidate| -> Result<f64, SolveError> {
        let positions = c.positions(&scenario.grid);
        let t = evaluator.throughput(c, &positions)?;
        evaluations += 1;
        if want_trace {
            trace.push(TraceRow {
                candidate: c.clone(),
                positions,
                throughput_bps: t,
            });
        }
        Ok(t)
    };

    let mut current = Candidate {
        sites: (0..drones).collect(),
        altitude: 0,
    };
    let mut current_score = score(&current)?;
    for _ in 0..MAX_ROUNDS {
        let mut moved = false;
        for d in 0..drones {
            let mut best: Option<(f64, Candidate)> = None;
            for s in (0..n_sites).filter(|s| !current.sites.contains(s)) {
                let mut trial = current.clone();
                trial.sites[d] = s;
                let t = score(&trial)?;
                if best.as_ref().is_none_or(|(bt, bc)| better((t, &trial), (*bt, bc))) {
                    best = Some((t, trial));
                }
            }
            if let Some((t, c)) = best.filter(|(t, _)| *t > current_score) {
                current = c;
                current_score = t;
                moved = true;
            }
        }
        if drones > 0 {
            let here = current.altitude;
            for a in (0..n_alts).filter(|&a| a != here) {
                let trial = Candidate {
                    altitude: a,
                    ..current.clone()
                };
                let t = score(&trial)?;
                if t > current_score {
                    current = trial;
                    current_score = t;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }
    finish(scenario, evaluator, current, trace, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_order_is_position_tuple_order() {
        let a = Candidate { sites: vec![0, 5], altitude: 1 };
        let b = Candidate { sites: vec![1, 2], altitude: 0 };
        let c = Candidate { sites: vec![0, 6], altitude: 0 };
        assert!(a < b);
        assert!(c < a); // (0,0) < (0,1) on the first drone
    }

    #[test]
    fn argmax_breaks_ties_to_smallest() {
        let cs = vec![
            Candidate { sites: vec![2], altitude: 0 },
            Candidate { sites: vec![1], altitude: 0 },
            Candidate { sites: vec![3], altitude: 0 },
        ];
        assert_eq!(argmax(&cs, &[5.0, 5.0, 4.0]), Some(1));
        assert_eq!(argmax(&cs, &[5.0, 5.0, 6.0]), Some(2));
    }
}
