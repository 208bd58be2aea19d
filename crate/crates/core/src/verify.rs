//! Randomized oracle comparison on micro-instances.
//!
//! Every generated instance is solved by the approximation pipeline and by
//! the exact/fractional oracles, at every candidate placement, and the
//! approximation bounds are checked. Results are tallied per check.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{aa_upb, aa_upb_table, validate_assignment, Assignment, CostTable, ProblemData, UpbProblem};
use crate::channel::Point3;
use crate::error::SolveError;
use crate::oracle::{exact_bud, exact_table, lp_relaxation, micro_scenario, MicroConfig, OracleCaps};
use crate::placement::enumerate_candidates;
use crate::scenario::Scenario;
use crate::solver::{aa_bud, hd_dbs, s_mbs, solved_model, Algorithm};

/// Absolute slack (bps) for comparisons between sums of demands.
const TOL_BPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub instances: usize,
    pub seed: u64,
    pub micro: MicroConfig,
    /// Test hook: run the approximation on half the real station budgets.
    pub fault_halve_capacity: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            seed: 0,
            micro: MicroConfig::default(),
            fault_halve_capacity: false,
        }
    }
}

impl VerifyConfig {
    /// Rejects generator settings the exact oracle cannot handle.
    pub fn check_caps(&self, caps: &OracleCaps) -> Result<(), SolveError> {
        let m = &self.micro;
        let budgets = vec![m.sc_budget_range.1; m.max_drones + 1];
        caps.check_problem(m.max_ues, &budgets)?;
        if m.max_altitudes > caps.max_altitudes || (m.max_drones > 0 && caps.max_sites < 4) {
            return Err(SolveError::CapsExceeded(format!(
                "micro grid up to 4 sites x {} altitudes > {} x {}",
                m.max_altitudes, caps.max_sites, caps.max_altitudes
            )));
        }
        if m.sc_budget_range.0 == 0 || m.sc_budget_range.0 > m.sc_budget_range.1 || m.max_ues == 0 {
            return Err(SolveError::CapsExceeded("empty generator range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Assignment throughput at least half the exact optimum.
    HalfBound,
    /// Serving every UE means matching the exact optimum.
    OptimalWhenAllServed,
    /// Fractional optimum at least the integral optimum.
    LpUpperBound,
    /// Greedy plus top-demand throughput strictly above the fractional
    /// optimum whenever a UE with some feasible station is left unserved.
    PhaseSumAboveLp,
    /// Placement search returns the argmax of an independent enumeration.
    PlacementArgmax,
    /// Full pipeline at least half the exact placement-and-assignment optimum.
    BudHalfBound,
    /// Exact placement-and-assignment optimum at least the pipeline's value.
    BudOptimality,
    /// Every solver output satisfies the assignment constraints.
    Validator,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::HalfBound,
        Check::OptimalWhenAllServed,
        Check::LpUpperBound,
        Check::PhaseSumAboveLp,
        Check::PlacementArgmax,
        Check::BudHalfBound,
        Check::BudOptimality,
        Check::Validator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::HalfBound => "half_bound",
            Check::OptimalWhenAllServed => "optimal_when_all_served",
            Check::LpUpperBound => "lp_upper_bound",
            Check::PhaseSumAboveLp => "phase_sum_above_lp",
            Check::PlacementArgmax => "placement_argmax",
            Check::BudHalfBound => "bud_half_bound",
            Check::BudOptimality => "bud_optimality",
            Check::Validator => "validator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub check: Check,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub tallies: Vec<Tally>,
    /// Smallest observed ratio of assignment throughput to the exact optimum.
    pub worst_ratio: f64,
    pub worst_bud_ratio: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.tallies.iter().all(|t| t.violations == 0)
    }

    pub fn total_violations(&self) -> usize {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn tally(&self, check: Check) -> &Tally {
        self.tallies.iter().find(|t| t.check == check).expect("every check is tallied")
    }
}

#[derive(Default)]
struct InstanceLog {
    events: Vec<(Check, Option<String>)>,
    worst_ratio: f64,
    worst_bud_ratio: f64,
}

impl InstanceLog {
    fn record(&mut self, check: Check, ok: bool, detail: impl FnOnce() -> String) {
        self.events.push((check, (!ok).then(detail)));
    }
}

fn ratio(value: f64, optimum: f64) -> f64 {
    if optimum > 0.0 {
        value / optimum
    } else {
        1.0
    }
}

/// Throughputs of every candidate placement, enumerated by plain recursion
/// and evaluated without the placement module's cost cache.
fn brute_force_placements(scenario: &Scenario) -> Result<Vec<(Vec<usize>, usize, f64)>, SolveError> {
    fn tuples(n_sites: usize, k: usize, start: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for s in start..n_sites {
            prefix.push(s);
            tuples(n_sites, k, s + 1, prefix, out);
            prefix.pop();
        }
    }
    let k = scenario.drone_count();
    let mut sets = Vec::new();
    tuples(scenario.grid.horizontal.len(), k, 0, &mut Vec::new(), &mut sets);
    let n_alts = if k == 0 { 1 } else { scenario.grid.vertical.len() };
    let mut out = Vec::new();
    for a in 0..n_alts {
        for sites in &sets {
            let positions: Vec<Point3> = sites.iter().map(|&s| scenario.grid.position(s, a)).collect();
            out.push((sites.clone(), a, aa_upb(scenario, &positions)?.total_throughput_bps));
        }
    }
    Ok(out)
}

fn check_instance(scenario: &Scenario, label: u64, fault: bool) -> Result<InstanceLog, SolveError> {
    let mut log = InstanceLog {
        worst_ratio: 1.0,
        worst_bud_ratio: 1.0,
        ..Default::default()
    };
    let data = ProblemData::new(scenario);
    let half_caps: Vec<u32> = data.capacities.iter().map(|c| c / 2).collect();

    for cand in enumerate_candidates(scenario)? {
        let positions = cand.positions(&scenario.grid);
        let table = CostTable::for_positions(scenario, &positions)?;
        let problem = data.problem(&table);
        let outcome = if fault {
            aa_upb_table(&UpbProblem {
                capacities: &half_caps,
                ..problem
            })
        } else {
            aa_upb_table(&problem)
        };
        let got = outcome.best().throughput_bps;
        let exact = exact_table(&problem);
        let opt = exact.throughput_bps;
        let lp = lp_relaxation(&problem);
        log.worst_ratio = log.worst_ratio.min(ratio(got, opt));
        let at = || format!("seed {} sites {:?} alt {}", label, cand.sites, cand.altitude);

        log.record(Check::HalfBound, got + TOL_BPS >= 0.5 * opt, || {
            format!("{}: {got} < 0.5 x {opt}", at())
        });
        if outcome.best().served() == problem.n_ues() {
            log.record(Check::OptimalWhenAllServed, (got - opt).abs() <= TOL_BPS, || {
                format!("{}: all served with {got}, optimum {opt}", at())
            });
        }
        log.record(Check::LpUpperBound, lp + TOL_BPS >= opt, || {
            format!("{}: fractional {lp} < integral {opt}", at())
        });
        let blocked = (0..problem.n_ues())
            .any(|i| outcome.best().links[i].is_none() && problem.cheapest_station(i, problem.capacities).is_some());
        if blocked {
            let sum = outcome.greedy.throughput_bps + outcome.top_demand.throughput_bps;
            log.record(Check::PhaseSumAboveLp, sum > lp + TOL_BPS, || {
                format!("{}: greedy {} + top {} <= fractional {lp}", at(), outcome.greedy.throughput_bps, outcome.top_demand.throughput_bps)
            });
        }
        if !fault {
            let assignment = Assignment::from_solution(scenario, &positions, outcome.best())?;
            let v = validate_assignment(scenario, &positions, &assignment);
            log.record(Check::Validator, v.is_ok(), || format!("{}: {}", at(), v.unwrap_err()));
        }
        let exact_assignment = Assignment::from_solution(scenario, &positions, &exact)?;
        let v = validate_assignment(scenario, &positions, &exact_assignment);
        log.record(Check::Validator, v.is_ok(), || format!("{} (exact): {}", at(), v.unwrap_err()));
    }

    let pipeline = aa_bud(scenario)?;
    let brute = brute_force_placements(scenario)?;
    let best = brute.iter().map(|b| b.2).fold(f64::NEG_INFINITY, f64::max);
    let first_best = brute
        .iter()
        .filter(|b| b.2 == best)
        .map(|b| crate::placement::Candidate { sites: b.0.clone(), altitude: b.1 })
        .min()
        .expect("non-empty enumeration");
    log.record(
        Check::PlacementArgmax,
        pipeline.throughput_bps == best && (scenario.drone_count() == 0 || pipeline.candidate == first_best),
        || format!("seed {label}: search {:?} {} vs enumeration {:?} {best}", pipeline.candidate, pipeline.throughput_bps, first_best),
    );

    let exact = exact_bud(scenario)?;
    log.worst_bud_ratio = ratio(pipeline.throughput_bps, exact.throughput_bps);
    log.record(Check::BudHalfBound, pipeline.throughput_bps + TOL_BPS >= 0.5 * exact.throughput_bps, || {
        format!("seed {label}: {} < 0.5 x {}", pipeline.throughput_bps, exact.throughput_bps)
    });
    log.record(Check::BudOptimality, exact.throughput_bps + TOL_BPS >= pipeline.throughput_bps, || {
        format!("seed {label}: exact {} < pipeline {}", exact.throughput_bps, pipeline.throughput_bps)
    });

    let hd = hd_dbs(scenario)?;
    let hd_scenario = solved_model(scenario, Algorithm::HdDbs);
    let mbs_only = s_mbs(scenario)?;
    let mbs_scenario = solved_model(scenario, Algorithm::SMbs);
    for (name, sc, pos, a) in [
        ("aa-bud", scenario, &pipeline.positions, &pipeline.assignment),
        ("exact-bud", scenario, &exact.positions, &exact.assignment),
        ("hd-dbs", &hd_scenario, &hd.positions, &hd.assignment),
        ("s-mbs", &mbs_scenario, &Vec::new(), &mbs_only),
    ] {
        let v = validate_assignment(sc, pos, a);
        log.record(Check::Validator, v.is_ok(), || format!("seed {label} ({name}): {}", v.unwrap_err()));
    }
    Ok(log)
}

/// Instance `k` uses generator seed `config.seed + k`.
pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport, SolveError> {
    config.check_caps(&OracleCaps::default())?;
    let start = Instant::now();
    let logs = (0..config.instances)
        .into_par_iter()
        .map(|k| {
            let seed = config.seed.wrapping_add(k as u64);
            let scenario = micro_scenario(&config.micro, seed);
            check_instance(&scenario, seed, config.fault_halve_capacity)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut tallies: Vec<Tally> = Check::ALL
        .iter()
        .map(|&check| Tally {
            check,
            checked: 0,
            violations: 0,
            first_violation: None,
        })
        .collect();
    let (mut worst_ratio, mut worst_bud_ratio) = (1.0f64, 1.0f64);
    for log in logs {
        worst_ratio = worst_ratio.min(log.worst_ratio);
        worst_bud_ratio = worst_bud_ratio.min(log.worst_bud_ratio);
        for (check, failure) in log.events {
            let t = &mut tallies[Check::ALL.iter().position(|&c| c == check).expect("known check")];
            t.checked += 1;
            if let Some(msg) = failure {
                t.violations += 1;
                t.first_violation.get_or_insert(msg);
            }
        }
    }
    Ok(VerifyReport {
        instances: config.instances,
        tallies,
        worst_ratio,
        worst_bud_ratio,
        elapsed: start.elapsed(),
    })
}
