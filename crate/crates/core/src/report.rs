//! Solution reports written by `solve`.

use serde::{Deserialize, Serialize};

use crate::placement::{PlacementSolution, TraceRow};
use crate::scenario::Scenario;
use crate::solver::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DronePlacement {
    pub station_id: u32,
    pub site: usize,
    pub altitude_index: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeReport {
    pub ue_id: u32,
    pub demand_bps: f64,
    /// Serving station id, `None` when blocked.
    pub station_id: Option<u32>,
    pub subcarriers: u32,
    pub access_subcarriers: u32,
    pub backhaul_subcarriers: u32,
    pub backhaul_power_w: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub algorithm: Algorithm,
    pub scenario_seed: u64,
    pub placements: Vec<DronePlacement>,
    pub total_throughput_bps: f64,
    pub total_demand_bps: f64,
    pub block_ratio: f64,
    pub served_ues: usize,
    pub blocked_ues: usize,
    pub evaluations: usize,
    pub ues: Vec<UeReport>,
}

impl SolutionReport {
    pub fn new(scenario: &Scenario, algorithm: Algorithm, solution: &PlacementSolution, evaluations: usize) -> Self {
        let a = &solution.assignment;
        let placements = scenario
            .drone_indices()
            .zip(&solution.candidate.sites)
            .zip(&solution.positions)
            .map(|((i, &site), p)| DronePlacement {
                station_id: scenario.stations[i].id,
                site,
                altitude_index: solution.candidate.altitude,
                x: p.x,
                y: p.y,
                z: p.z,
            })
            .collect();
        let ues = scenario
            .ues
            .iter()
            .zip(&a.links)
            .map(|(u, l)| UeReport {
                ue_id: u.id,
                demand_bps: u.rate_demand_bps,
                station_id: l.map(|l| scenario.stations[l.station].id),
                subcarriers: l.map_or(0, |l| l.subcarriers),
                access_subcarriers: l.map_or(0, |l| l.access_subcarriers),
                backhaul_subcarriers: l.map_or(0, |l| l.backhaul_subcarriers),
                backhaul_power_w: l.map_or(0.0, |l| l.backhaul_power_w),
                rate_bps: l.map_or(0.0, |l| l.rate_bps),
            })
            .collect();
        Self {
            algorithm,
            scenario_seed: scenario.seed,
            placements,
            total_throughput_bps: solution.throughput_bps,
            total_demand_bps: scenario.total_demand_bps(),
            block_ratio: a.block_ratio(scenario),
            served_ues: a.served_count(),
            blocked_ues: a.links.len() - a.served_count(),
            evaluations,
            ues,
        }
    }

    pub fn summary(&self) -> String {
        let at: Vec<String> = self
            .placements
            .iter()
            .map(|p| format!("({:.0}, {:.0}, {:.0})", p.x, p.y, p.z))
            .collect();
        format!(
            "{}: throughput {:.3} Mbps, served {}/{} UEs, block ratio {:.4}, drones at [{}]",
            self.algorithm,
            self.total_throughput_bps / 1e6,
            self.served_ues,
            self.served_ues + self.blocked_ues,
            self.block_ratio,
            at.join(", ")
        )
    }
}

/// Placement search trace as CSV, one row per evaluated candidate.
pub fn write_trace<W: std::io::Write>(rows: &[TraceRow], scenario: &Scenario, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sites", "altitude_index", "altitude_m", "positions", "throughput_bps"])?;
    for r in rows {
        let sites: Vec<String> = r.candidate.sites.iter().map(ToString::to_string).collect();
        let pos: Vec<String> = r.positions.iter().map(|p| format!("{} {} {}", p.x, p.y, p.z)).collect();
        w.write_record([
            sites.join(" "),
            r.candidate.altitude.to_string(),
            scenario
                .grid
                .vertical
                .get(r.candidate.altitude)
                .map_or_else(String::new, ToString::to_string),
            pos.join(";"),
            r.throughput_bps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
