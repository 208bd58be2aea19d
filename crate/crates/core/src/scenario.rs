//! World description: stations, UEs, candidate DBS positions and budgets.
//!
//! Scenario files are JSON with the top-level keys `channel`, `stations`,
//! `ues`, `grid`, `total_sc` and `seed`. Unknown keys anywhere in the document
//! are reported as warnings and otherwise ignored.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{ChannelParams, Duplex, Point3};
use crate::error::ScenarioError;

/// Per-UE uplink demands a generated UE draws from, uniformly.
pub const DEMAND_SET_BPS: [f64; 4] = [0.5e6, 1.0e6, 1.5e6, 2.0e6];

/// Station id reserved for the macro base station.
pub const MBS_ID: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationKind {
    Macro,
    Drone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: u32,
    pub kind: StationKind,
    pub position: Point3,
    /// Subcarriers this station may hand out.
    pub sc_budget: u32,
    /// Backhaul transmit power budget; unused for the macro station.
    pub power_budget_w: f64,
    pub duplex: Duplex,
}

impl BaseStation {
    /// Backhaul power per subcarrier. Spreading the full budget over the
    /// full subcarrier budget keeps the power constraint slack whenever the
    /// subcarrier constraint holds.
    pub fn psd_w_per_sc(&self) -> f64 {
        match self.kind {
            StationKind::Macro => 0.0,
            StationKind::Drone => self.power_budget_w / f64::from(self.sc_budget),
        }
    }

    pub fn is_drone(&self) -> bool {
        self.kind == StationKind::Drone
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: u32,
    pub position: Point3,
    pub rate_demand_bps: f64,
}

/// Candidate DBS positions: horizontal sites and a shared altitude set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    pub horizontal: Vec<(f64, f64)>,
    pub vertical: Vec<f64>,
}

impl CandidateGrid {
    pub fn position(&self, site: usize, altitude: usize) -> Point3 {
        let (x, y) = self.horizontal[site];
        Point3::new(x, y, self.vertical[altitude])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub channel: ChannelParams,
    /// Macro station first (id 1), then drones with ids 2, 3, ...
    pub stations: Vec<BaseStation>,
    pub ues: Vec<UserEquipment>,
    pub grid: CandidateGrid,
    pub total_sc: u32,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.channel.validate()?;
        let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
        let macros = self.stations.iter().filter(|s| s.kind == StationKind::Macro).count();
        if macros != 1 {
            return invalid(format!("expected exactly one macro station, found {macros}"));
        }
        if self.stations[0].kind != StationKind::Macro || self.stations[0].id != MBS_ID {
            return invalid("the macro station must come first with id 1".into());
        }
        for (idx, s) in self.stations.iter().enumerate() {
            if s.id as usize != idx + 1 {
                return invalid(format!("station ids must be 1..={} in order", self.stations.len()));
            }
            if s.sc_budget == 0 {
                return invalid(format!("station {} has an empty subcarrier budget", s.id));
            }
            if s.is_drone() && !(s.power_budget_w.is_finite() && s.power_budget_w > 0.0) {
                return invalid(format!("drone {} needs a positive power budget", s.id));
            }
        }
        let allotted: u64 = self.stations.iter().map(|s| u64::from(s.sc_budget)).sum();
        if allotted > u64::from(self.total_sc) {
            return invalid(format!(
                "station budgets sum to {allotted} subcarriers, above total_sc = {}",
                self.total_sc
            ));
        }
        let mut seen = vec![false; self.ues.len()];
        for ue in &self.ues {
            match seen.get_mut(ue.id as usize) {
                Some(slot) if !*slot => *slot = true,
                _ => {
                    return invalid(format!(
                        "UE ids must be a permutation of 0..{}; offending id {}",
                        self.ues.len(),
                        ue.id
                    ))
                }
            }
            if !(ue.rate_demand_bps.is_finite() && ue.rate_demand_bps > 0.0) {
                return invalid(format!("UE {} has a non-positive demand", ue.id));
            }
        }
        let mut sites = self.grid.horizontal.clone();
        sites.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate horizontal candidate".into());
        }
        let mut alts = self.grid.vertical.clone();
        alts.sort_by(f64::total_cmp);
        if alts.windows(2).any(|w| w[0] == w[1]) || alts.iter().any(|&h| !(h > 0.0)) {
            return invalid("altitudes must be unique and positive".into());
        }
        Ok(())
    }

    pub fn mbs(&self) -> &BaseStation {
        &self.stations[0]
    }

    /// Indices (into `stations`) of the drone stations.
    pub fn drone_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.stations
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_drone())
            .map(|(i, _)| i)
    }

    pub fn drone_count(&self) -> usize {
        self.stations.iter().filter(|s| s.is_drone()).count()
    }

    pub fn total_demand_bps(&self) -> f64 {
        self.ues.iter().map(|u| u.rate_demand_bps).fold(0.0, |a, b| a + b)
    }

    /// Same world with every drone switched to `duplex`.
    pub fn with_drone_duplex(&self, duplex: Duplex) -> Scenario {
        let mut s = self.clone();
        for st in s.stations.iter_mut().filter(|st| st.is_drone()) {
            st.duplex = duplex;
        }
        s
    }

    /// Same world with the drone fleet removed.
    pub fn without_drones(&self) -> Scenario {
        let mut s = self.clone();
        s.stations.retain(|st| !st.is_drone());
        s
    }

    /// Copy whose candidate altitudes are restricted to `altitude_m`.
    pub fn at_altitude(&self, altitude_m: f64) -> Scenario {
        let mut s = self.clone();
        s.grid.vertical = vec![altitude_m];
        for st in s.stations.iter_mut().filter(|st| st.is_drone()) {
            st.position.z = altitude_m;
        }
        s
    }

    /// Copy with the UE set replaced.
    pub fn with_ues(&self, ues: Vec<UserEquipment>) -> Scenario {
        Scenario {
            ues,
            ..self.clone()
        }
    }
}

/// Matérn cluster process parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaternCluster {
    pub parent_density_per_km2: f64,
    pub radius_m: f64,
    /// Mean daughters per parent. `None` sizes clusters so one realization
    /// holds about the requested number of points before clipping.
    #[serde(default)]
    pub mean_daughters: Option<f64>,
}

impl Default for MaternCluster {
    fn default() -> Self {
        Self {
            parent_density_per_km2: 8.0,
            radius_m: 120.0,
            mean_daughters: None,
        }
    }
}

/// Draws `n` UEs inside `[0, area_m]²` from a Matérn cluster process.
///
/// Randomness comes from ChaCha8 seeded with `seed`. Each realization places
/// Poisson(λ·area) parents uniformly, gives each Poisson(μ) daughters uniform
/// in a disk of `radius_m`, and drops daughters outside the area. Realizations
/// are appended until at least `n` points exist; the pool is shuffled and cut
/// to `n`. Demands are then drawn uniformly from [`DEMAND_SET_BPS`].
pub fn generate_ues(
    n: usize,
    area_m: f64,
    cluster: &MaternCluster,
    seed: u64,
) -> Result<Vec<UserEquipment>, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::Invalid("UE count must be at least 1".into()));
    }
    if !(area_m > 0.0 && cluster.parent_density_per_km2 > 0.0 && cluster.radius_m > 0.0) {
        return Err(ScenarioError::Invalid(
            "area, parent density and cluster radius must be positive".into(),
        ));
    }
    let mean_parents = cluster.parent_density_per_km2 * (area_m / 1000.0).powi(2);
    let mean_daughters = cluster
        .mean_daughters
        .unwrap_or_else(|| (n as f64 / mean_parents).max(1.0));
    if !(mean_daughters > 0.0) {
        return Err(ScenarioError::Invalid("mean daughters must be positive".into()));
    }
    let parents = Poisson::new(mean_parents).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let daughters =
        Poisson::new(mean_daughters).map_err(|e| ScenarioError::Invalid(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(n * 2);
    while points.len() < n {
        let n_parents = parents.sample(&mut rng) as u64;
        for _ in 0..n_parents {
            let px = rng.random::<f64>() * area_m;
            let py = rng.random::<f64>() * area_m;
            let n_daughters = daughters.sample(&mut rng) as u64;
            for _ in 0..n_daughters {
                let r = cluster.radius_m * rng.random::<f64>().sqrt();
                let phi = std::f64::consts::TAU * rng.random::<f64>();
                let (x, y) = (px + r * phi.cos(), py + r * phi.sin());
                if (0.0..=area_m).contains(&x) && (0.0..=area_m).contains(&y) {
                    points.push((x, y));
                }
            }
        }
    }
    points.shuffle(&mut rng);
    points.truncate(n);

    Ok(points
        .into_iter()
        .enumerate()
        .map(|(i, (x, y))| UserEquipment {
            id: i as u32,
            position: Point3::new(x, y, 0.0),
            rate_demand_bps: DEMAND_SET_BPS[rng.random_range(0..DEMAND_SET_BPS.len())],
        })
        .collect())
}

/// `start, start + step, ..., end` (inclusive), computed without drift.
pub fn altitude_range(start_m: f64, end_m: f64, step_m: f64) -> Vec<f64> {
    let count = ((end_m - start_m) / step_m + 1e-9).floor() as usize + 1;
    (0..count).map(|k| start_m + k as f64 * step_m).collect()
}

/// Square lattice of `n_horizontal` sites with half-cell margins.
pub fn build_grid(
    area_m: f64,
    n_horizontal: usize,
    altitudes: &[f64],
) -> Result<CandidateGrid, ScenarioError> {
    let k = (n_horizontal as f64).sqrt().round() as usize;
    if n_horizontal == 0 || k * k != n_horizontal {
        return Err(ScenarioError::Invalid(format!(
            "horizontal candidate count {n_horizontal} is not a positive perfect square"
        )));
    }
    let cell = area_m / k as f64;
    let coord = |i: usize| (i as f64 + 0.5) * cell;
    let horizontal = (0..k)
        .flat_map(|iy| (0..k).map(move |ix| (coord(ix), coord(iy))))
        .collect();
    Ok(CandidateGrid {
        horizontal,
        vertical: altitudes.to_vec(),
    })
}

/// Parameters for building a complete scenario; defaults are the evaluation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_m: f64,
    pub ue_count: usize,
    pub drone_count: usize,
    pub mbs_height_m: f64,
    pub mbs_sc_budget: u32,
    pub drone_sc_budget: u32,
    pub total_sc: u32,
    pub grid_sites: usize,
    pub altitudes_m: Vec<f64>,
    pub cluster: MaternCluster,
    pub channel: ChannelParams,
    pub drone_duplex: Duplex,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_m: 1000.0,
            ue_count: 170,
            drone_count: 3,
            mbs_height_m: 25.0,
            mbs_sc_budget: 300,
            drone_sc_budget: 300,
            total_sc: 1200,
            grid_sites: 36,
            altitudes_m: altitude_range(100.0, 300.0, 20.0),
            cluster: MaternCluster::default(),
            channel: ChannelParams::default(),
            drone_duplex: Duplex::Full,
        }
    }
}

impl ScenarioConfig {
    pub fn build(&self, seed: u64) -> Result<Scenario, ScenarioError> {
        let grid = build_grid(self.area_m, self.grid_sites, &self.altitudes_m)?;
        let ues = generate_ues(self.ue_count, self.area_m, &self.cluster, seed)?;
        let scenario = Scenario {
            stations: self.stations(&grid)?,
            channel: self.channel.clone(),
            ues,
            grid,
            total_sc: self.total_sc,
            seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn stations(&self, grid: &CandidateGrid) -> Result<Vec<BaseStation>, ScenarioError> {
        if self.drone_count > 0 && (grid.vertical.is_empty() || grid.horizontal.len() < self.drone_count) {
            return Err(ScenarioError::Invalid(
                "grid too small for the drone fleet".into(),
            ));
        }
        let centre = self.area_m / 2.0;
        let mut stations = vec![BaseStation {
            id: MBS_ID,
            kind: StationKind::Macro,
            position: Point3::new(centre, centre, self.mbs_height_m),
            sc_budget: self.mbs_sc_budget,
            power_budget_w: 0.0,
            duplex: Duplex::Half,
        }];
        stations.extend((0..self.drone_count).map(|d| BaseStation {
            id: MBS_ID + 1 + d as u32,
            kind: StationKind::Drone,
            position: grid.position(d, 0),
            sc_budget: self.drone_sc_budget,
            power_budget_w: self.channel.dbs_power_budget_w,
            duplex: self.drone_duplex,
        }));
        Ok(stations)
    }
}

const REQUIRED_KEYS: [&str; 6] = ["channel", "stations", "ues", "grid", "total_sc", "seed"];

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    let io_err = |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    serde_json::to_writer_pretty(&mut w, s)?;
    w.write_all(b"\n").map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Loads and validates a scenario file, logging any unknown keys.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: Value = serde_json::from_reader(BufReader::new(file))?;
    let (scenario, warnings) = scenario_from_value(value)?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(scenario)
}

/// Parses scenario JSON; returns the scenario plus one warning per unknown key.
pub fn parse_scenario(text: &str) -> Result<(Scenario, Vec<String>), ScenarioError> {
    scenario_from_value(serde_json::from_str(text)?)
}

fn scenario_from_value(value: Value) -> Result<(Scenario, Vec<String>), ScenarioError> {
    let obj = value.as_object().ok_or_else(|| ScenarioError::Schema {
        field: "<root>".into(),
        reason: "expected a JSON object".into(),
    })?;
    if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !obj.contains_key(**k)) {
        return Err(ScenarioError::Schema {
            field: (*missing).into(),
            reason: "missing required key".into(),
        });
    }
    let scenario: Scenario =
        serde_path_to_error::deserialize(&value).map_err(|e| ScenarioError::Schema {
            field: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
    scenario.validate()?;
    let canonical = serde_json::to_value(&scenario)?;
    let mut warnings = Vec::new();
    collect_unknown_keys(&value, &canonical, String::new(), &mut warnings);
    Ok((scenario, warnings))
}

fn collect_unknown_keys(input: &Value, known: &Value, path: String, out: &mut Vec<String>) {
    match (input, known) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get(k) {
                    Some(kv) => collect_unknown_keys(v, kv, sub, out),
                    None => out.push(format!("ignoring unknown key `{sub}`")),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (i, (v, kv)) in a.iter().zip(b).enumerate() {
                collect_unknown_keys(v, kv, format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lattice_6x6() {
        let g = build_grid(1000.0, 36, &altitude_range(100.0, 300.0, 20.0)).unwrap();
        assert_eq!(g.horizontal.len(), 36);
        let xs: Vec<f64> = g.horizontal[..6].iter().map(|p| p.0).collect();
        let want = [83.333_333_333_333_33, 250.0, 416.666_666_666_666_7, 583.333_333_333_333_4, 750.0, 916.666_666_666_666_6];
        for (x, w) in xs.iter().zip(want) {
            assert!((x - w).abs() < 1e-9, "{x} vs {w}");
        }
        assert_eq!(g.vertical.len(), 11);
        assert_eq!(g.vertical[0], 100.0);
        assert_eq!(g.vertical[10], 300.0);
        assert_eq!(g.vertical[3], 160.0);
    }

    #[test]
    fn grid_single_site_and_rejects() {
        let g = build_grid(1000.0, 1, &[100.0]).unwrap();
        assert_eq!(g.horizontal, vec![(500.0, 500.0)]);
        assert!(build_grid(1000.0, 35, &[100.0]).is_err());
        assert!(build_grid(1000.0, 0, &[100.0]).is_err());
    }

    #[test]
    fn ue_generation_is_deterministic_and_bounded() {
        let c = MaternCluster::default();
        let a = generate_ues(170, 1000.0, &c, 42).unwrap();
        let b = generate_ues(170, 1000.0, &c, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 170);
        for ue in &a {
            assert!((0.0..=1000.0).contains(&ue.position.x));
            assert!((0.0..=1000.0).contains(&ue.position.y));
            assert_eq!(ue.position.z, 0.0);
            assert!(DEMAND_SET_BPS.contains(&ue.rate_demand_bps));
        }
        assert_ne!(a, generate_ues(170, 1000.0, &c, 43).unwrap());
        assert!(generate_ues(0, 1000.0, &c, 1).is_err());
    }

    #[test]
    fn default_scenario_is_valid() {
        let s = ScenarioConfig::default().build(7).unwrap();
        assert_eq!(s.stations.len(), 4);
        assert_eq!(s.drone_count(), 3);
        assert_eq!(s.mbs().position, Point3::new(500.0, 500.0, 25.0));
        assert_eq!(s.grid.horizontal.len(), 36);
        assert_eq!(s.without_drones().stations.len(), 1);
        assert!(s
            .with_drone_duplex(Duplex::Half)
            .stations
            .iter()
            .skip(1)
            .all(|st| st.duplex == Duplex::Half));
    }

    #[test]
    fn validation_rejects_bad_budgets_and_ids() {
        let mut s = ScenarioConfig::default().build(1).unwrap();
        s.total_sc = 1000;
        assert!(s.validate().is_err());
        let mut s = ScenarioConfig::default().build(1).unwrap();
        s.ues[3].id = 0;
        assert!(s.validate().is_err());
        let mut s = ScenarioConfig::default().build(1).unwrap();
        s.stations.swap(0, 1);
        assert!(s.validate().is_err());
    }

    #[test]
    fn missing_key_names_the_key() {
        let s = ScenarioConfig { ue_count: 5, ..Default::default() }.build(3).unwrap();
        let mut v = serde_json::to_value(&s).unwrap();
        v.as_object_mut().unwrap().remove("stations");
        match parse_scenario(&v.to_string()) {
            Err(ScenarioError::Schema { field, .. }) => assert_eq!(field, "stations"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_type_error_reports_path() {
        let s = ScenarioConfig { ue_count: 5, ..Default::default() }.build(3).unwrap();
        let mut v = serde_json::to_value(&s).unwrap();
        v["ues"][2]["rate_demand_bps"] = Value::String("fast".into());
        match parse_scenario(&v.to_string()) {
            Err(ScenarioError::Schema { field, .. }) => assert_eq!(field, "ues[2].rate_demand_bps"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_warn() {
        let s = ScenarioConfig { ue_count: 5, ..Default::default() }.build(3).unwrap();
        let mut v = serde_json::to_value(&s).unwrap();
        v["comment"] = Value::String("hi".into());
        v["channel"]["antenna_gain_db"] = Value::from(3.0);
        let (parsed, warnings) = parse_scenario(&v.to_string()).unwrap();
        assert_eq!(parsed, s);
        assert_eq!(warnings.len(), 2);
        assert!(warnings.iter().any(|w| w.contains("`comment`")));
        assert!(warnings.iter().any(|w| w.contains("`channel.antenna_gain_db`")));
    }
}
