//! Backhaul-aware uplink optimization for HetNets with full-duplex drone
//! base stations (DBSs) relaying to a single macro base station (MBS).
//!
//! The pipeline: [`channel`] turns geometry into per-subcarrier rates,
//! [`allocation`] associates UEs and assigns subcarriers for fixed drone
//! positions, [`placement`] searches the candidate grid, and [`solver`]
//! composes them. [`oracle`] holds exact reference solvers for small
//! instances and [`experiments`] runs seeded sweeps.

pub mod allocation;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod link;
pub mod oracle;
pub mod placement;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod verify;

pub use allocation::{aa_upb, validate_assignment, Assignment, UeLink};
pub use channel::{ChannelParams, Duplex, Point3};
pub use error::{ModelError, ScenarioError, SolveError};
pub use placement::{opt_dbs_placement, PlacementSolution, SearchMode, SearchOptions};
pub use scenario::{load_scenario, save_scenario, Scenario, ScenarioConfig};
pub use solver::{aa_bud, hd_dbs, s_mbs, Algorithm};
