use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid channel parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid link geometry (horizontal {horizontal_dist_m} m, altitude {altitude_m} m)")]
    InvalidGeometry { horizontal_dist_m: f64, altitude_m: f64 },
    #[error("subcarrier count must be at least 1")]
    ZeroSubcarriers,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("candidate grid has no {0} positions")]
    EmptyGrid(&'static str),
    #[error("grid has {sites} horizontal sites, fewer than the {drones} drones to place")]
    TooFewSites { sites: usize, drones: usize },
    #[error("expected {expected} drone positions, got {got}")]
    PositionCount { expected: usize, got: usize },
    #[error("instance exceeds oracle caps: {0}")]
    CapsExceeded(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
