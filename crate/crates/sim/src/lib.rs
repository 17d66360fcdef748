//! Scenario-driven simulation of dashcam payer identification: ride
//! scenarios, a discrete-event runner over simulated BLE/WiFi links, a
//! plaintext reference pipeline, batch metrics and micro-benchmarks.

pub mod batch;
pub mod bench;
pub mod io;
pub mod oracle;
pub mod report;
pub mod runner;
pub mod scenario;

use thiserror::Error;

pub use report::RideReport;
pub use runner::{run_scenario, run_scenario_with, RideArtifacts, RideRun, RunOptions};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(ScenarioError),
    #[error("simulation exceeded {0} events")]
    Runaway(usize),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
