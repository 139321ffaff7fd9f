//! Scenario runner for the AR-theater simulation engine: config loading,
//! scripted walkers, deterministic artifact bundles with hashed manifests,
//! and reports with SVG plots.

pub mod bundle;
pub mod config;
pub mod error;
pub mod records;
pub mod report;
pub mod scenario;
pub mod svg;
pub mod walker;

pub use bundle::{verify, Bundle, Manifest};
pub use config::{ScenarioConfig, ScenarioKind, WalkerSpec};
pub use error::HarnessError;
pub use scenario::run_scenario;
