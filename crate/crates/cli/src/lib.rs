//! Scenario files, batch runs and acceptance reports for the mean
//! curvature flow laboratory in `mcf_core`.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod report;
pub mod scenario;
pub mod suite;

pub use config::{parse_scenario, ScenarioConfig};
pub use error::{LabError, Result};
pub use report::{report, Criterion, Outcome, Report};
pub use scenario::run_scenario;
pub use suite::{run_suite, SuiteOptions};
