//! Simulation engine for a tokenized recycling incentive system.
//!
//! - [`model`]: deterministic equations and trajectory evaluation
//! - [`stochastic`]: distributions, waste process, reproducible streams
//! - [`montecarlo`]: seeded parallel trials and summary statistics
//! - [`sensitivity`]: analytic partials, finite-difference checks, sweeps
//! - [`comparison`]: tokenized versus subsidy experiment and calibration
//! - [`scenario`]: scenario files and their validation

pub mod comparison;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod scenario;
pub mod sensitivity;
pub mod stochastic;

pub use error::{Error, Result};
pub use model::{ScenarioParams, Schedule, TimeGrid, TrajectoryPoint, WasteMode};
pub use montecarlo::{MonteCarloScenario, MonteCarloSummary, TrialOutcome};
pub use stochastic::{DistributionSpec, RandomStream};
