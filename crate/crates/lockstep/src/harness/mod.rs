//! Scenario orchestration: configuration files, end-to-end runs,
//! trajectory verification, and plot-ready exports.
//!
//! The harness ties the lower-level modules together behind four
//! operations, mirrored one-to-one by the CLI:
//!
//! ```text
//! parse_config      JSON scenario file -> ScenarioConfig
//! run_scenario      ScenarioConfig -> (trajectory, VerificationReport)
//! verify_trajectory trajectory + certificate -> VerificationReport
//! emit_plot_data    trajectory -> <prefix>_errors.csv, <prefix>_lyapunov.csv
//! ```

pub mod config;
pub mod plot;
pub mod scenario;
pub mod verify;

pub use config::{parse_config, HorizonConfig, ScenarioConfig, Topology};
pub use plot::emit_plot_data;
pub use scenario::{run_scenario, write_trajectory};
pub use verify::{verify_trajectory, CheckOutcome, VerificationReport};
