//! Files, reports and experiments around `minegame-core`.
//!
//! - [`scenario`]: JSON scenario files and validation;
//! - [`generate`]: seeded random instances;
//! - [`run`]: runs a scenario in its mode and builds the report and trace;
//! - [`report`]: report and trace serialization;
//! - [`campaign`]: property campaigns over generated instances;
//! - [`oracle`]: brute-force reference computations.

pub mod campaign;
pub mod generate;
pub mod oracle;
pub mod report;
pub mod run;
pub mod scenario;

pub use generate::{generate_design, generate_instance};
pub use report::{write_trace, RunReport, Status, TraceEvent};
pub use run::{run, RunOutput};
pub use scenario::{parse_scenario, Mode, Scenario, ScenarioError};
