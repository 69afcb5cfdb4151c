//! Instrumentation, deployments and scenario runs shared by the CLI, the
//! benchmarks and the tests.

pub mod bench;
pub mod deploy;
pub mod scenario;

pub use bench::{bench, BenchReport, CostRow, SizeRow};
pub use deploy::{Deployment, TransportKind};
pub use scenario::{run as run_scenario, Outcome, RunOptions, Scenario, ScenarioReport, Step, StepReport, Tamper};
