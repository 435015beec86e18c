//! Detection of ordered global activities over asynchronous sensor agents.
//!
//! Each sensor runs an [`agent::AgentState`] that stamps its local predicate
//! transitions with vector clocks and reports closed intervals to a single
//! [`checker::Checker`]. The checker recognises every occurrence of each
//! AND/OR global activity and then matches occurrences against the ordered
//! constraint `GA_1 ≺ GA_2 ≺ … ≺ GA_m`.
//!
//! [`simnet`] drives agents and the checker through a seeded discrete-event
//! simulation, and [`harness`] builds the smart-lock experiment on top of it.

pub mod activity;
pub mod agent;
pub mod checker;
pub mod harness;
pub mod oracle;
pub mod report;
pub mod simnet;
pub mod trace;
pub mod vclock;

pub use activity::{intervals_overlap, ConstraintError, ConstraintSpec, GaKind, GlobalActivitySpec, TimedInterval};
pub use agent::{AgentState, CheckingReport, Endpoint, Message, MessageBody};
pub use checker::{Checker, CheckerOutput, ComparisonCounters, GaOccurrence, Satisfaction};
pub use harness::{run_experiment, run_scenario, ExperimentResult, ScenarioParams, SweepAxis};
pub use simnet::{DelayModel, Direction, ExecutionLog, Simulation};
pub use vclock::{ClockError, ProcessId, VectorClock};
