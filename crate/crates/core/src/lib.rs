//! Hybrid flight-software stack in virtual time: a deterministic flight core
//! bridged to a simulated autopilot and a perception bus, plus an offline
//! analyzer for the logs a mission produces.

pub mod analyzer;
pub mod autopilot;
pub mod bench;
pub mod bridge;
pub mod flight_core;
pub mod mission;
pub mod model;
pub mod perception;
pub mod time;

pub use analyzer::{build_report, AnalysisReport, AnalyzerError, ReportInputs};
pub use autopilot::{Autopilot, AutopilotConfig, AutopilotState, MissionEntry};
pub use bench::{run_bench, BenchReport, BenchTransport};
pub use mission::{run_mission, write_outputs, MissionConfig, MissionError, MissionOutput};
pub use model::*;
pub use time::VirtualTime;
