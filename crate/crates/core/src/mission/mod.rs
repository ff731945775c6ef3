//! End-to-end mission runs in virtual time and their on-disk outputs.

mod config;
mod runner;

use thiserror::Error;

use crate::autopilot::AutopilotError;
use crate::bridge::{BridgeError, CodecError, TransportError};
use crate::flight_core::CoreError;
use crate::perception::VisionConfigError;

pub use config::{MissionConfig, ScriptedCommand};
pub use runner::{
    run_mission, write_outputs, MissionOutput, CORE_STATS_FILE, MISSION_LOG_FILE, RESOURCE_LOG_FILE, VISION_LOG_FILE,
};

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Autopilot(#[from] AutopilotError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Vision(#[from] VisionConfigError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}
