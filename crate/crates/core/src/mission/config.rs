use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::MissionError;
use crate::autopilot::AutopilotConfig;
use crate::bridge::FaultConfig;
use crate::flight_core::ResourceModel;
use crate::model::{Command, FlightMode, Opcode};
use crate::perception::{Trajectory, VisionSourceConfig};

/// One entry of the ground command script. `SET_MODE` may name its target
/// with `mode` instead of a numeric argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedCommand {
    pub t_s: f64,
    pub opcode: Opcode,
    #[serde(default)]
    pub args: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<FlightMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub vision: VisionSourceConfig,
    pub trajectory: Trajectory,
    pub command_script: Vec<ScriptedCommand>,
    /// Rate group periods in ms.
    pub rate_groups: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub autopilot: AutopilotConfig,
    /// Fault injection applied to both link directions.
    #[serde(default)]
    pub transport: FaultConfig,
    #[serde(default)]
    pub resources: ResourceModel,
}

fn bad(msg: impl Into<String>) -> MissionError {
    MissionError::BadConfig(msg.into())
}

impl MissionConfig {
    pub fn from_json(text: &str) -> Result<Self, MissionError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, MissionError> {
        let text = fs::read_to_string(path).map_err(|source| MissionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            MissionError::BadConfig(m) => bad(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Commands in script order with ids starting at 1, paired with their
    /// release times.
    pub fn commands(&self) -> Result<Vec<(f64, Command)>, MissionError> {
        self.command_script
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let id = i as u32 + 1;
                let args = match (c.opcode, c.mode) {
                    (Opcode::SetMode, Some(m)) if c.args.is_empty() => vec![f64::from(m.code())],
                    (_, Some(_)) => {
                        return Err(bad(format!(
                            "command {id}: `mode` only applies to SET_MODE without args"
                        )))
                    }
                    _ => c.args.clone(),
                };
                let cmd = Command::new(id, c.opcode, args, c.t_s).map_err(|e| bad(format!("command {id}: {e}")))?;
                Ok((c.t_s, cmd))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), MissionError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(bad("duration_s must be positive"));
        }
        if self.rate_groups.is_empty() || self.rate_groups.contains(&0) {
            return Err(bad("rate_groups must list positive periods in ms"));
        }
        for (i, c) in self.command_script.iter().enumerate() {
            if !(c.t_s >= 0.0 && c.t_s <= self.duration_s) {
                return Err(bad(format!(
                    "command {} at t_s={} lies outside [0, duration_s]",
                    i + 1,
                    c.t_s
                )));
            }
        }
        self.commands()?;
        self.vision.validate().map_err(|e| bad(format!("vision: {e}")))?;
        self.trajectory
            .validate()
            .map_err(|e| bad(format!("trajectory: {e}")))?;
        let [w0, w1] = self.vision.active_window_s.unwrap_or([0.0, self.duration_s]);
        let w1 = w1.min(self.duration_s);
        if self.trajectory.start_s() > w0 || self.trajectory.end_s() < w1 {
            return Err(bad(format!(
                "trajectory [{}, {}] must cover the vision window [{w0}, {w1}]",
                self.trajectory.start_s(),
                self.trajectory.end_s()
            )));
        }
        self.autopilot.validate().map_err(|e| bad(format!("autopilot: {e}")))?;
        self.transport.validate().map_err(|e| bad(format!("transport: {e}")))?;
        self.resources.validate().map_err(|e| bad(format!("resources: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "seed": 7,
        "duration_s": 10,
        "vision": {"nominal_rate_hz": 100},
        "trajectory": {"segments": [{"start_s": 0, "end_s": 10, "kind": "hover", "position": [0, 0, 1], "yaw_deg": 0}]},
        "command_script": [
            {"t_s": 1, "opcode": "ARM"},
            {"t_s": 2, "opcode": "SET_MODE", "mode": "GUIDED"},
            {"t_s": 3, "opcode": "TAKEOFF", "args": [1.0]}
        ],
        "rate_groups": [10, 100],
        "output_dir": "out"
    }"#;

    #[test]
    fn parses_and_numbers_commands() {
        let cfg = MissionConfig::from_json(BASE).unwrap();
        let cmds = cfg.commands().unwrap();
        assert_eq!(cmds.len(), 3);
        assert_eq!(cmds[1].1.id, 2);
        assert_eq!(cmds[1].1.args(), &[4.0]);
    }

    #[test]
    fn missing_seed_is_bad_config() {
        let text = BASE.replacen("\"seed\": 7,", "", 1);
        match MissionConfig::from_json(&text) {
            Err(MissionError::BadConfig(m)) => assert!(m.contains("seed"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = BASE.replacen("\"seed\": 7,", "\"seed\": 7, \"extra\": 1,", 1);
        assert!(matches!(
            MissionConfig::from_json(&text),
            Err(MissionError::BadConfig(_))
        ));
    }

    #[test]
    fn command_after_end_rejected() {
        let text = BASE.replacen("{\"t_s\": 1,", "{\"t_s\": 11,", 1);
        assert!(matches!(
            MissionConfig::from_json(&text),
            Err(MissionError::BadConfig(_))
        ));
    }

    #[test]
    fn wrong_arity_rejected() {
        let text = BASE.replacen("\"args\": [1.0]", "\"args\": [1.0, 2.0]", 1);
        assert!(matches!(
            MissionConfig::from_json(&text),
            Err(MissionError::BadConfig(_))
        ));
    }

    #[test]
    fn short_trajectory_rejected() {
        let text = BASE.replacen("\"end_s\": 10,", "\"end_s\": 5,", 1);
        assert!(matches!(
            MissionConfig::from_json(&text),
            Err(MissionError::BadConfig(_))
        ));
    }
}
