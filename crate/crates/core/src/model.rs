//! Shared domain types: poses, attitude conversion, flight modes, commands
//! and acknowledgments, resource samples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation of a quaternion's norm from 1.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-6;

/// Pitch distance from ±90° (radians) treated as gimbal lock.
const GIMBAL_LOCK_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("quaternion norm {norm} is not within {QUAT_NORM_TOLERANCE} of 1")]
    NonUnitQuaternion { norm: f64 },
    #[error("unknown flight mode {0:?}")]
    UnknownMode(String),
    #[error("unknown opcode {0:?}")]
    UnknownOpcode(String),
    #[error("{opcode} takes {expected} argument(s), got {got}")]
    ArityMismatch {
        opcode: Opcode,
        expected: usize,
        got: usize,
    },
    #[error("unknown status {0:?}")]
    UnknownStatus(String),
}

/// Quaternion stored in (x, y, z, w) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 1.0,
    };

    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.w.is_finite()
    }

    /// Builds the quaternion for intrinsic Z-Y-X rotations given in degrees.
    pub fn from_euler(angles: EulerAngles) -> Self {
        let (sr, cr) = (angles.roll.to_radians() * 0.5).sin_cos();
        let (sp, cp) = (angles.pitch.to_radians() * 0.5).sin_cos();
        let (sy, cy) = (angles.yaw.to_radians() * 0.5).sin_cos();
        Self {
            w: cr * cp * cy + sr * sp * sy,
            x: sr * cp * cy - cr * sp * sy,
            y: cr * sp * cy + sr * cp * sy,
            z: cr * cp * sy - sr * sp * cy,
        }
    }

    /// Rotation about the vertical axis only.
    pub fn from_yaw_deg(yaw: f64) -> Self {
        let (s, c) = (yaw.to_radians() * 0.5).sin_cos();
        Self::new(0.0, 0.0, s, c)
    }

    fn check_unit(&self) -> Result<(), ModelError> {
        if !self.is_finite() {
            return Err(ModelError::NonFinite("quaternion"));
        }
        let norm = self.norm();
        if (norm - 1.0).abs() > QUAT_NORM_TOLERANCE {
            return Err(ModelError::NonUnitQuaternion { norm });
        }
        Ok(())
    }
}

/// Roll, pitch and yaw in degrees, intrinsic Z-Y-X (aerospace) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub const fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }
}

/// Converts a unit quaternion to intrinsic Z-Y-X Euler angles in degrees.
///
/// At gimbal lock (pitch within 1e-6 rad of ±90°) roll is pinned to zero and
/// the whole residual rotation about the vertical axis is reported as yaw.
pub fn quat_to_euler(q: Quaternion) -> Result<EulerAngles, ModelError> {
    q.check_unit()?;
    // Normalize so the tolerance band does not leak into asin's domain.
    let n = q.norm();
    let (x, y, z, w) = (q.x / n, q.y / n, q.z / n, q.w / n);

    let sin_pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0);
    let pitch = sin_pitch.asin();

    if (std::f64::consts::FRAC_PI_2 - pitch.abs()) < GIMBAL_LOCK_EPS {
        // R01 = 2(xy - wz), R11 = 1 - 2(x^2 + z^2); with roll = 0 both reduce
        // to functions of yaw alone.
        let r01 = 2.0 * (x * y - w * z);
        let r11 = 1.0 - 2.0 * (x * x + z * z);
        let yaw = (-r01).atan2(r11);
        return Ok(EulerAngles::new(0.0, pitch.to_degrees(), yaw.to_degrees()));
    }

    let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
    let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
    Ok(EulerAngles::new(
        roll.to_degrees(),
        pitch.to_degrees(),
        yaw.to_degrees(),
    ))
}

/// Rotation matrix `Rz(yaw) * Ry(pitch) * Rx(roll)`, row-major.
pub fn euler_to_matrix(angles: EulerAngles) -> [[f64; 3]; 3] {
    let (sr, cr) = angles.roll.to_radians().sin_cos();
    let (sp, cp) = angles.pitch.to_radians().sin_cos();
    let (sy, cy) = angles.yaw.to_radians().sin_cos();
    [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_deg(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Timestamped 6-DoF pose: position in meters (x forward, y lateral,
/// z altitude) and attitude quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub t: f64,
    pub position: [f64; 3],
    pub orientation: Quaternion,
}

impl PoseSample {
    pub fn new(t: f64, position: [f64; 3], orientation: Quaternion) -> Self {
        Self {
            t,
            position,
            orientation,
        }
    }
}

pub fn validate_pose(sample: &PoseSample) -> Result<(), ModelError> {
    if !sample.t.is_finite() {
        return Err(ModelError::NonFinite("timestamp"));
    }
    if sample.position.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("position"));
    }
    sample.orientation.check_unit()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FlightMode {
    Stabilize,
    Guided,
    PosHold,
    Land,
}

impl FlightMode {
    pub const ALL: [FlightMode; 4] = [
        FlightMode::Stabilize,
        FlightMode::Guided,
        FlightMode::PosHold,
        FlightMode::Land,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FlightMode::Stabilize => "STABILIZE",
            FlightMode::Guided => "GUIDED",
            FlightMode::PosHold => "POSHOLD",
            FlightMode::Land => "LAND",
        }
    }

    /// Numeric mode code carried by SetMode commands (copter custom-mode numbering).
    pub fn code(self) -> u8 {
        match self {
            FlightMode::Stabilize => 0,
            FlightMode::Guided => 4,
            FlightMode::Land => 9,
            FlightMode::PosHold => 16,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl fmt::Display for FlightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FlightMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_mode(s)
    }
}

/// Exact, case-sensitive mode name lookup.
pub fn parse_mode(text: &str) -> Result<FlightMode, ModelError> {
    FlightMode::ALL
        .into_iter()
        .find(|m| m.as_str() == text)
        .ok_or_else(|| ModelError::UnknownMode(text.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Opcode {
    Arm,
    Disarm,
    SetMode,
    Takeoff,
    Goto,
    Land,
}

impl Opcode {
    pub const ALL: [Opcode; 6] = [
        Opcode::Arm,
        Opcode::Disarm,
        Opcode::SetMode,
        Opcode::Takeoff,
        Opcode::Goto,
        Opcode::Land,
    ];

    pub fn arity(self) -> usize {
        match self {
            Opcode::SetMode | Opcode::Takeoff => 1,
            Opcode::Goto => 3,
            Opcode::Arm | Opcode::Disarm | Opcode::Land => 0,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Opcode::Arm => 1,
            Opcode::Disarm => 2,
            Opcode::SetMode => 3,
            Opcode::Takeoff => 4,
            Opcode::Goto => 5,
            Opcode::Land => 6,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, ModelError> {
        Self::ALL
            .into_iter()
            .find(|o| o.code() == code)
            .ok_or_else(|| ModelError::UnknownOpcode(code.to_string()))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Opcode::Arm => "ARM",
            Opcode::Disarm => "DISARM",
            Opcode::SetMode => "SET_MODE",
            Opcode::Takeoff => "TAKEOFF",
            Opcode::Goto => "GOTO",
            Opcode::Land => "LAND",
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Opcode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| ModelError::UnknownOpcode(s.to_string()))
    }
}

/// A ground command. Construct through [`Command::new`] so the argument
/// count always matches the opcode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Command {
    pub id: u32,
    pub opcode: Opcode,
    args: Vec<f64>,
    pub issued_at: f64,
}

impl Command {
    pub fn new(id: u32, opcode: Opcode, args: Vec<f64>, issued_at: f64) -> Result<Self, ModelError> {
        if args.len() != opcode.arity() {
            return Err(ModelError::ArityMismatch {
                opcode,
                expected: opcode.arity(),
                got: args.len(),
            });
        }
        if args.iter().any(|a| !a.is_finite()) || !issued_at.is_finite() {
            return Err(ModelError::NonFinite("command"));
        }
        Ok(Self {
            id,
            opcode,
            args,
            issued_at,
        })
    }

    pub fn args(&self) -> &[f64] {
        &self.args
    }

    pub fn set_mode(id: u32, mode: FlightMode, issued_at: f64) -> Self {
        Self::new(id, Opcode::SetMode, vec![f64::from(mode.code())], issued_at).expect("SetMode arity is 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AckStatus {
    Success,
    Rejected,
    Timeout,
}

impl AckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AckStatus::Success => "SUCCESS",
            AckStatus::Rejected => "REJECTED",
            AckStatus::Timeout => "TIMEOUT",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            AckStatus::Success => 0,
            AckStatus::Rejected => 1,
            AckStatus::Timeout => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(AckStatus::Success),
            1 => Some(AckStatus::Rejected),
            2 => Some(AckStatus::Timeout),
            _ => None,
        }
    }
}

impl FromStr for AckStatus {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SUCCESS" => Ok(AckStatus::Success),
            "REJECTED" => Ok(AckStatus::Rejected),
            "TIMEOUT" => Ok(AckStatus::Timeout),
            other => Err(ModelError::UnknownStatus(other.to_string())),
        }
    }
}

impl fmt::Display for AckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommandAck {
    pub command_id: u32,
    pub status: AckStatus,
    pub ack_at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HealthStatus {
    Healthy,
    Degraded,
    Fault,
}

impl HealthStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            HealthStatus::Healthy => "HEALTHY",
            HealthStatus::Degraded => "DEGRADED",
            HealthStatus::Fault => "FAULT",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            HealthStatus::Healthy => 0,
            HealthStatus::Degraded => 1,
            HealthStatus::Fault => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(HealthStatus::Healthy),
            1 => Some(HealthStatus::Degraded),
            2 => Some(HealthStatus::Fault),
            _ => None,
        }
    }
}

impl FromStr for HealthStatus {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "HEALTHY" => Ok(HealthStatus::Healthy),
            "DEGRADED" => Ok(HealthStatus::Degraded),
            "FAULT" => Ok(HealthStatus::Fault),
            other => Err(ModelError::UnknownStatus(other.to_string())),
        }
    }
}

impl fmt::Display for HealthStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceSample {
    pub t: f64,
    pub cpu_pct: f64,
    pub mem_mb: f64,
    pub bandwidth_kbps: f64,
}

impl ResourceSample {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [self.t, self.cpu_pct, self.mem_mb, self.bandwidth_kbps];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("resource sample"));
        }
        if !(0.0..=100.0).contains(&self.cpu_pct) || self.mem_mb < 0.0 || self.bandwidth_kbps < 0.0 {
            return Err(ModelError::NonFinite("resource sample range"));
        }
        Ok(())
    }
}
