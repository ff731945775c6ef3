//! Simulated flight controller: mode state machine, command acknowledgment,
//! first-order setpoint tracking, and mission-log emission.
//!
//! Allowed mode changes:
//!
//! ```text
//! STABILIZE <-> GUIDED <-> POSHOLD
//! any mode (armed) -> LAND
//! LAND -> STABILIZE      only once disarmed
//! ```
//!
//! Requesting the current mode is accepted as a no-op.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::{decode_message, BridgeError, CodecError, FlightStateReport, Message, Sequencer};
use crate::model::{wrap_deg, AckStatus, Command, CommandAck, FlightMode, HealthStatus, Opcode};
use crate::time::VirtualTime;

/// Altitude at or below which a landing vehicle auto-disarms.
pub const LANDED_ALT_M: f64 = 0.01;
/// Highest altitude at which a manual disarm is accepted.
pub const DISARM_MAX_ALT_M: f64 = 0.1;

#[derive(Debug, Error)]
pub enum AutopilotError {
    #[error("negative time step {0} s")]
    NegativeDt(f64),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutopilotState {
    pub mode: FlightMode,
    pub armed: bool,
    pub position: [f64; 3],
    pub setpoint: [f64; 3],
    pub yaw_deg: f64,
    pub yaw_setpoint_deg: f64,
    pub tracking_gain: f64,
}

impl Default for AutopilotState {
    fn default() -> Self {
        Self::new(1.0)
    }
}

pub fn mode_transition_allowed(from: FlightMode, to: FlightMode, armed: bool) -> bool {
    use FlightMode::*;
    match (from, to) {
        (a, b) if a == b => true,
        (_, Land) => armed,
        (Land, Stabilize) => !armed,
        (Stabilize, Guided) | (Guided, Stabilize) | (Guided, PosHold) | (PosHold, Guided) => true,
        _ => false,
    }
}

impl AutopilotState {
    pub fn new(tracking_gain: f64) -> Self {
        Self {
            mode: FlightMode::Stabilize,
            armed: false,
            position: [0.0; 3],
            setpoint: [0.0; 3],
            yaw_deg: 0.0,
            yaw_setpoint_deg: 0.0,
            tracking_gain,
        }
    }

    fn enter_mode(&mut self, mode: FlightMode) {
        if mode == self.mode {
            return;
        }
        self.mode = mode;
        match mode {
            FlightMode::Land => {
                self.setpoint = [self.position[0], self.position[1], 0.0];
            }
            FlightMode::PosHold | FlightMode::Stabilize | FlightMode::Guided => {
                self.setpoint = self.position;
                self.yaw_setpoint_deg = self.yaw_deg;
            }
        }
    }

    /// Applies a command and returns the resulting state with its ack.
    /// Precondition failures produce a `Rejected` ack and an unchanged state.
    pub fn handle_command(&self, cmd: &Command, now: f64) -> (AutopilotState, CommandAck) {
        let mut next = *self;
        let accepted = match cmd.opcode {
            Opcode::Arm => {
                let ok = !self.armed && self.mode != FlightMode::Land;
                next.armed |= ok;
                ok
            }
            Opcode::Disarm => {
                let ok = self.armed && self.position[2] <= DISARM_MAX_ALT_M;
                if ok {
                    next.armed = false;
                }
                ok
            }
            Opcode::SetMode => {
                let target = cmd.args()[0];
                let mode = (target.fract() == 0.0 && (0.0..=255.0).contains(&target))
                    .then(|| FlightMode::from_code(target as u8))
                    .flatten();
                match mode {
                    Some(m) if mode_transition_allowed(self.mode, m, self.armed) => {
                        next.enter_mode(m);
                        true
                    }
                    _ => false,
                }
            }
            Opcode::Takeoff => {
                let alt = cmd.args()[0];
                let ok = self.armed && self.mode == FlightMode::Guided && alt > 0.0;
                if ok {
                    next.setpoint = [self.position[0], self.position[1], alt];
                }
                ok
            }
            Opcode::Goto => {
                let ok = self.mode == FlightMode::Guided;
                if ok {
                    let a = cmd.args();
                    next.setpoint = [a[0], a[1], a[2]];
                    let (dx, dy) = (a[0] - self.position[0], a[1] - self.position[1]);
                    if dx.hypot(dy) > 1e-9 {
                        next.yaw_setpoint_deg = dy.atan2(dx).to_degrees();
                    }
                }
                ok
            }
            Opcode::Land => {
                let ok = self.armed;
                if ok {
                    next.enter_mode(FlightMode::Land);
                }
                ok
            }
        };
        let status = if accepted {
            AckStatus::Success
        } else {
            AckStatus::Rejected
        };
        (
            next,
            CommandAck {
                command_id: cmd.id,
                status,
                ack_at: now,
            },
        )
    }

    /// First-order lag toward the setpoint per axis, shortest-arc for yaw.
    /// A disarmed vehicle does not move. Landing completes by disarming once
    /// altitude is at or below [`LANDED_ALT_M`].
    pub fn step(&self, dt: f64) -> Result<AutopilotState, AutopilotError> {
        if dt.is_nan() || dt < 0.0 {
            return Err(AutopilotError::NegativeDt(dt));
        }
        let mut next = *self;
        if dt == 0.0 || !self.armed {
            return Ok(next);
        }
        let k = self.tracking_gain * dt;
        for i in 0..3 {
            next.position[i] += k * (self.setpoint[i] - self.position[i]);
        }
        next.yaw_deg = wrap_deg(self.yaw_deg + k * wrap_deg(self.yaw_setpoint_deg - self.yaw_deg));
        if next.mode == FlightMode::Land {
            next.position[2] = next.position[2].max(0.0);
            if next.position[2] <= LANDED_ALT_M {
                next.armed = false;
            }
        }
        Ok(next)
    }

    pub fn report(&self) -> FlightStateReport {
        FlightStateReport {
            mode: self.mode,
            armed: self.armed,
            position: self.position,
            yaw_deg: self.yaw_deg,
        }
    }
}

/// One mission-log row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MissionEntry {
    pub t: f64,
    pub mode: FlightMode,
    pub health: HealthStatus,
    pub last_ack: Option<(u32, AckStatus)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutopilotConfig {
    pub tracking_gain: f64,
    pub step_period_ms: u64,
    /// Spacing of periodic mission-log rows.
    pub log_period_s: f64,
}

impl Default for AutopilotConfig {
    fn default() -> Self {
        Self {
            tracking_gain: 1.0,
            step_period_ms: 100,
            log_period_s: 0.1,
        }
    }
}

impl AutopilotConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tracking_gain.is_finite() && self.tracking_gain > 0.0) {
            return Err("tracking_gain must be positive".into());
        }
        if self.step_period_ms == 0 {
            return Err("step_period_ms must be positive".into());
        }
        if !(self.log_period_s.is_finite() && self.log_period_s > 0.0) {
            return Err("log_period_s must be positive".into());
        }
        Ok(())
    }
}

/// The flight-controller endpoint: consumes Command and Health frames,
/// produces CommandAck and FlightState frames, records mission entries.
pub struct Autopilot {
    cfg: AutopilotConfig,
    state: AutopilotState,
    health: HealthStatus,
    sequencer: Sequencer,
    entries: Vec<MissionEntry>,
    last_step: VirtualTime,
    next_step: VirtualTime,
    next_log: VirtualTime,
}

impl Autopilot {
    pub fn new(cfg: AutopilotConfig, now: VirtualTime) -> Self {
        let mut ap = Self {
            cfg,
            state: AutopilotState::new(cfg.tracking_gain),
            health: HealthStatus::Healthy,
            sequencer: Sequencer::new(),
            entries: Vec::new(),
            last_step: now,
            next_step: now + VirtualTime::from_millis(cfg.step_period_ms),
            next_log: now,
        };
        ap.log_periodic(now);
        ap
    }

    pub fn state(&self) -> &AutopilotState {
        &self.state
    }

    pub fn next_step(&self) -> VirtualTime {
        self.next_step
    }

    fn entry(&mut self, now: VirtualTime, last_ack: Option<(u32, AckStatus)>) {
        self.entries.push(MissionEntry {
            t: now.as_secs_f64(),
            mode: self.state.mode,
            health: self.health,
            last_ack,
        });
    }

    fn log_periodic(&mut self, now: VirtualTime) {
        if now >= self.next_log {
            self.entry(now, None);
            let period = VirtualTime::from_secs_f64(self.cfg.log_period_s);
            while self.next_log <= now {
                self.next_log = self.next_log + period;
            }
        }
    }

    /// Handles a command directly, logging a transition row (if the mode
    /// changed) followed by the ack row.
    pub fn handle(&mut self, cmd: &Command, now: VirtualTime) -> CommandAck {
        let before = self.state.mode;
        let (next, ack) = self.state.handle_command(cmd, now.as_secs_f64());
        self.state = next;
        if self.state.mode != before {
            self.entry(now, None);
        }
        self.entry(now, Some((ack.command_id, ack.status)));
        ack
    }

    /// Processes one inbound datagram; returns frames to send back.
    pub fn on_frame(&mut self, bytes: &[u8], now: VirtualTime) -> Result<Vec<Vec<u8>>, AutopilotError> {
        let (_, msg) = decode_message(bytes)?;
        let mut out = Vec::new();
        match msg {
            Message::Command(cmd) => {
                let ack = self.handle(&cmd, now);
                out.push(self.sequencer.encode(&Message::CommandAck(ack), now.as_nanos())?);
            }
            Message::Health(h) if h != self.health => {
                self.health = h;
                self.entry(now, None);
            }
            _ => {}
        }
        Ok(out)
    }

    /// Advances dynamics to `now`; returns the FlightState frame.
    pub fn step(&mut self, now: VirtualTime) -> Result<Vec<u8>, AutopilotError> {
        let dt = now.saturating_sub(self.last_step).as_secs_f64();
        let was_armed = self.state.armed;
        self.state = self.state.step(dt)?;
        self.last_step = now;
        while self.next_step <= now {
            self.next_step = self.next_step + VirtualTime::from_millis(self.cfg.step_period_ms);
        }
        if was_armed && !self.state.armed {
            self.entry(now, None);
        }
        self.log_periodic(now);
        Ok(self
            .sequencer
            .encode(&Message::FlightState(self.state.report()), now.as_nanos())?)
    }

    /// Logs the closing row at mission end.
    pub fn finish(&mut self, now: VirtualTime) {
        self.entry(now, None);
    }

    pub fn take_entries(&mut self) -> Vec<MissionEntry> {
        std::mem::take(&mut self.entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn armed() -> AutopilotState {
        AutopilotState {
            armed: true,
            ..AutopilotState::default()
        }
    }

    fn cmd(opcode: Opcode, args: Vec<f64>) -> Command {
        Command::new(1, opcode, args, 0.0).unwrap()
    }

    fn set_mode(mode: FlightMode) -> Command {
        Command::set_mode(1, mode, 0.0)
    }

    #[test]
    fn arm_from_stabilize() {
        let (s, ack) = AutopilotState::default().handle_command(&cmd(Opcode::Arm, vec![]), 0.0);
        assert!(s.armed);
        assert_eq!(ack.status, AckStatus::Success);
        let (_, again) = s.handle_command(&cmd(Opcode::Arm, vec![]), 0.0);
        assert_eq!(again.status, AckStatus::Rejected);
    }

    #[test]
    fn guided_reachable_once_armed() {
        let s = armed();
        let (s, ack) = s.handle_command(&set_mode(FlightMode::Guided), 0.0);
        assert_eq!(ack.status, AckStatus::Success);
        assert_eq!(s.mode, FlightMode::Guided);
    }

    #[test]
    fn takeoff_requires_arming() {
        let mut s = AutopilotState {
            mode: FlightMode::Guided,
            ..AutopilotState::default()
        };
        let (_, ack) = s.handle_command(&cmd(Opcode::Takeoff, vec![1.0]), 0.0);
        assert_eq!(ack.status, AckStatus::Rejected);
        s.armed = true;
        let (s, ack) = s.handle_command(&cmd(Opcode::Takeoff, vec![1.0]), 0.0);
        assert_eq!(ack.status, AckStatus::Success);
        assert_eq!(s.setpoint[2], 1.0);
    }

    #[test]
    fn transition_table() {
        use FlightMode::*;
        assert!(!mode_transition_allowed(Stabilize, PosHold, true));
        assert!(!mode_transition_allowed(Stabilize, Land, false));
        assert!(mode_transition_allowed(PosHold, Land, true));
        assert!(!mode_transition_allowed(Land, Stabilize, true));
        assert!(mode_transition_allowed(Land, Stabilize, false));
        assert!(!mode_transition_allowed(Land, Guided, false));
    }

    #[test]
    fn unknown_mode_code_rejected() {
        let c = Command::new(1, Opcode::SetMode, vec![3.0], 0.0).unwrap();
        let (_, ack) = AutopilotState::default().handle_command(&c, 0.0);
        assert_eq!(ack.status, AckStatus::Rejected);
    }

    #[test]
    fn fixed_point_and_zero_dt() {
        let mut s = armed();
        s.position = [1.0, 2.0, 3.0];
        s.setpoint = s.position;
        assert_eq!(s.step(0.01).unwrap().position, s.position);
        s.setpoint = [0.0; 3];
        assert_eq!(s.step(0.0).unwrap(), s);
        assert!(matches!(s.step(-1.0), Err(AutopilotError::NegativeDt(d)) if d == -1.0));
    }

    #[test]
    fn geometric_convergence() {
        let mut s = armed();
        s.setpoint = [1.0, 0.0, 0.0];
        for _ in 0..1000 {
            s = s.step(0.001).unwrap();
        }
        // Closed form of 1000 steps of p += 0.001 (1 - p).
        let oracle = 1.0 - 0.999f64.powi(1000);
        assert!((s.position[0] - oracle).abs() < 1e-12);
        assert!((s.position[0] - 0.6323).abs() < 1e-4);
    }

    #[test]
    fn yaw_takes_short_way_round() {
        let mut s = armed();
        s.yaw_deg = 170.0;
        s.yaw_setpoint_deg = -170.0;
        let n = s.step(0.1).unwrap();
        assert!((n.yaw_deg - 172.0).abs() < 1e-9, "{}", n.yaw_deg);
    }

    #[test]
    fn landing_disarms() {
        let mut s = armed();
        s.position = [0.0, 0.0, 1.0];
        let (mut s, ack) = s.handle_command(&cmd(Opcode::Land, vec![]), 0.0);
        assert_eq!(ack.status, AckStatus::Success);
        assert_eq!(s.setpoint[2], 0.0);
        for _ in 0..100 {
            s = s.step(0.1).unwrap();
        }
        assert!(!s.armed);
        assert!((0.0..=LANDED_ALT_M).contains(&s.position[2]));
        let (s, ack) = s.handle_command(&set_mode(FlightMode::Stabilize), 0.0);
        assert_eq!(ack.status, AckStatus::Success);
        assert_eq!(s.mode, FlightMode::Stabilize);
    }

    #[test]
    fn endpoint_logs_acks_and_transitions() {
        let mut ap = Autopilot::new(AutopilotConfig::default(), VirtualTime::ZERO);
        let arm = Command::new(1, Opcode::Arm, vec![], 0.0).unwrap();
        let guided = Command::set_mode(2, FlightMode::Guided, 0.0);
        ap.handle(&arm, VirtualTime::from_millis(10));
        ap.handle(&guided, VirtualTime::from_millis(20));
        let e = ap.take_entries();
        assert_eq!(e.len(), 4);
        assert_eq!(e[0].last_ack, None);
        assert_eq!(e[1].last_ack, Some((1, AckStatus::Success)));
        assert_eq!((e[2].mode, e[2].last_ack), (FlightMode::Guided, None));
        assert_eq!(e[3].last_ack, Some((2, AckStatus::Success)));
    }
}
