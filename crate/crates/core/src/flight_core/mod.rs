//! Deterministic flight-critical executor: rate-group scheduler, fixed
//! telemetry database, command dispatcher with ack tracking, and health
//! monitor. All input arrives as bridge frames queued between ticks and is
//! drained by the `BridgeRx` component.

mod dispatcher;
mod health;
mod scheduler;
mod telemetry;

pub use dispatcher::{DispatchError, Dispatcher, DispatcherCounts, DEFAULT_ACK_TIMEOUT};
pub use health::{HealthMonitor, HealthTransition};
pub use scheduler::{Activation, RateGroup, Scheduler, SchedulerError};
pub use telemetry::{TelemetryDb, TelemetryError, TlmEntry, TlmValue};

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::{decode_message, BridgeStats, CodecError, Message, Sequencer, DEFAULT_STALENESS_THRESHOLD_NS};
use crate::model::{Command, CommandAck, HealthStatus, PoseSample, ResourceSample};
use crate::time::{VirtualTime, NANOS_PER_SEC};

pub const VISION_LINK: &str = "vision_link";
pub const AUTOPILOT_LINK: &str = "autopilot_link";

/// Telemetry channels registered by every flight core.
pub const TELEMETRY_CHANNELS: &[&str] = &[
    "vision.pose",
    "autopilot.mode",
    "autopilot.armed",
    "autopilot.x",
    "autopilot.y",
    "autopilot.z",
    "autopilot.yaw_deg",
    "bridge.freshness_pct",
    "cmd.success_rate_pct",
    "health.overall",
];

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error("invalid flight core configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    BridgeRx,
    CommandDispatch,
    HealthCheck,
    ResourceMonitor,
}

/// Synthetic onboard resource model. CPU load scales with the number of
/// frames handled in each sampling window; bandwidth is measured from the
/// bytes that actually crossed the bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceModel {
    pub cpu_idle_pct: f64,
    pub cpu_per_frame_pct: f64,
    pub cpu_noise_pct: f64,
    pub mem_base_mb: f64,
    pub mem_noise_mb: f64,
    pub sample_period_s: f64,
}

impl Default for ResourceModel {
    fn default() -> Self {
        Self {
            cpu_idle_pct: 8.0,
            cpu_per_frame_pct: 0.062,
            cpu_noise_pct: 1.0,
            mem_base_mb: 1244.0,
            mem_noise_mb: 20.0,
            sample_period_s: 1.0,
        }
    }
}

impl ResourceModel {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.cpu_idle_pct,
            self.cpu_per_frame_pct,
            self.cpu_noise_pct,
            self.mem_base_mb,
            self.mem_noise_mb,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err("resource model values must be finite and non-negative".into());
        }
        if self.sample_period_s.is_nan() || self.sample_period_s <= 0.0 {
            return Err("resource sample_period_s must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightCoreConfig {
    pub rate_group_periods_ms: Vec<u64>,
    pub ack_timeout: VirtualTime,
    pub staleness_threshold_ns: u64,
    /// Defaults to three periods of the slowest group (where health runs).
    pub health_timeout: Option<VirtualTime>,
    pub resources: ResourceModel,
    pub seed: u64,
}

impl Default for FlightCoreConfig {
    fn default() -> Self {
        Self {
            rate_group_periods_ms: vec![10, 100],
            ack_timeout: DEFAULT_ACK_TIMEOUT,
            staleness_threshold_ns: DEFAULT_STALENESS_THRESHOLD_NS,
            health_timeout: None,
            resources: ResourceModel::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoreEvent {
    CommandSent { id: u32, at: VirtualTime },
    CommandTimedOut { id: u32, at: VirtualTime },
    AckSettled { ack: CommandAck, at: VirtualTime },
    UnexpectedAck { id: u32, at: VirtualTime },
    Health(HealthTransition),
    DecodeError { at: VirtualTime, error: String },
}

#[derive(Debug)]
struct ResourceMonitor {
    model: ResourceModel,
    rng: ChaCha8Rng,
    next_sample: VirtualTime,
    window_start: VirtualTime,
    frames: u64,
    bytes: u64,
}

impl ResourceMonitor {
    fn sample(&mut self, now: VirtualTime) -> ResourceSample {
        let elapsed = now.saturating_sub(self.window_start).as_secs_f64().max(1e-9);
        let frame_rate = self.frames as f64 / elapsed;
        let cpu_noise = gaussian(&mut self.rng, self.model.cpu_noise_pct);
        let mem_noise = gaussian(&mut self.rng, self.model.mem_noise_mb);
        let sample = ResourceSample {
            t: now.as_secs_f64(),
            cpu_pct: (self.model.cpu_idle_pct + self.model.cpu_per_frame_pct * frame_rate + cpu_noise)
                .clamp(0.0, 100.0),
            mem_mb: (self.model.mem_base_mb + mem_noise).max(0.0),
            bandwidth_kbps: self.bytes as f64 * 8.0 / 1000.0 / elapsed,
        };
        self.window_start = now;
        self.frames = 0;
        self.bytes = 0;
        sample
    }
}

fn gaussian(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).expect("finite std").sample(rng)
    } else {
        0.0
    }
}

pub struct FlightCore {
    scheduler: Scheduler<Component>,
    telemetry: TelemetryDb,
    dispatcher: Dispatcher,
    health: HealthMonitor,
    bridge_stats: BridgeStats,
    sequencer: Sequencer,
    inbound: VecDeque<Vec<u8>>,
    outbound: Vec<Vec<u8>>,
    script: VecDeque<(VirtualTime, Command)>,
    events: Vec<CoreEvent>,
    resources: ResourceMonitor,
    resource_log: Vec<ResourceSample>,
    last_health: HealthStatus,
    next_heartbeat: VirtualTime,
}

impl FlightCore {
    pub fn new(cfg: &FlightCoreConfig) -> Result<Self, CoreError> {
        let mut periods = cfg.rate_group_periods_ms.clone();
        if periods.is_empty() || periods.contains(&0) {
            return Err(CoreError::Config(
                "rate group periods must be non-empty and positive".into(),
            ));
        }
        cfg.resources.validate().map_err(CoreError::Config)?;
        periods.sort_unstable();
        let n = periods.len();
        let groups = periods
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let mut members = Vec::new();
                if i == 0 {
                    members.extend([Component::BridgeRx, Component::CommandDispatch]);
                }
                if i == n - 1 {
                    members.extend([Component::HealthCheck, Component::ResourceMonitor]);
                }
                RateGroup::new(VirtualTime::from_millis(p), members)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let slowest = VirtualTime::from_millis(periods[n - 1]);
        let health_timeout = cfg.health_timeout.unwrap_or(VirtualTime(3 * slowest.0));

        let mut health = HealthMonitor::new(health_timeout);
        health.register(AUTOPILOT_LINK, VirtualTime::ZERO);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0xC0DE);
        let period = VirtualTime::from_secs_f64(cfg.resources.sample_period_s);

        Ok(Self {
            scheduler: Scheduler::new(groups)?,
            telemetry: TelemetryDb::new(TELEMETRY_CHANNELS),
            dispatcher: Dispatcher::new(cfg.ack_timeout),
            health,
            bridge_stats: BridgeStats::with_threshold(cfg.staleness_threshold_ns),
            sequencer: Sequencer::new(),
            inbound: VecDeque::new(),
            outbound: Vec::new(),
            script: VecDeque::new(),
            events: Vec::new(),
            resources: ResourceMonitor {
                model: cfg.resources,
                rng,
                next_sample: period,
                window_start: VirtualTime::ZERO,
                frames: 0,
                bytes: 0,
            },
            resource_log: Vec::new(),
            last_health: HealthStatus::Healthy,
            next_heartbeat: VirtualTime(NANOS_PER_SEC),
        })
    }

    /// Tick spacing that lands on every rate group boundary.
    pub fn tick_quantum(&self) -> VirtualTime {
        self.scheduler.quantum()
    }

    pub fn last_tick(&self) -> VirtualTime {
        self.scheduler.last_tick()
    }

    /// Queues a datagram for the next `BridgeRx` activation.
    pub fn enqueue_frame(&mut self, bytes: Vec<u8>) {
        self.inbound.push_back(bytes);
    }

    /// Queues a ground command for dispatch at the first tick at or after `at`.
    pub fn schedule_command(&mut self, at: VirtualTime, cmd: Command) {
        let pos = self.script.partition_point(|(t, _)| *t <= at);
        self.script.insert(pos, (at, cmd));
    }

    /// Registers the command with the dispatcher and queues its frame.
    pub fn dispatch_command(&mut self, mut cmd: Command, now: VirtualTime) -> Result<(), CoreError> {
        cmd.issued_at = now.as_secs_f64();
        self.dispatcher.dispatch(&cmd)?;
        let id = cmd.id;
        self.send(Message::Command(cmd), now)?;
        self.events.push(CoreEvent::CommandSent { id, at: now });
        Ok(())
    }

    pub fn watch(&mut self, component: &str, now: VirtualTime) {
        self.health.register(component, now);
    }

    pub fn unwatch(&mut self, component: &str) {
        self.health.deregister(component);
    }

    pub fn tick(&mut self, now: VirtualTime) -> Result<(), CoreError> {
        let activations = self.scheduler.tick(now)?;
        for act in activations {
            match act.component {
                Component::BridgeRx => self.run_bridge_rx(now)?,
                Component::CommandDispatch => self.run_command_dispatch(now)?,
                Component::HealthCheck => self.run_health_check(now)?,
                Component::ResourceMonitor => self.run_resource_monitor(now)?,
            }
        }
        Ok(())
    }

    fn send(&mut self, msg: Message, now: VirtualTime) -> Result<(), CoreError> {
        let frame = self.sequencer.encode(&msg, now.as_nanos())?;
        self.resources.frames += 1;
        self.resources.bytes += frame.len() as u64;
        self.outbound.push(frame);
        Ok(())
    }

    fn run_bridge_rx(&mut self, now: VirtualTime) -> Result<(), CoreError> {
        let t = now.as_secs_f64();
        while let Some(bytes) = self.inbound.pop_front() {
            self.resources.frames += 1;
            self.resources.bytes += bytes.len() as u64;
            let (frame, msg) = match decode_message(&bytes) {
                Ok(ok) => ok,
                Err(e) => {
                    self.events.push(CoreEvent::DecodeError {
                        at: now,
                        error: e.to_string(),
                    });
                    continue;
                }
            };
            self.bridge_stats.record(&frame, now.as_nanos());
            match msg {
                Message::PoseTelemetry { position, orientation } => {
                    let sample_t = VirtualTime(frame.header.send_time_ns).as_secs_f64();
                    let pose = PoseSample::new(sample_t, position, orientation);
                    self.telemetry.record("vision.pose", TlmValue::Pose(pose), t)?;
                    self.health.ping(VISION_LINK, now);
                }
                Message::CommandAck(ack) => match self.dispatcher.settle(&ack) {
                    Ok(_) => self.events.push(CoreEvent::AckSettled { ack, at: now }),
                    Err(_) => self.events.push(CoreEvent::UnexpectedAck {
                        id: ack.command_id,
                        at: now,
                    }),
                },
                Message::FlightState(s) => {
                    let db = &mut self.telemetry;
                    db.record("autopilot.mode", TlmValue::Scalar(f64::from(s.mode.code())), t)?;
                    db.record("autopilot.armed", TlmValue::Scalar(f64::from(u8::from(s.armed))), t)?;
                    for (ch, v) in ["autopilot.x", "autopilot.y", "autopilot.z"].iter().zip(s.position) {
                        db.record(ch, TlmValue::Scalar(v), t)?;
                    }
                    db.record("autopilot.yaw_deg", TlmValue::Scalar(s.yaw_deg), t)?;
                    self.health.ping(AUTOPILOT_LINK, now);
                }
                // Downlink-only types are not expected inbound; counted in stats only.
                Message::Command(_) | Message::Health(_) | Message::Resource(_) => {}
            }
        }
        let freshness = self.bridge_stats.total().freshness_pct;
        self.telemetry
            .record("bridge.freshness_pct", TlmValue::Scalar(freshness), t)?;
        Ok(())
    }

    fn run_command_dispatch(&mut self, now: VirtualTime) -> Result<(), CoreError> {
        while self.script.front().is_some_and(|(at, _)| *at <= now) {
            let (_, cmd) = self.script.pop_front().expect("front checked");
            self.dispatch_command(cmd, now)?;
        }
        for id in self.dispatcher.expire(now) {
            self.events.push(CoreEvent::CommandTimedOut { id, at: now });
        }
        if let Some(rate) = self.dispatcher.counts().success_rate_pct() {
            self.telemetry
                .record("cmd.success_rate_pct", TlmValue::Scalar(rate), now.as_secs_f64())?;
        }
        Ok(())
    }

    fn run_health_check(&mut self, now: VirtualTime) -> Result<(), CoreError> {
        let transitions = self.health.check(now);
        let overall = self.health.overall();
        self.events.extend(transitions.into_iter().map(CoreEvent::Health));
        self.telemetry.record(
            "health.overall",
            TlmValue::Scalar(f64::from(overall.code())),
            now.as_secs_f64(),
        )?;
        if overall != self.last_health || now >= self.next_heartbeat {
            self.last_health = overall;
            while self.next_heartbeat <= now {
                self.next_heartbeat = self.next_heartbeat + VirtualTime(NANOS_PER_SEC);
            }
            self.send(Message::Health(overall), now)?;
        }
        Ok(())
    }

    fn run_resource_monitor(&mut self, now: VirtualTime) -> Result<(), CoreError> {
        if now >= self.resources.next_sample {
            let sample = self.resources.sample(now);
            let period = VirtualTime::from_secs_f64(self.resources.model.sample_period_s);
            while self.resources.next_sample <= now {
                self.resources.next_sample = self.resources.next_sample + period;
            }
            self.resource_log.push(sample);
            self.send(Message::Resource(sample), now)?;
        }
        Ok(())
    }

    pub fn take_outbound(&mut self) -> Vec<Vec<u8>> {
        std::mem::take(&mut self.outbound)
    }

    pub fn take_events(&mut self) -> Vec<CoreEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn resource_log(&self) -> &[ResourceSample] {
        &self.resource_log
    }

    pub fn dispatcher(&self) -> &Dispatcher {
        &self.dispatcher
    }

    pub fn bridge_stats(&self) -> &BridgeStats {
        &self.bridge_stats
    }

    pub fn telemetry(&self) -> &TelemetryDb {
        &self.telemetry
    }

    pub fn health(&self) -> &HealthMonitor {
        &self.health
    }

    pub fn scheduler(&self) -> &Scheduler<Component> {
        &self.scheduler
    }

    pub fn pending_script(&self) -> usize {
        self.script.len()
    }
}
