use std::fs::{self, File};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MissionConfig, MissionError};
use crate::analyzer::{
    write_mission_log, write_resource_log, write_vision_log, ChannelCounts, CommandSummary, CoreStats,
};
use crate::autopilot::{Autopilot, MissionEntry};
use crate::bridge::{LinkCounters, Message, Sequencer, SimLink, Transport};
use crate::flight_core::{CoreEvent, FlightCore, FlightCoreConfig, VISION_LINK};
use crate::model::{PoseSample, ResourceSample};
use crate::perception::{Bus, QosPolicy, VisionSource, TOPIC_FC_STATE, TOPIC_VISION_POSE};
use crate::time::VirtualTime;

pub const VISION_LOG_FILE: &str = "vision_pose_log.csv";
pub const MISSION_LOG_FILE: &str = "mission_log.csv";
pub const RESOURCE_LOG_FILE: &str = "resource_log.csv";
pub const CORE_STATS_FILE: &str = "core_stats.json";

#[derive(Debug, Clone, PartialEq)]
pub struct MissionOutput {
    pub vision_log: Vec<PoseSample>,
    pub mission_log: Vec<MissionEntry>,
    pub resource_log: Vec<ResourceSample>,
    pub core_stats: CoreStats,
    pub uplink: LinkCounters,
    pub downlink: LinkCounters,
}

#[derive(Debug, Clone)]
enum BusMsg {
    Pose(PoseSample),
    Entry(MissionEntry),
}

fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Runs the whole mission on the virtual clock.
///
/// Per instant: vision poll, downlink delivery to the autopilot, autopilot
/// step, bus routing (loggers and the pose bridge), then the flight-core
/// tick which drains the uplink and sends on the downlink.
pub fn run_mission(cfg: &MissionConfig) -> Result<MissionOutput, MissionError> {
    cfg.validate()?;
    let end = VirtualTime::from_secs_f64(cfg.duration_s);

    let mut vision_cfg = cfg.vision.clone();
    vision_cfg.seed ^= derive_seed(cfg.seed, 1);
    let mut vision = VisionSource::new(&vision_cfg, cfg.trajectory.clone(), end)?;
    let (window_start, window_end) = vision.window();

    let mut core = FlightCore::new(&FlightCoreConfig {
        rate_group_periods_ms: cfg.rate_groups.clone(),
        resources: cfg.resources,
        seed: derive_seed(cfg.seed, 2),
        ..FlightCoreConfig::default()
    })?;
    for (t, cmd) in cfg.commands()? {
        core.schedule_command(VirtualTime::from_secs_f64(t), cmd);
    }
    let mut uplink = SimLink::new(cfg.transport, derive_seed(cfg.seed, 3));
    let mut downlink = SimLink::new(cfg.transport, derive_seed(cfg.seed, 4));
    let mut autopilot = Autopilot::new(cfg.autopilot, VirtualTime::ZERO);

    let mut bus: Bus<BusMsg> = Bus::new();
    let vision_logger = bus.subscribe(TOPIC_VISION_POSE, QosPolicy::reliable(64));
    let pose_bridge = bus.subscribe(TOPIC_VISION_POSE, QosPolicy::best_effort(8));
    let mission_logger = bus.subscribe(TOPIC_FC_STATE, QosPolicy::reliable(64));
    let mut pose_seq = Sequencer::new();

    let quantum = core.tick_quantum();
    let mut next_tick = quantum;
    let mut watching_vision = false;
    let mut vision_done = false;
    let mut decode_errors = 0u64;

    let mut vision_log = Vec::new();
    let mut mission_log = Vec::new();

    loop {
        let now = [
            vision.next_due(),
            downlink.next_arrival(),
            Some(autopilot.next_step()),
            Some(next_tick),
        ]
        .into_iter()
        .flatten()
        .min()
        .expect("tick is always pending");
        if now > end {
            break;
        }

        if !watching_vision && !vision_done && now >= window_start {
            core.watch(VISION_LINK, now);
            watching_vision = true;
        }
        if watching_vision && now >= window_end {
            core.unwatch(VISION_LINK);
            watching_vision = false;
            vision_done = true;
        }

        for sample in vision.poll(now) {
            bus.publish(TOPIC_VISION_POSE, BusMsg::Pose(sample));
        }

        while let Some(bytes) = downlink.recv(now)? {
            for reply in autopilot.on_frame(&bytes, now)? {
                uplink.send(reply, now)?;
            }
        }
        if now >= autopilot.next_step() {
            let state = autopilot.step(now)?;
            uplink.send(state, now)?;
        }
        for entry in autopilot.take_entries() {
            bus.publish(TOPIC_FC_STATE, BusMsg::Entry(entry));
        }

        for d in bus.route() {
            match d.message {
                BusMsg::Pose(p) if d.subscription == vision_logger => vision_log.push(p),
                BusMsg::Pose(p) if d.subscription == pose_bridge => {
                    let msg = Message::PoseTelemetry {
                        position: p.position,
                        orientation: p.orientation,
                    };
                    let send_ns = VirtualTime::from_secs_f64(p.t).as_nanos();
                    uplink.send(pose_seq.encode(&msg, send_ns)?, now)?;
                }
                BusMsg::Entry(e) if d.subscription == mission_logger => mission_log.push(e),
                _ => {}
            }
        }

        if now >= next_tick {
            while let Some(bytes) = uplink.recv(now)? {
                core.enqueue_frame(bytes);
            }
            core.tick(now)?;
            for frame in core.take_outbound() {
                downlink.send(frame, now)?;
            }
            decode_errors += core
                .take_events()
                .iter()
                .filter(|e| matches!(e, CoreEvent::DecodeError { .. }))
                .count() as u64;
            next_tick = next_tick + quantum;
        }
    }

    autopilot.finish(end);
    for entry in autopilot.take_entries() {
        bus.publish(TOPIC_FC_STATE, BusMsg::Entry(entry));
    }
    loop {
        let deliveries = bus.route();
        if deliveries.is_empty() {
            break;
        }
        for d in deliveries {
            match d.message {
                BusMsg::Pose(p) if d.subscription == vision_logger => vision_log.push(p),
                BusMsg::Entry(e) if d.subscription == mission_logger => mission_log.push(e),
                _ => {}
            }
        }
    }

    let counts = core.dispatcher().counts();
    let stats = core.bridge_stats();
    let core_stats = CoreStats {
        commands: CommandSummary::new(counts.sent, counts.succeeded, counts.rejected, counts.timed_out),
        freshness_pct: stats.total().freshness_pct,
        channels: stats
            .channels()
            .map(|(t, c)| {
                (
                    t.as_str().to_string(),
                    ChannelCounts {
                        received: c.received,
                        fresh: c.fresh,
                        stale_superseded: c.stale_superseded,
                        stale_aged: c.stale_aged,
                    },
                )
            })
            .collect(),
        decode_errors,
    };

    Ok(MissionOutput {
        vision_log,
        mission_log,
        resource_log: core.resource_log().to_vec(),
        core_stats,
        uplink: uplink.counters(),
        downlink: downlink.counters(),
    })
}

/// Writes the three CSV logs and `core_stats.json` into `dir`.
pub fn write_outputs(out: &MissionOutput, dir: &Path) -> Result<(), MissionError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| MissionError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let create = |name: &str| {
        let p = dir.join(name);
        File::create(&p).map_err(io(&p)).map(|f| (f, p))
    };
    let (f, p) = create(VISION_LOG_FILE)?;
    write_vision_log(f, &out.vision_log).map_err(io(&p))?;
    let (f, p) = create(MISSION_LOG_FILE)?;
    write_mission_log(f, &out.mission_log).map_err(io(&p))?;
    let (f, p) = create(RESOURCE_LOG_FILE)?;
    write_resource_log(f, &out.resource_log).map_err(io(&p))?;
    let p = dir.join(CORE_STATS_FILE);
    let mut json = serde_json::to_string_pretty(&out.core_stats).expect("stats serialize");
    json.push('\n');
    fs::write(&p, json).map_err(io(&p))?;
    Ok(())
}
