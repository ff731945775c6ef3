use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::logs::{MissionLog, ResourceLog, VisionLog};
use super::timing::{mean, population_std, GapPhase, GapRecord};
use super::AnalyzerError;
use crate::model::{quat_to_euler, AckStatus, FlightMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl AxisStats {
    pub fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            std: population_std(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn circular_deg(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let (s, c) = values.iter().fold((0.0, 0.0), |(s, c), v| {
            let (vs, vc) = v.to_radians().sin_cos();
            (s + vs, c + vc)
        });
        let (s, c) = (s / n, c / n);
        let r = (s * s + c * c).sqrt().min(1.0);
        let std = if r > 0.0 {
            (-2.0 * r.ln()).sqrt().to_degrees()
        } else {
            f64::INFINITY
        };
        Self {
            mean: s.atan2(c).to_degrees(),
            std,
            ..Self::of(values)
        }
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositionStats {
    pub x: AxisStats,
    pub y: AxisStats,
    pub z: AxisStats,
    /// Larger of the x and y extents, m.
    pub horizontal_range_m: f64,
    pub vertical_range_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientationStats {
    pub roll: AxisStats,
    pub pitch: AxisStats,
    pub yaw: AxisStats,
    pub circular_yaw: bool,
}

/// Per-axis position statistics in metres and Euler-angle statistics in
/// degrees. Yaw uses plain arithmetic unless `circular_yaw` is set.
pub fn pose_statistics(
    log: &VisionLog,
    circular_yaw: bool,
) -> Result<(PositionStats, OrientationStats), AnalyzerError> {
    if log.is_empty() {
        return Err(AnalyzerError::EmptyLog);
    }
    let axis = |k: usize| AxisStats::of(&log.samples.iter().map(|s| s.position[k]).collect::<Vec<_>>());
    let (x, y, z) = (axis(0), axis(1), axis(2));
    let mut roll = Vec::with_capacity(log.len());
    let mut pitch = Vec::with_capacity(log.len());
    let mut yaw = Vec::with_capacity(log.len());
    for s in &log.samples {
        let e = quat_to_euler(s.orientation)?;
        roll.push(e.roll);
        pitch.push(e.pitch);
        yaw.push(e.yaw);
    }
    let position = PositionStats {
        x,
        y,
        z,
        horizontal_range_m: x.range().max(y.range()),
        vertical_range_m: z.range(),
    };
    let orientation = OrientationStats {
        roll: AxisStats::of(&roll),
        pitch: AxisStats::of(&pitch),
        yaw: if circular_yaw {
            AxisStats::circular_deg(&yaw)
        } else {
            AxisStats::of(&yaw)
        },
        circular_yaw,
    };
    Ok((position, orientation))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeShare {
    pub mode: FlightMode,
    pub count: u64,
    /// Percentage at one decimal place; all shares sum to exactly 100.0.
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDistribution {
    pub total: u64,
    pub modes: Vec<ModeShare>,
}

impl ModeDistribution {
    pub fn pct(&self, mode: FlightMode) -> f64 {
        self.modes.iter().find(|m| m.mode == mode).map_or(0.0, |m| m.pct)
    }
}

/// Largest-remainder rounding of `counts` to tenths of a percent.
pub fn round_shares(counts: &[u64]) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let mut tenths: Vec<u64> = counts.iter().map(|c| c * 1000 / total).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(counts[i] * 1000 % total));
    let missing = 1000 - tenths.iter().sum::<u64>();
    for &i in order.iter().take(missing as usize) {
        tenths[i] += 1;
    }
    tenths
}

pub fn mode_distribution(mission: &MissionLog) -> Result<ModeDistribution, AnalyzerError> {
    if mission.is_empty() {
        return Err(AnalyzerError::EmptyLog);
    }
    let mut counts: BTreeMap<FlightMode, u64> = FlightMode::ALL.iter().map(|m| (*m, 0)).collect();
    for e in &mission.entries {
        *counts.entry(e.mode).or_default() += 1;
    }
    let modes: Vec<FlightMode> = FlightMode::ALL.to_vec();
    let raw: Vec<u64> = modes.iter().map(|m| counts[m]).collect();
    let tenths = round_shares(&raw);
    Ok(ModeDistribution {
        total: mission.len() as u64,
        modes: modes
            .into_iter()
            .zip(raw)
            .zip(tenths)
            .map(|((mode, count), t)| ModeShare {
                mode,
                count,
                pct: t as f64 / 10.0,
            })
            .collect(),
    })
}

/// Offset (s) between the first mission entry and the first vision sample,
/// both in their source time bases. Loaded logs are already rebased onto
/// their own first timestamp, so joins compare relative times directly.
pub fn align_streams(vision: &VisionLog, mission: &MissionLog) -> Result<f64, AnalyzerError> {
    if vision.is_empty() || mission.is_empty() {
        return Err(AnalyzerError::EmptyLog);
    }
    Ok((mission.origin_s + mission.entries[0].t) - (vision.origin_s + vision.samples[0].t))
}

/// Mode of the latest mission entry at or before the end of the gap.
pub fn attribute_gap_phase(gap: &GapRecord, mission: &MissionLog) -> GapPhase {
    let idx = mission.entries.partition_point(|e| e.t <= gap.t);
    match idx {
        0 => GapPhase::Unknown,
        i => GapPhase::Mode(mission.entries[i - 1].mode),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceSummary {
    pub samples: usize,
    pub cpu_mean_pct: f64,
    pub cpu_peak_pct: f64,
    pub mem_mean_mb: f64,
    pub mem_peak_mb: f64,
    pub bandwidth_mean_kbps: f64,
    pub bandwidth_peak_kbps: f64,
}

pub fn resource_summary(log: &ResourceLog) -> Result<ResourceSummary, AnalyzerError> {
    if log.samples.is_empty() {
        return Err(AnalyzerError::EmptyLog);
    }
    let col = |f: fn(&crate::model::ResourceSample) -> f64| log.samples.iter().map(f).collect::<Vec<_>>();
    let peak = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (cpu, mem, bw) = (col(|s| s.cpu_pct), col(|s| s.mem_mb), col(|s| s.bandwidth_kbps));
    Ok(ResourceSummary {
        samples: log.samples.len(),
        cpu_mean_pct: mean(&cpu),
        cpu_peak_pct: peak(&cpu),
        mem_mean_mb: mean(&mem),
        mem_peak_mb: peak(&mem),
        bandwidth_mean_kbps: mean(&bw),
        bandwidth_peak_kbps: peak(&bw),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandSummary {
    pub sent: u64,
    pub succeeded: u64,
    pub rejected: u64,
    pub timed_out: u64,
    pub success_rate_pct: Option<f64>,
}

impl CommandSummary {
    pub fn new(sent: u64, succeeded: u64, rejected: u64, timed_out: u64) -> Self {
        Self {
            sent,
            succeeded,
            rejected,
            timed_out,
            success_rate_pct: (sent > 0).then(|| 100.0 * succeeded as f64 / sent as f64),
        }
    }

    /// Counts reconstructed from acknowledgment rows; one per command id,
    /// last status wins.
    pub fn from_mission_log(mission: &MissionLog) -> Self {
        let mut latest: BTreeMap<u32, AckStatus> = BTreeMap::new();
        for (id, status) in mission.entries.iter().filter_map(|e| e.last_ack) {
            latest.insert(id, status);
        }
        let count = |s: AckStatus| latest.values().filter(|v| **v == s).count() as u64;
        Self::new(
            latest.len() as u64,
            count(AckStatus::Success),
            count(AckStatus::Rejected),
            count(AckStatus::Timeout),
        )
    }
}
