use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::logs::{MissionLog, ResourceLog, VisionLog};
use super::stats::{
    align_streams, attribute_gap_phase, mode_distribution, pose_statistics, resource_summary, CommandSummary,
    ModeDistribution, OrientationStats, PositionStats, ResourceSummary,
};
use super::timing::{continuity_and_rate, detect_dropouts, timing_metrics, GapRecord, LatencyHistogram, TimingMetrics};
use super::AnalyzerError;

/// Per-channel bridge counters as exported by the flight core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCounts {
    pub received: u64,
    pub fresh: u64,
    pub stale_superseded: u64,
    pub stale_aged: u64,
}

/// Flight-core counters written next to the logs by a simulated mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreStats {
    pub commands: CommandSummary,
    pub freshness_pct: f64,
    pub channels: BTreeMap<String, ChannelCounts>,
    pub decode_errors: u64,
}

impl CoreStats {
    pub fn read(path: &Path) -> Result<Self, AnalyzerError> {
        let text = fs::read_to_string(path).map_err(|source| AnalyzerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportInputs<'a> {
    pub vision: Option<&'a VisionLog>,
    pub mission: Option<&'a MissionLog>,
    pub resources: Option<&'a ResourceLog>,
    pub core_stats: Option<&'a CoreStats>,
    /// Active window in vision-relative seconds; the log span when absent.
    pub window: Option<(f64, f64)>,
    pub circular_yaw: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionSummary {
    pub duration_s: f64,
    pub vision_samples: usize,
    pub mission_entries: Option<usize>,
    pub resource_samples: Option<usize>,
    pub stream_offset_s: Option<f64>,
    pub commands: Option<CommandSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub mission_summary: MissionSummary,
    pub timing: TimingMetrics,
    pub interval_count: usize,
    pub continuity_pct: f64,
    pub effective_rate_hz: f64,
    pub active_window_s: [f64; 2],
    pub gap_count: usize,
    pub gaps: Vec<GapRecord>,
    pub position_stats: PositionStats,
    pub orientation_stats: OrientationStats,
    pub mode_distribution: Option<ModeDistribution>,
    pub freshness_pct: Option<f64>,
    pub resource_summary: Option<ResourceSummary>,
    pub latency_histogram: LatencyHistogram,
}

pub fn build_report(inputs: &ReportInputs<'_>) -> Result<AnalysisReport, AnalyzerError> {
    let vision = inputs.vision.ok_or(AnalyzerError::EmptyLog)?;
    let (series, timing) = timing_metrics(vision)?;
    let mut gaps = detect_dropouts(&series);
    if let Some(m) = inputs.mission {
        for g in &mut gaps {
            g.phase = attribute_gap_phase(g, m);
        }
    }
    let window = inputs
        .window
        .unwrap_or((vision.samples[0].t, vision.samples[vision.len() - 1].t));
    let (continuity_pct, effective_rate_hz) = continuity_and_rate(vision, &gaps, Some(window))?;
    let (position_stats, orientation_stats) = pose_statistics(vision, inputs.circular_yaw)?;

    let commands = match (inputs.core_stats, inputs.mission) {
        (Some(c), _) => Some(c.commands),
        (None, Some(m)) => Some(CommandSummary::from_mission_log(m)),
        _ => None,
    };
    let mission_span = inputs.mission.and_then(|m| m.entries.last()).map_or(0.0, |e| e.t);
    let mission_summary = MissionSummary {
        duration_s: vision.duration_s().max(mission_span),
        vision_samples: vision.len(),
        mission_entries: inputs.mission.map(MissionLog::len),
        resource_samples: inputs.resources.map(|r| r.samples.len()),
        stream_offset_s: inputs.mission.map(|m| align_streams(vision, m)).transpose()?,
        commands,
    };

    Ok(AnalysisReport {
        mission_summary,
        timing,
        interval_count: series.dts.len(),
        continuity_pct,
        effective_rate_hz,
        active_window_s: [window.0, window.1],
        gap_count: gaps.len(),
        gaps,
        position_stats,
        orientation_stats,
        mode_distribution: inputs.mission.map(mode_distribution).transpose()?,
        freshness_pct: inputs.core_stats.map(|c| c.freshness_pct),
        resource_summary: inputs.resources.map(resource_summary).transpose()?,
        latency_histogram: LatencyHistogram::from_intervals(&series.dts),
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary_line(&self) -> String {
        let success = self
            .mission_summary
            .commands
            .and_then(|c| c.success_rate_pct)
            .map_or("n/a".to_string(), |p| format!("{p:.1}%"));
        format!(
            "duration {:.1} s, {} samples, continuity {:.2}%, success {}",
            self.mission_summary.duration_s, self.mission_summary.vision_samples, self.continuity_pct, success
        )
    }

    /// Writes the JSON report and, when given, the histogram CSV.
    pub fn write(&self, report: &Path, histogram: Option<&Path>) -> Result<(), AnalyzerError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| AnalyzerError::Io { path, source }
        };
        fs::write(report, self.to_json()).map_err(io(report))?;
        if let Some(h) = histogram {
            fs::write(h, self.latency_histogram.to_csv()).map_err(io(h))?;
        }
        Ok(())
    }
}
