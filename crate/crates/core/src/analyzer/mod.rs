//! Offline analysis of mission logs: sampling regularity, dropouts,
//! kinematics, pose and mode statistics, and the combined JSON report.

mod kinematics;
mod logs;
mod report;
mod stats;
mod timing;

use thiserror::Error;

use crate::model::ModelError;

pub use kinematics::{centered_difference, finite_diff_accel, finite_diff_velocity, KinematicSeries};
pub use logs::{
    format_time, load_mission_log, load_resource_log, load_vision_log, read_mission_log, read_resource_log,
    read_vision_log, write_mission_log, write_resource_log, write_vision_log, MissionLog, ResourceLog, VisionLog,
    MISSION_HEADER, RESOURCE_HEADER, VISION_HEADER,
};
pub use report::{build_report, AnalysisReport, ChannelCounts, CoreStats, MissionSummary, ReportInputs};
pub use stats::{
    align_streams, attribute_gap_phase, mode_distribution, pose_statistics, resource_summary, round_shares, AxisStats,
    CommandSummary, ModeDistribution, ModeShare, OrientationStats, PositionStats, ResourceSummary,
};
pub use timing::{
    continuity_and_rate, detect_dropouts, interval_series, mean, nearest_rank, population_std, timing_metrics,
    GapPhase, GapRecord, IntervalSeries, LatencyHistogram, TimingMetrics, HIST_BINS, HIST_BIN_MS,
};

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: duplicate timestamp")]
    DuplicateTimestamp { line: usize },
    #[error("log contains no samples")]
    EmptyLog,
    #[error("active window contains no samples")]
    EmptyWindow,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("core stats: {0}")]
    Json(#[from] serde_json::Error),
}
