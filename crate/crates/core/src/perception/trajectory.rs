use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{wrap_deg, Quaternion};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("t = {t} s is outside the trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("trajectory has no segments")]
    Empty,
    #[error("segment {index}: {reason}")]
    BadSegment { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentKind {
    Hover {
        position: [f64; 3],
        yaw_deg: f64,
    },
    /// Straight line with yaw interpolated linearly along the shortest arc.
    LinearTo {
        from: [f64; 3],
        to: [f64; 3],
        yaw_from_deg: f64,
        yaw_to_deg: f64,
    },
    /// Horizontal circle at constant angular rate. Without `yaw_deg` the
    /// vehicle faces along the direction of travel.
    OrbitAbout {
        center: [f64; 3],
        radius_m: f64,
        start_angle_deg: f64,
        rate_deg_s: f64,
        #[serde(default)]
        yaw_deg: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_s: f64,
    pub end_s: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
}

fn finite3(v: &[f64; 3]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl Trajectory {
    pub fn new(segments: Vec<Segment>) -> Result<Self, TrajectoryError> {
        let t = Self { segments };
        t.validate()?;
        Ok(t)
    }

    pub fn hover(position: [f64; 3], yaw_deg: f64, start_s: f64, end_s: f64) -> Self {
        Self {
            segments: vec![Segment {
                start_s,
                end_s,
                kind: SegmentKind::Hover { position, yaw_deg },
            }],
        }
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.segments.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (index, seg) in self.segments.iter().enumerate() {
            let bad = |reason: &str| TrajectoryError::BadSegment {
                index,
                reason: reason.to_string(),
            };
            if !(seg.start_s.is_finite() && seg.end_s.is_finite() && seg.start_s < seg.end_s) {
                return Err(bad("start_s must be finite and before end_s"));
            }
            if index > 0 && (seg.start_s - self.segments[index - 1].end_s).abs() > 1e-9 {
                return Err(bad("segments must be contiguous in time"));
            }
            let ok = match &seg.kind {
                SegmentKind::Hover { position, yaw_deg } => finite3(position) && yaw_deg.is_finite(),
                SegmentKind::LinearTo {
                    from,
                    to,
                    yaw_from_deg,
                    yaw_to_deg,
                } => finite3(from) && finite3(to) && yaw_from_deg.is_finite() && yaw_to_deg.is_finite(),
                SegmentKind::OrbitAbout {
                    center,
                    radius_m,
                    start_angle_deg,
                    rate_deg_s,
                    yaw_deg,
                } => {
                    finite3(center)
                        && radius_m.is_finite()
                        && *radius_m >= 0.0
                        && start_angle_deg.is_finite()
                        && rate_deg_s.is_finite()
                        && yaw_deg.is_none_or(f64::is_finite)
                }
            };
            if !ok {
                return Err(bad("non-finite or negative parameter"));
            }
        }
        Ok(())
    }

    pub fn start_s(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.start_s)
    }

    pub fn end_s(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end_s)
    }

    /// Position and yaw (degrees) at `t`. A time on a shared boundary belongs
    /// to the later segment.
    pub fn position_yaw(&self, t: f64) -> Result<([f64; 3], f64), TrajectoryError> {
        let (start, end) = (self.start_s(), self.end_s());
        if self.segments.is_empty() || !(t >= start && t <= end) {
            return Err(TrajectoryError::OutOfRange { t, start, end });
        }
        let idx = self.segments.partition_point(|s| s.start_s <= t).saturating_sub(1);
        let seg = &self.segments[idx];
        let elapsed = t - seg.start_s;
        let frac = (elapsed / (seg.end_s - seg.start_s)).clamp(0.0, 1.0);
        Ok(match &seg.kind {
            SegmentKind::Hover { position, yaw_deg } => (*position, wrap_deg(*yaw_deg)),
            SegmentKind::LinearTo {
                from,
                to,
                yaw_from_deg,
                yaw_to_deg,
            } => {
                let p = std::array::from_fn(|i| from[i] + (to[i] - from[i]) * frac);
                let dyaw = wrap_deg(yaw_to_deg - yaw_from_deg);
                (p, wrap_deg(yaw_from_deg + dyaw * frac))
            }
            SegmentKind::OrbitAbout {
                center,
                radius_m,
                start_angle_deg,
                rate_deg_s,
                yaw_deg,
            } => {
                let angle = start_angle_deg + rate_deg_s * elapsed;
                let (s, c) = angle.to_radians().sin_cos();
                let p = [center[0] + radius_m * c, center[1] + radius_m * s, center[2]];
                let heading = yaw_deg.unwrap_or(if *rate_deg_s >= 0.0 { angle + 90.0 } else { angle - 90.0 });
                (p, wrap_deg(heading))
            }
        })
    }
}

/// Pose of the trajectory at `t` with level attitude.
pub fn trajectory_eval(traj: &Trajectory, t: f64) -> Result<([f64; 3], Quaternion), TrajectoryError> {
    let (p, yaw) = traj.position_yaw(t)?;
    Ok((p, Quaternion::from_yaw_deg(yaw)))
}
