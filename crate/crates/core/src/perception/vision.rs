//! Simulated motion-capture pose source.
//!
//! Nominal sample instants sit on a fixed grid; each instant is perturbed by
//! Gaussian jitter (clamped to stay strictly increasing), then dropped with a
//! per-sample Bernoulli draw. Blocking windows model a stalled logging
//! thread: every instant strictly inside a window is lost, and one sample is
//! emitted at the moment the window ends.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trajectory::{Trajectory, TrajectoryError};
use crate::model::{EulerAngles, PoseSample, Quaternion};
use crate::time::{VirtualTime, NANOS_PER_SEC};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisionConfigError {
    #[error("nominal_rate_hz must be positive and finite")]
    BadRate,
    #[error("{0} must be finite and non-negative")]
    Negative(&'static str),
    #[error("drop_prob must be within [0, 1)")]
    BadDropProb,
    #[error("gap windows must be sorted, non-overlapping and of positive duration (index {0})")]
    BadGap(usize),
    #[error("active window must satisfy start < end")]
    BadWindow,
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapWindow {
    pub start_s: f64,
    pub duration_s: f64,
}

impl GapWindow {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VisionSourceConfig {
    pub nominal_rate_hz: f64,
    pub jitter_std_ms: f64,
    pub drop_prob: f64,
    pub gap_schedule: Vec<GapWindow>,
    pub seed: u64,
    /// Emission span `[start, end)` in mission seconds; whole mission when absent.
    pub active_window_s: Option<[f64; 2]>,
    /// Std of zero-mean roll and pitch noise added to the trajectory attitude.
    pub attitude_noise_deg: f64,
}

impl Default for VisionSourceConfig {
    fn default() -> Self {
        Self {
            nominal_rate_hz: 100.0,
            jitter_std_ms: 0.0,
            drop_prob: 0.0,
            gap_schedule: Vec::new(),
            seed: 0,
            active_window_s: None,
            attitude_noise_deg: 0.0,
        }
    }
}

impl VisionSourceConfig {
    pub fn validate(&self) -> Result<(), VisionConfigError> {
        if !(self.nominal_rate_hz.is_finite() && self.nominal_rate_hz > 0.0) {
            return Err(VisionConfigError::BadRate);
        }
        if !(self.jitter_std_ms.is_finite() && self.jitter_std_ms >= 0.0) {
            return Err(VisionConfigError::Negative("jitter_std_ms"));
        }
        if !(self.attitude_noise_deg.is_finite() && self.attitude_noise_deg >= 0.0) {
            return Err(VisionConfigError::Negative("attitude_noise_deg"));
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(VisionConfigError::BadDropProb);
        }
        let mut prev_end = f64::NEG_INFINITY;
        for (i, g) in self.gap_schedule.iter().enumerate() {
            if !(g.start_s.is_finite() && g.duration_s.is_finite() && g.duration_s > 0.0 && g.start_s >= prev_end) {
                return Err(VisionConfigError::BadGap(i));
            }
            prev_end = g.end_s();
        }
        if let Some([a, b]) = self.active_window_s {
            if !(a.is_finite() && b.is_finite() && a >= 0.0 && a < b) {
                return Err(VisionConfigError::BadWindow);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Gap {
    start: VirtualTime,
    end: VirtualTime,
}

pub struct VisionSource {
    trajectory: Trajectory,
    period_ns: u64,
    window_start: VirtualTime,
    window_end: VirtualTime,
    jitter: Option<Normal<f64>>,
    attitude: Option<Normal<f64>>,
    drop_prob: f64,
    gaps: Vec<Gap>,
    /// Window ends still owed a resume sample, ascending.
    resumes: VecDeque<VirtualTime>,
    rng: ChaCha8Rng,
    next_index: u64,
    next_regular: Option<VirtualTime>,
    last_instant: Option<VirtualTime>,
    emitted: u64,
}

impl VisionSource {
    /// `mission_end` bounds emission when the config has no active window.
    pub fn new(
        cfg: &VisionSourceConfig,
        trajectory: Trajectory,
        mission_end: VirtualTime,
    ) -> Result<Self, VisionConfigError> {
        cfg.validate()?;
        trajectory.validate()?;
        let (window_start, window_end) = match cfg.active_window_s {
            Some([a, b]) => (
                VirtualTime::from_secs_f64(a),
                VirtualTime::from_secs_f64(b).min(mission_end),
            ),
            None => (VirtualTime::ZERO, mission_end),
        };
        let jitter = (cfg.jitter_std_ms > 0.0).then(|| Normal::new(0.0, cfg.jitter_std_ms * 1e6).expect("validated"));
        let attitude =
            (cfg.attitude_noise_deg > 0.0).then(|| Normal::new(0.0, cfg.attitude_noise_deg).expect("validated"));
        let gaps: Vec<Gap> = cfg
            .gap_schedule
            .iter()
            .map(|g| Gap {
                start: VirtualTime::from_secs_f64(g.start_s),
                end: VirtualTime::from_secs_f64(g.end_s()),
            })
            .collect();
        let resumes = gaps
            .iter()
            .map(|g| g.end)
            .filter(|end| *end >= window_start && *end < window_end)
            .collect();
        let mut src = Self {
            trajectory,
            period_ns: (NANOS_PER_SEC as f64 / cfg.nominal_rate_hz).round() as u64,
            window_start,
            window_end,
            jitter,
            attitude,
            drop_prob: cfg.drop_prob,
            gaps,
            resumes,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            next_index: 0,
            next_regular: None,
            last_instant: None,
            emitted: 0,
        };
        src.next_regular = src.draw_instant();
        Ok(src)
    }

    fn draw_instant(&mut self) -> Option<VirtualTime> {
        let nominal = self.window_start.0 as i128 + self.next_index as i128 * self.period_ns as i128;
        self.next_index += 1;
        let offset = self.jitter.map_or(0.0, |n| n.sample(&mut self.rng)).round() as i128;
        let floor = match self.last_instant {
            Some(t) => t.0 as i128 + 1,
            None => self.window_start.0 as i128,
        };
        let instant = VirtualTime((nominal + offset).max(floor) as u64);
        self.last_instant = Some(instant);
        (instant < self.window_end).then_some(instant)
    }

    /// Time of the next instant to process, if the source is not exhausted.
    pub fn next_due(&self) -> Option<VirtualTime> {
        match (self.next_regular, self.resumes.front().copied()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn in_gap(&self, t: VirtualTime) -> bool {
        self.gaps.iter().any(|g| g.start < t && t < g.end)
    }

    fn sample_at(&mut self, t: VirtualTime) -> PoseSample {
        let secs = t.as_secs_f64();
        let (position, yaw) = self
            .trajectory
            .position_yaw(secs)
            .expect("trajectory covers the active window (checked by mission config)");
        let orientation = match self.attitude {
            Some(n) => {
                let roll = n.sample(&mut self.rng);
                let pitch = n.sample(&mut self.rng);
                Quaternion::from_euler(EulerAngles::new(roll, pitch, yaw))
            }
            None => Quaternion::from_yaw_deg(yaw),
        };
        self.emitted += 1;
        PoseSample::new(secs, position, orientation)
    }

    /// Processes the earliest instant at or before `now`. Returns `None` when
    /// nothing is due or the due instant was suppressed (gap or drop).
    pub fn vision_step(&mut self, now: VirtualTime) -> Option<PoseSample> {
        let due = self.next_due().filter(|t| *t <= now)?;

        // Resume samples go first; they are skipped when a regular instant
        // lands on the same nanosecond.
        if self.resumes.front() == Some(&due) {
            self.resumes.pop_front();
            if self.next_regular != Some(due) {
                return Some(self.sample_at(due));
            }
            return None;
        }

        let t = self.next_regular.expect("due instant is regular");
        self.next_regular = self.draw_instant();
        let dropped = self.rng.random::<f64>() < self.drop_prob;
        if self.in_gap(t) || dropped {
            return None;
        }
        Some(self.sample_at(t))
    }

    /// Drains every instant due at or before `now`.
    pub fn poll(&mut self, now: VirtualTime) -> Vec<PoseSample> {
        let mut out = Vec::new();
        while self.next_due().is_some_and(|t| t <= now) {
            if let Some(s) = self.vision_step(now) {
                out.push(s);
            }
        }
        out
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn window(&self) -> (VirtualTime, VirtualTime) {
        (self.window_start, self.window_end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(cfg: VisionSourceConfig, end_s: f64) -> VisionSource {
        let traj = Trajectory::hover([0.0, 0.0, 1.0], 0.0, 0.0, end_s + 1.0);
        VisionSource::new(&cfg, traj, VirtualTime::from_secs_f64(end_s)).unwrap()
    }

    #[test]
    fn clean_stream_is_on_grid() {
        let mut src = source(VisionSourceConfig::default(), 1.0);
        let samples = src.poll(VirtualTime::from_secs_f64(1.0));
        assert_eq!(samples.len(), 100);
        for (k, s) in samples.iter().enumerate() {
            assert_eq!(VirtualTime::from_secs_f64(s.t), VirtualTime::from_millis(10 * k as u64));
        }
    }

    #[test]
    fn blocking_window_spans_exact_duration() {
        let cfg = VisionSourceConfig {
            gap_schedule: vec![GapWindow {
                start_s: 171.5,
                duration_s: 8.1248,
            }],
            ..VisionSourceConfig::default()
        };
        let mut src = source(cfg, 185.0);
        let samples = src.poll(VirtualTime::from_secs_f64(185.0));
        let times: Vec<VirtualTime> = samples.iter().map(|s| VirtualTime::from_secs_f64(s.t)).collect();
        let max_gap = times.windows(2).map(|w| w[1] - w[0]).max().unwrap();
        assert_eq!(max_gap, VirtualTime::from_nanos(8_124_800_000));
        assert!(times
            .iter()
            .all(|t| !(*t > VirtualTime::from_millis(171_500) && *t < VirtualTime::from_nanos(179_624_800_000))));
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = VisionSourceConfig {
            jitter_std_ms: 2.0,
            drop_prob: 0.1,
            seed: 77,
            attitude_noise_deg: 10.0,
            ..VisionSourceConfig::default()
        };
        let a = source(cfg.clone(), 5.0).poll(VirtualTime::from_secs_f64(5.0));
        let b = source(cfg, 5.0).poll(VirtualTime::from_secs_f64(5.0));
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn active_window_bounds_emission() {
        let cfg = VisionSourceConfig {
            active_window_s: Some([2.0, 3.0]),
            ..VisionSourceConfig::default()
        };
        let samples = source(cfg, 10.0).poll(VirtualTime::from_secs_f64(10.0));
        assert_eq!(samples.len(), 100);
        assert_eq!(samples[0].t, 2.0);
    }

    #[test]
    fn rejects_overlapping_gaps() {
        let cfg = VisionSourceConfig {
            gap_schedule: vec![
                GapWindow {
                    start_s: 1.0,
                    duration_s: 1.0,
                },
                GapWindow {
                    start_s: 1.5,
                    duration_s: 1.0,
                },
            ],
            ..VisionSourceConfig::default()
        };
        assert_eq!(cfg.validate(), Err(VisionConfigError::BadGap(1)));
    }
}
