use serde::Serialize;

use super::logs::VisionLog;
use super::AnalyzerError;
use crate::model::FlightMode;

/// Consecutive-sample intervals of a vision log.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSeries {
    /// Intervals in ms; `dts[i]` ends at sample `i + 1`.
    pub dts: Vec<f64>,
    /// Time (s) of the sample closing each interval.
    pub end_t: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingMetrics {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub p95: f64,
    pub p99: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// One-based nearest rank `ceil(p/100 * n)` for integer percent `p`.
pub fn nearest_rank(p: u32, n: usize) -> usize {
    let rank = (p as usize * n).div_ceil(100);
    rank.clamp(1, n.max(1))
}

fn percentile_in_place(values: &mut [f64], p: u32) -> f64 {
    let k = nearest_rank(p, values.len()) - 1;
    *values.select_nth_unstable_by(k, f64::total_cmp).1
}

impl TimingMetrics {
    pub fn from_values(values: &[f64]) -> Result<Self, AnalyzerError> {
        if values.is_empty() {
            return Err(AnalyzerError::TooFewSamples { needed: 1, got: 0 });
        }
        let mut work = values.to_vec();
        let n = work.len();
        let median = if n % 2 == 1 {
            *work.select_nth_unstable_by(n / 2, f64::total_cmp).1
        } else {
            let (lower, upper, _) = work.select_nth_unstable_by(n / 2, f64::total_cmp);
            let hi = *upper;
            let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo + hi) / 2.0
        };
        let p95 = percentile_in_place(&mut work, 95);
        let p99 = percentile_in_place(&mut work, 99);
        Ok(Self {
            mean: mean(values),
            median,
            std: population_std(values),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            p95,
            p99,
        })
    }
}

pub fn interval_series(log: &VisionLog) -> Result<IntervalSeries, AnalyzerError> {
    if log.len() < 2 {
        return Err(AnalyzerError::TooFewSamples {
            needed: 2,
            got: log.len(),
        });
    }
    let dts: Vec<f64> = log.samples.windows(2).map(|w| (w[1].t - w[0].t) * 1000.0).collect();
    let end_t = log.samples[1..].iter().map(|s| s.t).collect();
    Ok(IntervalSeries {
        mu: mean(&dts),
        sigma: population_std(&dts),
        dt_min: dts.iter().copied().fold(f64::INFINITY, f64::min),
        dt_max: dts.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        dts,
        end_t,
    })
}

pub fn timing_metrics(log: &VisionLog) -> Result<(IntervalSeries, TimingMetrics), AnalyzerError> {
    let series = interval_series(log)?;
    let metrics = TimingMetrics::from_values(&series.dts)?;
    Ok((series, metrics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPhase {
    Mode(FlightMode),
    Unknown,
}

impl GapPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            GapPhase::Mode(m) => m.as_str(),
            GapPhase::Unknown => "UNKNOWN",
        }
    }
}

impl Serialize for GapPhase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRecord {
    /// Time (s) of the sample that ends the gap.
    pub t: f64,
    pub gap_ms: f64,
    pub effective_hz: f64,
    pub phase: GapPhase,
}

/// Every interval longer than twice the mean, largest first.
pub fn detect_dropouts(series: &IntervalSeries) -> Vec<GapRecord> {
    let threshold = 2.0 * series.mu;
    let mut gaps: Vec<GapRecord> = series
        .dts
        .iter()
        .zip(&series.end_t)
        .filter(|(dt, _)| **dt > threshold)
        .map(|(&gap_ms, &t)| GapRecord {
            t,
            gap_ms,
            effective_hz: 1000.0 / gap_ms,
            phase: GapPhase::Unknown,
        })
        .collect();
    gaps.sort_by(|a, b| b.gap_ms.total_cmp(&a.gap_ms));
    gaps
}

/// Continuity percentage and sample rate over `[t0, t1]`, defaulting to the
/// span of the log. Only samples and gaps inside the window count.
pub fn continuity_and_rate(
    log: &VisionLog,
    gaps: &[GapRecord],
    window: Option<(f64, f64)>,
) -> Result<(f64, f64), AnalyzerError> {
    let (t0, t1) = match window {
        Some(w) => w,
        None => match (log.samples.first(), log.samples.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => return Err(AnalyzerError::EmptyWindow),
        },
    };
    let inside = |t: f64| t >= t0 && t <= t1;
    let samples = log.samples.iter().filter(|s| inside(s.t)).count();
    if t1.partial_cmp(&t0) != Some(std::cmp::Ordering::Greater) || samples == 0 {
        return Err(AnalyzerError::EmptyWindow);
    }
    let gap_count = gaps.iter().filter(|g| inside(g.t)).count();
    let continuity = 100.0 * (1.0 - gap_count as f64 / samples as f64);
    Ok((continuity, samples as f64 / (t1 - t0)))
}

pub const HIST_BIN_MS: f64 = 1.0;
pub const HIST_BINS: usize = 50;

/// Fixed 1 ms bins over [0, 50) ms; longer intervals land in `overflow`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyHistogram {
    pub bin_edges_ms: Vec<f64>,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl LatencyHistogram {
    pub fn from_intervals(dts: &[f64]) -> Self {
        let mut counts = vec![0u64; HIST_BINS];
        let mut overflow = 0;
        for &dt in dts {
            let bin = (dt / HIST_BIN_MS).floor();
            if bin >= 0.0 && (bin as usize) < HIST_BINS {
                counts[bin as usize] += 1;
            } else {
                overflow += 1;
            }
        }
        Self {
            bin_edges_ms: (0..=HIST_BINS).map(|i| i as f64 * HIST_BIN_MS).collect(),
            counts,
            overflow,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    /// Share (%) of all intervals falling in bins that start within `[lo, hi)`.
    pub fn mass_pct(&self, lo_ms: f64, hi_ms: f64) -> f64 {
        let n: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let start = *i as f64 * HIST_BIN_MS;
                start >= lo_ms && start < hi_ms
            })
            .map(|(_, c)| c)
            .sum();
        100.0 * n as f64 / self.total().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start_ms,bin_end_ms,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.bin_edges_ms[i],
                self.bin_edges_ms[i + 1],
                c
            ));
        }
        out.push_str(&format!("{},inf,{}\n", self.bin_edges_ms[HIST_BINS], self.overflow));
        out
    }
}
