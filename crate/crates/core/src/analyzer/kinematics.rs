use serde::Serialize;

use super::logs::VisionLog;
use super::AnalyzerError;

/// A vector quantity sampled at interior points of its source series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinematicSeries {
    pub t: Vec<f64>,
    pub values: Vec<[f64; 3]>,
}

impl KinematicSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .collect()
    }
}

/// Centered difference `(x[i+1] - x[i-1]) / (t[i+1] - t[i-1])`, which on a
/// non-uniform grid uses the mean of the two neighbouring spans.
pub fn centered_difference(t: &[f64], x: &[[f64; 3]]) -> Result<KinematicSeries, AnalyzerError> {
    let n = t.len().min(x.len());
    if n < 3 {
        return Err(AnalyzerError::TooFewSamples { needed: 3, got: n });
    }
    let mut out = KinematicSeries {
        t: Vec::with_capacity(n - 2),
        values: Vec::with_capacity(n - 2),
    };
    for i in 1..n - 1 {
        let span = t[i + 1] - t[i - 1];
        out.t.push(t[i]);
        out.values
            .push(std::array::from_fn(|k| (x[i + 1][k] - x[i - 1][k]) / span));
    }
    Ok(out)
}

pub fn finite_diff_velocity(log: &VisionLog) -> Result<KinematicSeries, AnalyzerError> {
    let positions: Vec<[f64; 3]> = log.samples.iter().map(|s| s.position).collect();
    centered_difference(&log.times(), &positions)
}

pub fn finite_diff_accel(velocity: &KinematicSeries) -> Result<KinematicSeries, AnalyzerError> {
    centered_difference(&velocity.t, &velocity.values)
}
