use thiserror::Error;

use crate::model::PoseSample;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TelemetryError {
    #[error("unknown telemetry channel {0:?}")]
    UnknownChannel(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TlmValue {
    Scalar(f64),
    Pose(PoseSample),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlmEntry {
    pub value: TlmValue,
    pub updated_at: f64,
}

/// Latest-value store over a channel set fixed at construction.
#[derive(Debug, Clone)]
pub struct TelemetryDb {
    names: Box<[&'static str]>,
    slots: Box<[Option<TlmEntry>]>,
}

impl TelemetryDb {
    pub fn new(channels: &[&'static str]) -> Self {
        Self {
            names: channels.into(),
            slots: vec![None; channels.len()].into_boxed_slice(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    fn index(&self, channel: &str) -> Result<usize, TelemetryError> {
        self.names
            .iter()
            .position(|n| *n == channel)
            .ok_or_else(|| TelemetryError::UnknownChannel(channel.to_string()))
    }

    pub fn record(&mut self, channel: &str, value: TlmValue, t: f64) -> Result<(), TelemetryError> {
        let i = self.index(channel)?;
        self.slots[i] = Some(TlmEntry { value, updated_at: t });
        Ok(())
    }

    pub fn read(&self, channel: &str) -> Result<Option<TlmEntry>, TelemetryError> {
        Ok(self.slots[self.index(channel)?])
    }

    pub fn scalar(&self, channel: &str) -> Option<f64> {
        match self.read(channel).ok()??.value {
            TlmValue::Scalar(v) => Some(v),
            TlmValue::Pose(_) => None,
        }
    }

    pub fn channels(&self) -> &[&'static str] {
        &self.names
    }
}
