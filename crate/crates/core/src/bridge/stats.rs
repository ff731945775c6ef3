//! Per-channel freshness accounting on the receiving side of the bridge.

use std::collections::BTreeMap;

use serde::Serialize;

use super::codec::{BridgeFrame, MsgType};

pub const DEFAULT_STALENESS_THRESHOLD_NS: u64 = 500_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Freshness {
    Fresh,
    /// seq at or below the highest already delivered on the channel.
    StaleSuperseded,
    /// Older than the staleness threshold on arrival.
    StaleAged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStats {
    pub received: u64,
    pub fresh: u64,
    pub stale_superseded: u64,
    pub stale_aged: u64,
    pub staleness_threshold_ns: u64,
    pub freshness_pct: f64,
    #[serde(skip)]
    highest_seq: Option<u32>,
}

impl Default for ChannelStats {
    fn default() -> Self {
        Self::with_threshold(DEFAULT_STALENESS_THRESHOLD_NS)
    }
}

impl ChannelStats {
    pub fn with_threshold(staleness_threshold_ns: u64) -> Self {
        Self {
            received: 0,
            fresh: 0,
            stale_superseded: 0,
            stale_aged: 0,
            staleness_threshold_ns,
            freshness_pct: 100.0,
            highest_seq: None,
        }
    }

    /// Classifies one delivery. Superseded takes precedence over aged.
    pub fn classify(&self, seq: u32, send_time_ns: u64, arrival_time_ns: u64) -> Freshness {
        if self.highest_seq.is_some_and(|h| seq <= h) {
            Freshness::StaleSuperseded
        } else if arrival_time_ns.saturating_sub(send_time_ns) > self.staleness_threshold_ns {
            Freshness::StaleAged
        } else {
            Freshness::Fresh
        }
    }

    pub fn record(&mut self, seq: u32, send_time_ns: u64, arrival_time_ns: u64) -> Freshness {
        let class = self.classify(seq, send_time_ns, arrival_time_ns);
        self.received += 1;
        match class {
            Freshness::Fresh => self.fresh += 1,
            Freshness::StaleSuperseded => self.stale_superseded += 1,
            Freshness::StaleAged => self.stale_aged += 1,
        }
        if class != Freshness::StaleSuperseded {
            self.highest_seq = Some(seq);
        }
        self.freshness_pct = 100.0 * self.fresh as f64 / self.received as f64;
        class
    }

    pub fn stale(&self) -> u64 {
        self.stale_superseded + self.stale_aged
    }
}

/// Functional form of [`ChannelStats::record`].
pub fn update_channel_stats(mut stats: ChannelStats, frame: &BridgeFrame, arrival_time_ns: u64) -> ChannelStats {
    stats.record(frame.header.seq, frame.header.send_time_ns, arrival_time_ns);
    stats
}

/// One [`ChannelStats`] per msg_type.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BridgeStats {
    channels: BTreeMap<MsgType, ChannelStats>,
    #[serde(skip)]
    threshold_ns: Option<u64>,
}

impl BridgeStats {
    pub fn with_threshold(threshold_ns: u64) -> Self {
        Self {
            channels: BTreeMap::new(),
            threshold_ns: Some(threshold_ns),
        }
    }

    pub fn record(&mut self, frame: &BridgeFrame, arrival_time_ns: u64) -> Freshness {
        let threshold = self.threshold_ns.unwrap_or(DEFAULT_STALENESS_THRESHOLD_NS);
        self.channels
            .entry(frame.header.msg_type)
            .or_insert_with(|| ChannelStats::with_threshold(threshold))
            .record(frame.header.seq, frame.header.send_time_ns, arrival_time_ns)
    }

    pub fn channel(&self, msg_type: MsgType) -> Option<&ChannelStats> {
        self.channels.get(&msg_type)
    }

    pub fn channels(&self) -> impl Iterator<Item = (MsgType, &ChannelStats)> {
        self.channels.iter().map(|(k, v)| (*k, v))
    }

    pub fn total(&self) -> ChannelStats {
        let mut t = ChannelStats::with_threshold(self.threshold_ns.unwrap_or(DEFAULT_STALENESS_THRESHOLD_NS));
        for c in self.channels.values() {
            t.received += c.received;
            t.fresh += c.fresh;
            t.stale_superseded += c.stale_superseded;
            t.stale_aged += c.stale_aged;
        }
        if t.received > 0 {
            t.freshness_pct = 100.0 * t.fresh as f64 / t.received as f64;
        }
        t
    }
}
