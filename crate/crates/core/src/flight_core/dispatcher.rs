use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{AckStatus, Command, CommandAck};
use crate::time::VirtualTime;

pub const DEFAULT_ACK_TIMEOUT: VirtualTime = VirtualTime::from_millis(2_000);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispatchError {
    #[error("command id {0} was already dispatched")]
    DuplicateCommandId(u32),
    #[error("ack for command {0} which is not pending")]
    NotPending(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DispatcherCounts {
    pub sent: u64,
    pub succeeded: u64,
    pub rejected: u64,
    pub timed_out: u64,
    pub pending: u64,
}

impl DispatcherCounts {
    pub fn success_rate_pct(&self) -> Option<f64> {
        (self.sent > 0).then(|| 100.0 * self.succeeded as f64 / self.sent as f64)
    }
}

/// Tracks every dispatched command until it is acknowledged or its
/// deadline passes.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    ack_timeout: VirtualTime,
    seen: BTreeSet<u32>,
    pending: BTreeMap<u32, VirtualTime>,
    sent: u64,
    succeeded: u64,
    rejected: u64,
    timed_out: u64,
}

impl Default for Dispatcher {
    fn default() -> Self {
        Self::new(DEFAULT_ACK_TIMEOUT)
    }
}

impl Dispatcher {
    pub fn new(ack_timeout: VirtualTime) -> Self {
        Self {
            ack_timeout,
            seen: BTreeSet::new(),
            pending: BTreeMap::new(),
            sent: 0,
            succeeded: 0,
            rejected: 0,
            timed_out: 0,
        }
    }

    /// Registers the command as pending with deadline `issued_at + timeout`.
    pub fn dispatch(&mut self, cmd: &Command) -> Result<(), DispatchError> {
        if !self.seen.insert(cmd.id) {
            return Err(DispatchError::DuplicateCommandId(cmd.id));
        }
        let deadline = VirtualTime::from_secs_f64(cmd.issued_at) + self.ack_timeout;
        self.pending.insert(cmd.id, deadline);
        self.sent += 1;
        Ok(())
    }

    pub fn settle(&mut self, ack: &CommandAck) -> Result<AckStatus, DispatchError> {
        self.pending
            .remove(&ack.command_id)
            .ok_or(DispatchError::NotPending(ack.command_id))?;
        match ack.status {
            AckStatus::Success => self.succeeded += 1,
            AckStatus::Rejected => self.rejected += 1,
            AckStatus::Timeout => self.timed_out += 1,
        }
        Ok(ack.status)
    }

    /// Times out every pending command whose deadline is strictly before `now`.
    pub fn expire(&mut self, now: VirtualTime) -> Vec<u32> {
        let expired: Vec<u32> = self
            .pending
            .iter()
            .filter(|(_, deadline)| **deadline < now)
            .map(|(id, _)| *id)
            .collect();
        for id in &expired {
            self.pending.remove(id);
            self.timed_out += 1;
        }
        expired
    }

    pub fn counts(&self) -> DispatcherCounts {
        DispatcherCounts {
            sent: self.sent,
            succeeded: self.succeeded,
            rejected: self.rejected,
            timed_out: self.timed_out,
            pending: self.pending.len() as u64,
        }
    }

    pub fn is_pending(&self, id: u32) -> bool {
        self.pending.contains_key(&id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Opcode;

    fn cmd(id: u32, t: f64) -> Command {
        Command::new(id, Opcode::Arm, vec![], t).unwrap()
    }

    fn ack(id: u32, status: AckStatus) -> CommandAck {
        CommandAck {
            command_id: id,
            status,
            ack_at: 0.0,
        }
    }

    #[test]
    fn fifteen_successes() {
        let mut d = Dispatcher::default();
        for id in 1..=15 {
            d.dispatch(&cmd(id, id as f64)).unwrap();
            d.settle(&ack(id, AckStatus::Success)).unwrap();
        }
        let c = d.counts();
        assert_eq!((c.sent, c.succeeded, c.pending), (15, 15, 0));
        assert_eq!(c.success_rate_pct(), Some(100.0));
    }

    #[test]
    fn missing_ack_times_out_after_two_seconds() {
        let mut d = Dispatcher::default();
        d.dispatch(&cmd(1, 1.0)).unwrap();
        assert!(d.expire(VirtualTime::from_millis(3_000)).is_empty());
        assert_eq!(d.expire(VirtualTime::from_millis(3_001)), vec![1]);
        let c = d.counts();
        assert_eq!((c.sent, c.timed_out, c.pending), (1, 1, 0));
        assert_eq!(c.success_rate_pct(), Some(0.0));
        // A late ack is refused.
        assert_eq!(d.settle(&ack(1, AckStatus::Success)), Err(DispatchError::NotPending(1)));
    }

    #[test]
    fn duplicate_id_rejected() {
        let mut d = Dispatcher::default();
        d.dispatch(&cmd(4, 0.0)).unwrap();
        assert_eq!(d.dispatch(&cmd(4, 1.0)), Err(DispatchError::DuplicateCommandId(4)));
        assert_eq!(d.counts().sent, 1);
    }

    #[test]
    fn no_rate_before_first_send() {
        assert_eq!(Dispatcher::default().counts().success_rate_pct(), None);
    }
}
