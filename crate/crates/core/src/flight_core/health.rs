use std::collections::BTreeMap;

use crate::model::HealthStatus;
use crate::time::VirtualTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HealthTransition {
    pub component: String,
    pub from: HealthStatus,
    pub to: HealthStatus,
    pub at: VirtualTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Watch {
    last_ping: VirtualTime,
    status: HealthStatus,
}

/// Liveness monitor: Healthy while the last ping is at most `timeout` old,
/// Degraded up to twice that, Fault beyond.
#[derive(Debug, Clone)]
pub struct HealthMonitor {
    timeout: VirtualTime,
    watches: BTreeMap<String, Watch>,
}

fn classify(timeout: VirtualTime, elapsed: VirtualTime) -> HealthStatus {
    if elapsed <= timeout {
        HealthStatus::Healthy
    } else if elapsed.0 <= 2 * timeout.0 {
        HealthStatus::Degraded
    } else {
        HealthStatus::Fault
    }
}

impl HealthMonitor {
    pub fn new(timeout: VirtualTime) -> Self {
        Self {
            timeout,
            watches: BTreeMap::new(),
        }
    }

    pub fn timeout(&self) -> VirtualTime {
        self.timeout
    }

    pub fn register(&mut self, component: &str, now: VirtualTime) {
        self.watches.insert(
            component.to_string(),
            Watch {
                last_ping: now,
                status: HealthStatus::Healthy,
            },
        );
    }

    pub fn deregister(&mut self, component: &str) -> bool {
        self.watches.remove(component).is_some()
    }

    /// Pings for unregistered components are ignored.
    pub fn ping(&mut self, component: &str, now: VirtualTime) {
        if let Some(w) = self.watches.get_mut(component) {
            w.last_ping = w.last_ping.max(now);
        }
    }

    pub fn classify(&self, elapsed: VirtualTime) -> HealthStatus {
        classify(self.timeout, elapsed)
    }

    pub fn check(&mut self, now: VirtualTime) -> Vec<HealthTransition> {
        let mut transitions = Vec::new();
        let timeout = self.timeout;
        for (name, w) in self.watches.iter_mut() {
            let elapsed = now.saturating_sub(w.last_ping);
            let status = classify(timeout, elapsed);
            if status != w.status {
                transitions.push(HealthTransition {
                    component: name.clone(),
                    from: w.status,
                    to: status,
                    at: now,
                });
                w.status = status;
            }
        }
        transitions
    }

    pub fn status(&self, component: &str) -> Option<HealthStatus> {
        self.watches.get(component).map(|w| w.status)
    }

    /// Worst status over all watched components.
    pub fn overall(&self) -> HealthStatus {
        self.watches
            .values()
            .map(|w| w.status)
            .max()
            .unwrap_or(HealthStatus::Healthy)
    }
}
