use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

pub const TOPIC_VISION_POSE: &str = "vision/pose";
pub const TOPIC_FC_STATE: &str = "fc/state";
pub const TOPIC_FC_ACK: &str = "fc/ack";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reliability {
    /// Oldest queued message is dropped when the queue is full.
    BestEffort,
    /// Nothing is dropped; overflow waits in a backlog until the queue drains.
    Reliable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QosPolicy {
    pub reliability: Reliability,
    pub depth: usize,
}

impl QosPolicy {
    pub fn best_effort(depth: usize) -> Self {
        Self {
            reliability: Reliability::BestEffort,
            depth: depth.max(1),
        }
    }

    pub fn reliable(depth: usize) -> Self {
        Self {
            reliability: Reliability::Reliable,
            depth: depth.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubscriptionId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery<M> {
    pub subscription: SubscriptionId,
    pub topic: String,
    pub message: M,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubscriptionCounters {
    pub enqueued: u64,
    pub delivered: u64,
    pub dropped: u64,
}

#[derive(Debug)]
struct Subscription<M> {
    topic: String,
    qos: QosPolicy,
    queue: VecDeque<M>,
    backlog: VecDeque<M>,
    counters: SubscriptionCounters,
}

impl<M> Subscription<M> {
    fn offer(&mut self, msg: M) {
        self.counters.enqueued += 1;
        if self.queue.len() < self.qos.depth && self.backlog.is_empty() {
            self.queue.push_back(msg);
            return;
        }
        match self.qos.reliability {
            Reliability::BestEffort => {
                self.queue.pop_front();
                self.counters.dropped += 1;
                self.queue.push_back(msg);
            }
            Reliability::Reliable => self.backlog.push_back(msg),
        }
    }

    fn refill(&mut self) {
        while self.queue.len() < self.qos.depth {
            match self.backlog.pop_front() {
                Some(m) => self.queue.push_back(m),
                None => break,
            }
        }
    }
}

/// Topic-based message bus. Publishing only stages a message; `route`
/// moves staged messages into subscriber queues under each subscription's
/// QoS and then delivers at most `depth` messages per subscription.
#[derive(Debug)]
pub struct Bus<M> {
    subscriptions: Vec<Subscription<M>>,
    staged: BTreeMap<String, Vec<M>>,
    published: u64,
    discarded: u64,
}

impl<M> Default for Bus<M> {
    fn default() -> Self {
        Self {
            subscriptions: Vec::new(),
            staged: BTreeMap::new(),
            published: 0,
            discarded: 0,
        }
    }
}

impl<M: Clone> Bus<M> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn subscribe(&mut self, topic: &str, qos: QosPolicy) -> SubscriptionId {
        self.subscriptions.push(Subscription {
            topic: topic.to_string(),
            qos,
            queue: VecDeque::new(),
            backlog: VecDeque::new(),
            counters: SubscriptionCounters::default(),
        });
        SubscriptionId(self.subscriptions.len() - 1)
    }

    pub fn publish(&mut self, topic: &str, message: M) {
        self.published += 1;
        self.staged.entry(topic.to_string()).or_default().push(message);
    }

    pub fn route(&mut self) -> Vec<Delivery<M>> {
        for (topic, messages) in std::mem::take(&mut self.staged) {
            let mut any = false;
            for sub in self.subscriptions.iter_mut().filter(|s| s.topic == topic) {
                any = true;
                for m in &messages {
                    sub.offer(m.clone());
                }
            }
            if !any {
                self.discarded += messages.len() as u64;
            }
        }
        let mut out = Vec::new();
        for (i, sub) in self.subscriptions.iter_mut().enumerate() {
            while let Some(message) = sub.queue.pop_front() {
                sub.counters.delivered += 1;
                out.push(Delivery {
                    subscription: SubscriptionId(i),
                    topic: sub.topic.clone(),
                    message,
                });
            }
            sub.refill();
        }
        out
    }

    /// Messages still waiting for a future `route` call on this subscription.
    pub fn backlog(&self, id: SubscriptionId) -> usize {
        let s = &self.subscriptions[id.0];
        s.queue.len() + s.backlog.len()
    }

    pub fn counters(&self, id: SubscriptionId) -> SubscriptionCounters {
        self.subscriptions[id.0].counters
    }

    pub fn published(&self) -> u64 {
        self.published
    }

    /// Messages published on topics without subscribers.
    pub fn discarded(&self) -> u64 {
        self.discarded
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_effort_keeps_newest() {
        let mut bus = Bus::new();
        let sub = bus.subscribe("t", QosPolicy::best_effort(1));
        bus.publish("t", 1);
        bus.publish("t", 2);
        let got: Vec<i32> = bus.route().into_iter().map(|d| d.message).collect();
        assert_eq!(got, vec![2]);
        assert_eq!(bus.counters(sub).dropped, 1);
    }

    #[test]
    fn reliable_delivers_everything_over_several_routings() {
        let mut bus = Bus::new();
        let sub = bus.subscribe("t", QosPolicy::reliable(1));
        bus.publish("t", 1);
        bus.publish("t", 2);
        assert_eq!(bus.route().into_iter().map(|d| d.message).collect::<Vec<_>>(), vec![1]);
        assert_eq!(bus.backlog(sub), 1);
        assert_eq!(bus.route().into_iter().map(|d| d.message).collect::<Vec<_>>(), vec![2]);
        assert!(bus.route().is_empty());
        assert_eq!(bus.counters(sub).dropped, 0);
    }

    #[test]
    fn no_subscribers_discards() {
        let mut bus: Bus<i32> = Bus::new();
        bus.publish("nobody", 5);
        assert!(bus.route().is_empty());
        assert_eq!(bus.discarded(), 1);
        assert_eq!(bus.published(), 1);
    }

    #[test]
    fn fan_out_to_each_subscriber() {
        let mut bus = Bus::new();
        let a = bus.subscribe("t", QosPolicy::reliable(4));
        let b = bus.subscribe("t", QosPolicy::best_effort(4));
        bus.subscribe("other", QosPolicy::reliable(4));
        bus.publish("t", 'x');
        let d = bus.route();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].subscription, a);
        assert_eq!(d[1].subscription, b);
    }
}
