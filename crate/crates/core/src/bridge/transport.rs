//! Datagram transports: one frame per datagram.
//!
//! [`SimLink`] is a one-way, in-process link running on virtual time with
//! seeded loss, delay and reorder injection. [`UdpLink`] sends real UDP
//! datagrams and ignores the virtual clock.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io;
use std::net::{SocketAddr, UdpSocket};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{VirtualTime, NANOS_PER_MS};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("transport unavailable: {0}")]
    Unavailable(#[source] io::Error),
    #[error("send failed: {0}")]
    Send(#[source] io::Error),
    #[error("receive failed: {0}")]
    Recv(#[source] io::Error),
}

pub trait Transport {
    fn send(&mut self, frame: Vec<u8>, now: VirtualTime) -> Result<(), TransportError>;

    /// Next frame available at or before `now`, if any.
    fn recv(&mut self, now: VirtualTime) -> Result<Option<Vec<u8>>, TransportError>;

    /// Earliest pending arrival, for transports that know it.
    fn next_arrival(&self) -> Option<VirtualTime> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    pub loss_prob: f64,
    pub reorder_prob: f64,
    /// Extra hold applied to a reordered frame.
    pub reorder_delay_ms: f64,
    pub base_delay_ms: f64,
}

impl Default for FaultConfig {
    fn default() -> Self {
        Self {
            loss_prob: 0.0,
            reorder_prob: 0.0,
            reorder_delay_ms: 25.0,
            base_delay_ms: 0.0,
        }
    }
}

impl FaultConfig {
    pub fn validate(&self) -> Result<(), String> {
        let probs = [("loss_prob", self.loss_prob), ("reorder_prob", self.reorder_prob)];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be within [0, 1]"));
            }
        }
        if !(self.reorder_delay_ms >= 0.0 && self.base_delay_ms >= 0.0) {
            return Err("delays must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct InFlight {
    arrival: VirtualTime,
    order: u64,
    bytes: Vec<u8>,
}

impl Ord for InFlight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.arrival, self.order).cmp(&(other.arrival, other.order))
    }
}

impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LinkCounters {
    pub sent: u64,
    pub lost: u64,
    pub reordered: u64,
    pub delivered: u64,
}

pub struct SimLink {
    faults: FaultConfig,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<InFlight>>,
    order: u64,
    counters: LinkCounters,
}

impl SimLink {
    pub fn new(faults: FaultConfig, seed: u64) -> Self {
        Self {
            faults,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queue: BinaryHeap::new(),
            order: 0,
            counters: LinkCounters::default(),
        }
    }

    pub fn lossless() -> Self {
        Self::new(FaultConfig::default(), 0)
    }

    pub fn counters(&self) -> LinkCounters {
        self.counters
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }
}

fn ms_to_ns(ms: f64) -> u64 {
    (ms * NANOS_PER_MS as f64).round() as u64
}

impl Transport for SimLink {
    fn send(&mut self, frame: Vec<u8>, now: VirtualTime) -> Result<(), TransportError> {
        self.counters.sent += 1;
        // Both draws happen for every frame so the random stream does not
        // depend on which faults fired.
        let lose = self.rng.random::<f64>() < self.faults.loss_prob;
        let reorder = self.rng.random::<f64>() < self.faults.reorder_prob;
        if lose {
            self.counters.lost += 1;
            return Ok(());
        }
        let mut delay = ms_to_ns(self.faults.base_delay_ms);
        if reorder {
            self.counters.reordered += 1;
            delay += ms_to_ns(self.faults.reorder_delay_ms);
        }
        self.queue.push(Reverse(InFlight {
            arrival: VirtualTime(now.0 + delay),
            order: self.order,
            bytes: frame,
        }));
        self.order += 1;
        Ok(())
    }

    fn recv(&mut self, now: VirtualTime) -> Result<Option<Vec<u8>>, TransportError> {
        match self.queue.peek() {
            Some(Reverse(head)) if head.arrival <= now => {
                self.counters.delivered += 1;
                Ok(self.queue.pop().map(|Reverse(f)| f.bytes))
            }
            _ => Ok(None),
        }
    }

    fn next_arrival(&self) -> Option<VirtualTime> {
        self.queue.peek().map(|Reverse(f)| f.arrival)
    }
}

/// Non-blocking UDP endpoint bound to a local address and sending to a peer.
pub struct UdpLink {
    socket: UdpSocket,
    peer: SocketAddr,
    buf: Vec<u8>,
}

impl UdpLink {
    pub fn bind(local: SocketAddr, peer: SocketAddr) -> Result<Self, TransportError> {
        let socket = UdpSocket::bind(local).map_err(TransportError::Unavailable)?;
        socket.set_nonblocking(true).map_err(TransportError::Unavailable)?;
        Ok(Self {
            socket,
            peer,
            buf: vec![0; 65_535 + 64],
        })
    }

    /// Two endpoints on 127.0.0.1 with OS-assigned ports, addressed to each other.
    pub fn loopback_pair() -> Result<(Self, Self), TransportError> {
        let a = UdpSocket::bind("127.0.0.1:0").map_err(TransportError::Unavailable)?;
        let b = UdpSocket::bind("127.0.0.1:0").map_err(TransportError::Unavailable)?;
        let (addr_a, addr_b) = (
            a.local_addr().map_err(TransportError::Unavailable)?,
            b.local_addr().map_err(TransportError::Unavailable)?,
        );
        for s in [&a, &b] {
            s.set_nonblocking(true).map_err(TransportError::Unavailable)?;
        }
        Ok((
            Self {
                socket: a,
                peer: addr_b,
                buf: vec![0; 65_535 + 64],
            },
            Self {
                socket: b,
                peer: addr_a,
                buf: vec![0; 65_535 + 64],
            },
        ))
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }
}

impl Transport for UdpLink {
    fn send(&mut self, frame: Vec<u8>, _now: VirtualTime) -> Result<(), TransportError> {
        self.socket
            .send_to(&frame, self.peer)
            .map(|_| ())
            .map_err(TransportError::Send)
    }

    fn recv(&mut self, _now: VirtualTime) -> Result<Option<Vec<u8>>, TransportError> {
        match self.socket.recv_from(&mut self.buf) {
            Ok((n, _)) => Ok(Some(self.buf[..n].to_vec())),
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => Ok(None),
            Err(e) => Err(TransportError::Recv(e)),
        }
    }
}
