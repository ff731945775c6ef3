//! Bridge round-trip benchmark: pose frames are sent through a loopback
//! pair, echoed by the far side and timed on return.

use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::analyzer::TimingMetrics;
use crate::bridge::{
    decode_frame, encode_frame, CodecError, Message, MsgType, SimLink, Transport, TransportError, UdpLink,
};
use crate::model::Quaternion;
use crate::time::{VirtualTime, NANOS_PER_SEC};

/// Wire size of a pose telemetry frame.
pub const POSE_FRAME_BYTES: usize = 78;

const UDP_TIMEOUT: Duration = Duration::from_secs(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchTransport {
    Udp,
    Sim,
}

impl std::fmt::Display for BenchTransport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Udp => "udp",
            Self::Sim => "sim",
        })
    }
}

impl FromStr for BenchTransport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "udp" => Ok(Self::Udp),
            "sim" => Ok(Self::Sim),
            other => Err(format!("unknown transport `{other}` (expected udp or sim)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("frame count must be at least 1")]
    NoFrames,
    #[error("rate must be positive and finite")]
    BadRate,
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("no frame came back")]
    NothingReturned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchReport {
    pub transport: BenchTransport,
    pub frames_sent: u64,
    pub frames_returned: u64,
    pub frame_bytes: usize,
    /// Round-trip times in ms.
    pub rtt: TimingMetrics,
    pub offered_kbps: f64,
    pub achieved_kbps: f64,
}

/// Offered one-way load of `frame_bytes`-byte frames at `rate_hz`, kbit/s.
pub fn offered_kbps(frame_bytes: usize, rate_hz: f64) -> f64 {
    frame_bytes as f64 * 8.0 * rate_hz / 1000.0
}

fn pose_frame(seq: u32, send_ns: u64) -> Result<Vec<u8>, CodecError> {
    let msg = Message::PoseTelemetry {
        position: [0.0, 0.0, 1.0],
        orientation: Quaternion::IDENTITY,
    };
    encode_frame(MsgType::PoseTelemetry, seq, send_ns, &msg.encode_payload())
}

pub fn run_bench(frames: u64, rate_hz: f64, transport: BenchTransport) -> Result<BenchReport, BenchError> {
    if frames == 0 {
        return Err(BenchError::NoFrames);
    }
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(BenchError::BadRate);
    }
    let (rtts, bytes, elapsed_s) = match transport {
        BenchTransport::Sim => bench_sim(frames, rate_hz)?,
        BenchTransport::Udp => bench_udp(frames, rate_hz)?,
    };
    if rtts.is_empty() {
        return Err(BenchError::NothingReturned);
    }
    let rtt = TimingMetrics::from_values(&rtts).map_err(|_| BenchError::NothingReturned)?;
    Ok(BenchReport {
        transport,
        frames_sent: frames,
        frames_returned: rtts.len() as u64,
        frame_bytes: POSE_FRAME_BYTES,
        rtt,
        offered_kbps: offered_kbps(POSE_FRAME_BYTES, rate_hz),
        achieved_kbps: bytes as f64 * 8.0 / 1000.0 / elapsed_s,
    })
}

/// Virtual-time loopback over two lossless, zero-delay sim links.
fn bench_sim(frames: u64, rate_hz: f64) -> Result<(Vec<f64>, u64, f64), BenchError> {
    let mut out = SimLink::lossless();
    let mut back = SimLink::lossless();
    let period = (NANOS_PER_SEC as f64 / rate_hz).round() as u64;
    let mut rtts = Vec::with_capacity(frames as usize);
    let mut bytes = 0u64;
    for i in 0..frames {
        let now = VirtualTime(i * period);
        out.send(pose_frame(i as u32, now.as_nanos())?, now)?;
        while let Some(f) = out.recv(now)? {
            back.send(f, now)?;
        }
        while let Some(f) = back.recv(now)? {
            let frame = decode_frame(&f)?;
            rtts.push(now.saturating_sub(VirtualTime(frame.header.send_time_ns)).as_secs_f64() * 1000.0);
            bytes += f.len() as u64;
        }
    }
    Ok((rtts, bytes, frames as f64 / rate_hz))
}

fn poll_udp(link: &mut UdpLink, deadline: Instant) -> Result<Option<Vec<u8>>, BenchError> {
    loop {
        if let Some(f) = link.recv(VirtualTime::ZERO)? {
            return Ok(Some(f));
        }
        if Instant::now() >= deadline {
            return Ok(None);
        }
        std::thread::yield_now();
    }
}

/// Wall-clock loopback over a pair of UDP sockets on 127.0.0.1.
fn bench_udp(frames: u64, rate_hz: f64) -> Result<(Vec<f64>, u64, f64), BenchError> {
    let (mut a, mut b) = UdpLink::loopback_pair()?;
    let period = Duration::from_secs_f64(1.0 / rate_hz);
    let start = Instant::now();
    let mut rtts = Vec::with_capacity(frames as usize);
    let mut bytes = 0u64;
    for i in 0..frames {
        let slot = start + period.mul_f64(i as f64);
        if let Some(wait) = slot.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
        let sent = Instant::now();
        let ns = sent.duration_since(start).as_nanos() as u64;
        a.send(pose_frame(i as u32, ns)?, VirtualTime::ZERO)?;
        let Some(f) = poll_udp(&mut b, sent + UDP_TIMEOUT)? else {
            continue;
        };
        b.send(f, VirtualTime::ZERO)?;
        if let Some(f) = poll_udp(&mut a, sent + UDP_TIMEOUT)? {
            rtts.push(sent.elapsed().as_secs_f64() * 1000.0);
            bytes += f.len() as u64;
        }
    }
    let elapsed = start.elapsed().as_secs_f64().max(frames as f64 / rate_hz);
    Ok((rtts, bytes, elapsed))
}
