//! Typed payloads carried inside bridge frames. Floats are IEEE-754
//! binary64 little-endian; integers little-endian.

use thiserror::Error;

use super::codec::{BridgeFrame, MsgType};
use crate::model::{
    AckStatus, Command, CommandAck, FlightMode, HealthStatus, ModelError, Opcode, Quaternion, ResourceSample,
};
use crate::time::VirtualTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PayloadError {
    #[error("{msg_type:?} payload has {got} bytes, expected {expected}")]
    BadLength {
        msg_type: MsgType,
        expected: usize,
        got: usize,
    },
    #[error("invalid field {0}")]
    BadField(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Attitude and position of the vehicle as reported by the autopilot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightStateReport {
    pub mode: FlightMode,
    pub armed: bool,
    pub position: [f64; 3],
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    /// Position then quaternion (x, y, z, w); the sample time is the frame's
    /// send time.
    PoseTelemetry {
        position: [f64; 3],
        orientation: Quaternion,
    },
    Command(Command),
    CommandAck(CommandAck),
    FlightState(FlightStateReport),
    Health(HealthStatus),
    Resource(ResourceSample),
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn expect_len(msg_type: MsgType, expected: usize, got: usize) -> Result<(), PayloadError> {
    if expected != got {
        return Err(PayloadError::BadLength {
            msg_type,
            expected,
            got,
        });
    }
    Ok(())
}

impl Message {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Message::PoseTelemetry { .. } => MsgType::PoseTelemetry,
            Message::Command(_) => MsgType::Command,
            Message::CommandAck(_) => MsgType::CommandAck,
            Message::FlightState(_) => MsgType::FlightState,
            Message::Health(_) => MsgType::Health,
            Message::Resource(_) => MsgType::Resource,
        }
    }

    pub fn encode_payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Message::PoseTelemetry {
                position,
                orientation: q,
            } => {
                put_f64s(&mut out, position);
                put_f64s(&mut out, &[q.x, q.y, q.z, q.w]);
            }
            Message::Command(cmd) => {
                out.extend_from_slice(&cmd.id.to_le_bytes());
                out.push(cmd.opcode.code());
                out.push(cmd.args().len() as u8);
                out.extend_from_slice(&VirtualTime::from_secs_f64(cmd.issued_at).as_nanos().to_le_bytes());
                put_f64s(&mut out, cmd.args());
            }
            Message::CommandAck(ack) => {
                out.extend_from_slice(&ack.command_id.to_le_bytes());
                out.push(ack.status.code());
                out.extend_from_slice(&VirtualTime::from_secs_f64(ack.ack_at).as_nanos().to_le_bytes());
            }
            Message::FlightState(s) => {
                out.push(s.mode.code());
                out.push(u8::from(s.armed));
                put_f64s(&mut out, &s.position);
                put_f64s(&mut out, &[s.yaw_deg]);
            }
            Message::Health(h) => out.push(h.code()),
            Message::Resource(r) => put_f64s(&mut out, &[r.t, r.cpu_pct, r.mem_mb, r.bandwidth_kbps]),
        }
        out
    }

    pub fn decode(msg_type: MsgType, payload: &[u8]) -> Result<Self, PayloadError> {
        let mut r = Reader::new(payload);
        let n = payload.len();
        let msg = match msg_type {
            MsgType::PoseTelemetry => {
                expect_len(msg_type, 56, n)?;
                let position = [r.f64(), r.f64(), r.f64()];
                let orientation = Quaternion::new(r.f64(), r.f64(), r.f64(), r.f64());
                Message::PoseTelemetry { position, orientation }
            }
            MsgType::Command => {
                if n < 14 {
                    return Err(PayloadError::BadLength {
                        msg_type,
                        expected: 14,
                        got: n,
                    });
                }
                let id = r.u32();
                let opcode = Opcode::from_code(r.u8())?;
                let argc = r.u8() as usize;
                expect_len(msg_type, 14 + 8 * argc, n)?;
                let issued_at = VirtualTime::from_nanos(r.u64()).as_secs_f64();
                let args = (0..argc).map(|_| r.f64()).collect();
                Message::Command(Command::new(id, opcode, args, issued_at)?)
            }
            MsgType::CommandAck => {
                expect_len(msg_type, 13, n)?;
                let command_id = r.u32();
                let status = AckStatus::from_code(r.u8()).ok_or(PayloadError::BadField("ack status"))?;
                let ack_at = VirtualTime::from_nanos(r.u64()).as_secs_f64();
                Message::CommandAck(CommandAck {
                    command_id,
                    status,
                    ack_at,
                })
            }
            MsgType::FlightState => {
                expect_len(msg_type, 34, n)?;
                let mode = FlightMode::from_code(r.u8()).ok_or(PayloadError::BadField("mode"))?;
                let armed = match r.u8() {
                    0 => false,
                    1 => true,
                    _ => return Err(PayloadError::BadField("armed")),
                };
                let position = [r.f64(), r.f64(), r.f64()];
                let yaw_deg = r.f64();
                Message::FlightState(FlightStateReport {
                    mode,
                    armed,
                    position,
                    yaw_deg,
                })
            }
            MsgType::Health => {
                expect_len(msg_type, 1, n)?;
                Message::Health(HealthStatus::from_code(r.u8()).ok_or(PayloadError::BadField("health"))?)
            }
            MsgType::Resource => {
                expect_len(msg_type, 32, n)?;
                Message::Resource(ResourceSample {
                    t: r.f64(),
                    cpu_pct: r.f64(),
                    mem_mb: r.f64(),
                    bandwidth_kbps: r.f64(),
                })
            }
        };
        Ok(msg)
    }

    pub fn from_frame(frame: &BridgeFrame) -> Result<Self, PayloadError> {
        Self::decode(frame.header.msg_type, &frame.payload)
    }
}
