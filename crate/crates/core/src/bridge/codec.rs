//! Frame layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     2  magic 0x46 0x42 ("FB")
//!      2     1  version (1)
//!      3     1  msg_type
//!      4     4  seq
//!      8     8  send_time_ns
//!     16     2  payload_len
//!     18     n  payload
//!   18+n     4  CRC-32/ISO-HDLC over bytes [0, 18+n)
//! ```

use thiserror::Error;

pub const MAGIC: [u8; 2] = [0x46, 0x42];
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
pub const CRC_LEN: usize = 4;
pub const MAX_PAYLOAD: usize = u16::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MsgType {
    PoseTelemetry = 1,
    Command = 2,
    CommandAck = 3,
    FlightState = 4,
    Health = 5,
    Resource = 6,
}

impl MsgType {
    pub const ALL: [MsgType; 6] = [
        MsgType::PoseTelemetry,
        MsgType::Command,
        MsgType::CommandAck,
        MsgType::FlightState,
        MsgType::Health,
        MsgType::Resource,
    ];

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| *t as u8 == v)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::PoseTelemetry => "pose_telemetry",
            MsgType::Command => "command",
            MsgType::CommandAck => "command_ack",
            MsgType::FlightState => "flight_state",
            MsgType::Health => "health",
            MsgType::Resource => "resource",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("payload of {0} bytes exceeds the 65535-byte limit")]
    PayloadTooLarge(usize),
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("truncated frame: {available} bytes, need {needed}")]
    TruncatedFrame { available: usize, needed: usize },
    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("unknown msg_type {0}")]
    UnknownMsgType(u8),
    #[error("frame carries {extra} trailing byte(s) after the crc")]
    TrailingBytes { extra: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub msg_type: MsgType,
    pub seq: u32,
    pub send_time_ns: u64,
    pub payload_len: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgeFrame {
    pub header: FrameHeader,
    pub payload: Vec<u8>,
    pub crc: u32,
}

pub fn encode_frame(msg_type: MsgType, seq: u32, send_time_ns: u64, payload: &[u8]) -> Result<Vec<u8>, CodecError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(CodecError::PayloadTooLarge(payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CRC_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg_type as u8);
    out.extend_from_slice(&seq.to_le_bytes());
    out.extend_from_slice(&send_time_ns.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u16).to_le_bytes());
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// Decodes exactly one frame occupying the whole of `bytes`.
///
/// The CRC is checked before msg_type and payload_len are interpreted, so a
/// corrupted byte anywhere past the version field surfaces as `CrcMismatch`.
pub fn decode_frame(bytes: &[u8]) -> Result<BridgeFrame, CodecError> {
    let min = HEADER_LEN + CRC_LEN;
    if bytes.len() < min {
        return Err(CodecError::TruncatedFrame {
            available: bytes.len(),
            needed: min,
        });
    }
    if bytes[0..2] != MAGIC {
        return Err(CodecError::BadMagic([bytes[0], bytes[1]]));
    }
    if bytes[2] != VERSION {
        return Err(CodecError::BadVersion(bytes[2]));
    }

    let body_end = bytes.len() - CRC_LEN;
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(CodecError::CrcMismatch { stored, computed });
    }

    let msg_type = MsgType::from_u8(bytes[3]).ok_or(CodecError::UnknownMsgType(bytes[3]))?;
    let seq = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let send_time_ns = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let payload_len = u16::from_le_bytes(bytes[16..18].try_into().unwrap());

    let declared_end = HEADER_LEN + payload_len as usize;
    if declared_end > body_end {
        return Err(CodecError::TruncatedFrame {
            available: bytes.len(),
            needed: declared_end + CRC_LEN,
        });
    }
    if declared_end < body_end {
        return Err(CodecError::TrailingBytes {
            extra: body_end - declared_end,
        });
    }

    Ok(BridgeFrame {
        header: FrameHeader {
            msg_type,
            seq,
            send_time_ns,
            payload_len,
        },
        payload: bytes[HEADER_LEN..body_end].to_vec(),
        crc: stored,
    })
}
