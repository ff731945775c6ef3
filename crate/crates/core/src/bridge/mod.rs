//! Typed, sequenced, CRC-protected framing between the flight core and the
//! perception side, plus per-channel freshness accounting and transports.

mod codec;
mod payload;
mod stats;
mod transport;

pub use codec::{
    decode_frame, encode_frame, BridgeFrame, CodecError, FrameHeader, MsgType, CRC_LEN, HEADER_LEN, MAGIC, MAX_PAYLOAD,
    VERSION,
};
pub use payload::{FlightStateReport, Message, PayloadError};
pub use stats::{update_channel_stats, BridgeStats, ChannelStats, Freshness, DEFAULT_STALENESS_THRESHOLD_NS};
pub use transport::{FaultConfig, LinkCounters, SimLink, Transport, TransportError, UdpLink};

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
}

/// Stamps outgoing messages with per-msg_type sequence numbers starting at 0.
#[derive(Debug, Clone, Default)]
pub struct Sequencer {
    next: BTreeMap<MsgType, u32>,
}

impl Sequencer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn encode(&mut self, msg: &Message, send_time_ns: u64) -> Result<Vec<u8>, CodecError> {
        let msg_type = msg.msg_type();
        let seq = self.next.entry(msg_type).or_insert(0);
        let frame = encode_frame(msg_type, *seq, send_time_ns, &msg.encode_payload())?;
        *seq = seq.wrapping_add(1);
        Ok(frame)
    }
}

/// Decodes a datagram into its frame and typed message.
pub fn decode_message(bytes: &[u8]) -> Result<(BridgeFrame, Message), BridgeError> {
    let frame = decode_frame(bytes)?;
    let msg = Message::from_frame(&frame)?;
    Ok((frame, msg))
}
