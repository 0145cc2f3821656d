//! Frame layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     1  protocol version
//!      1     2  topic id
//!      3     8  sequence number (per publisher and topic)
//!     11     4  payload length
//!     15     2  CRC-16/CCITT-FALSE over bytes 0..15
//!     17     8  publisher timestamp, ns since run epoch
//!     25     n  payload
//!   25+n     4  CRC-32/ISO-HDLC over timestamp and payload
//! ```

use std::io::{self, Read};

use crc::{Crc, CRC_16_IBM_3740, CRC_32_ISO_HDLC};
use thiserror::Error;

pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 17;
pub const TIMESTAMP_LEN: usize = 8;
pub const TRAILER_LEN: usize = 4;
/// Bytes around the payload.
pub const OVERHEAD: usize = HEADER_LEN + TIMESTAMP_LEN + TRAILER_LEN;
pub const MAX_PAYLOAD: usize = 64 * 1024;

// CCITT-FALSE is catalogued as IBM-3740 (poly 0x1021, init 0xFFFF, no reflection).
const HEADER_CRC: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);
const PAYLOAD_CRC: Crc<u32> = Crc::<u32>::new(&CRC_32_ISO_HDLC);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u16)]
pub enum Topic {
    Heartbeat = 0,
    EstState = 1,
    RwCmd = 2,
    RwState = 3,
    HealthTlm = 4,
    Config = 5,
    Hello = 16,
    Clock = 17,
    Done = 18,
    Shutdown = 19,
}

impl Topic {
    pub const ALL: [Topic; 10] = [
        Topic::Heartbeat,
        Topic::EstState,
        Topic::RwCmd,
        Topic::RwState,
        Topic::HealthTlm,
        Topic::Config,
        Topic::Hello,
        Topic::Clock,
        Topic::Done,
        Topic::Shutdown,
    ];

    pub fn id(self) -> u16 {
        self as u16
    }

    pub fn from_id(id: u16) -> Option<Topic> {
        Self::ALL.into_iter().find(|t| t.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Topic::Heartbeat => "HEARTBEAT",
            Topic::EstState => "EST_STATE",
            Topic::RwCmd => "RW_CMD",
            Topic::RwState => "RW_STATE",
            Topic::HealthTlm => "HEALTH_TLM",
            Topic::Config => "CONFIG",
            Topic::Hello => "HELLO",
            Topic::Clock => "CLOCK",
            Topic::Done => "DONE",
            Topic::Shutdown => "SHUTDOWN",
        }
    }
}

impl std::fmt::Display for Topic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub topic: Topic,
    pub seq: u64,
    pub timestamp_ns: u64,
    pub payload: Vec<u8>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("truncated frame: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("header CRC mismatch (stored {stored:#06x}, computed {computed:#06x})")]
    HeaderCrc { stored: u16, computed: u16 },
    #[error("payload CRC mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    PayloadCrc { stored: u32, computed: u32 },
    #[error("unknown topic id {0}")]
    UnknownTopic(u16),
    #[error("protocol version {0} (expected {VERSION})")]
    Version(u8),
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD} byte limit")]
    PayloadTooLarge(usize),
}

impl FrameError {
    /// After these the byte stream can no longer be trusted to be aligned on a frame.
    pub fn desyncs_stream(&self) -> bool {
        !matches!(self, FrameError::PayloadCrc { .. })
    }
}

/// Parsed, CRC-checked fixed header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub topic: Topic,
    pub seq: u64,
    pub payload_len: usize,
}

impl Header {
    pub fn frame_len(&self) -> usize {
        OVERHEAD + self.payload_len
    }
}

pub fn encode_frame(env: &Envelope) -> Result<Vec<u8>, FrameError> {
    let n = env.payload.len();
    if n > MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLarge(n));
    }
    let mut out = Vec::with_capacity(OVERHEAD + n);
    out.push(VERSION);
    out.extend_from_slice(&env.topic.id().to_le_bytes());
    out.extend_from_slice(&env.seq.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    let hcrc = HEADER_CRC.checksum(&out);
    out.extend_from_slice(&hcrc.to_le_bytes());
    out.extend_from_slice(&env.timestamp_ns.to_le_bytes());
    out.extend_from_slice(&env.payload);
    let pcrc = PAYLOAD_CRC.checksum(&out[HEADER_LEN..]);
    out.extend_from_slice(&pcrc.to_le_bytes());
    Ok(out)
}

pub fn decode_header(b: &[u8]) -> Result<Header, FrameError> {
    if b.len() < HEADER_LEN {
        return Err(FrameError::Truncated { needed: HEADER_LEN, have: b.len() });
    }
    let stored = u16::from_le_bytes([b[15], b[16]]);
    let computed = HEADER_CRC.checksum(&b[..15]);
    if stored != computed {
        return Err(FrameError::HeaderCrc { stored, computed });
    }
    if b[0] != VERSION {
        return Err(FrameError::Version(b[0]));
    }
    let id = u16::from_le_bytes([b[1], b[2]]);
    let topic = Topic::from_id(id).ok_or(FrameError::UnknownTopic(id))?;
    let seq = u64::from_le_bytes(b[3..11].try_into().expect("8 bytes"));
    let payload_len = u32::from_le_bytes(b[11..15].try_into().expect("4 bytes")) as usize;
    if payload_len > MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLarge(payload_len));
    }
    Ok(Header { topic, seq, payload_len })
}

/// Checks the trailing CRC of a frame body (`timestamp ‖ payload ‖ crc32`).
fn decode_body(h: &Header, body: &[u8]) -> Result<Envelope, FrameError> {
    let n = h.payload_len;
    let covered = &body[..TIMESTAMP_LEN + n];
    let stored = u32::from_le_bytes(body[TIMESTAMP_LEN + n..TIMESTAMP_LEN + n + TRAILER_LEN].try_into().expect("4 bytes"));
    let computed = PAYLOAD_CRC.checksum(covered);
    if stored != computed {
        return Err(FrameError::PayloadCrc { stored, computed });
    }
    Ok(Envelope {
        topic: h.topic,
        seq: h.seq,
        timestamp_ns: u64::from_le_bytes(body[..TIMESTAMP_LEN].try_into().expect("8 bytes")),
        payload: body[TIMESTAMP_LEN..TIMESTAMP_LEN + n].to_vec(),
    })
}

/// Decodes one frame from the front of `b`; returns it with the number of bytes consumed.
pub fn decode_frame(b: &[u8]) -> Result<(Envelope, usize), FrameError> {
    let h = decode_header(b)?;
    let total = h.frame_len();
    if b.len() < total {
        return Err(FrameError::Truncated { needed: total, have: b.len() });
    }
    Ok((decode_body(&h, &b[HEADER_LEN..total])?, total))
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("stream closed")]
    Closed,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Reads exactly one frame. A payload CRC failure consumes the whole frame,
/// so the caller may keep reading; any other frame error leaves the stream
/// misaligned.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Envelope, ReadError> {
    let mut head = [0u8; HEADER_LEN];
    match r.read_exact(&mut head) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Err(ReadError::Closed),
        Err(e) => return Err(e.into()),
    }
    let h = decode_header(&head)?;
    let mut body = vec![0u8; h.frame_len() - HEADER_LEN];
    r.read_exact(&mut body).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            ReadError::Frame(FrameError::Truncated { needed: h.frame_len(), have: HEADER_LEN })
        } else {
            ReadError::Io(e)
        }
    })?;
    Ok(decode_body(&h, &body)?)
}
