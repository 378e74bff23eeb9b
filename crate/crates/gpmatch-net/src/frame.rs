//! Length-prefixed wire frames.
//!
//! Layout: 4-byte big-endian payload length, 1-byte message type, 16-byte
//! session id, then the payload. The high bit of the message type is a
//! continuation flag, set on every SHARE chunk except the last so very
//! large shares can cross the wire in bounded pieces.

use std::io::{self, Read, Write};

use gpmatch_core::protocol::Variant;
use gpmatch_core::Perm;
use thiserror::Error;

pub const MSG_REGISTER_PUB: u8 = 1;
pub const MSG_REGISTER_SUB: u8 = 2;
pub const MSG_STRUCTURE: u8 = 3;
pub const MSG_SHARE: u8 = 4;
pub const MSG_PAYLOAD: u8 = 5;
pub const MSG_RESULT: u8 = 6;
pub const MSG_ERROR: u8 = 7;

/// High bit of `msg_type`: more chunks of this message follow.
pub const CONTINUATION: u8 = 0x80;

/// Frame header size: length + type + session id.
pub const HEADER_LEN: usize = 4 + 1 + 16;

/// Elements per SHARE chunk; 9 bytes each keeps frames well under a
/// megabyte while amortising the header.
pub const SHARE_CHUNK: usize = 65_536;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame truncated: {got} bytes, need {need}")]
    Truncated { got: usize, need: usize },
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("malformed {0} payload")]
    BadPayload(&'static str),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Frame {
    /// Message type byte, continuation flag included.
    pub msg_type: u8,
    pub session_id: [u8; 16],
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: u8, session_id: [u8; 16], payload: Vec<u8>) -> Frame {
        Frame { msg_type, session_id, payload }
    }

    /// Base type with the continuation flag masked off.
    pub fn base_type(&self) -> u8 {
        self.msg_type & !CONTINUATION
    }

    pub fn is_continuation(&self) -> bool {
        self.msg_type & CONTINUATION != 0
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.push(self.msg_type);
        out.extend_from_slice(&self.session_id);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decodes one frame from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
        if bytes.len() < HEADER_LEN {
            return Err(FrameError::Truncated { got: bytes.len(), need: HEADER_LEN });
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().unwrap()) as usize;
        let msg_type = bytes[4];
        check_type(msg_type)?;
        let total = HEADER_LEN + len;
        if bytes.len() < total {
            return Err(FrameError::Truncated { got: bytes.len(), need: total });
        }
        let mut session_id = [0u8; 16];
        session_id.copy_from_slice(&bytes[5..21]);
        Ok((Frame { msg_type, session_id, payload: bytes[21..total].to_vec() }, total))
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(&self.encode())
    }

    /// Blocking read of exactly one frame.
    pub fn read_from(r: &mut impl Read) -> Result<Frame, ReadError> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header).map_err(ReadError::Io)?;
        let len = u32::from_be_bytes(header[..4].try_into().unwrap()) as usize;
        let msg_type = header[4];
        check_type(msg_type).map_err(ReadError::Frame)?;
        let mut session_id = [0u8; 16];
        session_id.copy_from_slice(&header[5..21]);
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload).map_err(ReadError::Io)?;
        Ok(Frame { msg_type, session_id, payload })
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("i/o: {0}")]
    Io(io::Error),
    #[error(transparent)]
    Frame(FrameError),
}

fn check_type(msg_type: u8) -> Result<(), FrameError> {
    let base = msg_type & !CONTINUATION;
    if !(MSG_REGISTER_PUB..=MSG_ERROR).contains(&base) {
        return Err(FrameError::UnknownType(msg_type));
    }
    // Only SHAREs chunk; a continuation flag elsewhere is garbage.
    if msg_type & CONTINUATION != 0 && base != MSG_SHARE {
        return Err(FrameError::UnknownType(msg_type));
    }
    Ok(())
}

/// SHARE chunk payload: element count, then `(position, element)` pairs.
pub fn encode_share_chunk(positions: &[u64], elems: &[Perm]) -> Vec<u8> {
    debug_assert_eq!(positions.len(), elems.len());
    let mut out = Vec::with_capacity(8 + 9 * positions.len());
    out.extend_from_slice(&(positions.len() as u64).to_be_bytes());
    for (&p, &g) in positions.iter().zip(elems) {
        out.extend_from_slice(&p.to_be_bytes());
        out.push(g.code());
    }
    out
}

pub fn decode_share_chunk(payload: &[u8]) -> Result<(Vec<u64>, Vec<Perm>), FrameError> {
    if payload.len() < 8 {
        return Err(FrameError::BadPayload("SHARE"));
    }
    let count = u64::from_be_bytes(payload[..8].try_into().unwrap()) as usize;
    if payload.len() != 8 + 9 * count {
        return Err(FrameError::BadPayload("SHARE"));
    }
    let mut positions = Vec::with_capacity(count);
    let mut elems = Vec::with_capacity(count);
    for i in 0..count {
        let at = 8 + 9 * i;
        positions.push(u64::from_be_bytes(payload[at..at + 8].try_into().unwrap()));
        elems.push(
            Perm::from_code(payload[at + 8]).map_err(|_| FrameError::BadPayload("SHARE"))?,
        );
    }
    Ok((positions, elems))
}

/// Splits a share into SHARE frames of at most [`SHARE_CHUNK`] elements;
/// every frame except the last carries the continuation flag. Empty shares
/// still produce one (empty, final) frame.
pub fn share_frames(session_id: [u8; 16], positions: &[u64], elems: &[Perm]) -> Vec<Frame> {
    let mut frames = Vec::new();
    let mut at = 0usize;
    loop {
        let end = (at + SHARE_CHUNK).min(positions.len());
        let last = end == positions.len();
        let msg_type = if last { MSG_SHARE } else { MSG_SHARE | CONTINUATION };
        frames.push(Frame::new(
            msg_type,
            session_id,
            encode_share_chunk(&positions[at..end], &elems[at..end]),
        ));
        if last {
            break;
        }
        at = end;
    }
    frames
}

pub fn variant_to_wire(v: Variant) -> u8 {
    match v {
        Variant::Ofsgp => 0,
        Variant::Fsgp => 1,
        Variant::Ugp => 2,
    }
}

pub fn variant_from_wire(b: u8) -> Result<Variant, FrameError> {
    match b {
        0 => Ok(Variant::Ofsgp),
        1 => Ok(Variant::Fsgp),
        2 => Ok(Variant::Ugp),
        _ => Err(FrameError::BadPayload("variant")),
    }
}

/// REGISTER_PUB payload: metadata width, then the opaque content blob to
/// forward on a match.
pub fn encode_register_pub(n: u32, content: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + content.len());
    out.extend_from_slice(&n.to_be_bytes());
    out.extend_from_slice(content);
    out
}

pub fn decode_register_pub(payload: &[u8]) -> Result<(u32, &[u8]), FrameError> {
    if payload.len() < 4 {
        return Err(FrameError::BadPayload("REGISTER_PUB"));
    }
    Ok((u32::from_be_bytes(payload[..4].try_into().unwrap()), &payload[4..]))
}

/// REGISTER_SUB payload: variant byte plus the depth bound.
pub fn encode_register_sub(variant: Variant, depth_bound: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(5);
    out.push(variant_to_wire(variant));
    out.extend_from_slice(&depth_bound.to_be_bytes());
    out
}

pub fn decode_register_sub(payload: &[u8]) -> Result<(Variant, u32), FrameError> {
    if payload.len() != 5 {
        return Err(FrameError::BadPayload("REGISTER_SUB"));
    }
    Ok((
        variant_from_wire(payload[0])?,
        u32::from_be_bytes(payload[1..5].try_into().unwrap()),
    ))
}

/// STRUCTURE payload: the negotiated `(variant, n, depth bound)` triple,
/// from which either endpoint re-derives the full deterministic layout.
pub fn encode_structure(variant: Variant, n: u32, depth_bound: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(9);
    out.push(variant_to_wire(variant));
    out.extend_from_slice(&n.to_be_bytes());
    out.extend_from_slice(&depth_bound.to_be_bytes());
    out
}

pub fn decode_structure(payload: &[u8]) -> Result<(Variant, u32, u32), FrameError> {
    if payload.len() != 9 {
        return Err(FrameError::BadPayload("STRUCTURE"));
    }
    Ok((
        variant_from_wire(payload[0])?,
        u32::from_be_bytes(payload[1..5].try_into().unwrap()),
        u32::from_be_bytes(payload[5..9].try_into().unwrap()),
    ))
}
