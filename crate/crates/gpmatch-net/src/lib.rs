//! Three-party wire layer for confidential matching sessions.
//!
//! A broker accepts one publisher and one subscriber connection per
//! session id over TCP, relays the negotiated session structure, collects
//! both blinded shares, and forwards the publisher's content to the
//! subscriber only when the product of the merged shares says match. The
//! parties' shared tape never appears on the wire or in the broker.
//!
//! Frames are length-prefixed (big-endian) with a 1-byte type and a
//! 16-byte session id; shares stream in bounded chunks using a
//! continuation bit, since universal-variant shares can run to millions of
//! elements. Session ids are agreed between publisher and subscriber
//! out-of-band, like the tape itself.

mod broker;
mod client;
pub mod frame;

pub use broker::{broker_serve, Broker, DEFAULT_PORT};
pub use client::{publish, subscribe, SessionOutcome};

use gpmatch_core::protocol::ProtocolError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Frame(#[from] frame::FrameError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("broker reported: {0}")]
    Remote(String),
    #[error("unexpected message type {got} while waiting for {want}")]
    Unexpected { got: u8, want: &'static str },
    #[error("negotiation mismatch: {0}")]
    Mismatch(String),
}

impl From<frame::ReadError> for NetError {
    fn from(e: frame::ReadError) -> NetError {
        match e {
            frame::ReadError::Io(io) => NetError::Io(io),
            frame::ReadError::Frame(f) => NetError::Frame(f),
        }
    }
}
