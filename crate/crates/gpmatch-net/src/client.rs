//! Publisher and subscriber clients: register, receive the negotiated
//! structure, compute and stream the local share, and await the verdict.

use std::io::Write;
use std::net::{TcpStream, ToSocketAddrs};

use gpmatch_core::blinding::RandomTape;
use gpmatch_core::circuit::Circuit;
use gpmatch_core::protocol::{negotiate_structure, publisher_share, subscriber_share, Variant};

use crate::frame::{
    decode_structure, encode_register_pub, encode_register_sub, share_frames, Frame, MSG_ERROR,
    MSG_PAYLOAD, MSG_REGISTER_PUB, MSG_REGISTER_SUB, MSG_RESULT, MSG_STRUCTURE,
};
use crate::NetError;

/// What a subscriber gets back: the one-bit verdict, plus the publisher's
/// content exactly when it matched.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SessionOutcome {
    pub matched: bool,
    pub payload: Option<Vec<u8>>,
}

/// Runs the publisher's side of one session and returns the match bit the
/// broker reported.
pub fn publish(
    endpoint: impl ToSocketAddrs,
    session_id: [u8; 16],
    n: u32,
    metadata: &[bool],
    content: &[u8],
    tape: &mut RandomTape,
) -> Result<bool, NetError> {
    let mut stream = TcpStream::connect(endpoint)?;
    Frame::new(MSG_REGISTER_PUB, session_id, encode_register_pub(n, content))
        .write_to(&mut stream)?;
    stream.flush()?;

    let frame = read_reply(&mut stream)?;
    if frame.base_type() != MSG_STRUCTURE {
        return Err(NetError::Unexpected { got: frame.base_type(), want: "STRUCTURE" });
    }
    let (variant, sn, depth_bound) = decode_structure(&frame.payload)?;
    if sn != n {
        return Err(NetError::Mismatch(format!(
            "broker negotiated n={sn}, registered n={n}"
        )));
    }
    let structure = negotiate_structure(variant, sn, depth_bound)?;
    let share = publisher_share(&structure, metadata, tape, session_id)?;
    for f in share_frames(session_id, &share.positions, &share.elems) {
        f.write_to(&mut stream)?;
    }
    stream.flush()?;

    let frame = read_reply(&mut stream)?;
    match frame.base_type() {
        MSG_RESULT if frame.payload.len() == 1 => Ok(frame.payload[0] == 1),
        MSG_RESULT => Err(NetError::Mismatch("RESULT payload must be one byte".into())),
        other => Err(NetError::Unexpected { got: other, want: "RESULT" }),
    }
}

/// Runs the subscriber's side of one session: declares the variant and
/// depth bound, sends the blinded predicate share, and collects the
/// verdict and (on a match) the forwarded content.
pub fn subscribe(
    endpoint: impl ToSocketAddrs,
    session_id: [u8; 16],
    variant: Variant,
    depth_bound: u32,
    predicate: &Circuit,
    tape: &mut RandomTape,
) -> Result<SessionOutcome, NetError> {
    let mut stream = TcpStream::connect(endpoint)?;
    Frame::new(MSG_REGISTER_SUB, session_id, encode_register_sub(variant, depth_bound))
        .write_to(&mut stream)?;
    stream.flush()?;

    let frame = read_reply(&mut stream)?;
    if frame.base_type() != MSG_STRUCTURE {
        return Err(NetError::Unexpected { got: frame.base_type(), want: "STRUCTURE" });
    }
    let (sv, n, sd) = decode_structure(&frame.payload)?;
    if sv != variant || sd != depth_bound {
        return Err(NetError::Mismatch(format!(
            "broker negotiated ({sv:?}, D={sd}), requested ({variant:?}, D={depth_bound})"
        )));
    }
    let structure = negotiate_structure(sv, n, sd)?;
    let share = subscriber_share(&structure, predicate, tape, session_id)?;
    for f in share_frames(session_id, &share.positions, &share.elems) {
        f.write_to(&mut stream)?;
    }
    stream.flush()?;

    let mut payload = None;
    loop {
        let frame = read_reply(&mut stream)?;
        match frame.base_type() {
            MSG_PAYLOAD => payload = Some(frame.payload),
            MSG_RESULT if frame.payload.len() == 1 => {
                return Ok(SessionOutcome { matched: frame.payload[0] == 1, payload });
            }
            MSG_RESULT => {
                return Err(NetError::Mismatch("RESULT payload must be one byte".into()))
            }
            other => return Err(NetError::Unexpected { got: other, want: "PAYLOAD or RESULT" }),
        }
    }
}

/// Reads one frame, converting broker-reported errors.
fn read_reply(stream: &mut TcpStream) -> Result<Frame, NetError> {
    let frame = Frame::read_from(stream)?;
    if frame.base_type() == MSG_ERROR {
        return Err(NetError::Remote(String::from_utf8_lossy(&frame.payload).into_owned()));
    }
    Ok(frame)
}
