//! The broker service: accepts one publisher and one subscriber connection
//! per session id, negotiates the structure, collects both blinded shares,
//! multiplies, and forwards the publisher's content only on a match.
//!
//! The broker holds no tape, seed, metadata, or predicate — its entire
//! view is the registration parameters and the blinded share elements.

use std::collections::HashMap;
use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use gpmatch_core::protocol::{
    broker_match, negotiate_structure, Role, SessionStructure, Share, Variant,
};
use gpmatch_core::Perm;

use crate::frame::{
    decode_register_pub, decode_register_sub, decode_share_chunk, encode_structure, Frame,
    MSG_ERROR, MSG_PAYLOAD, MSG_REGISTER_PUB, MSG_REGISTER_SUB, MSG_RESULT, MSG_SHARE,
    MSG_STRUCTURE,
};

/// Default broker TCP port.
pub const DEFAULT_PORT: u16 = 7120;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Phase {
    Negotiating,
    AwaitingShares,
    Closed,
}

#[derive(Default)]
struct ShareAccum {
    positions: Vec<u64>,
    elems: Vec<Perm>,
    done: bool,
}

struct SessionEntry {
    phase: Phase,
    n: Option<u32>,
    content: Option<Vec<u8>>,
    params: Option<(Variant, u32)>,
    structure: Option<SessionStructure>,
    writers: [Option<TcpStream>; 2],
    accums: [ShareAccum; 2],
}

impl SessionEntry {
    fn new() -> SessionEntry {
        SessionEntry {
            phase: Phase::Negotiating,
            n: None,
            content: None,
            params: None,
            structure: None,
            writers: [None, None],
            accums: [ShareAccum::default(), ShareAccum::default()],
        }
    }
}

fn role_index(role: Role) -> usize {
    match role {
        Role::Publisher => 0,
        Role::Subscriber => 1,
    }
}

type SessionMap = Mutex<HashMap<[u8; 16], Arc<Mutex<SessionEntry>>>>;

/// A broker accept loop running on its own thread. Sessions from
/// concurrent connections are isolated by session id.
pub struct Broker {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Broker {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving.
    pub fn spawn(addr: impl ToSocketAddrs) -> std::io::Result<Broker> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop2 = stop.clone();
        let handle = thread::spawn(move || accept_loop(listener, &stop2));
        Ok(Broker { addr, stop, handle: Some(handle) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting and joins the accept thread; connections already
    /// being served run to completion on their own threads.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Broker {
    fn drop(&mut self) {
        if self.handle.is_some() {
            self.stop.store(true, Ordering::SeqCst);
            let _ = TcpStream::connect(self.addr);
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }
}

/// Blocking broker: binds and serves until the process ends. The service
/// deliberately takes no randomness parameters of any kind.
pub fn broker_serve(addr: impl ToSocketAddrs) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    accept_loop(listener, &AtomicBool::new(false));
    Ok(())
}

fn accept_loop(listener: TcpListener, stop: &AtomicBool) {
    let sessions: Arc<SessionMap> = Arc::new(Mutex::new(HashMap::new()));
    for stream in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let Ok(stream) = stream else { continue };
        let sessions = sessions.clone();
        thread::spawn(move || handle_connection(stream, &sessions));
    }
}

fn send(stream: &mut TcpStream, frame: &Frame) {
    let _ = frame.write_to(stream);
    let _ = stream.flush();
}

fn send_error(stream: &mut TcpStream, session_id: [u8; 16], msg: &str) {
    send(stream, &Frame::new(MSG_ERROR, session_id, msg.as_bytes().to_vec()));
}

fn handle_connection(mut stream: TcpStream, sessions: &SessionMap) {
    let Ok(first) = Frame::read_from(&mut stream) else { return };
    let sid = first.session_id;
    let role = match first.base_type() {
        MSG_REGISTER_PUB => Role::Publisher,
        MSG_REGISTER_SUB => Role::Subscriber,
        _ => {
            send_error(&mut stream, sid, "expected a registration frame");
            return;
        }
    };

    let entry = sessions
        .lock()
        .unwrap()
        .entry(sid)
        .or_insert_with(|| Arc::new(Mutex::new(SessionEntry::new())))
        .clone();

    if register(&entry, role, &first, &mut stream).is_err() {
        return;
    }

    // Share phase: keep reading this connection's frames until it closes
    // or the session errors out.
    loop {
        let Ok(frame) = Frame::read_from(&mut stream) else { break };
        let mut e = entry.lock().unwrap();
        if frame.session_id != sid
            || frame.base_type() != MSG_SHARE
            || e.phase != Phase::AwaitingShares
            || e.accums[role_index(role)].done
        {
            let msg = if e.accums[role_index(role)].done {
                "share already complete for this role"
            } else {
                "unexpected frame"
            };
            send_error(&mut stream, sid, msg);
            close(&mut e);
            break;
        }
        let Ok((positions, elems)) = decode_share_chunk(&frame.payload) else {
            send_error(&mut stream, sid, "malformed share chunk");
            close(&mut e);
            break;
        };
        let accum = &mut e.accums[role_index(role)];
        accum.positions.extend(positions);
        accum.elems.extend(elems);
        if !frame.is_continuation() {
            accum.done = true;
            if e.accums.iter().all(|a| a.done) {
                conclude(&mut e, sid);
                break;
            }
        }
    }

    // Read the phase in its own scope: taking the map lock while holding
    // an entry lock would invert the registration path's lock order.
    let closed = {
        let e = entry.lock().unwrap();
        e.phase == Phase::Closed
    };
    if closed {
        sessions.lock().unwrap().remove(&sid);
    }
}

fn register(
    entry: &Mutex<SessionEntry>,
    role: Role,
    frame: &Frame,
    stream: &mut TcpStream,
) -> Result<(), ()> {
    let sid = frame.session_id;
    let mut e = entry.lock().unwrap();
    if e.phase != Phase::Negotiating {
        send_error(stream, sid, "session is past negotiation");
        return Err(());
    }
    match role {
        Role::Publisher => {
            if e.n.is_some() {
                send_error(stream, sid, "publisher already registered");
                close(&mut e);
                return Err(());
            }
            let Ok((n, content)) = decode_register_pub(&frame.payload) else {
                send_error(stream, sid, "malformed publisher registration");
                close(&mut e);
                return Err(());
            };
            e.n = Some(n);
            e.content = Some(content.to_vec());
        }
        Role::Subscriber => {
            if e.params.is_some() {
                send_error(stream, sid, "subscriber already registered");
                close(&mut e);
                return Err(());
            }
            let Ok(params) = decode_register_sub(&frame.payload) else {
                send_error(stream, sid, "malformed subscriber registration");
                close(&mut e);
                return Err(());
            };
            e.params = Some(params);
        }
    }
    let Ok(writer) = stream.try_clone() else {
        close(&mut e);
        return Err(());
    };
    e.writers[role_index(role)] = Some(writer);

    if let (Some(n), Some((variant, depth_bound))) = (e.n, e.params) {
        match negotiate_structure(variant, n, depth_bound) {
            Ok(structure) => {
                let reply =
                    Frame::new(MSG_STRUCTURE, sid, encode_structure(variant, n, depth_bound));
                for w in e.writers.iter_mut().flatten() {
                    send(w, &reply);
                }
                e.structure = Some(structure);
                e.phase = Phase::AwaitingShares;
            }
            Err(err) => {
                let msg = err.to_string();
                for w in e.writers.iter_mut().flatten() {
                    send_error(w, sid, &msg);
                }
                close(&mut e);
                return Err(());
            }
        }
    }
    Ok(())
}

/// Both shares are in: multiply, notify both parties, and forward the
/// content to the subscriber exactly when the product says match.
fn conclude(e: &mut SessionEntry, sid: [u8; 16]) {
    let structure = e.structure.take().expect("share phase implies structure");
    let mk_share = |role: Role, a: &mut ShareAccum| Share {
        session_id: sid,
        role,
        positions: std::mem::take(&mut a.positions),
        elems: std::mem::take(&mut a.elems),
    };
    let pub_share = mk_share(Role::Publisher, &mut e.accums[0]);
    let sub_share = mk_share(Role::Subscriber, &mut e.accums[1]);

    match broker_match(&structure, &pub_share, &sub_share) {
        Ok(result) => {
            if result.matched {
                let content = e.content.take().unwrap_or_default();
                if let Some(w) = e.writers[1].as_mut() {
                    send(w, &Frame::new(MSG_PAYLOAD, sid, content));
                }
            }
            let verdict =
                Frame::new(MSG_RESULT, sid, vec![u8::from(result.matched)]);
            for w in e.writers.iter_mut().flatten() {
                send(w, &verdict);
            }
        }
        Err(err) => {
            let msg = err.to_string();
            for w in e.writers.iter_mut().flatten() {
                send_error(w, sid, &msg);
            }
        }
    }
    close(e);
}

fn close(e: &mut SessionEntry) {
    e.phase = Phase::Closed;
    for w in e.writers.iter_mut().flatten() {
        let _ = w.shutdown(std::net::Shutdown::Both);
    }
    e.writers = [None, None];
}
