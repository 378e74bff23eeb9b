//! The universal-matcher variant: the broker's layout is the transform of
//! a circuit that *runs* an encoded group program against the metadata, so
//! one structure serves every predicate of admissible depth.
//!
//! The subscriber turns its predicate into a paired-element program, pads
//! it to the negotiated inner length, and serialises it bitwise: per
//! element, 25 unary bits for the bit-0 element, 25 for the bit-1 element,
//! and a big-endian `lg n` metadata index. Those bits are its inputs to the
//! matcher circuit; the publisher's inputs are the metadata bits. Slot
//! ownership in the transformed matcher follows the owner of the input
//! each slot reads (dummy slots fall to the subscriber, whose element
//! choice they never affect).

use crate::barrington::{stream_transform_infallible, transform, GroupProgram, ProgramElement};
use crate::blinding::{blind_partial, RandomTape};
use crate::circuit::{Circuit, Gate, InputBit};
use crate::s5::{Perm, ALPHA, IDENTITY, UNARY_BITS};

use super::fixed::share_from_pairs;
use super::{ProtocolError, Role, SessionStructure, Share};

/// Serialises a program for the matcher circuit's subscriber inputs.
/// Dummy-input elements always hold an equal pair, so they are encoded as
/// if they read metadata bit 0.
pub fn ugp_encode_predicate(program: &GroupProgram, n: u32) -> Result<Vec<bool>, ProtocolError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(ProtocolError::BadParams(format!(
            "metadata width must be a power of two, got {n}"
        )));
    }
    let w = n.trailing_zeros();
    let mut bits = Vec::with_capacity(program.elements.len() * (2 * UNARY_BITS + w as usize));
    for el in &program.elements {
        let index = match el.input {
            InputBit::Publisher(k) if k < n => k,
            InputBit::Publisher(k) => {
                return Err(ProtocolError::IndexOutOfRange { index: k, n })
            }
            InputBit::Dummy => {
                debug_assert_eq!(el.zero, el.one, "dummy slots must hold equal pairs");
                0
            }
            other @ InputBit::Subscriber(_) => return Err(ProtocolError::BadInput(other)),
        };
        bits.extend_from_slice(&el.zero.unary_bits());
        bits.extend_from_slice(&el.one.unary_bits());
        for j in (0..w).rev() {
            bits.push((index >> j) & 1 == 1);
        }
    }
    Ok(bits)
}

/// Inverse of [`ugp_encode_predicate`]. Dummy inputs are not recoverable —
/// they decode as metadata bit 0, which selects the same element either
/// way.
pub fn ugp_decode_predicate(bits: &[bool], n: u32) -> Result<GroupProgram, ProtocolError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(ProtocolError::BadParams(format!(
            "metadata width must be a power of two, got {n}"
        )));
    }
    let w = n.trailing_zeros() as usize;
    let per = 2 * UNARY_BITS + w;
    if bits.len() % per != 0 {
        return Err(ProtocolError::BadParams(format!(
            "encoded length {} is not a multiple of the {per}-bit element size",
            bits.len()
        )));
    }
    let mut elements = Vec::with_capacity(bits.len() / per);
    for chunk in bits.chunks(per) {
        let mut g0 = [false; UNARY_BITS];
        g0.copy_from_slice(&chunk[..UNARY_BITS]);
        let mut g1 = [false; UNARY_BITS];
        g1.copy_from_slice(&chunk[UNARY_BITS..2 * UNARY_BITS]);
        let zero = Perm::from_unary(&g0)
            .map_err(|_| ProtocolError::BadParams("invalid unary element".into()))?;
        let one = Perm::from_unary(&g1)
            .map_err(|_| ProtocolError::BadParams("invalid unary element".into()))?;
        let mut index = 0u32;
        for &b in &chunk[2 * UNARY_BITS..] {
            index = (index << 1) | b as u32;
        }
        elements.push(ProgramElement { zero, one, input: InputBit::Publisher(index) });
    }
    Ok(GroupProgram { elements })
}

/// Publisher-owned slot count of the transformed matcher, computed from
/// the circuit alone. Slot inputs do not depend on gate polarity, so the
/// count per node is: double each operand's count per AND/OR level
/// (padding slots read the dummy input, which the subscriber owns).
pub(super) fn count_owned_slots(circuit: &Circuit) -> u64 {
    let mut counts = vec![0u64; circuit.gates().len()];
    for (i, gate) in circuit.gates().iter().enumerate() {
        counts[i] = match *gate {
            Gate::Input(InputBit::Publisher(_)) => 1,
            Gate::Input(_) | Gate::Const(_) => 0,
            Gate::Not(x) => counts[x as usize],
            Gate::And(a, b) | Gate::Or(a, b) => {
                2 * (counts[a as usize] + counts[b as usize])
            }
        };
    }
    counts[circuit.output() as usize]
}

/// Pads a program to `len` with inert dummy slots.
fn pad_program(mut p: GroupProgram, len: u64) -> GroupProgram {
    debug_assert!(p.elements.len() as u64 <= len);
    p.elements.resize(
        len as usize,
        ProgramElement { zero: IDENTITY, one: IDENTITY, input: InputBit::Dummy },
    );
    p
}

/// Streams the matcher transform once, building this party's unblinded
/// element vector (identity at unowned slots) and the ownership mask.
fn fill_slots(
    circuit: &Circuit,
    total: u64,
    mine: impl Fn(&ProgramElement) -> Option<Perm>,
) -> (Vec<Perm>, Vec<bool>) {
    let mut full = vec![IDENTITY; total as usize];
    let mut owned = vec![false; total as usize];
    let mut at = 0usize;
    stream_transform_infallible(circuit, ALPHA, |el| {
        if let Some(g) = mine(&el) {
            full[at] = g;
            owned[at] = true;
        }
        at += 1;
    })
    .expect("α is a 5-cycle");
    debug_assert_eq!(at as u64, total);
    (full, owned)
}

pub(super) fn subscriber_share(
    structure: &SessionStructure,
    predicate: &Circuit,
    tape: &mut RandomTape,
    session_id: [u8; 16],
) -> Result<Share, ProtocolError> {
    let (circuit, inner_len) = structure.ugp_parts().expect("UGP structure");
    let program = pad_program(transform(predicate, ALPHA).expect("α is a 5-cycle"), inner_len);
    let encoded = ugp_encode_predicate(&program, structure.n())?;

    let (full, owned) = fill_slots(circuit, structure.total_slots(), |el| match el.input {
        InputBit::Subscriber(k) => {
            Some(if encoded[k as usize] { el.one } else { el.zero })
        }
        InputBit::Dummy => Some(el.zero),
        InputBit::Publisher(_) => None,
    });
    let blinded = blind_partial(&full, |i| owned[i as usize], tape)?;
    Ok(share_from_pairs(session_id, Role::Subscriber, blinded))
}

pub(super) fn publisher_share(
    structure: &SessionStructure,
    metadata: &[bool],
    tape: &mut RandomTape,
    session_id: [u8; 16],
) -> Result<Share, ProtocolError> {
    let (circuit, _) = structure.ugp_parts().expect("UGP structure");
    let (full, owned) = fill_slots(circuit, structure.total_slots(), |el| match el.input {
        InputBit::Publisher(k) => {
            Some(if metadata[k as usize] { el.one } else { el.zero })
        }
        _ => None,
    });
    let blinded = blind_partial(&full, |i| owned[i as usize], tape)?;
    Ok(share_from_pairs(session_id, Role::Publisher, blinded))
}
