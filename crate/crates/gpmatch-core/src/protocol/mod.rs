//! The matching sessions: structure negotiation, share construction for
//! both parties, and the broker's product walk.
//!
//! A session runs between a publisher holding metadata bits `m`, a
//! subscriber holding a predicate circuit `P`, and a broker that learns
//! nothing but `P(m)`. All three agree on a [`SessionStructure`] — the
//! variant, the metadata width `n`, and the predicate depth bound `D` —
//! which fixes the broker's slot layout before any values exist. Each party
//! then fills and blinds its own slots using the shared random tape
//! (which the broker never sees) and the broker multiplies the interleaved
//! elements: the product is α exactly when the predicate accepts.
//!
//! Variants differ in how predicate structure is hidden:
//!
//! - `Ofsgp` — every metadata bit crosses a hand-optimised selector block
//!   of 2n publisher slots per predicate leaf.
//! - `Fsgp` — the selector block is itself a transformed selector circuit,
//!   2n² publisher slots per leaf (4n² before the subscriber folds its
//!   selection bits away).
//! - `Ugp` — the broker's layout is the transform of a universal matcher
//!   circuit; the subscriber's input is the encoded predicate program.

mod fixed;
mod selector;
mod ugp;

pub use selector::{build_fs_selector_block, build_ofs_selector_block, SelectorBlock};
pub use ugp::{ugp_decode_predicate, ugp_encode_predicate};

use thiserror::Error;

use crate::blinding::{BlindError, RandomTape};
use crate::circuit::{Circuit, CircuitError, InputBit};
use crate::s5::{Perm, ALPHA, IDENTITY};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Variant {
    Ofsgp,
    Fsgp,
    Ugp,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Role {
    Publisher,
    Subscriber,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("bad session parameters: {0}")]
    BadParams(String),
    #[error("selector index {k} out of range for {n} metadata bits")]
    BadIndex { k: u32, n: u32 },
    #[error("predicate depth {depth} exceeds the negotiated bound {bound}")]
    DepthExceeded { depth: u32, bound: u32 },
    #[error("predicate reads {0}, which is not a metadata bit of this session")]
    BadInput(InputBit),
    #[error("metadata holds {got} bits, session expects {want}")]
    BadLength { got: usize, want: usize },
    #[error("encoded element index {index} out of range for {n} metadata bits")]
    IndexOutOfRange { index: u32, n: u32 },
    #[error("shares leave position {0} uncovered")]
    IncompleteShares(u64),
    #[error("both shares claim position {0}")]
    PositionOverlap(u64),
    #[error(transparent)]
    Tape(#[from] BlindError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// The negotiated, value-free layout of one session: who owns which of the
/// Λ broker slots and which metadata bit each publisher slot reads. For a
/// given `(variant, n, depth_bound)` the structure is fully deterministic,
/// so all predicates of admissible depth share it — that is what keeps the
/// publisher's share independent of the predicate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SessionStructure {
    variant: Variant,
    n: u32,
    depth_bound: u32,
    detail: Detail,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Detail {
    /// OFSGP/FSGP: a skeleton of `4^depth_bound` selector blocks. The
    /// broker sequence alternates subscriber interstitials and publisher
    /// slots, so Λ = 2·(publisher slots) + 1.
    Fixed { block: SelectorBlock, skeleton_len: u64 },
    /// UGP: the broker sequence is the transform of the universal matcher
    /// circuit; slot ownership follows the owner of the referenced input.
    Ugp { circuit: Circuit, inner_len: u64, publisher_slots: u64 },
}

impl SessionStructure {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Metadata bit-count n.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Maximum admissible predicate depth D.
    pub fn depth_bound(&self) -> u32 {
        self.depth_bound
    }

    /// Number of predicate leaf slots the skeleton reserves (`4^D`); for
    /// UGP, the length of the inner program the subscriber encodes.
    pub fn skeleton_len(&self) -> u64 {
        match &self.detail {
            Detail::Fixed { skeleton_len, .. } => *skeleton_len,
            Detail::Ugp { inner_len, .. } => *inner_len,
        }
    }

    /// Slots the publisher fills with `α^{m_i}` (or, for UGP, with its half
    /// of the element choices).
    pub fn publisher_slots(&self) -> u64 {
        match &self.detail {
            Detail::Fixed { block, skeleton_len } => {
                block.publisher_bits().len() as u64 * skeleton_len
            }
            Detail::Ugp { publisher_slots, .. } => *publisher_slots,
        }
    }

    /// Slot count of the structure before the subscriber folds constants
    /// together: per-block template length × skeleton for the fixed
    /// variants, Λ for UGP.
    pub fn structural_slots(&self) -> u64 {
        match &self.detail {
            Detail::Fixed { block, skeleton_len } => block.structural_len() * skeleton_len,
            Detail::Ugp { .. } => self.total_slots(),
        }
    }

    /// Λ — the length of the sequence the broker multiplies.
    pub fn total_slots(&self) -> u64 {
        match &self.detail {
            Detail::Fixed { .. } => 2 * self.publisher_slots() + 1,
            Detail::Ugp { circuit, .. } => 1u64 << (2 * circuit.depth()),
        }
    }

    pub(crate) fn fixed_parts(&self) -> Option<(&SelectorBlock, u64)> {
        match &self.detail {
            Detail::Fixed { block, skeleton_len } => Some((block, *skeleton_len)),
            Detail::Ugp { .. } => None,
        }
    }

    pub(crate) fn ugp_parts(&self) -> Option<(&Circuit, u64)> {
        match &self.detail {
            Detail::Ugp { circuit, inner_len, .. } => Some((circuit, *inner_len)),
            Detail::Fixed { .. } => None,
        }
    }
}

/// One party's blinded contribution: the elements at the positions it owns,
/// in strictly increasing position order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Share {
    pub session_id: [u8; 16],
    pub role: Role,
    pub positions: Vec<u64>,
    pub elems: Vec<Perm>,
}

/// The broker's verdict. `broker_value` is `α` on a match and the identity
/// on a miss; anything else means the shares were malformed, which is
/// reported as a miss with `anomalous` set.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MatchResult {
    pub matched: bool,
    pub broker_value: Perm,
    pub anomalous: bool,
}

/// Builds the deterministic session layout. OFSGP accepts any `n ≥ 1`;
/// FSGP and UGP require `n` to be a power of two.
pub fn negotiate_structure(
    variant: Variant,
    n: u32,
    depth_bound: u32,
) -> Result<SessionStructure, ProtocolError> {
    if n == 0 {
        return Err(ProtocolError::BadParams("metadata width must be at least 1".into()));
    }
    if depth_bound > 15 {
        return Err(ProtocolError::BadParams(format!(
            "depth bound {depth_bound} is beyond any practical session size"
        )));
    }
    let skeleton_len = 1u64 << (2 * depth_bound);
    let detail = match variant {
        Variant::Ofsgp => {
            Detail::Fixed { block: build_ofs_selector_block(n), skeleton_len }
        }
        Variant::Fsgp => {
            Detail::Fixed { block: build_fs_selector_block(n)?, skeleton_len }
        }
        Variant::Ugp => {
            let circuit = crate::circuit::build_ugp_circuit(n, skeleton_len)?;
            // Λ = 4^{matcher depth}; past 4^13 the shares stop fitting in
            // memory, so refuse rather than abort in the allocator later.
            if circuit.depth() > 13 {
                return Err(ProtocolError::BadParams(format!(
                    "universal matcher for n={n}, D={depth_bound} needs 4^{} slots",
                    circuit.depth()
                )));
            }
            let publisher_slots = ugp::count_owned_slots(&circuit);
            Detail::Ugp { circuit, inner_len: skeleton_len, publisher_slots }
        }
    };
    Ok(SessionStructure { variant, n, depth_bound, detail })
}

/// The subscriber's half of a session: transform the predicate, expand it
/// over the structure, and blind the subscriber-owned positions.
pub fn subscriber_share(
    structure: &SessionStructure,
    predicate: &Circuit,
    tape: &mut RandomTape,
    session_id: [u8; 16],
) -> Result<Share, ProtocolError> {
    check_predicate(structure, predicate)?;
    match structure.variant {
        Variant::Ofsgp | Variant::Fsgp => {
            fixed::subscriber_share(structure, predicate, tape, session_id)
        }
        Variant::Ugp => ugp::subscriber_share(structure, predicate, tape, session_id),
    }
}

/// The publisher's half: per owned slot, `α` or the identity according to
/// the referenced metadata bit, blinded. Depends only on the structure, the
/// metadata, and the tape — never on the predicate.
pub fn publisher_share(
    structure: &SessionStructure,
    metadata: &[bool],
    tape: &mut RandomTape,
    session_id: [u8; 16],
) -> Result<Share, ProtocolError> {
    if metadata.len() != structure.n as usize {
        return Err(ProtocolError::BadLength {
            got: metadata.len(),
            want: structure.n as usize,
        });
    }
    match structure.variant {
        Variant::Ofsgp | Variant::Fsgp => fixed::publisher_share(structure, metadata, tape, session_id),
        Variant::Ugp => ugp::publisher_share(structure, metadata, tape, session_id),
    }
}

fn check_predicate(structure: &SessionStructure, predicate: &Circuit) -> Result<(), ProtocolError> {
    let depth = predicate.depth();
    if depth > structure.depth_bound {
        return Err(ProtocolError::DepthExceeded { depth, bound: structure.depth_bound });
    }
    for &bit in predicate.inputs() {
        match bit {
            InputBit::Publisher(k) if k < structure.n => {}
            InputBit::Dummy => {}
            other => return Err(ProtocolError::BadInput(other)),
        }
    }
    Ok(())
}

/// Interleaves the two shares by position and multiplies left to right.
/// The shares must tile `0..Λ` exactly; the tapes never enter.
pub fn broker_match(
    structure: &SessionStructure,
    publisher: &Share,
    subscriber: &Share,
) -> Result<MatchResult, ProtocolError> {
    let total = structure.total_slots();
    let mut ip = 0usize;
    let mut is = 0usize;
    let mut value = IDENTITY;
    for pos in 0..total {
        let from_pub = publisher.positions.get(ip) == Some(&pos);
        let from_sub = subscriber.positions.get(is) == Some(&pos);
        match (from_pub, from_sub) {
            (true, true) => return Err(ProtocolError::PositionOverlap(pos)),
            (true, false) => {
                value = value.mul(publisher.elems[ip]);
                ip += 1;
            }
            (false, true) => {
                value = value.mul(subscriber.elems[is]);
                is += 1;
            }
            (false, false) => return Err(ProtocolError::IncompleteShares(pos)),
        }
    }
    if ip != publisher.positions.len() || is != subscriber.positions.len() {
        return Err(ProtocolError::IncompleteShares(total));
    }
    Ok(verdict(value))
}

fn verdict(value: Perm) -> MatchResult {
    MatchResult {
        matched: value == ALPHA,
        broker_value: value,
        anomalous: value != ALPHA && value != IDENTITY,
    }
}

/// Runs a whole honest session in-process: both parties blind against
/// clones of the same tape, and the broker multiplies the merged shares.
pub fn run_session(
    structure: &SessionStructure,
    predicate: &Circuit,
    metadata: &[bool],
    tape: &RandomTape,
) -> Result<MatchResult, ProtocolError> {
    let session_id = [0u8; 16];
    let sub = subscriber_share(structure, predicate, &mut tape.clone(), session_id)?;
    let pb = publisher_share(structure, metadata, &mut tape.clone(), session_id)?;
    broker_match(structure, &pb, &sub)
}

/// Convenience wrapper: negotiate a UGP structure and run one session.
pub fn ugp_match_session(
    n: u32,
    depth_bound: u32,
    predicate: &Circuit,
    metadata: &[bool],
    tape: &RandomTape,
) -> Result<MatchResult, ProtocolError> {
    let structure = negotiate_structure(Variant::Ugp, n, depth_bound)?;
    run_session(&structure, predicate, metadata, tape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_sexp;

    fn tape(seed: u64) -> RandomTape {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        RandomTape::from_seed(s)
    }

    #[test]
    fn structures_are_deterministic() {
        for variant in [Variant::Ofsgp, Variant::Fsgp, Variant::Ugp] {
            let a = negotiate_structure(variant, 2, 1).unwrap();
            let b = negotiate_structure(variant, 2, 1).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn structure_slot_laws() {
        // OFSGP: 2n publisher slots per skeleton slot, any n ≥ 1.
        for (n, d) in [(1u32, 0u32), (2, 1), (3, 1), (4, 2), (8, 0)] {
            let s = negotiate_structure(Variant::Ofsgp, n, d).unwrap();
            let skeleton = 1u64 << (2 * d);
            assert_eq!(s.skeleton_len(), skeleton);
            assert_eq!(s.publisher_slots(), 2 * n as u64 * skeleton);
            assert_eq!(s.structural_slots(), 2 * n as u64 * skeleton);
            assert_eq!(s.total_slots(), 2 * s.publisher_slots() + 1);
        }
        // FSGP: 4n² structural slots per skeleton slot, half publisher.
        for (n, d) in [(1u32, 0u32), (2, 1), (4, 2), (8, 0)] {
            let s = negotiate_structure(Variant::Fsgp, n, d).unwrap();
            let skeleton = 1u64 << (2 * d);
            let nn = n as u64 * n as u64;
            assert_eq!(s.structural_slots(), 4 * nn * skeleton);
            assert_eq!(s.publisher_slots(), 2 * nn * skeleton);
            assert_eq!(s.total_slots(), 2 * s.publisher_slots() + 1);
        }
    }

    #[test]
    fn negotiate_rejects_bad_parameters() {
        assert!(matches!(
            negotiate_structure(Variant::Ofsgp, 0, 1),
            Err(ProtocolError::BadParams(_))
        ));
        assert!(matches!(
            negotiate_structure(Variant::Fsgp, 3, 1),
            Err(ProtocolError::BadParams(_))
        ));
        assert!(negotiate_structure(Variant::Ugp, 3, 0).is_err());
        assert!(matches!(
            negotiate_structure(Variant::Ofsgp, 2, 16),
            Err(ProtocolError::BadParams(_))
        ));
        // OFSGP has no power-of-two constraint.
        assert!(negotiate_structure(Variant::Ofsgp, 3, 1).is_ok());
        // A UGP session whose matcher transform could never fit in memory.
        assert!(matches!(
            negotiate_structure(Variant::Ugp, 2, 2),
            Err(ProtocolError::BadParams(_))
        ));
        assert!(negotiate_structure(Variant::Ugp, 2, 1).is_ok());
    }

    #[test]
    fn predicate_checks() {
        let s = negotiate_structure(Variant::Ofsgp, 2, 1).unwrap();
        let deep = parse_sexp("(and (and x0 x1) (and x0 x1))").unwrap();
        assert_eq!(
            subscriber_share(&s, &deep, &mut tape(1), [0; 16]),
            Err(ProtocolError::DepthExceeded { depth: 2, bound: 1 })
        );
        let foreign = parse_sexp("(and x0 b0)").unwrap();
        assert_eq!(
            subscriber_share(&s, &foreign, &mut tape(1), [0; 16]),
            Err(ProtocolError::BadInput(InputBit::Subscriber(0)))
        );
        let wide = parse_sexp("x5").unwrap();
        assert_eq!(
            subscriber_share(&s, &wide, &mut tape(1), [0; 16]),
            Err(ProtocolError::BadInput(InputBit::Publisher(5)))
        );
    }

    #[test]
    fn metadata_length_is_checked() {
        let s = negotiate_structure(Variant::Ofsgp, 3, 0).unwrap();
        assert_eq!(
            publisher_share(&s, &[true; 2], &mut tape(2), [0; 16]),
            Err(ProtocolError::BadLength { got: 2, want: 3 })
        );
    }

    #[test]
    fn broker_rejects_incomplete_and_overlapping_shares() {
        let s = negotiate_structure(Variant::Ofsgp, 2, 0).unwrap();
        let predicate = parse_sexp("x0").unwrap();
        let t = tape(7);
        let sub = subscriber_share(&s, &predicate, &mut t.clone(), [0; 16]).unwrap();
        let pb = publisher_share(&s, &[true, false], &mut t.clone(), [0; 16]).unwrap();
        assert!(broker_match(&s, &pb, &sub).is_ok());

        // Same share on both sides: overlaps at its first position.
        assert_eq!(
            broker_match(&s, &sub.clone(), &sub),
            Err(ProtocolError::PositionOverlap(0))
        );

        // A share from a smaller session leaves positions uncovered.
        let small = negotiate_structure(Variant::Ofsgp, 1, 0).unwrap();
        let sub_small =
            subscriber_share(&small, &predicate, &mut t.clone(), [0; 16]).unwrap();
        assert!(matches!(
            broker_match(&s, &pb, &sub_small),
            Err(ProtocolError::IncompleteShares(_))
        ));
    }

    #[test]
    fn verdict_flags_anomalous_values() {
        assert_eq!(
            verdict(ALPHA),
            MatchResult { matched: true, broker_value: ALPHA, anomalous: false }
        );
        assert_eq!(
            verdict(IDENTITY),
            MatchResult { matched: false, broker_value: IDENTITY, anomalous: false }
        );
        let stray = crate::s5::BETA;
        let r = verdict(stray);
        assert!(!r.matched && r.anomalous);
    }
}
