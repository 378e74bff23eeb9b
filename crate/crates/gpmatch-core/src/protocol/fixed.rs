//! Share construction for the fixed-structure variants (OFSGP, FSGP).
//!
//! The broker sequence alternates subscriber and publisher elements,
//! subscriber first: `SK₀ p₀ SK₁ p₁ … p_{P−1} SK_P`, so Λ = 2P+1. The
//! skeleton is `4^D` selector blocks; the subscriber routes its transformed
//! predicate's interstitials into the block boundaries and instantiates
//! each block at the bit its predicate reads there (or as padding), while
//! the publisher fills slot `t` with `α^{m_i}` for the bit `i` that the
//! fixed per-block pattern assigns to `t`.

use crate::barrington::transform_alpha_one;
use crate::blinding::{blind_partial, RandomTape};
use crate::circuit::{Circuit, InputBit};
use crate::s5::{Perm, ALPHA, IDENTITY};

use super::{ProtocolError, Role, SessionStructure, Share};

/// The subscriber's unblinded elements: P+1 interstitial products, in the
/// order they occupy the even broker positions.
fn subscriber_elements(
    structure: &SessionStructure,
    predicate: &Circuit,
) -> Result<Vec<Perm>, ProtocolError> {
    let (block, skeleton_len) = structure.fixed_parts().expect("fixed-variant structure");
    let aop = transform_alpha_one(predicate, ALPHA).expect("α is a 5-cycle");
    let slots_per_block = block.publisher_bits().len();

    let mut out = Vec::with_capacity(slots_per_block * skeleton_len as usize + 1);
    let mut carry = IDENTITY;
    for j in 0..skeleton_len {
        let j = j as usize;
        if j < aop.interstitials.len() {
            carry = carry.mul(aop.interstitials[j]);
        }
        let selection = match aop.index_seq.get(j) {
            Some(&InputBit::Publisher(k)) => Some(k),
            Some(&InputBit::Dummy) | None => None,
            Some(&other) => return Err(ProtocolError::BadInput(other)),
        };
        let inters = block.instantiate(selection)?;
        out.push(carry.mul(inters[0]));
        out.extend_from_slice(&inters[1..slots_per_block]);
        carry = inters[slots_per_block];
    }
    if skeleton_len as usize == aop.index_seq.len() {
        carry = carry.mul(*aop.interstitials.last().unwrap());
    }
    out.push(carry);
    Ok(out)
}

pub(super) fn subscriber_share(
    structure: &SessionStructure,
    predicate: &Circuit,
    tape: &mut RandomTape,
    session_id: [u8; 16],
) -> Result<Share, ProtocolError> {
    let elements = subscriber_elements(structure, predicate)?;
    let total = structure.total_slots() as usize;
    let mut full = vec![IDENTITY; total];
    for (t, &g) in elements.iter().enumerate() {
        full[2 * t] = g;
    }
    let blinded = blind_partial(&full, |i| i % 2 == 0, tape)?;
    Ok(share_from_pairs(session_id, Role::Subscriber, blinded))
}

/// The publisher's unblinded elements for the odd positions, `α^{m_i}` per
/// slot, in slot order.
fn publisher_elements(structure: &SessionStructure, metadata: &[bool]) -> Vec<Perm> {
    let (block, skeleton_len) = structure.fixed_parts().expect("fixed-variant structure");
    let bits = block.publisher_bits();
    let mut out = Vec::with_capacity(bits.len() * skeleton_len as usize);
    for _ in 0..skeleton_len {
        for &bit in &bits {
            out.push(if metadata[bit as usize] { ALPHA } else { IDENTITY });
        }
    }
    out
}

pub(super) fn publisher_share(
    structure: &SessionStructure,
    metadata: &[bool],
    tape: &mut RandomTape,
    session_id: [u8; 16],
) -> Result<Share, ProtocolError> {
    let elements = publisher_elements(structure, metadata);
    let total = structure.total_slots() as usize;
    let mut full = vec![IDENTITY; total];
    for (t, &g) in elements.iter().enumerate() {
        full[2 * t + 1] = g;
    }
    let blinded = blind_partial(&full, |i| i % 2 == 1, tape)?;
    Ok(share_from_pairs(session_id, Role::Publisher, blinded))
}

pub(super) fn share_from_pairs(
    session_id: [u8; 16],
    role: Role,
    pairs: Vec<(u64, Perm)>,
) -> Share {
    let mut positions = Vec::with_capacity(pairs.len());
    let mut elems = Vec::with_capacity(pairs.len());
    for (p, g) in pairs {
        positions.push(p);
        elems.push(g);
    }
    Share { session_id, role, positions, elems }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{bits_from_mask, parse_sexp, Assignment};
    use crate::corpus::random_circuit;
    use crate::protocol::{broker_match, negotiate_structure, run_session, Variant};
    use crate::s5::seq_value;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn tape(seed: u64) -> RandomTape {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        RandomTape::from_seed(s)
    }

    /// Unblinded broker sequence: subscriber constants at even positions,
    /// publisher α-powers at odd.
    fn merged_plain(
        structure: &SessionStructure,
        predicate: &Circuit,
        metadata: &[bool],
    ) -> Vec<Perm> {
        let sub = subscriber_elements(structure, predicate).unwrap();
        let pb = publisher_elements(structure, metadata);
        let mut seq = Vec::with_capacity(structure.total_slots() as usize);
        for (t, &g) in sub.iter().enumerate() {
            seq.push(g);
            if t < pb.len() {
                seq.push(pb[t]);
            }
        }
        seq
    }

    #[test]
    fn plain_session_value_tracks_the_predicate() {
        for variant in [Variant::Ofsgp, Variant::Fsgp] {
            for (n, d) in [(2u32, 0u32), (2, 1), (4, 1)] {
                let structure = negotiate_structure(variant, n, d).unwrap();
                let mut rng = ChaCha20Rng::seed_from_u64(900 + n as u64 + d as u64);
                for _ in 0..6 {
                    let predicate = random_circuit(&mut rng, n, d);
                    for mask in 0..1u64 << n {
                        let m = bits_from_mask(n as usize, mask);
                        let seq = merged_plain(&structure, &predicate, &m);
                        assert_eq!(seq.len() as u64, structure.total_slots());
                        let want = predicate
                            .eval(&Assignment::publisher_only(m.clone()))
                            .unwrap();
                        let value = seq_value(seq);
                        assert_eq!(value, if want { ALPHA } else { IDENTITY });
                    }
                }
            }
        }
    }

    #[test]
    fn full_sessions_match_direct_evaluation() {
        for variant in [Variant::Ofsgp, Variant::Fsgp] {
            for (n, d) in [(2u32, 1u32), (4, 1)] {
                let structure = negotiate_structure(variant, n, d).unwrap();
                let mut rng = ChaCha20Rng::seed_from_u64(1700 + n as u64);
                for round in 0..4 {
                    let predicate = random_circuit(&mut rng, n, d);
                    for mask in 0..1u64 << n {
                        let m = bits_from_mask(n as usize, mask);
                        let t = tape(5000 + round * 100 + mask);
                        let got = run_session(&structure, &predicate, &m, &t).unwrap();
                        let want = predicate
                            .eval(&Assignment::publisher_only(m.clone()))
                            .unwrap();
                        assert_eq!(got.matched, want, "{variant:?} n={n} mask={mask}");
                        assert!(!got.anomalous);
                    }
                }
            }
        }
    }

    #[test]
    fn ofsgp_works_at_non_power_of_two_widths() {
        let structure = negotiate_structure(Variant::Ofsgp, 3, 2).unwrap();
        let predicate = parse_sexp("(or x2 (and x0 x1))").unwrap();
        for mask in 0..8u64 {
            let m = bits_from_mask(3, mask);
            let got = run_session(&structure, &predicate, &m, &tape(mask)).unwrap();
            let want = predicate.eval(&Assignment::publisher_only(m)).unwrap();
            assert_eq!(got.matched, want);
        }
    }

    #[test]
    fn shallow_predicates_are_padded_into_deep_structures() {
        // depth 0 and 1 predicates inside a D=2 skeleton.
        let structure = negotiate_structure(Variant::Ofsgp, 2, 2).unwrap();
        for src in ["x0", "x1", "(not x0)", "1", "0", "(and x0 x1)"] {
            let predicate = parse_sexp(src).unwrap();
            for mask in 0..4u64 {
                let m = bits_from_mask(2, mask);
                let got = run_session(&structure, &predicate, &m, &tape(77 + mask)).unwrap();
                let want = predicate.eval(&Assignment::publisher_only(m)).unwrap();
                assert_eq!(got.matched, want, "{src} mask={mask}");
            }
        }
    }

    #[test]
    fn publisher_share_is_predicate_blind() {
        for variant in [Variant::Ofsgp, Variant::Fsgp] {
            let structure = negotiate_structure(variant, 4, 1).unwrap();
            let m = [true, false, false, true];
            let t = tape(31);
            let share = publisher_share(&structure, &m, &mut t.clone(), [9; 16]).unwrap();

            // Run full sessions against two very different predicates; the
            // publisher share comes out identical.
            for src in ["(and x0 x3)", "(or (not x1) x2)"] {
                let predicate = parse_sexp(src).unwrap();
                let again = publisher_share(&structure, &m, &mut t.clone(), [9; 16]).unwrap();
                assert_eq!(again, share);
                let sub =
                    subscriber_share(&structure, &predicate, &mut t.clone(), [9; 16]).unwrap();
                let verdict = broker_match(&structure, &share, &sub).unwrap();
                let want = predicate
                    .eval(&Assignment::publisher_only(m.to_vec()))
                    .unwrap();
                assert_eq!(verdict.matched, want);
            }
        }
    }

    #[test]
    fn shares_cover_complementary_positions() {
        let structure = negotiate_structure(Variant::Fsgp, 2, 1).unwrap();
        let predicate = parse_sexp("(and x0 x1)").unwrap();
        let t = tape(4);
        let sub = subscriber_share(&structure, &predicate, &mut t.clone(), [0; 16]).unwrap();
        let pb = publisher_share(&structure, &[true, true], &mut t.clone(), [0; 16]).unwrap();
        let total = structure.total_slots();
        assert_eq!(sub.positions.len() + pb.positions.len(), total as usize);
        assert!(sub.positions.iter().all(|p| p % 2 == 0));
        assert!(pb.positions.iter().all(|p| p % 2 == 1));
        assert!(sub.positions.windows(2).all(|w| w[0] < w[1]));
        assert!(pb.positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tampered_share_reads_as_anomalous_or_mismatch() {
        let structure = negotiate_structure(Variant::Ofsgp, 2, 0).unwrap();
        let predicate = parse_sexp("x0").unwrap();
        let t = tape(12);
        let sub = subscriber_share(&structure, &predicate, &mut t.clone(), [0; 16]).unwrap();
        let mut pb = publisher_share(&structure, &[true, false], &mut t.clone(), [0; 16]).unwrap();
        let honest = broker_match(&structure, &pb, &sub).unwrap();
        assert!(honest.matched);

        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let idx = rng.gen_range(0..pb.elems.len());
        pb.elems[idx] = pb.elems[idx].mul(crate::s5::BETA);
        let tampered = broker_match(&structure, &pb, &sub).unwrap();
        assert!(!tampered.matched || tampered.broker_value != ALPHA || tampered.anomalous);
    }
}
