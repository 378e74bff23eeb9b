//! Circuit constructions used by the matching protocols.
//!
//! - Hamming-threshold predicates built over a Bose–Nelson sorting network;
//! - the fixed selector `OR_i (x_i AND b_i)` whose transform yields the
//!   FSGP selector block;
//! - the universal matcher circuit that evaluates an encoded group program
//!   against the metadata (the inner step of UGP matching).

use crate::s5::{ALPHA, UNARY_BITS};

use super::{Circuit, CircuitBuilder, CircuitError, InputBit, NodeId};

/// Comparator list of the Bose–Nelson sorting network on `n` wires. A pair
/// `(i, j)` (always `i < j`) orders the two wires; applying every comparator
/// in sequence sorts any input. The construction is the classic recursive
/// merge, which keeps the comparator count low for small `n`.
pub fn build_bose_nelson(n: usize) -> Vec<(usize, usize)> {
    let mut comparators = Vec::new();
    bn_sort(0, n, &mut comparators);
    comparators
}

fn bn_sort(start: usize, size: usize, out: &mut Vec<(usize, usize)>) {
    if size > 1 {
        let half = size / 2;
        bn_sort(start, half, out);
        bn_sort(start + half, size - half, out);
        bn_merge(start, half, start + half, size - half, out);
    }
}

fn bn_merge(s1: usize, n1: usize, s2: usize, n2: usize, out: &mut Vec<(usize, usize)>) {
    if n1 == 1 && n2 == 1 {
        out.push((s1, s2));
    } else if n1 == 1 && n2 == 2 {
        out.push((s1, s2 + 1));
        out.push((s1, s2));
    } else if n1 == 2 && n2 == 1 {
        out.push((s1, s2));
        out.push((s1 + 1, s2));
    } else {
        let m1 = n1 / 2;
        let m2 = if n1 % 2 == 0 { (n2 + 1) / 2 } else { n2 / 2 };
        bn_merge(s1, m1, s2, m2, out);
        bn_merge(s1 + m1, n1 - m1, s2 + m2, n2 - m2, out);
        bn_merge(s1 + m1, n1 - m1, s2, m2, out);
    }
}

/// Predicate circuit for "Hamming distance between the metadata and
/// `subscriber_bits` exceeds `threshold`".
///
/// Per-bit differences feed a descending bit-sort (each comparator becomes
/// an OR for the larger output and an AND for the smaller); the sorted
/// vector's entry at index `threshold` is 1 exactly when at least
/// `threshold + 1` differences are set. A threshold of `n` can never be
/// exceeded, so that case degenerates to the constant-0 circuit.
pub fn build_hamming(subscriber_bits: &[bool], threshold: u32) -> Result<Circuit, CircuitError> {
    let n = subscriber_bits.len();
    if n == 0 {
        return Err(CircuitError::BadShape("hamming predicate needs at least one bit".into()));
    }
    if threshold as usize > n {
        return Err(CircuitError::BadThreshold { threshold, n: n as u32 });
    }

    let mut b = CircuitBuilder::new();
    let xs: Vec<NodeId> = (0..n).map(|i| b.input(InputBit::Publisher(i as u32))).collect();

    if threshold as usize == n {
        let zero = b.constant(false);
        return Ok(b.finish(zero));
    }

    let mut wires: Vec<NodeId> = xs
        .iter()
        .zip(subscriber_bits)
        .map(|(&x, &s)| if s { b.not(x) } else { x })
        .collect();

    for (i, j) in build_bose_nelson(n) {
        let hi = b.or(wires[i], wires[j]);
        let lo = b.and(wires[i], wires[j]);
        wires[i] = hi;
        wires[j] = lo;
    }

    Ok(b.finish(wires[threshold as usize]))
}

/// The fixed selector over `n` candidate bits: `OR_i (x_i AND b_i)`. With
/// `b` one-hot at `k` the output is exactly `x_k`; with `b` all zero it is
/// constant 0. Depth is exactly `1 + ⌈lg n⌉`.
pub fn build_fixed_selector(n: u32) -> Result<Circuit, CircuitError> {
    if n == 0 {
        return Err(CircuitError::BadShape("selector needs at least one candidate bit".into()));
    }
    let mut b = CircuitBuilder::new();
    let xs: Vec<NodeId> = (0..n).map(|i| b.input(InputBit::Publisher(i))).collect();
    let bs: Vec<NodeId> = (0..n).map(|i| b.input(InputBit::Subscriber(i))).collect();
    let terms: Vec<NodeId> = xs.iter().zip(&bs).map(|(&x, &s)| b.and(x, s)).collect();
    let out = b.reduce(terms, CircuitBuilder::or);
    Ok(b.finish(out))
}

/// Subscriber bits consumed per encoded program element: two 25-bit unary
/// elements plus a big-endian index of width `lg n`.
pub fn ugp_subscriber_bits_per_element(n: u32) -> u32 {
    2 * UNARY_BITS as u32 + n.trailing_zeros()
}

/// The universal matcher: a circuit that runs an encoded `program_len`-element
/// group program against the metadata and reports whether the product is α.
///
/// Publisher inputs are the metadata bits `x0..x(n-1)`. Subscriber inputs
/// encode the program, element by element: 25 unary bits for the bit-0
/// element, 25 for the bit-1 element, then the selecting metadata index as
/// `lg n` big-endian bits. Per element a multiplexer picks `x[index]`
/// (depth ≤ lg n + ⌈lg lg n⌉ + 1) and a depth-2 mux selects between the two
/// unary elements; a balanced tree of 5×5 one-hot matrix products multiplies
/// the selections (depth 4 per level). Programs produced by the transform
/// only ever multiply out to the identity or to α, which differ in the image
/// of point 1, so the output is the single unary bit asserting that the
/// product maps 1 to α(1).
pub fn build_ugp_circuit(n: u32, program_len: u64) -> Result<Circuit, CircuitError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(CircuitError::BadShape(format!(
            "metadata width must be a power of two, got {n}"
        )));
    }
    if program_len == 0 || program_len.count_ones() != 1 || program_len.trailing_zeros() % 2 != 0 {
        return Err(CircuitError::BadShape(format!(
            "program length must be a power of four, got {program_len}"
        )));
    }

    let w = n.trailing_zeros() as usize; // index bits per element
    let per_element = ugp_subscriber_bits_per_element(n) as u64;

    let mut b = CircuitBuilder::new();
    let xs: Vec<NodeId> = (0..n).map(|i| b.input(InputBit::Publisher(i))).collect();
    let sub: Vec<NodeId> = (0..program_len * per_element)
        .map(|j| b.input(InputBit::Subscriber(j as u32)))
        .collect();

    // Unary vectors are addressed as one-hot matrices: entry (row, value)
    // with row 0..5 for the preimage point and value 1..=5 for its image;
    // within a 25-bit block the highest value comes first.
    let mut element_matrices: Vec<Vec<NodeId>> = Vec::with_capacity(program_len as usize);
    for e in 0..program_len as usize {
        let base = e * per_element as usize;
        let g0 = &sub[base..base + UNARY_BITS];
        let g1 = &sub[base + UNARY_BITS..base + 2 * UNARY_BITS];
        let idx = &sub[base + 2 * UNARY_BITS..base + 2 * UNARY_BITS + w];

        // Multiplexer: x[index], with the index read big-endian.
        let selected_x = if w == 0 {
            xs[0]
        } else {
            let neg_idx: Vec<NodeId> = idx.iter().map(|&node| b.not(node)).collect();
            let terms: Vec<NodeId> = (0..n as usize)
                .map(|i| {
                    let literals: Vec<NodeId> = (0..w)
                        .map(|j| {
                            let bit_set = (i >> (w - 1 - j)) & 1 == 1;
                            if bit_set {
                                idx[j]
                            } else {
                                neg_idx[j]
                            }
                        })
                        .collect();
                    let eq = b.reduce(literals, CircuitBuilder::and);
                    b.and(xs[i], eq)
                })
                .collect();
            b.reduce(terms, CircuitBuilder::or)
        };
        let not_selected = b.not(selected_x);

        // Depth-2 element select between the two unary encodings.
        let matrix: Vec<NodeId> = (0..UNARY_BITS)
            .map(|p| {
                let pick1 = b.and(selected_x, g1[p]);
                let pick0 = b.and(not_selected, g0[p]);
                b.or(pick1, pick0)
            })
            .collect();
        element_matrices.push(matrix);
    }

    // One level of the product tree: left * right under "right acts first",
    // i.e. entry (row, v) = OR_u right(row, u) AND left(u, v).
    let product_entry =
        |b: &mut CircuitBuilder, left: &[NodeId], right: &[NodeId], row: usize, v: usize| {
            let terms: Vec<NodeId> = (1..=5)
                .map(|u| {
                    let r = right[5 * (row) + (5 - u)];
                    let l = left[5 * (u - 1) + (5 - v)];
                    b.and(r, l)
                })
                .collect();
            b.reduce(terms, CircuitBuilder::or)
        };

    let mut layer = element_matrices;
    while layer.len() > 2 {
        let mut next = Vec::with_capacity(layer.len() / 2);
        for pair in layer.chunks(2) {
            let (left, right) = (&pair[0], &pair[1]);
            let product: Vec<NodeId> = (0..5)
                .flat_map(|row| (1..=5).rev().map(move |v| (row, v)))
                .map(|(row, v)| product_entry(&mut b, left, right, row, v))
                .collect();
            next.push(product);
        }
        layer = next;
    }

    // The product equals α exactly when it sends 1 to α(1); read off that
    // single entry (row 0) instead of materialising the final 25-bit product.
    let alpha_of_one = ALPHA.apply(1) as usize;
    let output = if layer.len() == 1 {
        layer[0][5 - alpha_of_one]
    } else {
        product_entry(&mut b, &layer[0], &layer[1], 0, alpha_of_one)
    };

    Ok(b.finish(output))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{bits_from_mask, Assignment};
    use crate::s5::Perm;

    fn sort_01(comparators: &[(usize, usize)], input: &mut [bool]) {
        for &(i, j) in comparators {
            let (lo, hi) = (input[i] & input[j], input[i] | input[j]);
            input[i] = lo;
            input[j] = hi;
        }
    }

    #[test]
    fn bose_nelson_sorts_all_01_inputs() {
        for n in 1..=10usize {
            let cs = build_bose_nelson(n);
            assert!(cs.iter().all(|&(i, j)| i < j && j < n));
            for mask in 0..1u64 << n {
                let mut v = bits_from_mask(n, mask);
                sort_01(&cs, &mut v);
                let ones = mask.count_ones() as usize;
                // Ascending: zeros first.
                let expected: Vec<bool> =
                    std::iter::repeat(false).take(n - ones).chain(std::iter::repeat(true).take(ones)).collect();
                assert_eq!(v, expected, "n={n} mask={mask:b}");
            }
        }
    }

    #[test]
    fn bose_nelson_known_sizes() {
        assert_eq!(build_bose_nelson(2), vec![(0, 1)]);
        assert_eq!(build_bose_nelson(4).len(), 5);
        assert_eq!(build_bose_nelson(8).len(), 19);
    }

    #[test]
    fn hamming_matches_direct_count() {
        for n in 1..=5usize {
            for s_mask in 0..1u64 << n {
                let s = bits_from_mask(n, s_mask);
                for t in 0..=n as u32 {
                    let c = build_hamming(&s, t).unwrap();
                    for x_mask in 0..1u64 << n {
                        let x = bits_from_mask(n, x_mask);
                        let hd = (s_mask ^ x_mask).count_ones();
                        let a = Assignment::publisher_only(x);
                        assert_eq!(
                            c.eval(&a).unwrap(),
                            hd > t,
                            "n={n} s={s_mask:b} t={t} x={x_mask:b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn hamming_pinned_examples() {
        // s=00, t=0: any single difference crosses the threshold.
        let c = build_hamming(&[false, false], 0).unwrap();
        let a = Assignment::publisher_only(vec![true, false]);
        assert!(c.eval(&a).unwrap());

        // t = n can never be exceeded: constant 0 regardless of metadata.
        let c = build_hamming(&[false, true], 2).unwrap();
        assert_eq!(c.depth(), 0);
        for mask in 0..4 {
            let a = Assignment::publisher_only(bits_from_mask(2, mask));
            assert!(!c.eval(&a).unwrap());
        }

        // s=1010, t=1, x=0101: all four bits differ.
        let s = vec![true, false, true, false];
        let c = build_hamming(&s, 1).unwrap();
        let x = vec![false, true, false, true];
        assert!(c.eval(&Assignment::publisher_only(x)).unwrap());
    }

    #[test]
    fn hamming_rejects_bad_parameters() {
        assert!(matches!(build_hamming(&[], 0), Err(CircuitError::BadShape(_))));
        assert!(matches!(
            build_hamming(&[false, false], 3),
            Err(CircuitError::BadThreshold { threshold: 3, n: 2 })
        ));
    }

    #[test]
    fn fixed_selector_selects() {
        for n in [1u32, 2, 3, 4, 8] {
            let c = build_fixed_selector(n).unwrap();
            assert_eq!(c.depth(), 1 + (n as f64).log2().ceil() as u32, "depth law for n={n}");
            for k in 0..n {
                let onehot: Vec<bool> = (0..n).map(|i| i == k).collect();
                for mask in 0..1u64 << n {
                    let x = bits_from_mask(n as usize, mask);
                    let a = Assignment::new(x.clone(), onehot.clone());
                    assert_eq!(c.eval(&a).unwrap(), x[k as usize]);
                }
            }
            // All-zero selection vector: constant 0.
            for mask in 0..1u64 << n {
                let a = Assignment::new(bits_from_mask(n as usize, mask), vec![false; n as usize]);
                assert!(!c.eval(&a).unwrap());
            }
        }
    }

    /// Encodes elements the way the subscriber will: unary pair then index.
    fn encode_elements(n: u32, elements: &[(Perm, Perm, u32)]) -> Vec<bool> {
        let w = n.trailing_zeros() as usize;
        let mut bits = Vec::new();
        for &(g0, g1, k) in elements {
            bits.extend_from_slice(&g0.unary_bits());
            bits.extend_from_slice(&g1.unary_bits());
            for j in 0..w {
                bits.push((k >> (w - 1 - j)) & 1 == 1);
            }
        }
        bits
    }

    #[test]
    fn ugp_circuit_single_element_reads_selected_bit() {
        use crate::s5::{ALPHA, IDENTITY};
        // A one-element program (identity, α, index 0) evaluates to x0.
        for n in [1u32, 2, 4] {
            let c = build_ugp_circuit(n, 1).unwrap();
            let enc = encode_elements(n, &[(IDENTITY, ALPHA, 0)]);
            for mask in 0..1u64 << n {
                let x = bits_from_mask(n as usize, mask);
                let a = Assignment::new(x.clone(), enc.clone());
                assert_eq!(c.eval(&a).unwrap(), x[0], "n={n} mask={mask:b}");
            }
        }
    }

    #[test]
    fn ugp_circuit_mux_honours_big_endian_index() {
        use crate::s5::{ALPHA, IDENTITY};
        let n = 4u32;
        let c = build_ugp_circuit(n, 1).unwrap();
        for k in 0..n {
            let enc = encode_elements(n, &[(IDENTITY, ALPHA, k)]);
            for mask in 0..1u64 << n {
                let x = bits_from_mask(n as usize, mask);
                let a = Assignment::new(x.clone(), enc.clone());
                assert_eq!(c.eval(&a).unwrap(), x[k as usize], "k={k} mask={mask:b}");
            }
        }
    }

    #[test]
    fn ugp_circuit_multiplies_in_sequence_order() {
        use crate::s5::{seq_value, ALPHA, BETA, GAMMA, IDENTITY};
        // Constant elements (same either way) whose product is α vs one
        // whose product is not.
        let n = 2u32;
        let c = build_ugp_circuit(n, 4).unwrap();

        let to_alpha = [
            (BETA, BETA, 0),
            (BETA.inv().mul(ALPHA), BETA.inv().mul(ALPHA), 1),
            (IDENTITY, IDENTITY, 0),
            (IDENTITY, IDENTITY, 1),
        ];
        let product = seq_value(to_alpha.iter().map(|&(g, _, _)| g));
        assert_eq!(product, ALPHA);
        let enc = encode_elements(n, &to_alpha);
        for mask in 0..4 {
            let a = Assignment::new(bits_from_mask(2, mask), enc.clone());
            assert!(c.eval(&a).unwrap());
        }

        let to_gamma = [
            (ALPHA, ALPHA, 0),
            (BETA, BETA, 0),
            (ALPHA.inv(), ALPHA.inv(), 0),
            (BETA.inv(), BETA.inv(), 0),
        ];
        assert_eq!(seq_value(to_gamma.iter().map(|&(g, _, _)| g)), GAMMA);
        let enc = encode_elements(n, &to_gamma);
        for mask in 0..4 {
            let a = Assignment::new(bits_from_mask(2, mask), enc.clone());
            assert!(!c.eval(&a).unwrap(), "γ maps 1 to 3, not α(1)");
        }
    }

    #[test]
    fn ugp_circuit_depth_budgets() {
        // Element select alone (n=1 needs no mux): exactly 2 levels.
        assert_eq!(build_ugp_circuit(1, 1).unwrap().depth(), 2);
        // Mux adds at most lg n + ⌈lg lg n⌉ + 1.
        for n in [2u32, 4, 8, 16] {
            let lg = n.trailing_zeros();
            let lglg = (lg as f64).log2().ceil() as u32;
            let mux_budget = lg + lglg + 1;
            let depth = build_ugp_circuit(n, 1).unwrap().depth();
            assert!(depth <= 2 + mux_budget, "n={n}: depth {depth} exceeds mux budget");
        }
        // Each product level costs at most 5 (measured: 4).
        let base = build_ugp_circuit(1, 1).unwrap().depth();
        let one_level = build_ugp_circuit(1, 4).unwrap().depth();
        let two_levels = build_ugp_circuit(1, 16).unwrap().depth();
        assert!(one_level - base <= 2 * 5);
        assert_eq!(two_levels - one_level, one_level - base);
        // The acceptance-critical case: n=2 with a 4-element program.
        assert!(build_ugp_circuit(2, 4).unwrap().depth() <= 13);
    }

    #[test]
    fn ugp_circuit_rejects_bad_shapes() {
        assert!(build_ugp_circuit(3, 4).is_err());
        assert!(build_ugp_circuit(0, 4).is_err());
        assert!(build_ugp_circuit(2, 0).is_err());
        assert!(build_ugp_circuit(2, 2).is_err());
        assert!(build_ugp_circuit(2, 8).is_err());
    }

    #[test]
    fn ugp_input_ordering_is_canonical() {
        let n = 2u32;
        let len = 4u64;
        let c = build_ugp_circuit(n, len).unwrap();
        let per = ugp_subscriber_bits_per_element(n) as u64;
        let expected: Vec<InputBit> = (0..n)
            .map(InputBit::Publisher)
            .chain((0..len * per).map(|j| InputBit::Subscriber(j as u32)))
            .collect();
        assert_eq!(c.inputs(), expected.as_slice());
    }
}
