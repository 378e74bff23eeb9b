//! Random circuit generation for tests and benchmarks.
//!
//! The transforms' length and semantics laws are quantified over arbitrary
//! circuits, so the test suites sweep corpora produced here. Generation is
//! deterministic given the caller's RNG; the standard corpus fixes seeds so
//! failures reproduce.

use rand::Rng;

use crate::circuit::{Circuit, CircuitBuilder, InputBit, NodeId};

/// Generates a random predicate over publisher bits `x0..x(n_inputs-1)` with
/// depth at most `max_depth` (and usually exactly that, since one operand of
/// every binary gate spends the full remaining budget).
pub fn random_circuit<R: Rng>(rng: &mut R, n_inputs: u32, max_depth: u32) -> Circuit {
    assert!(n_inputs >= 1, "need at least one input");
    let mut b = CircuitBuilder::new();
    for i in 0..n_inputs {
        b.input(InputBit::Publisher(i));
    }
    let root = gen_node(rng, &mut b, n_inputs, max_depth);
    b.finish(root)
}

fn gen_node<R: Rng>(rng: &mut R, b: &mut CircuitBuilder, n: u32, budget: u32) -> NodeId {
    let make_leaf = budget == 0 || rng.gen_bool(0.15);
    let mut node = if make_leaf {
        if rng.gen_bool(0.08) {
            let v = rng.gen_bool(0.5);
            b.constant(v)
        } else {
            b.input(InputBit::Publisher(rng.gen_range(0..n)))
        }
    } else {
        let deep = gen_node(rng, b, n, budget - 1);
        let shallow_budget = rng.gen_range(0..budget);
        let shallow = gen_node(rng, b, n, shallow_budget);
        let (l, r) = if rng.gen_bool(0.5) { (deep, shallow) } else { (shallow, deep) };
        if rng.gen_bool(0.5) {
            b.and(l, r)
        } else {
            b.or(l, r)
        }
    };
    while rng.gen_bool(0.25) {
        node = b.not(node);
    }
    node
}

/// A deterministic spread of circuits covering widths `1..=6` and depths
/// `0..=6` — the corpus the transform laws are checked against.
pub fn standard_corpus(seed: u64, count: usize) -> Vec<Circuit> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = 1 + (i % 6) as u32;
            let depth = (i % 7) as u32;
            random_circuit(&mut rng, n, depth)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn respects_depth_budget_and_width() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        for _ in 0..200 {
            let c = random_circuit(&mut rng, 4, 3);
            assert!(c.depth() <= 3);
            assert!(c.publisher_width() <= 4);
            assert!(c.reads_only_publisher_bits());
        }
    }

    #[test]
    fn standard_corpus_is_deterministic_and_varied() {
        let a = standard_corpus(42, 200);
        let b = standard_corpus(42, 200);
        assert_eq!(a.len(), 200);
        for (c1, c2) in a.iter().zip(&b) {
            assert_eq!(c1, c2);
        }
        let depths: std::collections::BTreeSet<u32> = a.iter().map(|c| c.depth()).collect();
        assert!(depths.contains(&0));
        assert!(depths.contains(&6), "corpus should reach depth 6, saw {depths:?}");
    }
}
