//! Selector blocks: the per-slot gadgets that let a fixed publisher slot
//! pattern stand in for "any one metadata bit".
//!
//! A block exposes `Q` publisher slots in a bit order fixed by `n` alone.
//! The publisher contributes `α^{x_i}` at each slot regardless of the
//! predicate; the subscriber's interstitials steer the block's product to
//! `α^{x_k}` for its chosen bit `k` — or to the identity for a padding
//! block — without changing which bits the publisher touches.

use crate::barrington::{transform_alpha_one, AopProgram};
use crate::circuit::{build_fixed_selector, InputBit};
use crate::s5::{find_conjugator, Perm, ALPHA, IDENTITY};

use super::ProtocolError;

/// A selector block template for `n` metadata bits. Instantiating it with a
/// target bit (or with no bit, for padding) yields the `Q+1` subscriber
/// interstitials that surround the `Q` publisher slots.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SelectorBlock {
    n: u32,
    kind: Kind,
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Kind {
    /// Hand-optimised: each bit appears twice, Q = 2n.
    Ofs,
    /// Transform of the fixed selector circuit `OR_i (x_i AND b_i)`; the
    /// template keeps the subscriber's `b` slots, which instantiation folds
    /// away, leaving Q = 2n² publisher slots.
    Fs(AopProgram),
}

impl SelectorBlock {
    /// The metadata bit read by each publisher slot, in slot order. The
    /// same for every instantiation — this is the fixed-structure property.
    pub fn publisher_bits(&self) -> Vec<u32> {
        match &self.kind {
            Kind::Ofs => (0..self.n).flat_map(|i| [i, i]).collect(),
            Kind::Fs(template) => template
                .index_seq
                .iter()
                .filter_map(|&b| match b {
                    InputBit::Publisher(k) => Some(k),
                    _ => None,
                })
                .collect(),
        }
    }

    /// Slot count before the subscriber folds its own slots into the
    /// interstitials: 2n for the optimised block, 4n² for the circuit one.
    pub fn structural_len(&self) -> u64 {
        match &self.kind {
            Kind::Ofs => 2 * self.n as u64,
            Kind::Fs(template) => template.len(),
        }
    }

    /// The subscriber interstitials selecting bit `k`, or the padding
    /// instantiation (block value identity) when `k` is `None`. The result
    /// has one more entry than there are publisher slots.
    pub fn instantiate(&self, k: Option<u32>) -> Result<Vec<Perm>, ProtocolError> {
        if let Some(k) = k {
            if k >= self.n {
                return Err(ProtocolError::BadIndex { k, n: self.n });
            }
        }
        Ok(match &self.kind {
            Kind::Ofs => instantiate_ofs(self.n, k),
            Kind::Fs(template) => instantiate_fs(template, k),
        })
    }
}

/// The length-2n block: publisher slot pattern `(0,0,1,1,…,n−1,n−1)`.
///
/// Between the two slots of bit `i ≠ k` sits ρ* with `ρ*⁻¹·α·ρ* = α⁻¹`, so
/// `α^{x_i}·ρ*·α^{x_i} = ρ*` whatever `x_i`; between the two slots of bit
/// `k` sits the identity, leaving `α^{2·x_k}`. The head and tail soak up
/// the accumulated ρ* and conjugate α² back to α, so the block's product is
/// exactly `α^{x_k}`. Padding keeps every pair in the ρ* state and cancels
/// the tail, pinning the product to the identity.
pub fn build_ofs_selector_block(n: u32) -> SelectorBlock {
    assert!(n >= 1, "selector blocks need at least one metadata bit");
    SelectorBlock { n, kind: Kind::Ofs }
}

fn instantiate_ofs(n: u32, k: Option<u32>) -> Vec<Perm> {
    let rho_star = find_conjugator(ALPHA.inv(), ALPHA).expect("α and α⁻¹ are conjugate");
    let sigma = find_conjugator(ALPHA, ALPHA.mul(ALPHA)).expect("α and α² are conjugate");
    let mut inters = Vec::with_capacity(2 * n as usize + 1);
    match k {
        Some(k) => {
            inters.push(sigma.inv().mul(rho_star.pow(-(k as i64))));
            for i in 0..n {
                if i > 0 {
                    inters.push(IDENTITY);
                }
                inters.push(if i == k { IDENTITY } else { rho_star });
            }
            inters.push(rho_star.pow(-((n - 1 - k) as i64)).mul(sigma));
        }
        None => {
            inters.push(IDENTITY);
            for i in 0..n {
                if i > 0 {
                    inters.push(IDENTITY);
                }
                inters.push(rho_star);
            }
            inters.push(rho_star.pow(-(n as i64)));
        }
    }
    inters
}

/// The circuit-derived block: the α-or-identity transform of
/// `OR_i (x_i AND b_i)`, depth `1 + lg n`, hence `4n²` slots. Requires `n`
/// to be a power of two so the OR tree is balanced.
pub fn build_fs_selector_block(n: u32) -> Result<SelectorBlock, ProtocolError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(ProtocolError::BadParams(format!(
            "circuit selector blocks need a power-of-two bit count, got {n}"
        )));
    }
    let circuit = build_fixed_selector(n)?;
    let template = transform_alpha_one(&circuit, ALPHA).expect("α is a 5-cycle");
    Ok(SelectorBlock { n, kind: Kind::Fs(template) })
}

/// Folds the subscriber's `b` slots into the neighbouring interstitials:
/// `b` is one-hot at `k` (or all zero for padding), so each `b` slot
/// contributes a constant α or identity that merges away, leaving only the
/// publisher slots exposed.
fn instantiate_fs(template: &AopProgram, k: Option<u32>) -> Vec<Perm> {
    let mut inters = Vec::new();
    let mut acc = template.interstitials[0];
    for (j, &input) in template.index_seq.iter().enumerate() {
        let next = template.interstitials[j + 1];
        match input {
            InputBit::Publisher(_) => {
                inters.push(acc);
                acc = next;
            }
            InputBit::Subscriber(i) => {
                if k == Some(i) {
                    acc = acc.mul(ALPHA);
                }
                acc = acc.mul(next);
            }
            InputBit::Dummy => acc = acc.mul(next),
        }
    }
    inters.push(acc);
    inters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::s5::seq_value;

    /// Product of a block against concrete metadata: interstitials
    /// interleaved with the publisher's α-or-identity contributions.
    fn block_value(block: &SelectorBlock, inters: &[Perm], x: &[bool]) -> Perm {
        let bits = block.publisher_bits();
        assert_eq!(inters.len(), bits.len() + 1);
        let mut seq = Vec::with_capacity(2 * bits.len() + 1);
        for (t, &bit) in bits.iter().enumerate() {
            seq.push(inters[t]);
            seq.push(if x[bit as usize] { ALPHA } else { IDENTITY });
        }
        seq.push(*inters.last().unwrap());
        seq_value(seq)
    }

    fn masks(n: u32) -> impl Iterator<Item = Vec<bool>> {
        (0..1u64 << n).map(move |m| (0..n).map(|i| (m >> i) & 1 == 1).collect())
    }

    #[test]
    fn ofs_block_shape() {
        for n in [1u32, 2, 3, 4, 8] {
            let block = build_ofs_selector_block(n);
            assert_eq!(block.structural_len(), 2 * n as u64);
            let bits = block.publisher_bits();
            let expected: Vec<u32> = (0..n).flat_map(|i| [i, i]).collect();
            assert_eq!(bits, expected);
            assert_eq!(block.instantiate(Some(0)).unwrap().len(), 2 * n as usize + 1);
        }
    }

    #[test]
    fn ofs_block_selects_each_bit() {
        for n in [1u32, 2, 3, 4, 8] {
            let block = build_ofs_selector_block(n);
            for k in 0..n {
                let inters = block.instantiate(Some(k)).unwrap();
                for x in masks(n) {
                    let want = if x[k as usize] { ALPHA } else { IDENTITY };
                    assert_eq!(
                        block_value(&block, &inters, &x),
                        want,
                        "n={n} k={k} x={x:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn ofs_padding_is_inert() {
        for n in [1u32, 2, 3, 4] {
            let block = build_ofs_selector_block(n);
            let inters = block.instantiate(None).unwrap();
            for x in masks(n) {
                assert_eq!(block_value(&block, &inters, &x), IDENTITY, "n={n} x={x:?}");
            }
        }
    }

    #[test]
    fn fs_block_shape() {
        for n in [1u32, 2, 4, 8] {
            let block = build_fs_selector_block(n).unwrap();
            let nn = n as u64 * n as u64;
            assert_eq!(block.structural_len(), 4 * nn);
            let bits = block.publisher_bits();
            assert_eq!(bits.len() as u64, 2 * nn);
            assert!(bits.iter().all(|&b| b < n));
            assert_eq!(block.instantiate(Some(0)).unwrap().len() as u64, 2 * nn + 1);
        }
    }

    #[test]
    fn fs_block_selects_each_bit() {
        for n in [1u32, 2, 4] {
            let block = build_fs_selector_block(n).unwrap();
            for k in 0..n {
                let inters = block.instantiate(Some(k)).unwrap();
                for x in masks(n) {
                    let want = if x[k as usize] { ALPHA } else { IDENTITY };
                    assert_eq!(
                        block_value(&block, &inters, &x),
                        want,
                        "n={n} k={k} x={x:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn fs_padding_is_inert() {
        for n in [1u32, 2, 4] {
            let block = build_fs_selector_block(n).unwrap();
            let inters = block.instantiate(None).unwrap();
            for x in masks(n) {
                assert_eq!(block_value(&block, &inters, &x), IDENTITY, "n={n} x={x:?}");
            }
        }
    }

    #[test]
    fn publisher_pattern_is_independent_of_the_selection() {
        // The whole point of a fixed structure: which bits the publisher
        // reads never varies with k, only the interstitials do.
        for build in
            [|n| Ok(build_ofs_selector_block(n)), build_fs_selector_block as fn(u32) -> _]
        {
            let block: SelectorBlock = build(4).unwrap();
            let bits = block.publisher_bits();
            for k in 0..4 {
                assert_eq!(block.publisher_bits(), bits);
                block.instantiate(Some(k)).unwrap();
                assert_eq!(block.publisher_bits(), bits);
            }
        }
    }

    #[test]
    fn out_of_range_selection_is_rejected() {
        let block = build_ofs_selector_block(3);
        assert_eq!(block.instantiate(Some(3)), Err(ProtocolError::BadIndex { k: 3, n: 3 }));
        let block = build_fs_selector_block(2).unwrap();
        assert_eq!(block.instantiate(Some(5)), Err(ProtocolError::BadIndex { k: 5, n: 2 }));
    }

    #[test]
    fn fs_rejects_unbalanced_widths() {
        assert!(matches!(build_fs_selector_block(3), Err(ProtocolError::BadParams(_))));
        assert!(matches!(build_fs_selector_block(0), Err(ProtocolError::BadParams(_))));
    }
}
