//! Shared-randomness tapes and sequence blinding.
//!
//! Both endpoints hold the same [`RandomTape`] — either raw bytes agreed
//! out-of-band or a ChaCha20 keystream from a shared 32-byte seed — and
//! consume it in lockstep. Blinding rewrites a sequence as
//! `g₁·r₁, r₁⁻¹·g₂·r₂, …, r_{L−1}⁻¹·g_L` so the product telescopes to the
//! original value while every proper prefix is uniformly random. The
//! [`simulate`] oracle produces that target distribution directly from the
//! value alone; security tests compare the two.

use std::io;
use std::path::Path;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::s5::{Perm, PermSeq, IDENTITY};

/// Bytes at or above this value are discarded so the remaining 240 spread
/// evenly over the 120 elements. The rule is normative: two independent
/// implementations reading the same tape must land on the same elements.
const REJECT_ABOVE: u8 = 240;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlindError {
    #[error("random tape exhausted")]
    TapeExhausted,
}

/// A shared source of randomness consumed byte-by-byte from the front.
///
/// Cloning snapshots the cursor: the clone and the original replay the same
/// remaining bytes, which is exactly how two endpoints sharing a tape (or a
/// seed) stay aligned.
#[derive(Clone, Debug)]
pub struct RandomTape {
    source: TapeSource,
    consumed: u64,
}

#[derive(Clone, Debug)]
enum TapeSource {
    Bytes(Arc<[u8]>),
    Keystream(ChaCha20Rng),
}

impl RandomTape {
    /// A finite tape over raw bytes; exhausts when they run out.
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> RandomTape {
        RandomTape { source: TapeSource::Bytes(bytes.into().into()), consumed: 0 }
    }

    /// Reads a whole tape file (raw bytes, no header) into memory.
    pub fn from_file(path: impl AsRef<Path>) -> io::Result<RandomTape> {
        Ok(RandomTape::from_bytes(std::fs::read(path)?))
    }

    /// An endless ChaCha20 keystream (zero nonce, counter from 0) over a
    /// 32-byte shared seed.
    pub fn from_seed(seed: [u8; 32]) -> RandomTape {
        RandomTape { source: TapeSource::Keystream(ChaCha20Rng::from_seed(seed)), consumed: 0 }
    }

    /// Bytes consumed so far, counting rejected ones.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    fn next_byte(&mut self) -> Result<u8, BlindError> {
        let b = match &mut self.source {
            TapeSource::Bytes(data) => {
                *data.get(self.consumed as usize).ok_or(BlindError::TapeExhausted)?
            }
            TapeSource::Keystream(rng) => {
                let mut buf = [0u8];
                rng.fill_bytes(&mut buf);
                buf[0]
            }
        };
        self.consumed += 1;
        Ok(b)
    }

    /// One uniform group element by rejection sampling: read a byte `b`,
    /// discard while `b ≥ 240`, then decode `b mod 120`.
    pub fn draw_uniform(&mut self) -> Result<Perm, BlindError> {
        loop {
            let b = self.next_byte()?;
            if b < REJECT_ABOVE {
                return Ok(Perm::from_code(b % 120).expect("b mod 120 is in range"));
            }
        }
    }
}

/// One uniform group element from a local (non-shared) generator, using the
/// same rejection rule as the tape.
pub fn uniform_perm<R: RngCore + ?Sized>(rng: &mut R) -> Perm {
    loop {
        let mut buf = [0u8];
        rng.fill_bytes(&mut buf);
        if buf[0] < REJECT_ABOVE {
            return Perm::from_code(buf[0] % 120).expect("b mod 120 is in range");
        }
    }
}

/// Blinds a sequence: draws `L−1` blinders in index order and returns
/// `r_{i−1}⁻¹·g_i·r_i` per element (boundary blinders are the identity).
/// The product is unchanged; every proper prefix becomes uniform.
pub fn blind(s: &[Perm], tape: &mut RandomTape) -> Result<PermSeq, BlindError> {
    assert!(!s.is_empty(), "blinding needs at least one element");
    let mut out = Vec::with_capacity(s.len());
    let mut prev_inv = IDENTITY;
    for (i, &g) in s.iter().enumerate() {
        let r = if i + 1 == s.len() { IDENTITY } else { tape.draw_uniform()? };
        out.push(prev_inv.mul(g).mul(r));
        prev_inv = r.inv();
    }
    Ok(out)
}

/// Blinds one party's slice of a session sequence. All `L−1` blinders are
/// drawn — including those adjacent to unowned positions — so both parties
/// walk the tape identically; only the owned positions are emitted.
/// Elements at unowned positions of `s` are never read and may be anything.
pub fn blind_partial<F>(
    s: &[Perm],
    mut owned: F,
    tape: &mut RandomTape,
) -> Result<Vec<(u64, Perm)>, BlindError>
where
    F: FnMut(u64) -> bool,
{
    assert!(!s.is_empty(), "blinding needs at least one element");
    let mut out = Vec::new();
    let mut prev_inv = IDENTITY;
    for (i, &g) in s.iter().enumerate() {
        let r = if i + 1 == s.len() { IDENTITY } else { tape.draw_uniform()? };
        if owned(i as u64) {
            out.push((i as u64, prev_inv.mul(g).mul(r)));
        }
        prev_inv = r.inv();
    }
    Ok(out)
}

/// The security oracle: a length-`L` sequence whose first `L−1` elements are
/// uniform i.i.d. and whose last is forced so the product is `value`. The
/// blinding of any value-`value` sequence has exactly this distribution.
pub fn simulate<R: RngCore + ?Sized>(value: Perm, length: u64, rng: &mut R) -> PermSeq {
    assert!(length >= 1, "simulated sequences need at least one element");
    let mut out = Vec::with_capacity(length as usize);
    let mut prefix = IDENTITY;
    for _ in 0..length - 1 {
        let g = uniform_perm(rng);
        prefix = prefix.mul(g);
        out.push(g);
    }
    out.push(prefix.inv().mul(value));
    out
}
