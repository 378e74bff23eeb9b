//! Arithmetic in the symmetric group S5.
//!
//! Every permutation of `{1..5}` is carried as its lexicographic rank
//! (`0..120`) over one-line notation; multiplication, inversion and
//! conjugator lookup are table lookups built once at first use. One-line
//! image arrays only appear at the boundaries (parsing, display, encoding
//! into unary bit vectors).
//!
//! The composition convention is `(g · h)(x) = g(h(x))`: the right-hand
//! factor acts first. Sequence values fold left to right, so the *last*
//! element of a sequence is applied first when the product acts on a point.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

/// Number of elements of S5.
pub const GROUP_ORDER: usize = 120;

/// Factorials used by the lexicographic (un)ranking.
const FACT: [u16; 5] = [1, 1, 2, 6, 24];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum S5Error {
    /// Images are not a permutation of `{1..5}`.
    #[error("images {0:?} are not a permutation of 1..=5")]
    InvalidImages([u8; 5]),
    /// A rank outside `0..120`.
    #[error("permutation code {0} out of range (must be < 120)")]
    OutOfRange(u8),
    /// The two permutations lie in different conjugacy classes.
    #[error("permutations have different cycle types, no conjugator exists")]
    NotConjugate,
    /// Textual form did not parse.
    #[error("invalid permutation literal: {0}")]
    Parse(String),
}

/// A permutation of `{1..5}`, stored as its lexicographic rank.
///
/// `Ord` on `Perm` coincides with lexicographic order on one-line notation,
/// which is what "lex-smallest" means throughout this crate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(u8);

/// `(2 3 4 5 1)` — the distinguished 5-cycle the transforms target.
pub const ALPHA: Perm = Perm::from_images_const([2, 3, 4, 5, 1]);
/// `(3 5 4 2 1)` — the second generator used at AND nodes.
pub const BETA: Perm = Perm::from_images_const([3, 5, 4, 2, 1]);
/// `(3 5 2 1 4)` — the commutator `α·β·α⁻¹·β⁻¹`, also a 5-cycle.
pub const GAMMA: Perm = Perm::from_images_const([3, 5, 2, 1, 4]);
/// The identity permutation, rank 0.
pub const IDENTITY: Perm = Perm(0);

impl Perm {
    /// Ranks `images` at compile time; invalid images fail the build.
    const fn from_images_const(images: [u8; 5]) -> Perm {
        let mut seen = [false; 5];
        let mut i = 0;
        while i < 5 {
            let v = images[i];
            if v < 1 || v > 5 || seen[(v - 1) as usize] {
                panic!("constant is not a permutation of 1..=5");
            }
            seen[(v - 1) as usize] = true;
            i += 1;
        }
        let mut rank: u16 = 0;
        let mut i = 0;
        while i < 5 {
            let mut smaller = 0u16;
            let mut j = i + 1;
            while j < 5 {
                if images[j] < images[i] {
                    smaller += 1;
                }
                j += 1;
            }
            rank += smaller * FACT[4 - i];
            i += 1;
        }
        Perm(rank as u8)
    }

    /// Builds a permutation from one-line images: `images[i]` is the image
    /// of point `i + 1`.
    pub fn from_images(images: [u8; 5]) -> Result<Perm, S5Error> {
        let mut seen = [false; 5];
        for &v in &images {
            if !(1..=5).contains(&v) || seen[(v - 1) as usize] {
                return Err(S5Error::InvalidImages(images));
            }
            seen[(v - 1) as usize] = true;
        }
        Ok(Perm::from_images_const(images))
    }

    /// The canonical single-byte encoding (lexicographic rank, `0..120`).
    pub fn code(self) -> u8 {
        self.0
    }

    /// Decodes a single-byte rank.
    pub fn from_code(code: u8) -> Result<Perm, S5Error> {
        if (code as usize) < GROUP_ORDER {
            Ok(Perm(code))
        } else {
            Err(S5Error::OutOfRange(code))
        }
    }

    /// One-line images; `images()[i]` is the image of point `i + 1`.
    pub fn images(self) -> [u8; 5] {
        tables().images[self.0 as usize]
    }

    /// Applies the permutation to a point in `1..=5`.
    pub fn apply(self, point: u8) -> u8 {
        debug_assert!((1..=5).contains(&point));
        tables().images[self.0 as usize][(point - 1) as usize]
    }

    /// Group product under `(g · h)(x) = g(h(x))`; `other` acts first.
    pub fn mul(self, other: Perm) -> Perm {
        Perm(tables().mul[self.0 as usize][other.0 as usize])
    }

    /// Group inverse.
    pub fn inv(self) -> Perm {
        Perm(tables().inv[self.0 as usize])
    }

    /// Integer power; negative exponents go through the inverse.
    pub fn pow(self, exp: i64) -> Perm {
        let base = if exp < 0 { self.inv() } else { self };
        let mut e = exp.unsigned_abs();
        let mut acc = IDENTITY;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(b);
            }
            b = b.mul(b);
            e >>= 1;
        }
        acc
    }

    /// True when the permutation is a single 5-cycle (24 of the 120 are).
    pub fn is_five_cycle(self) -> bool {
        tables().five_cycle[self.0 as usize]
    }

    /// Iterates every element of S5 in lexicographic order.
    pub fn all() -> impl Iterator<Item = Perm> {
        (0..GROUP_ORDER as u8).map(Perm)
    }

    /// The 25-bit unary (one-hot matrix) encoding.
    ///
    /// Row `i` holds the image of point `i + 1` as five bits written highest
    /// value first: `bits[5i + j]` is set iff the image equals `5 - j`. So
    /// `(2 3 4 5 1)` reads `00010 00100 01000 10000 00001`.
    pub fn unary_bits(self) -> [bool; UNARY_BITS] {
        let img = self.images();
        let mut bits = [false; UNARY_BITS];
        for (i, &v) in img.iter().enumerate() {
            bits[5 * i + (5 - v) as usize] = true;
        }
        bits
    }

    /// Decodes the 25-bit unary encoding; rejects anything that is not a
    /// valid one-hot matrix of a permutation.
    pub fn from_unary(bits: &[bool; UNARY_BITS]) -> Result<Perm, S5Error> {
        let mut images = [0u8; 5];
        for i in 0..5 {
            let row = &bits[5 * i..5 * i + 5];
            let mut value = None;
            for (j, &b) in row.iter().enumerate() {
                if b {
                    if value.is_some() {
                        return Err(S5Error::InvalidImages(images));
                    }
                    value = Some(5 - j as u8);
                }
            }
            images[i] = value.ok_or(S5Error::InvalidImages(images))?;
        }
        Perm::from_images(images)
    }
}

/// Width of the unary element encoding: a 5×5 one-hot matrix.
pub const UNARY_BITS: usize = 25;

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let img = self.images();
        write!(f, "({} {} {} {} {})", img[0], img[1], img[2], img[3], img[4])
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm[{}]{}", self.0, self)
    }
}

impl FromStr for Perm {
    type Err = S5Error;

    /// Parses one-line notation such as `"(2 3 4 5 1)"`.
    fn from_str(s: &str) -> Result<Perm, S5Error> {
        let body = s
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| S5Error::Parse(format!("expected (a b c d e), got {s:?}")))?;
        let mut images = [0u8; 5];
        let mut count = 0;
        for tok in body.split_whitespace() {
            if count == 5 {
                return Err(S5Error::Parse(format!("too many entries in {s:?}")));
            }
            images[count] = tok
                .parse::<u8>()
                .map_err(|_| S5Error::Parse(format!("bad entry {tok:?} in {s:?}")))?;
            count += 1;
        }
        if count != 5 {
            return Err(S5Error::Parse(format!("expected 5 entries in {s:?}")));
        }
        Perm::from_images(images).map_err(|_| S5Error::Parse(format!("{s:?} is not a permutation")))
    }
}

/// A sequence of group elements whose product the broker evaluates.
pub type PermSeq = Vec<Perm>;

/// Left-to-right product of a sequence: `seq_value([a, b, c]) = a·b·c`.
///
/// Under the composition convention this means the last element of the
/// sequence acts on a point first.
pub fn seq_value<I>(seq: I) -> Perm
where
    I: IntoIterator<Item = Perm>,
{
    seq.into_iter().fold(IDENTITY, Perm::mul)
}

/// Finds the lexicographically smallest `ρ` with `target = ρ⁻¹·source·ρ`.
///
/// Errors with [`S5Error::NotConjugate`] when the cycle types differ. For a
/// 5-cycle the centralizer has order 5, so exactly five conjugators exist and
/// the table holds the smallest.
pub fn find_conjugator(target: Perm, source: Perm) -> Result<Perm, S5Error> {
    let code = tables().conj[target.0 as usize][source.0 as usize];
    if code == NO_CONJUGATOR {
        Err(S5Error::NotConjugate)
    } else {
        Ok(Perm(code))
    }
}

const NO_CONJUGATOR: u8 = u8::MAX;

struct Tables {
    images: [[u8; 5]; GROUP_ORDER],
    mul: [[u8; GROUP_ORDER]; GROUP_ORDER],
    inv: [u8; GROUP_ORDER],
    five_cycle: [bool; GROUP_ORDER],
    /// `conj[t][s]` = smallest ρ with `t = ρ⁻¹·s·ρ`, or `NO_CONJUGATOR`.
    conj: [[u8; GROUP_ORDER]; GROUP_ORDER],
}

static TABLES: OnceLock<Box<Tables>> = OnceLock::new();

fn tables() -> &'static Tables {
    TABLES.get_or_init(|| Box::new(build_tables()))
}

fn unrank(mut code: u16) -> [u8; 5] {
    let mut avail = vec![1u8, 2, 3, 4, 5];
    let mut images = [0u8; 5];
    for i in 0..5 {
        let f = FACT[4 - i];
        let idx = (code / f) as usize;
        code %= f;
        images[i] = avail.remove(idx);
    }
    images
}

fn build_tables() -> Tables {
    let mut images = [[0u8; 5]; GROUP_ORDER];
    for (code, slot) in images.iter_mut().enumerate() {
        *slot = unrank(code as u16);
    }

    let mut mul = [[0u8; GROUP_ORDER]; GROUP_ORDER];
    for g in 0..GROUP_ORDER {
        for h in 0..GROUP_ORDER {
            let mut prod = [0u8; 5];
            for x in 0..5 {
                prod[x] = images[g][(images[h][x] - 1) as usize];
            }
            mul[g][h] = Perm::from_images_const(prod).0;
        }
    }

    let mut inv = [0u8; GROUP_ORDER];
    for g in 0..GROUP_ORDER {
        let mut inverse = [0u8; 5];
        for x in 0..5 {
            inverse[(images[g][x] - 1) as usize] = x as u8 + 1;
        }
        inv[g] = Perm::from_images_const(inverse).0;
    }

    let mut cycle_type = [0u8; GROUP_ORDER];
    let mut five_cycle = [false; GROUP_ORDER];
    for g in 0..GROUP_ORDER {
        cycle_type[g] = cycle_type_id(&images[g]);
        five_cycle[g] = cycle_type[g] == 5;
    }

    let mut conj = [[NO_CONJUGATOR; GROUP_ORDER]; GROUP_ORDER];
    for t in 0..GROUP_ORDER {
        for s in 0..GROUP_ORDER {
            if cycle_type[t] != cycle_type[s] {
                continue;
            }
            for rho in 0..GROUP_ORDER as u8 {
                let lhs = mul[mul[inv[rho as usize] as usize][s] as usize][rho as usize];
                if lhs as usize == t {
                    conj[t][s] = rho;
                    break;
                }
            }
        }
    }

    Tables { images, mul, inv, five_cycle, conj }
}

/// A compact id for the cycle-length multiset: sorted lengths packed into
/// digits, e.g. a 5-cycle is 5, a (2,2) double transposition is 22.
fn cycle_type_id(images: &[u8; 5]) -> u8 {
    let mut seen = [false; 5];
    let mut lengths = Vec::new();
    for start in 0..5u8 {
        if seen[start as usize] {
            continue;
        }
        let mut len = 0u8;
        let mut p = start;
        while !seen[p as usize] {
            seen[p as usize] = true;
            p = images[p as usize] - 1;
            len += 1;
        }
        if len > 1 {
            lengths.push(len);
        }
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    lengths.iter().fold(0u8, |acc, &l| acc * 10 + l)
}
