//! Circuit-to-group-program transforms.
//!
//! A depth-d circuit becomes a sequence of exactly 4^d S5 elements whose
//! product is the target 5-cycle when the circuit accepts and the identity
//! when it rejects. Two output forms exist:
//!
//! - [`GroupProgram`]: each slot holds a pair `(g⁰, g¹)` plus the input it
//!   depends on; evaluation picks one element per slot by the input bit and
//!   multiplies left to right.
//! - [`AopProgram`]: the α-or-identity form used by the selector protocols.
//!   The input-dependent factor is always `α^{x_k}` regardless of the slot,
//!   and fixed interstitial elements sit between the slots:
//!   `g₁·α^{x_{k₁}}·g₂·α^{x_{k₂}}·…·g_L·α^{x_{k_L}}·g_{L+1}`.
//!
//! The recursion works per gate. A leaf is a single slot. NOT re-targets the
//! child at the inverse cycle and multiplies the tail by the target (no
//! extra slots, which is why depth ignores negation). AND concatenates the
//! two operands targeted at α, β, α⁻¹, β⁻¹ so the product telescopes to the
//! commutator exactly when both accept, then conjugates the commutator to
//! the required target; OR is AND through De Morgan. Operands of unequal
//! depth are padded with slots on the always-0 dummy input so every gate
//! level exactly quadruples the length.

use std::convert::Infallible;
use std::fmt;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::circuit::{Assignment, Circuit, CircuitError, Gate, InputBit, NodeId};
use crate::s5::{find_conjugator, Perm, ALPHA, BETA, GAMMA, IDENTITY};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("transform target {0} is not a 5-cycle")]
    NotACycle(Perm),
}

/// One slot of a [`GroupProgram`]: the element contributed when the
/// referenced input is 0 or 1 respectively.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ProgramElement {
    pub zero: Perm,
    pub one: Perm,
    pub input: InputBit,
}

/// A paired-element group program; see the module docs.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupProgram {
    pub elements: Vec<ProgramElement>,
}

impl GroupProgram {
    pub fn len(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// An α-or-identity program: `interstitials` has one more entry than
/// `index_seq`, and the program value is the alternating product
/// `g₁·α^{x_{k₁}}·…·g_L·α^{x_{k_L}}·g_{L+1}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AopProgram {
    pub interstitials: Vec<Perm>,
    pub index_seq: Vec<InputBit>,
}

impl AopProgram {
    pub fn len(&self) -> u64 {
        self.index_seq.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.index_seq.is_empty()
    }
}

/// Transforms a circuit into a paired-element program of length
/// `4^depth(c)` that multiplies out to `target` exactly when the circuit
/// accepts. Errors unless `target` is a 5-cycle.
pub fn transform(c: &Circuit, target: Perm) -> Result<GroupProgram, TransformError> {
    if !target.is_five_cycle() {
        return Err(TransformError::NotACycle(target));
    }
    let depths = c.node_depths();
    let elements = gp_rec(c, &depths, c.output(), false, target);
    Ok(GroupProgram { elements })
}

fn gp_rec(c: &Circuit, depths: &[u32], node: NodeId, negated: bool, target: Perm) -> Vec<ProgramElement> {
    match c.gate(node) {
        Gate::Not(x) => gp_rec(c, depths, x, !negated, target),
        Gate::Input(bit) => {
            let (zero, one) = if negated { (target, IDENTITY) } else { (IDENTITY, target) };
            vec![ProgramElement { zero, one, input: bit }]
        }
        Gate::Const(v) => {
            let g = if v != negated { target } else { IDENTITY };
            vec![ProgramElement { zero: g, one: g, input: InputBit::Dummy }]
        }
        Gate::And(a, b) | Gate::Or(a, b) => {
            let is_or = matches!(c.gate(node), Gate::Or(_, _));
            // AND under negation and OR in the positive both compute a
            // negated conjunction; their children flip for OR (De Morgan).
            let negated_and = negated != is_or;
            let child_neg = is_or;
            let t_eff = if negated_and { target.inv() } else { target };
            let rho = find_conjugator(t_eff, GAMMA).expect("5-cycles are conjugate");

            let mut seq = gp_rec(c, depths, a, child_neg, ALPHA);
            seq.extend(gp_rec(c, depths, b, child_neg, BETA));
            seq.extend(gp_rec(c, depths, a, child_neg, ALPHA.inv()));
            seq.extend(gp_rec(c, depths, b, child_neg, BETA.inv()));

            let rho_inv = rho.inv();
            let first = seq.first_mut().expect("operand programs are never empty");
            first.zero = rho_inv.mul(first.zero);
            first.one = rho_inv.mul(first.one);
            let tail = if negated_and { rho.mul(target) } else { rho };
            let last = seq.last_mut().unwrap();
            last.zero = last.zero.mul(tail);
            last.one = last.one.mul(tail);

            let want = 1usize << (2 * depths[node as usize]);
            seq.resize(
                want,
                ProgramElement { zero: IDENTITY, one: IDENTITY, input: InputBit::Dummy },
            );
            seq
        }
    }
}

/// Evaluates a paired-element program: per slot, the input bit picks the
/// element, and the picks multiply left to right.
pub fn eval_gp(p: &GroupProgram, a: &Assignment) -> Result<Perm, CircuitError> {
    let mut acc = IDENTITY;
    for el in &p.elements {
        let bit = a.get(el.input).ok_or(CircuitError::MissingInput(el.input))?;
        acc = acc.mul(if bit { el.one } else { el.zero });
    }
    Ok(acc)
}

/// Transforms a circuit into the α-or-identity form: the value is
/// `target^{f(x)}` while the input-dependent factors are always powers of
/// the global α, which is what lets a selector block stand in for each slot.
pub fn transform_alpha_one(c: &Circuit, target: Perm) -> Result<AopProgram, TransformError> {
    if !target.is_five_cycle() {
        return Err(TransformError::NotACycle(target));
    }
    let depths = c.node_depths();
    let mut em = AopEmitter { pending: IDENTITY, interstitials: Vec::new(), index_seq: Vec::new() };
    aop_rec(c, &depths, c.output(), false, target, &mut em);
    em.interstitials.push(em.pending);
    Ok(AopProgram { interstitials: em.interstitials, index_seq: em.index_seq })
}

struct AopEmitter {
    pending: Perm,
    interstitials: Vec<Perm>,
    index_seq: Vec<InputBit>,
}

impl AopEmitter {
    fn mul_pending(&mut self, g: Perm) {
        self.pending = self.pending.mul(g);
    }

    fn slot(&mut self, input: InputBit) {
        self.interstitials.push(self.pending);
        self.index_seq.push(input);
        self.pending = IDENTITY;
    }
}

fn aop_rec(c: &Circuit, depths: &[u32], node: NodeId, negated: bool, target: Perm, em: &mut AopEmitter) {
    match c.gate(node) {
        Gate::Not(x) => aop_rec(c, depths, x, !negated, target, em),
        Gate::Input(bit) => {
            if negated {
                // g₁·α^x·g₂ = target^(1-x) with g₁ = ρ⁻¹, g₂ = α⁻¹·ρ where
                // target = ρ⁻¹·α⁻¹·ρ.
                let rho = find_conjugator(target, ALPHA.inv()).expect("5-cycles are conjugate");
                em.mul_pending(rho.inv());
                em.slot(bit);
                em.mul_pending(ALPHA.inv().mul(rho));
            } else {
                let rho = find_conjugator(target, ALPHA).expect("5-cycles are conjugate");
                em.mul_pending(rho.inv());
                em.slot(bit);
                em.mul_pending(rho);
            }
        }
        Gate::Const(v) => {
            if v != negated {
                em.mul_pending(target);
            }
            em.slot(InputBit::Dummy);
        }
        Gate::And(a, b) | Gate::Or(a, b) => {
            let is_or = matches!(c.gate(node), Gate::Or(_, _));
            let negated_and = negated != is_or;
            let child_neg = is_or;
            let t_eff = if negated_and { target.inv() } else { target };
            let rho = find_conjugator(t_eff, GAMMA).expect("5-cycles are conjugate");

            em.mul_pending(rho.inv());
            aop_rec(c, depths, a, child_neg, ALPHA, em);
            aop_rec(c, depths, b, child_neg, BETA, em);
            aop_rec(c, depths, a, child_neg, ALPHA.inv(), em);
            aop_rec(c, depths, b, child_neg, BETA.inv(), em);
            em.mul_pending(rho);
            if negated_and {
                em.mul_pending(target);
            }

            let want = 1u64 << (2 * depths[node as usize]);
            let have = 2 * (1u64 << (2 * depths[a as usize])) + 2 * (1u64 << (2 * depths[b as usize]));
            for _ in have..want {
                em.slot(InputBit::Dummy);
            }
        }
    }
}

/// Evaluates an α-or-identity program against an assignment.
pub fn eval_aop(p: &AopProgram, a: &Assignment) -> Result<Perm, CircuitError> {
    debug_assert_eq!(p.interstitials.len(), p.index_seq.len() + 1);
    let mut acc = IDENTITY;
    for (g, &input) in p.interstitials.iter().zip(&p.index_seq) {
        let bit = a.get(input).ok_or(CircuitError::MissingInput(input))?;
        acc = acc.mul(*g);
        if bit {
            acc = acc.mul(ALPHA);
        }
    }
    Ok(acc.mul(*p.interstitials.last().unwrap()))
}

#[derive(Debug)]
pub enum StreamError<E> {
    NotACycle(Perm),
    Sink(E),
}

impl<E: fmt::Display> fmt::Display for StreamError<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::NotACycle(p) => write!(f, "transform target {p} is not a 5-cycle"),
            StreamError::Sink(e) => write!(f, "sink rejected element: {e}"),
        }
    }
}

impl<E: std::error::Error + 'static> std::error::Error for StreamError<E> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            StreamError::NotACycle(_) => None,
            StreamError::Sink(e) => Some(e),
        }
    }
}

/// Streams the paired-element transform without materialising it: `sink`
/// receives each element in order and may abort with an error. Returns the
/// number of elements emitted (always `4^depth(c)` on success).
///
/// Boundary fix-ups (the conjugations and negation tails that touch a
/// subprogram's first and last element) are threaded down as pre/post
/// multipliers so each element is final when emitted. The materialising
/// [`transform`] patches its buffers in place instead; the two routes are
/// checked against each other elementwise in the tests.
pub fn stream_transform<E, F>(c: &Circuit, target: Perm, mut sink: F) -> Result<u64, StreamError<E>>
where
    F: FnMut(ProgramElement) -> Result<(), E>,
{
    if !target.is_five_cycle() {
        return Err(StreamError::NotACycle(target));
    }
    let depths = c.node_depths();
    let mut count = 0u64;
    stream_rec(c, &depths, c.output(), false, target, IDENTITY, IDENTITY, &mut sink, &mut count)
        .map_err(StreamError::Sink)?;
    Ok(count)
}

/// Streams the transform and discards sink errors statically — a
/// convenience for in-process consumers.
pub fn stream_transform_infallible<F>(c: &Circuit, target: Perm, mut sink: F) -> Result<u64, TransformError>
where
    F: FnMut(ProgramElement),
{
    stream_transform::<Infallible, _>(c, target, |el| {
        sink(el);
        Ok(())
    })
    .map_err(|e| match e {
        StreamError::NotACycle(p) => TransformError::NotACycle(p),
        StreamError::Sink(never) => match never {},
    })
}

#[allow(clippy::too_many_arguments)]
fn stream_rec<E, F>(
    c: &Circuit,
    depths: &[u32],
    node: NodeId,
    negated: bool,
    target: Perm,
    pre: Perm,
    post: Perm,
    sink: &mut F,
    count: &mut u64,
) -> Result<(), E>
where
    F: FnMut(ProgramElement) -> Result<(), E>,
{
    let emit = |el: ProgramElement, sink: &mut F, count: &mut u64| -> Result<(), E> {
        *count += 1;
        sink(el)
    };
    match c.gate(node) {
        Gate::Not(x) => stream_rec(c, depths, x, !negated, target, pre, post, sink, count),
        Gate::Input(bit) => {
            let (zero, one) = if negated { (target, IDENTITY) } else { (IDENTITY, target) };
            emit(
                ProgramElement {
                    zero: pre.mul(zero).mul(post),
                    one: pre.mul(one).mul(post),
                    input: bit,
                },
                sink,
                count,
            )
        }
        Gate::Const(v) => {
            let g = if v != negated { pre.mul(target).mul(post) } else { pre.mul(post) };
            emit(ProgramElement { zero: g, one: g, input: InputBit::Dummy }, sink, count)
        }
        Gate::And(a, b) | Gate::Or(a, b) => {
            let is_or = matches!(c.gate(node), Gate::Or(_, _));
            let negated_and = negated != is_or;
            let child_neg = is_or;
            let t_eff = if negated_and { target.inv() } else { target };
            let rho = find_conjugator(t_eff, GAMMA).expect("5-cycles are conjugate");

            let want = 1u64 << (2 * depths[node as usize]);
            let have = 2 * (1u64 << (2 * depths[a as usize])) + 2 * (1u64 << (2 * depths[b as usize]));
            let pad = want - have;

            let tail = if negated_and { rho.mul(target) } else { rho };
            let last_post = if pad > 0 { tail } else { tail.mul(post) };

            stream_rec(c, depths, a, child_neg, ALPHA, pre.mul(rho.inv()), IDENTITY, sink, count)?;
            stream_rec(c, depths, b, child_neg, BETA, IDENTITY, IDENTITY, sink, count)?;
            stream_rec(c, depths, a, child_neg, ALPHA.inv(), IDENTITY, IDENTITY, sink, count)?;
            stream_rec(c, depths, b, child_neg, BETA.inv(), IDENTITY, last_post, sink, count)?;

            for i in 0..pad {
                let g = if i + 1 == pad { post } else { IDENTITY };
                emit(ProgramElement { zero: g, one: g, input: InputBit::Dummy }, sink, count)?;
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// On-disk format: magic "GPS5", version, variant, big-endian length, then the
// element data. Input references are stored as 4-byte ordinals with the top
// two bits tagging the owner (00 publisher, 01 subscriber, all-ones dummy).

const GP_MAGIC: &[u8; 4] = b"GPS5";
const GP_VERSION: u8 = 1;
const VARIANT_PAIRED: u8 = 0;
const VARIANT_ALPHA_ONE: u8 = 1;
const ORDINAL_DUMMY: u32 = u32::MAX;
const ORDINAL_TAG_SHIFT: u32 = 30;
const ORDINAL_MAX: u32 = (1 << ORDINAL_TAG_SHIFT) - 1;

#[derive(Debug, Error)]
pub enum GpFileError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic: expected GPS5")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown program variant {0}")]
    BadVariant(u8),
    #[error("byte {0} is not a valid group element code")]
    BadElement(u8),
    #[error("ordinal {0:#x} is not a valid input reference")]
    BadOrdinal(u32),
}

fn input_ordinal(bit: InputBit) -> u32 {
    match bit {
        InputBit::Publisher(k) => {
            assert!(k <= ORDINAL_MAX, "publisher ordinal too large for file format");
            k
        }
        InputBit::Subscriber(k) => {
            assert!(k <= ORDINAL_MAX, "subscriber ordinal too large for file format");
            (1 << ORDINAL_TAG_SHIFT) | k
        }
        InputBit::Dummy => ORDINAL_DUMMY,
    }
}

fn ordinal_input(v: u32) -> Result<InputBit, GpFileError> {
    if v == ORDINAL_DUMMY {
        return Ok(InputBit::Dummy);
    }
    match v >> ORDINAL_TAG_SHIFT {
        0 => Ok(InputBit::Publisher(v & ORDINAL_MAX)),
        1 => Ok(InputBit::Subscriber(v & ORDINAL_MAX)),
        _ => Err(GpFileError::BadOrdinal(v)),
    }
}

fn write_header(w: &mut impl Write, variant: u8, length: u64) -> io::Result<()> {
    w.write_all(GP_MAGIC)?;
    w.write_all(&[GP_VERSION, variant])?;
    w.write_all(&length.to_be_bytes())
}

fn read_header(r: &mut impl Read) -> Result<(u8, u64), GpFileError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GP_MAGIC {
        return Err(GpFileError::BadMagic);
    }
    let mut vv = [0u8; 2];
    r.read_exact(&mut vv)?;
    if vv[0] != GP_VERSION {
        return Err(GpFileError::BadVersion(vv[0]));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    Ok((vv[1], u64::from_be_bytes(len)))
}

fn read_perm(byte: u8) -> Result<Perm, GpFileError> {
    Perm::from_code(byte).map_err(|_| GpFileError::BadElement(byte))
}

/// Writes a paired-element program.
pub fn write_group_program(w: &mut impl Write, p: &GroupProgram) -> io::Result<()> {
    write_header(w, VARIANT_PAIRED, p.len())?;
    for el in &p.elements {
        w.write_all(&[el.zero.code(), el.one.code()])?;
        w.write_all(&input_ordinal(el.input).to_be_bytes())?;
    }
    Ok(())
}

/// Reads a paired-element program; errors if the file holds the α-or-identity
/// variant.
pub fn read_group_program(r: &mut impl Read) -> Result<GroupProgram, GpFileError> {
    let (variant, length) = read_header(r)?;
    if variant != VARIANT_PAIRED {
        return Err(GpFileError::BadVariant(variant));
    }
    let mut elements = Vec::with_capacity(length as usize);
    for _ in 0..length {
        let mut buf = [0u8; 6];
        r.read_exact(&mut buf)?;
        elements.push(ProgramElement {
            zero: read_perm(buf[0])?,
            one: read_perm(buf[1])?,
            input: ordinal_input(u32::from_be_bytes([buf[2], buf[3], buf[4], buf[5]]))?,
        });
    }
    Ok(GroupProgram { elements })
}

/// Writes an α-or-identity program: the L+1 interstitial codes, then the L
/// input ordinals.
pub fn write_aop_program(w: &mut impl Write, p: &AopProgram) -> io::Result<()> {
    write_header(w, VARIANT_ALPHA_ONE, p.len())?;
    let codes: Vec<u8> = p.interstitials.iter().map(|g| g.code()).collect();
    w.write_all(&codes)?;
    for &input in &p.index_seq {
        w.write_all(&input_ordinal(input).to_be_bytes())?;
    }
    Ok(())
}

/// Reads an α-or-identity program.
pub fn read_aop_program(r: &mut impl Read) -> Result<AopProgram, GpFileError> {
    let (variant, length) = read_header(r)?;
    if variant != VARIANT_ALPHA_ONE {
        return Err(GpFileError::BadVariant(variant));
    }
    let mut codes = vec![0u8; length as usize + 1];
    r.read_exact(&mut codes)?;
    let interstitials = codes.into_iter().map(read_perm).collect::<Result<Vec<_>, _>>()?;
    let mut index_seq = Vec::with_capacity(length as usize);
    for _ in 0..length {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        index_seq.push(ordinal_input(u32::from_be_bytes(buf))?);
    }
    Ok(AopProgram { interstitials, index_seq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{bits_from_mask, parse_sexp};
    use crate::corpus::standard_corpus;
    use crate::s5::seq_value;

    fn assignments_for(c: &Circuit) -> impl Iterator<Item = Assignment> {
        let width = c.publisher_width() as usize;
        (0..1u64 << width).map(move |mask| Assignment::publisher_only(bits_from_mask(width, mask)))
    }

    fn expected_value(c: &Circuit, a: &Assignment, target: Perm) -> Perm {
        if c.eval(a).unwrap() {
            target
        } else {
            IDENTITY
        }
    }

    #[test]
    fn leaf_transforms_are_single_slots() {
        let c = parse_sexp("x0").unwrap();
        let p = transform(&c, ALPHA).unwrap();
        assert_eq!(
            p.elements,
            vec![ProgramElement { zero: IDENTITY, one: ALPHA, input: InputBit::Publisher(0) }]
        );

        let aop = transform_alpha_one(&c, ALPHA).unwrap();
        assert_eq!(aop.interstitials, vec![IDENTITY, IDENTITY]);
        assert_eq!(aop.index_seq, vec![InputBit::Publisher(0)]);
    }

    #[test]
    fn and_transform_matches_commutator_construction() {
        // Targeted at the commutator itself the conjugation is trivial, so
        // the four slots are exactly the α/β/α⁻¹/β⁻¹ pattern.
        let c = parse_sexp("(and x0 x1)").unwrap();
        let p = transform(&c, GAMMA).unwrap();
        let x0 = InputBit::Publisher(0);
        let x1 = InputBit::Publisher(1);
        assert_eq!(
            p.elements,
            vec![
                ProgramElement { zero: IDENTITY, one: ALPHA, input: x0 },
                ProgramElement { zero: IDENTITY, one: BETA, input: x1 },
                ProgramElement { zero: IDENTITY, one: ALPHA.inv(), input: x0 },
                ProgramElement { zero: IDENTITY, one: BETA.inv(), input: x1 },
            ]
        );

        // x = 11 multiplies out to the commutator, x = 01 telescopes away.
        let both = Assignment::publisher_only(vec![true, true]);
        assert_eq!(eval_gp(&p, &both).unwrap(), GAMMA);
        let one = Assignment::publisher_only(vec![false, true]);
        assert_eq!(eval_gp(&p, &one).unwrap(), IDENTITY);
        assert_eq!(seq_value([IDENTITY, BETA, IDENTITY, BETA.inv()]), IDENTITY);
    }

    #[test]
    fn length_law_over_corpus() {
        for c in standard_corpus(11, 60) {
            let want = 1u64 << (2 * c.depth());
            assert_eq!(transform(&c, ALPHA).unwrap().len(), want);
            assert_eq!(transform_alpha_one(&c, ALPHA).unwrap().len(), want);
            assert_eq!(transform(&c, BETA).unwrap().len(), want);
        }
    }

    #[test]
    fn semantics_over_corpus_exhaustive_inputs() {
        for c in standard_corpus(12, 40) {
            let p = transform(&c, ALPHA).unwrap();
            let aop = transform_alpha_one(&c, ALPHA).unwrap();
            for a in assignments_for(&c) {
                let want = expected_value(&c, &a, ALPHA);
                assert_eq!(eval_gp(&p, &a).unwrap(), want);
                assert_eq!(eval_aop(&aop, &a).unwrap(), want);
            }
        }
    }

    #[test]
    fn negation_keeps_length_and_flips_value() {
        let c = parse_sexp("(and x0 x1)").unwrap();
        let nc = parse_sexp("(not (and x0 x1))").unwrap();
        let p = transform(&c, ALPHA).unwrap();
        let np = transform(&nc, ALPHA).unwrap();
        assert_eq!(p.len(), np.len());
        for a in assignments_for(&nc) {
            let f = c.eval(&a).unwrap();
            assert_eq!(eval_gp(&np, &a).unwrap(), if f { IDENTITY } else { ALPHA });
        }
    }

    #[test]
    fn values_under_two_targets_are_conjugate() {
        let t2 = GAMMA;
        for c in standard_corpus(13, 20) {
            let p1 = transform(&c, ALPHA).unwrap();
            let p2 = transform(&c, t2).unwrap();
            assert_eq!(p1.len(), p2.len());
            let rho = find_conjugator(ALPHA, t2).unwrap();
            for a in assignments_for(&c) {
                let v1 = eval_gp(&p1, &a).unwrap();
                let v2 = eval_gp(&p2, &a).unwrap();
                assert_eq!(v1, rho.inv().mul(v2).mul(rho));
            }
        }
    }

    #[test]
    fn constants_become_insensitive_slots() {
        let one = parse_sexp("1").unwrap();
        let p = transform(&one, ALPHA).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.elements[0].zero, ALPHA);
        assert_eq!(p.elements[0].one, ALPHA);
        assert_eq!(p.elements[0].input, InputBit::Dummy);

        let zero = parse_sexp("0").unwrap();
        let p = transform(&zero, ALPHA).unwrap();
        assert_eq!(p.elements[0].zero, IDENTITY);
        assert_eq!(p.elements[0].one, IDENTITY);
        assert_eq!(eval_gp(&p, &Assignment::default()).unwrap(), IDENTITY);
    }

    #[test]
    fn unbalanced_and_pads_with_insensitive_dummy_slots() {
        let c = parse_sexp("(and x0 (and x1 x2))").unwrap();
        let p = transform(&c, ALPHA).unwrap();
        assert_eq!(p.len(), 16);
        let dummy_slots: Vec<&ProgramElement> =
            p.elements.iter().filter(|el| el.input == InputBit::Dummy).collect();
        assert_eq!(dummy_slots.len(), 6);
        for el in &p.elements {
            if el.input == InputBit::Dummy {
                assert_eq!(el.zero, el.one, "dummy slots must not depend on their bit");
            }
        }
        for a in assignments_for(&c) {
            assert_eq!(eval_gp(&p, &a).unwrap(), expected_value(&c, &a, ALPHA));
        }
    }

    #[test]
    fn transform_rejects_non_cycles() {
        let c = parse_sexp("x0").unwrap();
        assert_eq!(transform(&c, IDENTITY), Err(TransformError::NotACycle(IDENTITY)));
        let transposition = Perm::from_images([2, 1, 3, 4, 5]).unwrap();
        assert!(transform(&c, transposition).is_err());
        assert!(transform_alpha_one(&c, transposition).is_err());
        assert!(matches!(
            stream_transform::<Infallible, _>(&c, transposition, |_| Ok(())),
            Err(StreamError::NotACycle(_))
        ));
    }

    #[test]
    fn streaming_agrees_with_materialised_transform() {
        for c in standard_corpus(14, 50) {
            for target in [ALPHA, GAMMA] {
                let materialised = transform(&c, target).unwrap();
                let mut streamed = Vec::new();
                let count =
                    stream_transform_infallible(&c, target, |el| streamed.push(el)).unwrap();
                assert_eq!(count, materialised.len());
                assert_eq!(streamed, materialised.elements);
            }
        }
    }

    #[test]
    fn streaming_value_accumulator_matches_eval() {
        let c = parse_sexp("(or (and x0 x1) (not x2))").unwrap();
        for a in assignments_for(&c) {
            let mut acc = IDENTITY;
            stream_transform_infallible(&c, ALPHA, |el| {
                let bit = a.get(el.input).unwrap();
                acc = acc.mul(if bit { el.one } else { el.zero });
            })
            .unwrap();
            let p = transform(&c, ALPHA).unwrap();
            assert_eq!(acc, eval_gp(&p, &a).unwrap());
        }
    }

    #[test]
    fn stream_counts_and_sink_errors() {
        let c = parse_sexp("(and x0 x1)").unwrap();
        let mut n = 0u64;
        let count = stream_transform_infallible(&c, ALPHA, |_| n += 1).unwrap();
        assert_eq!((count, n), (4, 4));

        #[derive(Debug, PartialEq)]
        struct Stop;
        let mut calls = 0;
        let result = stream_transform::<Stop, _>(&c, ALPHA, |_| {
            calls += 1;
            if calls == 3 {
                Err(Stop)
            } else {
                Ok(())
            }
        });
        assert!(matches!(result, Err(StreamError::Sink(Stop))));
        assert_eq!(calls, 3);
    }

    #[test]
    fn file_round_trip_paired() {
        let c = parse_sexp("(or (and x0 b1) (not x2))").unwrap();
        let p = transform(&c, ALPHA).unwrap();
        let mut buf = Vec::new();
        write_group_program(&mut buf, &p).unwrap();
        assert_eq!(&buf[..4], b"GPS5");
        assert_eq!(buf[4], 1);
        assert_eq!(buf[5], 0);
        assert_eq!(buf.len(), 14 + 6 * p.len() as usize);
        let back = read_group_program(&mut buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn file_round_trip_alpha_one() {
        let c = parse_sexp("(and (or x0 x1) b0)").unwrap();
        let p = transform_alpha_one(&c, ALPHA).unwrap();
        let mut buf = Vec::new();
        write_aop_program(&mut buf, &p).unwrap();
        assert_eq!(buf[5], 1);
        let back = read_aop_program(&mut buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn file_rejects_malformed_headers() {
        let c = parse_sexp("x0").unwrap();
        let p = transform(&c, ALPHA).unwrap();
        let mut buf = Vec::new();
        write_group_program(&mut buf, &p).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_group_program(&mut bad.as_slice()), Err(GpFileError::BadMagic)));

        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(read_group_program(&mut bad.as_slice()), Err(GpFileError::BadVersion(9))));

        let mut bad = buf.clone();
        bad[5] = 7;
        assert!(matches!(read_group_program(&mut bad.as_slice()), Err(GpFileError::BadVariant(7))));

        // Paired reader refuses the α-or-identity variant.
        let aop = transform_alpha_one(&c, ALPHA).unwrap();
        let mut aop_buf = Vec::new();
        write_aop_program(&mut aop_buf, &aop).unwrap();
        assert!(matches!(
            read_group_program(&mut aop_buf.as_slice()),
            Err(GpFileError::BadVariant(1))
        ));

        // Truncated body.
        let truncated = &buf[..buf.len() - 2];
        assert!(matches!(read_group_program(&mut &truncated[..]), Err(GpFileError::Io(_))));

        // Garbage element code.
        let mut bad = buf.clone();
        bad[14] = 200;
        assert!(matches!(
            read_group_program(&mut bad.as_slice()),
            Err(GpFileError::BadElement(200))
        ));
    }
}
