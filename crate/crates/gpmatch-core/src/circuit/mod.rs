//! Boolean circuit intermediate representation.
//!
//! Circuits are DAGs of AND/OR/NOT gates over named input bits. Depth counts
//! only AND and OR gates — negation is free, matching what the group-program
//! transform pays for. Gate operands always point at earlier nodes, so every
//! circuit is acyclic by construction.
//!
//! Inputs carry an ownership tag: `x<k>` bits belong to the publisher's
//! metadata vector, `b<k>` bits to the subscriber's predicate encoding, and
//! a distinguished dummy input reads as constant 0 (padding and constant
//! slots in the transforms reference it so that every program slot has an
//! input to point at).

mod builders;
mod parse;

pub use builders::{
    build_bose_nelson, build_fixed_selector, build_hamming, build_ugp_circuit,
    ugp_subscriber_bits_per_element,
};
pub use parse::{parse_sexp, print_sexp};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index of a gate inside a [`Circuit`].
pub type NodeId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: u32, col: u32, msg: String },
    #[error("operator {op:?} at {line}:{col} expects {expected} operand(s), got {got}")]
    Arity { op: String, line: u32, col: u32, expected: usize, got: usize },
    #[error("unknown symbol {name:?} at {line}:{col}")]
    UnknownSymbol { name: String, line: u32, col: u32 },
    #[error("assignment does not cover input {0}")]
    MissingInput(InputBit),
    #[error("threshold {threshold} out of range: must be at most {n}")]
    BadThreshold { threshold: u32, n: u32 },
    #[error("{0}")]
    BadShape(String),
}

/// A named input bit together with the party that supplies it.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum InputBit {
    /// Metadata bit `x<k>`, instantiated by the publisher.
    Publisher(u32),
    /// Predicate-side bit `b<k>`, instantiated by the subscriber.
    Subscriber(u32),
    /// Always-0 input referenced by padding and constant slots.
    Dummy,
}

impl fmt::Display for InputBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputBit::Publisher(k) => write!(f, "x{k}"),
            InputBit::Subscriber(k) => write!(f, "b{k}"),
            InputBit::Dummy => write!(f, "_"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gate {
    Input(InputBit),
    Const(bool),
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
}

/// An acyclic circuit with a single output.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Circuit {
    gates: Vec<Gate>,
    output: NodeId,
    inputs: Vec<InputBit>,
}

impl Circuit {
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: NodeId) -> Gate {
        self.gates[id as usize]
    }

    pub fn output(&self) -> NodeId {
        self.output
    }

    /// Declared inputs in first-appearance order.
    pub fn inputs(&self) -> &[InputBit] {
        &self.inputs
    }

    /// Circuit depth: the maximum number of AND/OR gates on any path from a
    /// leaf to the output. NOT gates are free.
    pub fn depth(&self) -> u32 {
        self.node_depths()[self.output as usize]
    }

    /// Per-node depth, indexable by [`NodeId`].
    pub fn node_depths(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.gates.len()];
        for (i, gate) in self.gates.iter().enumerate() {
            d[i] = match *gate {
                Gate::Input(_) | Gate::Const(_) => 0,
                Gate::Not(a) => d[a as usize],
                Gate::And(a, b) | Gate::Or(a, b) => 1 + d[a as usize].max(d[b as usize]),
            };
        }
        d
    }

    /// Evaluates the circuit; the assignment must cover every declared input.
    pub fn eval(&self, a: &Assignment) -> Result<bool, CircuitError> {
        for &input in &self.inputs {
            if a.get(input).is_none() {
                return Err(CircuitError::MissingInput(input));
            }
        }
        let mut v = vec![false; self.gates.len()];
        for (i, gate) in self.gates.iter().enumerate() {
            v[i] = match *gate {
                Gate::Input(bit) => a.get(bit).unwrap(),
                Gate::Const(c) => c,
                Gate::Not(x) => !v[x as usize],
                Gate::And(x, y) => v[x as usize] && v[y as usize],
                Gate::Or(x, y) => v[x as usize] || v[y as usize],
            };
        }
        Ok(v[self.output as usize])
    }

    /// True when every input is publisher-owned (or dummy) — the shape
    /// required of a subscriber predicate over the metadata.
    pub fn reads_only_publisher_bits(&self) -> bool {
        self.inputs.iter().all(|b| !matches!(b, InputBit::Subscriber(_)))
    }

    /// Largest publisher ordinal referenced, plus one.
    pub fn publisher_width(&self) -> u32 {
        self.inputs
            .iter()
            .filter_map(|b| match b {
                InputBit::Publisher(k) => Some(k + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Incremental circuit constructor; operands must already exist, which keeps
/// the gate list topologically ordered.
#[derive(Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    inputs: Vec<InputBit>,
    input_nodes: HashMap<InputBit, NodeId>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, gate: Gate) -> NodeId {
        let id = self.gates.len() as NodeId;
        self.gates.push(gate);
        id
    }

    /// Returns the node for an input bit, creating it on first use. Repeated
    /// requests share one node.
    pub fn input(&mut self, bit: InputBit) -> NodeId {
        if let Some(&id) = self.input_nodes.get(&bit) {
            return id;
        }
        self.inputs.push(bit);
        let id = self.push(Gate::Input(bit));
        self.input_nodes.insert(bit, id);
        id
    }

    pub fn constant(&mut self, value: bool) -> NodeId {
        self.push(Gate::Const(value))
    }

    pub fn not(&mut self, a: NodeId) -> NodeId {
        assert!((a as usize) < self.gates.len(), "operand out of range");
        self.push(Gate::Not(a))
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let len = self.gates.len();
        assert!((a as usize) < len && (b as usize) < len, "operand out of range");
        self.push(Gate::And(a, b))
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let len = self.gates.len();
        assert!((a as usize) < len && (b as usize) < len, "operand out of range");
        self.push(Gate::Or(a, b))
    }

    /// Balanced reduction by adjacent pairing; adds exactly ⌈lg len⌉ gate
    /// levels to the deepest path.
    pub fn reduce<F>(&mut self, mut nodes: Vec<NodeId>, mut op: F) -> NodeId
    where
        F: FnMut(&mut Self, NodeId, NodeId) -> NodeId,
    {
        assert!(!nodes.is_empty());
        while nodes.len() > 1 {
            let mut next = Vec::with_capacity(nodes.len().div_ceil(2));
            for pair in nodes.chunks(2) {
                next.push(if pair.len() == 2 { op(self, pair[0], pair[1]) } else { pair[0] });
            }
            nodes = next;
        }
        nodes[0]
    }

    pub fn finish(self, output: NodeId) -> Circuit {
        assert!((output as usize) < self.gates.len(), "output out of range");
        Circuit { gates: self.gates, output, inputs: self.inputs }
    }
}

/// Values for the two parties' input bits, indexed by ordinal. The dummy
/// input always reads 0 without being listed.
#[derive(Clone, Debug, Default)]
pub struct Assignment {
    publisher: Vec<bool>,
    subscriber: Vec<bool>,
}

impl Assignment {
    pub fn new(publisher: Vec<bool>, subscriber: Vec<bool>) -> Self {
        Assignment { publisher, subscriber }
    }

    pub fn publisher_only(publisher: Vec<bool>) -> Self {
        Assignment { publisher, subscriber: Vec::new() }
    }

    pub fn get(&self, bit: InputBit) -> Option<bool> {
        match bit {
            InputBit::Publisher(k) => self.publisher.get(k as usize).copied(),
            InputBit::Subscriber(k) => self.subscriber.get(k as usize).copied(),
            InputBit::Dummy => Some(false),
        }
    }
}

/// Expands the low `n` bits of `mask` into a vector, least significant bit
/// first — handy for exhaustive sweeps over assignments.
pub fn bits_from_mask(n: usize, mask: u64) -> Vec<bool> {
    (0..n).map(|i| (mask >> i) & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(b: &mut CircuitBuilder, x: NodeId, y: NodeId) -> NodeId {
        let nx = b.not(x);
        let ny = b.not(y);
        let l = b.and(x, ny);
        let r = b.and(nx, y);
        b.or(l, r)
    }

    #[test]
    fn depth_counts_only_and_or() {
        let mut b = CircuitBuilder::new();
        let x = b.input(InputBit::Publisher(0));
        let n1 = b.not(x);
        let n2 = b.not(n1);
        let c = b.finish(n2);
        assert_eq!(c.depth(), 0);

        let mut b = CircuitBuilder::new();
        let x = b.input(InputBit::Publisher(0));
        let y = b.input(InputBit::Publisher(1));
        let a = b.and(x, y);
        let o = b.or(a, x);
        let c = b.finish(o);
        assert_eq!(c.depth(), 2);
    }

    #[test]
    fn balanced_tree_depth_is_log() {
        for k in 0..5u32 {
            let leaves = 1usize << k;
            let mut b = CircuitBuilder::new();
            let nodes: Vec<NodeId> =
                (0..leaves).map(|i| b.input(InputBit::Publisher(i as u32))).collect();
            let root = b.reduce(nodes, CircuitBuilder::and);
            let c = b.finish(root);
            assert_eq!(c.depth(), k);
        }
        // Non-power-of-two widths still land on the ceiling.
        for leaves in [3usize, 5, 6, 7, 9] {
            let mut b = CircuitBuilder::new();
            let nodes: Vec<NodeId> =
                (0..leaves).map(|i| b.input(InputBit::Publisher(i as u32))).collect();
            let root = b.reduce(nodes, CircuitBuilder::or);
            let c = b.finish(root);
            assert_eq!(c.depth(), (leaves as f64).log2().ceil() as u32);
        }
    }

    #[test]
    fn eval_matches_truth_tables() {
        let mut b = CircuitBuilder::new();
        let x = b.input(InputBit::Publisher(0));
        let y = b.input(InputBit::Subscriber(0));
        let out = xor(&mut b, x, y);
        let c = b.finish(out);
        for mask in 0..4u64 {
            let a = Assignment::new(vec![mask & 1 == 1], vec![mask & 2 == 2]);
            assert_eq!(c.eval(&a).unwrap(), (mask & 1 == 1) ^ (mask & 2 == 2));
        }
    }

    #[test]
    fn eval_requires_full_assignment() {
        let mut b = CircuitBuilder::new();
        let x = b.input(InputBit::Publisher(0));
        let y = b.input(InputBit::Publisher(3));
        let a = b.and(x, y);
        let c = b.finish(a);
        // Ordinal 3 needs four publisher bits.
        let short = Assignment::publisher_only(vec![true, true, true]);
        assert_eq!(c.eval(&short), Err(CircuitError::MissingInput(InputBit::Publisher(3))));
        let full = Assignment::publisher_only(vec![true, false, false, true]);
        assert!(c.eval(&full).unwrap());
    }

    #[test]
    fn dummy_input_reads_zero() {
        let mut b = CircuitBuilder::new();
        let d = b.input(InputBit::Dummy);
        let n = b.not(d);
        let c = b.finish(n);
        assert!(c.eval(&Assignment::default()).unwrap());
    }

    #[test]
    fn shared_inputs_collapse_to_one_node() {
        let mut b = CircuitBuilder::new();
        let x1 = b.input(InputBit::Publisher(0));
        let x2 = b.input(InputBit::Publisher(0));
        assert_eq!(x1, x2);
        let a = b.and(x1, x2);
        let c = b.finish(a);
        assert_eq!(c.inputs(), &[InputBit::Publisher(0)]);
    }
}
