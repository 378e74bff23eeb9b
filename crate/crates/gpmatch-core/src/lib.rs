//! Confidential content-based matching over S5 group programs.
//!
//! A publisher holds a metadata bit vector `m`, a subscriber holds a boolean
//! predicate `P`, and an untrusted broker must learn `P(m)` — one bit — and
//! nothing else. Both parties share a random tape the broker never sees.
//! The predicate is compiled into a sequence of S5 elements (a group
//! program) whose product is `α = (2 3 4 5 1)` exactly when the predicate
//! accepts; the shared tape blinds each party's elements so the interleaved
//! sequence the broker multiplies out is uniform among all sequences with
//! the same product.
//!
//! Module map:
//! - [`s5`]: exact S5 arithmetic on rank-encoded permutations.
//! - [`circuit`]: the boolean circuit IR, its s-expression parser, and the
//!   circuit builders (Hamming distance, selectors, the universal matcher).
//! - [`barrington`]: depth-d circuit → length-4^d group program transforms,
//!   in both the paired-element and interstitial forms, plus streaming
//!   generation and the on-disk program format.
//! - [`blinding`]: shared random tapes, the blinding operation, and the
//!   simulator that witnesses what the broker's view does (not) reveal.
//! - [`protocol`]: session structures, selector blocks, share construction,
//!   and the broker's match evaluation for the UGP/FSGP/OFSGP variants.
//! - [`corpus`]: random circuit generation for tests and benchmarks.

pub mod barrington;
pub mod blinding;
pub mod circuit;
pub mod corpus;
pub mod protocol;
pub mod s5;

pub use s5::{find_conjugator, seq_value, Perm, PermSeq, S5Error, ALPHA, BETA, GAMMA, IDENTITY};
