//! Benchmark tables: program lengths for Hamming-threshold predicates with
//! measured broker timing, and the closed-form slot-count laws for each
//! protocol variant.

use std::time::Instant;

use anyhow::{bail, Result};
use gpmatch_core::blinding::RandomTape;
use gpmatch_core::circuit::build_hamming;
use gpmatch_core::protocol::{
    broker_match, negotiate_structure, publisher_share, subscriber_share, Variant,
};
use serde::Serialize;

/// Published `(n, depth)` pairs for the Hamming benchmark, `n` from 2 to 16.
/// The depth column is input data: it reflects a specific (unstated) circuit
/// family rather than the one `build_hamming` produces, so the rows are
/// reported as given alongside the closed-form length `2n·4^d`.
pub const TABLE_DEPTHS: [(u32, u32); 15] = [
    (2, 5),
    (3, 8),
    (4, 8),
    (5, 12),
    (6, 12),
    (7, 13),
    (8, 13),
    (9, 16),
    (10, 16),
    (11, 16),
    (12, 16),
    (13, 16),
    (14, 16),
    (15, 16),
    (16, 16),
];

/// Depth column entry for `n`, when the published table covers it.
pub fn published_depth(n: u32) -> Option<u32> {
    TABLE_DEPTHS.iter().find(|row| row.0 == n).map(|row| row.1)
}

/// Publisher-slot count of an OFSGP structure for `n` metadata bits at
/// depth bound `d`.
pub fn program_length(n: u32, d: u32) -> u128 {
    2 * n as u128 * 4u128.pow(d)
}

/// Depth of the Hamming circuit this workspace actually builds (middle
/// threshold, all-zero reference; the reference only toggles input
/// negations, which are depth-free).
pub fn measured_depth(n: u32) -> Result<u32> {
    Ok(build_hamming(&vec![false; n as usize], n / 2)?.depth())
}

/// One benchmark table row. Timing fields are present only when the row was
/// small enough to execute.
#[derive(Serialize, Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n: u32,
    pub d: u32,
    pub length: u128,
    pub median_ms: Option<f64>,
    pub ns_per_slot: Option<f64>,
}

/// Builds rows for `n` in `2..=max_n`. With `use_table_depths` the depth
/// column comes from [`TABLE_DEPTHS`]; otherwise from [`measured_depth`].
/// Rows whose length is at most `budget` additionally run a full session and
/// time the broker's multiply.
pub fn bench_hamming(max_n: u32, use_table_depths: bool, budget: u64) -> Result<Vec<BenchRow>> {
    if !(2..=16).contains(&max_n) {
        bail!("max_n must lie in 2..=16, got {max_n}");
    }
    let mut rows = Vec::with_capacity(max_n as usize - 1);
    for n in 2..=max_n {
        let d = if use_table_depths {
            published_depth(n).expect("table covers n = 2..=16")
        } else {
            measured_depth(n)?
        };
        let length = program_length(n, d);
        let timing = if length <= budget as u128 { Some(time_broker(n, d)?) } else { None };
        rows.push(BenchRow {
            n,
            d,
            length,
            median_ms: timing.map(|t| t.0),
            ns_per_slot: timing.map(|t| t.1),
        });
    }
    Ok(rows)
}

/// Extrapolated broker seconds for a structure with `length` publisher
/// slots, scaled from a measured per-slot time.
pub fn extrapolate_seconds(ns_per_slot: f64, length: u128) -> f64 {
    ns_per_slot * (2.0 * length as f64 + 1.0) * 1e-9
}

/// Runs one OFSGP Hamming session at `(n, d)` and times the broker multiply
/// over repeated runs; returns (median milliseconds, nanoseconds per slot).
fn time_broker(n: u32, d: u32) -> Result<(f64, f64)> {
    let structure = negotiate_structure(Variant::Ofsgp, n, d)?;
    let predicate = build_hamming(&vec![false; n as usize], n / 2)?;
    let metadata: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let mut seed = [0u8; 32];
    seed[0] = n as u8;
    seed[1] = d as u8;
    let session_id = [0u8; 16];
    let sub =
        subscriber_share(&structure, &predicate, &mut RandomTape::from_seed(seed), session_id)?;
    let pb =
        publisher_share(&structure, &metadata, &mut RandomTape::from_seed(seed), session_id)?;

    let total = structure.total_slots();
    broker_match(&structure, &pb, &sub)?; // warm-up
    let reps = (20_000_000 / total).clamp(5, 2000) as usize;
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            let _ = broker_match(&structure, &pb, &sub);
            start.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    Ok((median * 1e3, median * 1e9 / total as f64))
}

/// Slot counts of one negotiated structure next to the variant's closed
/// form, when it has one. The closed forms count structural slots — the
/// per-block template length before the subscriber folds its constant
/// factors into the interstitials — so for FSGP they exceed the publisher's
/// share of the slots.
#[derive(Serialize, Clone, Debug)]
pub struct LengthReport {
    pub variant: &'static str,
    pub n: u32,
    pub depth_bound: u32,
    /// Selector-block count of the skeleton (fixed variants only).
    pub skeleton_blocks: Option<u64>,
    pub structural_slots: u64,
    pub publisher_slots: u64,
    pub total_slots: u64,
    /// Depth of the universal matcher circuit (UGP only).
    pub matcher_depth: Option<u32>,
    pub closed_form: Option<u64>,
    pub closed_form_matches: Option<bool>,
}

pub fn variant_name(variant: Variant) -> &'static str {
    match variant {
        Variant::Ofsgp => "ofsgp",
        Variant::Fsgp => "fsgp",
        Variant::Ugp => "ugp",
    }
}

/// Builds the structure for `(variant, n, depth_bound)` and reports its slot
/// counts; OFSGP checks `2n·4^D` and FSGP `4n²·4^D` against the built
/// structure.
pub fn bench_lengths(variant: Variant, n: u32, depth_bound: u32) -> Result<LengthReport> {
    let s = negotiate_structure(variant, n, depth_bound)?;
    let structural_slots = s.structural_slots();
    let total_slots = s.total_slots();
    let (skeleton_blocks, matcher_depth, closed_form) = match variant {
        Variant::Ofsgp => {
            (Some(s.skeleton_len()), None, Some(2 * n as u64 * 4u64.pow(depth_bound)))
        }
        Variant::Fsgp => {
            (Some(s.skeleton_len()), None, Some(4 * (n as u64).pow(2) * 4u64.pow(depth_bound)))
        }
        Variant::Ugp => (None, Some(total_slots.trailing_zeros() / 2), None),
    };
    Ok(LengthReport {
        variant: variant_name(variant),
        n,
        depth_bound,
        skeleton_blocks,
        structural_slots,
        publisher_slots: s.publisher_slots(),
        total_slots,
        matcher_depth,
        closed_form,
        closed_form_matches: closed_form.map(|f| f == structural_slots),
    })
}
