//! Operator command line for blinded predicate matching.
//!
//! Subcommands cover the full lifecycle: `compile` turns a boolean circuit
//! into a group-program file, `simulate` runs publisher, subscriber, and
//! broker inside one process, `broker`/`publish`/`subscribe` speak the TCP
//! protocol, and `bench` reports structure-size laws and broker timing.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 verdict
//! differing from `--expect`.

pub mod bench;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gpmatch_core::barrington::{
    transform, transform_alpha_one, write_aop_program, write_group_program,
};
use gpmatch_core::blinding::RandomTape;
use gpmatch_core::circuit::{parse_sexp, Circuit};
use gpmatch_core::protocol::{negotiate_structure, run_session, Variant};
use gpmatch_core::Perm;
use gpmatch_net::{publish, subscribe, Broker};
use rand::RngCore;
use serde::Serialize;

/// Version stamped into every `--json` payload.
pub const JSON_SCHEMA: u32 = 1;
/// Environment fallback for `--seed`.
pub const SEED_ENV: &str = "GPMATCH_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "gpmatch", version, about = "Predicate matching over blinded group programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transform a boolean circuit into a group-program file
    Compile(CompileArgs),
    /// Run publisher, subscriber, and broker in one process
    Simulate(SimulateArgs),
    /// Serve the matching broker
    Broker(BrokerArgs),
    /// Send a notification into a session and await the verdict
    Publish(PublishArgs),
    /// Send a predicate into a session and await the verdict
    Subscribe(SubscribeArgs),
    /// Structure-size tables and broker timing
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum VariantArg {
    Ugp,
    Fsgp,
    Ofsgp,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Ugp => Variant::Ugp,
            VariantArg::Fsgp => Variant::Fsgp,
            VariantArg::Ofsgp => Variant::Ofsgp,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Verdict {
    Match,
    NoMatch,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Circuit file, or an inline s-expression such as "(and x0 x1)"
    #[arg(long)]
    pub circuit: String,
    /// Target 5-cycle in one-line image notation, e.g. "(2 3 4 5 1)"
    #[arg(long, default_value = "(2 3 4 5 1)")]
    pub target_cycle: String,
    /// Emit the interstitial form (fixed index sequence, variable α factors)
    #[arg(long)]
    pub alpha_one: bool,
    /// Output file; omit to only print stats
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Machine-readable stats on stdout
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Metadata bit-count
    #[arg(long)]
    pub n: u32,
    /// Predicate depth bound D negotiated into the structure
    #[arg(long)]
    pub depth: u32,
    /// Metadata bits; character i is x_i, e.g. "1011"
    #[arg(long)]
    pub metadata: String,
    /// Predicate file or inline s-expression
    #[arg(long)]
    pub predicate: String,
    /// 64-hex-digit shared tape seed ($GPMATCH_SEED, else fresh entropy)
    #[arg(long, conflicts_with = "tape")]
    pub seed: Option<String>,
    /// Raw shared-tape bytes read from a file
    #[arg(long)]
    pub tape: Option<PathBuf>,
    /// Notification payload handed over on a match
    #[arg(long)]
    pub payload: Option<String>,
    /// Exit 3 unless the verdict equals this
    #[arg(long, value_enum)]
    pub expect: Option<Verdict>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct BrokerArgs {
    /// Listen address
    #[arg(long, default_value = "0.0.0.0:7120")]
    pub listen: String,
}

#[derive(Args, Debug)]
pub struct PublishArgs {
    /// Broker address, host:port
    #[arg(long)]
    pub endpoint: String,
    /// 32-hex-digit session id agreed with the subscriber
    #[arg(long)]
    pub session: String,
    /// Metadata bit-count
    #[arg(long)]
    pub n: u32,
    /// Metadata bits; character i is x_i
    #[arg(long)]
    pub metadata: String,
    /// Notification content
    #[arg(long, conflicts_with = "content_file")]
    pub content: Option<String>,
    /// Notification content read from a file
    #[arg(long)]
    pub content_file: Option<PathBuf>,
    /// 64-hex-digit shared tape seed ($GPMATCH_SEED fallback; required)
    #[arg(long, conflicts_with = "tape")]
    pub seed: Option<String>,
    /// Raw shared-tape bytes read from a file
    #[arg(long)]
    pub tape: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SubscribeArgs {
    /// Broker address, host:port
    #[arg(long)]
    pub endpoint: String,
    /// 32-hex-digit session id agreed with the publisher
    #[arg(long)]
    pub session: String,
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    /// Predicate depth bound D to request
    #[arg(long)]
    pub depth: u32,
    /// Predicate file or inline s-expression
    #[arg(long)]
    pub predicate: String,
    /// 64-hex-digit shared tape seed ($GPMATCH_SEED fallback; required)
    #[arg(long, conflicts_with = "tape")]
    pub seed: Option<String>,
    /// Raw shared-tape bytes read from a file
    #[arg(long)]
    pub tape: Option<PathBuf>,
    /// Write a delivered payload to this file instead of stdout
    #[arg(long)]
    pub payload_out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum BenchCommand {
    /// Program lengths (and broker timings) for Hamming-threshold predicates
    Hamming(BenchHammingArgs),
    /// Slot counts of one structure against the closed-form laws
    Lengths(BenchLengthsArgs),
}

#[derive(Args, Debug)]
pub struct BenchHammingArgs {
    /// Use the published depth column instead of measured circuit depths
    #[arg(long)]
    pub table: bool,
    #[arg(long, default_value_t = 16)]
    pub max_n: u32,
    /// Rows whose length is at most this are executed and timed
    #[arg(long, default_value_t = 10_000_000)]
    pub budget: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct BenchLengthsArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub depth: u32,
    #[arg(long)]
    pub json: bool,
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Broker(a) => cmd_broker(a),
        Command::Publish(a) => cmd_publish(a),
        Command::Subscribe(a) => cmd_subscribe(a),
        Command::Bench(BenchCommand::Hamming(a)) => cmd_bench_hamming(a),
        Command::Bench(BenchCommand::Lengths(a)) => cmd_bench_lengths(a),
    }
}

// ---------------------------------------------------------------- parsing

/// Parses a permutation written in one-line image notation, with or without
/// parentheses: "(2 3 4 5 1)" or "2 3 4 5 1".
pub fn parse_cycle(text: &str) -> Result<Perm> {
    let stripped = text.trim().trim_start_matches('(').trim_end_matches(')');
    let nums: Vec<u8> = stripped
        .split([' ', ','])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u8>().with_context(|| format!("bad image {s:?} in {text:?}")))
        .collect::<Result<_>>()?;
    let images: [u8; 5] = nums
        .try_into()
        .map_err(|v: Vec<u8>| anyhow::anyhow!("need 5 images, got {} in {text:?}", v.len()))?;
    Ok(Perm::from_images(images)?)
}

/// Formats a permutation the way [`parse_cycle`] reads it.
pub fn cycle_string(p: Perm) -> String {
    let img = p.images();
    format!("({} {} {} {} {})", img[0], img[1], img[2], img[3], img[4])
}

/// Parses a bit string such as "1011"; character i becomes bit i.
pub fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => bail!("metadata may only contain 0 and 1, found {other:?}"),
        })
        .collect()
}

/// Parses a 32-hex-digit session id.
pub fn parse_session_id(text: &str) -> Result<[u8; 16]> {
    let bytes = hex::decode(text).context("session id must be hex")?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| anyhow::anyhow!("session id must be 16 bytes (32 hex digits), got {}", b.len()))
}

/// Reads `arg` as a circuit file when such a file exists, otherwise parses
/// it as an inline s-expression.
pub fn load_circuit(arg: &str) -> Result<Circuit> {
    if Path::new(arg).is_file() {
        let text =
            fs::read_to_string(arg).with_context(|| format!("reading circuit file {arg}"))?;
        Ok(parse_sexp(&text).with_context(|| format!("parsing circuit file {arg}"))?)
    } else {
        Ok(parse_sexp(arg).with_context(|| {
            format!("{arg:?} is neither an existing file nor a parsable s-expression")
        })?)
    }
}

/// What to do when neither `--seed` nor `--tape` nor the environment
/// provides randomness.
enum SeedFallback {
    /// Draw a fresh seed from the OS and announce it on stderr.
    Fresh,
    /// Refuse: the tape must be shared with the counterparty.
    Require,
}

fn resolve_tape(
    seed: Option<&str>,
    tape: Option<&Path>,
    fallback: SeedFallback,
) -> Result<RandomTape> {
    if let Some(path) = tape {
        return RandomTape::from_file(path)
            .with_context(|| format!("reading tape file {}", path.display()));
    }
    let seed_hex = match seed {
        Some(s) => Some(s.to_owned()),
        None => std::env::var(SEED_ENV).ok(),
    };
    if let Some(s) = seed_hex {
        return Ok(RandomTape::from_seed(parse_seed(&s)?));
    }
    match fallback {
        SeedFallback::Fresh => {
            let mut seed = [0u8; 32];
            rand::rngs::OsRng.fill_bytes(&mut seed);
            eprintln!("seed={}", hex::encode(seed));
            Ok(RandomTape::from_seed(seed))
        }
        SeedFallback::Require => bail!(
            "shared randomness required: pass --seed/--tape or set ${SEED_ENV} \
             to the value agreed with the counterparty"
        ),
    }
}

fn parse_seed(text: &str) -> Result<[u8; 32]> {
    let bytes = hex::decode(text).context("seed must be hex")?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| anyhow::anyhow!("seed must be 32 bytes (64 hex digits), got {}", b.len()))
}

// --------------------------------------------------------------- commands

#[derive(Serialize)]
struct CompileStats {
    schema: u32,
    command: &'static str,
    inputs: usize,
    depth: u32,
    length: u64,
    variant: &'static str,
    target: String,
    out: Option<String>,
}

fn cmd_compile(a: CompileArgs) -> Result<i32> {
    let circuit = load_circuit(&a.circuit)?;
    let target = parse_cycle(&a.target_cycle)?;

    let (variant, length) = if a.alpha_one {
        let program = transform_alpha_one(&circuit, target)?;
        if let Some(path) = &a.out {
            let mut file = fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_aop_program(&mut file, &program)?;
        }
        ("alpha-one", program.len())
    } else {
        let program = transform(&circuit, target)?;
        if let Some(path) = &a.out {
            let mut file = fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_group_program(&mut file, &program)?;
        }
        ("paired", program.len())
    };

    let stats = CompileStats {
        schema: JSON_SCHEMA,
        command: "compile",
        inputs: circuit.inputs().len(),
        depth: circuit.depth(),
        length,
        variant,
        target: cycle_string(target),
        out: a.out.as_ref().map(|p| p.display().to_string()),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        println!("inputs   {}", stats.inputs);
        println!("depth    {}", stats.depth);
        println!("length   {}", stats.length);
        println!("variant  {}", stats.variant);
        println!("target   {}", stats.target);
        if let Some(out) = &stats.out {
            println!("wrote    {out}");
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulateStats {
    schema: u32,
    command: &'static str,
    matched: bool,
    anomalous: bool,
    broker_value: String,
    payload: Option<String>,
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let metadata = parse_bits(&a.metadata)?;
    if metadata.len() != a.n as usize {
        bail!("--metadata has {} bits but --n is {}", metadata.len(), a.n);
    }
    let predicate = load_circuit(&a.predicate)?;
    let tape = resolve_tape(a.seed.as_deref(), a.tape.as_deref(), SeedFallback::Fresh)?;

    let structure = negotiate_structure(a.variant.into(), a.n, a.depth)?;
    let result = run_session(&structure, &predicate, &metadata, &tape)?;

    let delivered = if result.matched { a.payload.clone() } else { None };
    if a.json {
        let stats = SimulateStats {
            schema: JSON_SCHEMA,
            command: "simulate",
            matched: result.matched,
            anomalous: result.anomalous,
            broker_value: cycle_string(result.broker_value),
            payload: delivered,
        };
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        println!("{}", if result.matched { "match" } else { "no-match" });
        if let Some(payload) = delivered {
            println!("payload: {payload}");
        }
    }

    if let Some(expect) = a.expect {
        let want = matches!(expect, Verdict::Match);
        if want != result.matched {
            return Ok(EXIT_MISMATCH);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_broker(a: BrokerArgs) -> Result<i32> {
    let broker = Broker::spawn(a.listen.as_str())
        .with_context(|| format!("binding {}", a.listen))?;
    eprintln!("listening on {}", broker.local_addr());
    loop {
        std::thread::park();
    }
}

#[derive(Serialize)]
struct PublishStats {
    schema: u32,
    command: &'static str,
    matched: bool,
}

fn cmd_publish(a: PublishArgs) -> Result<i32> {
    let session_id = parse_session_id(&a.session)?;
    let metadata = parse_bits(&a.metadata)?;
    if metadata.len() != a.n as usize {
        bail!("--metadata has {} bits but --n is {}", metadata.len(), a.n);
    }
    let content = match (&a.content, &a.content_file) {
        (Some(text), None) => text.clone().into_bytes(),
        (None, Some(path)) => {
            fs::read(path).with_context(|| format!("reading {}", path.display()))?
        }
        (None, None) => Vec::new(),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    let mut tape = resolve_tape(a.seed.as_deref(), a.tape.as_deref(), SeedFallback::Require)?;

    let matched = publish(a.endpoint.as_str(), session_id, a.n, &metadata, &content, &mut tape)?;
    if a.json {
        let stats = PublishStats { schema: JSON_SCHEMA, command: "publish", matched };
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        println!("{}", if matched { "match" } else { "no-match" });
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SubscribeStats {
    schema: u32,
    command: &'static str,
    matched: bool,
    payload_hex: Option<String>,
}

fn cmd_subscribe(a: SubscribeArgs) -> Result<i32> {
    let session_id = parse_session_id(&a.session)?;
    let predicate = load_circuit(&a.predicate)?;
    let mut tape = resolve_tape(a.seed.as_deref(), a.tape.as_deref(), SeedFallback::Require)?;

    let outcome = subscribe(
        a.endpoint.as_str(),
        session_id,
        a.variant.into(),
        a.depth,
        &predicate,
        &mut tape,
    )?;
    if a.json {
        let stats = SubscribeStats {
            schema: JSON_SCHEMA,
            command: "subscribe",
            matched: outcome.matched,
            payload_hex: outcome.payload.as_deref().map(hex::encode),
        };
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        println!("{}", if outcome.matched { "match" } else { "no-match" });
        if let Some(bytes) = &outcome.payload {
            match &a.payload_out {
                Some(path) => {
                    fs::write(path, bytes)
                        .with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("payload written to {}", path.display());
                }
                None => println!("payload: {}", String::from_utf8_lossy(bytes)),
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct HammingStats {
    schema: u32,
    command: &'static str,
    table_depths: bool,
    budget: u64,
    rows: Vec<bench::BenchRow>,
    extrapolation: Option<Extrapolation>,
}

#[derive(Serialize)]
struct Extrapolation {
    length: u128,
    seconds: f64,
}

fn cmd_bench_hamming(a: BenchHammingArgs) -> Result<i32> {
    let rows = bench::bench_hamming(a.max_n, a.table, a.budget)?;

    // Extrapolate from the largest executed row to the final published row.
    let furthest = bench::program_length(16, 16);
    let extrapolation = rows
        .iter()
        .rev()
        .find_map(|r| r.ns_per_slot)
        .map(|ns| Extrapolation { length: furthest, seconds: bench::extrapolate_seconds(ns, furthest) });

    if a.json {
        let stats = HammingStats {
            schema: JSON_SCHEMA,
            command: "bench-hamming",
            table_depths: a.table,
            budget: a.budget,
            rows,
            extrapolation,
        };
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        println!("{:>3} {:>3} {:>15} {:>11} {:>9}", "n", "d", "L", "broker-ms", "ns/slot");
        for r in &rows {
            let (ms, ns) = match (r.median_ms, r.ns_per_slot) {
                (Some(ms), Some(ns)) => (format!("{ms:.3}"), format!("{ns:.2}")),
                _ => ("-".into(), "-".into()),
            };
            println!("{:>3} {:>3} {:>15} {:>11} {:>9}", r.n, r.d, r.length, ms, ns);
        }
        if let Some(e) = &extrapolation {
            println!();
            println!("extrapolated broker time at L = {}: {:.1} s", e.length, e.seconds);
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct LengthsStats {
    schema: u32,
    command: &'static str,
    #[serde(flatten)]
    report: bench::LengthReport,
}

fn cmd_bench_lengths(a: BenchLengthsArgs) -> Result<i32> {
    let report = bench::bench_lengths(a.variant.into(), a.n, a.depth)?;
    if a.json {
        let stats = LengthsStats { schema: JSON_SCHEMA, command: "bench-lengths", report };
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        println!("variant          {}", report.variant);
        println!("n                {}", report.n);
        println!("depth bound      {}", report.depth_bound);
        if let Some(blocks) = report.skeleton_blocks {
            println!("skeleton blocks  {blocks}");
        }
        println!("structural slots {}", report.structural_slots);
        println!("publisher slots  {}", report.publisher_slots);
        println!("total slots      {}", report.total_slots);
        if let Some(depth) = report.matcher_depth {
            println!("matcher depth    {depth}");
        }
        if let (Some(form), Some(ok)) = (report.closed_form, report.closed_form_matches) {
            println!("closed form      {} ({})", form, if ok { "ok" } else { "MISMATCH" });
        }
    }
    Ok(EXIT_OK)
}
