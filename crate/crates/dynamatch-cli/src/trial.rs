//! Trial execution shared by `match-stream`, `run-sim`, `sweep`, and
//! `replay`.
//!
//! A sweep cell plus a recorded `sub_seed` fully determines one trial, so
//! any CSV row can be reproduced later with the `replay` subcommand. Within
//! a trial, independent components (graph, decoy placement, matcher or
//! protocol seed) get sub-seeds split off the trial seed by fixed tags.

use anyhow::{Context, Result};
use dynamatch::graph::{maximum_matching, random_bipartite_graph};
use dynamatch::hard::{build_global, HardParams};
use dynamatch::matcher::{default_delta, MatcherConfig, StreamingMatcher};
use dynamatch::seeding::derive_seed;
use dynamatch::sim::{run_on_hard_instance, Strategy};
use dynamatch::stream::{materialize, stream_from_graph, UpdateStream};

const TAG_GRAPH: u64 = 1;
const TAG_STREAM: u64 = 2;
const TAG_RUN: u64 = 3;

/// One matcher sweep cell. `n` is the total vertex count; generated graphs
/// use `n/2` vertices per side (the left side takes the floor).
#[derive(Clone, Copy, Debug)]
pub struct MatchCell {
    pub n: usize,
    pub k: usize,
    pub c: f64,
    /// Per-sketch failure target; `None` means the `1/n^2` default.
    pub delta: Option<f64>,
    pub edges: usize,
    pub churn: f64,
}

/// Measured outcome of one matcher run.
#[derive(Clone, Copy, Debug)]
pub struct MatchMeasure {
    pub samplers: usize,
    pub opt: usize,
    pub output_size: usize,
    pub ratio: f64,
    pub bytes: usize,
}

/// Runs the streaming matcher over `stream` and compares against the exact
/// maximum matching of the materialized graph.
pub fn measure_match(stream: &UpdateStream, config: MatcherConfig) -> Result<MatchMeasure> {
    let mut matcher = StreamingMatcher::new(config)?;
    for u in stream.updates() {
        matcher.process(u)?;
    }
    let report = matcher.space_report();
    let output = matcher.finalize()?;
    let graph = materialize(stream).context("stream does not materialize to a graph")?;
    let opt = maximum_matching(&graph).len();
    Ok(MatchMeasure {
        samplers: report.sketch_count,
        opt,
        output_size: output.matching.len(),
        ratio: ratio(opt, output.matching.len()),
        bytes: report.serialized_bytes,
    })
}

/// `opt / output`, with the empty-output corner cases pinned: 1.0 when both
/// are empty, infinity when only the output is.
fn ratio(opt: usize, output: usize) -> f64 {
    match (opt, output) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => opt as f64 / output as f64,
    }
}

/// One seeded matcher trial: generate graph, wrap it in a decoy stream, run.
pub fn run_match_trial(cell: &MatchCell, sub_seed: u64) -> Result<MatchMeasure> {
    let left = cell.n / 2;
    let right = cell.n - left;
    let graph = random_bipartite_graph(left, right, cell.edges, derive_seed(sub_seed, TAG_GRAPH, 0))?;
    let stream = stream_from_graph(&graph, cell.churn, derive_seed(sub_seed, TAG_STREAM, 0))?;
    let config = MatcherConfig {
        left_size: left,
        right_size: right,
        k: cell.k,
        c: cell.c,
        delta: cell.delta.unwrap_or_else(|| default_delta(left, right)),
        seed: derive_seed(sub_seed, TAG_RUN, 0),
    };
    measure_match(&stream, config)
}

/// One protocol sweep cell.
#[derive(Clone, Copy, Debug)]
pub struct SimCell {
    pub parties: usize,
    pub q: usize,
    pub k: usize,
    /// `Alg1` sample budget; `None` means the instance's side size (the
    /// parties sample every left vertex).
    pub proto_k: Option<usize>,
    /// Per-message byte budget; `None` = unlimited.
    pub budget: Option<usize>,
    pub strategy: StrategyKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StrategyKind {
    Alg1,
    Trivial,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyKind::Alg1 => "alg1",
            StrategyKind::Trivial => "trivial",
        })
    }
}

/// Measured outcome of one protocol run.
#[derive(Clone, Copy, Debug)]
pub struct SimMeasure {
    pub opt_lb: usize,
    pub n_out: usize,
    pub max_message_bytes: usize,
    pub sum_overlap: usize,
}

/// One seeded protocol trial on a fresh hard instance.
pub fn run_sim_trial(cell: &SimCell, sub_seed: u64) -> Result<SimMeasure> {
    let params = HardParams::new(cell.parties, cell.q, cell.k)?;
    let inst = build_global(params, derive_seed(sub_seed, TAG_GRAPH, 0));
    let strategy = match cell.strategy {
        StrategyKind::Alg1 => Strategy::Alg1 { k: cell.proto_k.unwrap_or(params.side_size()) },
        StrategyKind::Trivial => Strategy::Trivial,
    };
    let run = run_on_hard_instance(&inst, strategy, cell.budget, derive_seed(sub_seed, TAG_RUN, 0))?;
    Ok(SimMeasure {
        opt_lb: run.opt_lower_bound,
        n_out: run.run.matching.len(),
        max_message_bytes: run.run.max_message_bytes(),
        sum_overlap: run.overlap_sum(),
    })
}

/// Formats a float for CSV output (6 significant decimals, `inf` for the
/// unbounded-ratio case).
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:.6}")
    }
}

/// Budget column: bytes or `unlimited`.
pub fn fmt_budget(budget: Option<usize>) -> String {
    budget.map_or_else(|| "unlimited".into(), |s| s.to_string())
}

/// Mean and standard error (sample stddev over sqrt(count); 0 for a single
/// observation).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
