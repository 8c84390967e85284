//! `dynamatch`: generators, matcher runs, protocol simulations, and sweeps.
//!
//! Every subcommand takes a `--seed`; given the same arguments and seed, a
//! run writes byte-identical output. Reports are plain CSV.

mod sweep;
mod trial;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dynamatch::graph::random_bipartite_graph;
use dynamatch::hard::{build_global, HardInstance, HardParams};
use dynamatch::matcher::{default_delta, MatcherConfig};
use dynamatch::stream::{stream_from_graph, UpdateStream};
use trial::{fmt_budget, fmt_f64, measure_match, SimCell, StrategyKind};

#[derive(Parser)]
#[command(
    name = "dynamatch",
    version,
    about = "Bipartite matching in turnstile edge streams: generators, a one-pass sketch-based matcher, and a simultaneous-message protocol simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random bipartite graph as a turnstile update stream.
    GenStream(GenStreamArgs),
    /// Generate a multi-party hard instance.
    GenHard(GenHardArgs),
    /// Run the streaming matcher over a stream file and report one CSV row.
    MatchStream(MatchStreamArgs),
    /// Run the simultaneous-message protocol on an instance file.
    RunSim(RunSimArgs),
    /// Run a grid of seeded trials and write per-trial plus aggregate rows.
    Sweep(sweep::SweepArgs),
    /// Re-run one sweep trial from its recorded sub-seed.
    Replay(sweep::ReplayArgs),
}

#[derive(Args)]
struct GenStreamArgs {
    /// Left-side vertex count.
    #[arg(long)]
    left: usize,
    /// Right-side vertex count.
    #[arg(long)]
    right: usize,
    /// Number of distinct edges.
    #[arg(long)]
    edges: usize,
    /// Insert-then-delete decoy pairs per real edge (>= 0).
    #[arg(long, default_value_t = 0.0)]
    churn: f64,
    #[arg(long)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenHardArgs {
    /// Party count.
    #[arg(long = "P")]
    parties: usize,
    /// Group parameter (1 <= Q < P).
    #[arg(long = "Q")]
    q: usize,
    /// Group size (even, >= P).
    #[arg(long)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatchStreamArgs {
    /// Stream file (format: `p ts <left> <right> <cap>` + `u <a> <b> <+1|-1>`).
    #[arg(long)]
    input: PathBuf,
    /// Edge budget: sampled-vertex count and per-vertex neighbor cap.
    #[arg(long)]
    k: usize,
    /// Sketch provisioning multiplier.
    #[arg(long, default_value_t = 4.0)]
    c: f64,
    /// Per-sketch failure target in (0, 0.5), or `auto` for 1/n^2.
    #[arg(long, default_value = "auto")]
    delta: String,
    #[arg(long)]
    seed: u64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RunSimArgs {
    /// Instance file (format written by gen-hard).
    #[arg(long)]
    instance: PathBuf,
    /// Alg1 sample budget; defaults to the instance's side size.
    #[arg(long)]
    k: Option<usize>,
    /// Per-message byte budget, or `unlimited`.
    #[arg(long, default_value = "unlimited")]
    budget: String,
    #[arg(long, value_enum, default_value_t = StrategyKind::Alg1)]
    strategy: StrategyKind,
    #[arg(long)]
    seed: u64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::GenStream(a) => gen_stream(a),
        Cmd::GenHard(a) => gen_hard(a),
        Cmd::MatchStream(a) => match_stream(a),
        Cmd::RunSim(a) => run_sim(a),
        Cmd::Sweep(a) => sweep::sweep(a),
        Cmd::Replay(a) => sweep::replay(a),
    }
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn gen_stream(a: GenStreamArgs) -> Result<()> {
    let graph = random_bipartite_graph(a.left, a.right, a.edges, a.seed)?;
    let stream = stream_from_graph(&graph, a.churn, a.seed ^ 1)?;
    write_output(a.out.as_deref(), &stream.to_text())
}

fn gen_hard(a: GenHardArgs) -> Result<()> {
    let params = HardParams::new(a.parties, a.q, a.k)?;
    let inst = build_global(params, a.seed);
    write_output(a.out.as_deref(), &inst.to_text())
}

/// Parses `auto` (the 1/n^2 default) or an explicit failure probability.
fn parse_delta(s: &str, left: usize, right: usize) -> Result<f64> {
    if s == "auto" {
        return Ok(default_delta(left, right));
    }
    let d: f64 = s.parse().with_context(|| format!("bad --delta value {s:?}"))?;
    Ok(d)
}

/// Parses `unlimited` or a byte count.
fn parse_budget(s: &str) -> Result<Option<usize>> {
    if s == "unlimited" {
        return Ok(None);
    }
    let b: usize = s.parse().with_context(|| format!("bad --budget value {s:?}"))?;
    Ok(Some(b))
}

fn match_stream(a: MatchStreamArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input)
        .with_context(|| format!("reading stream file {}", a.input.display()))?;
    let stream = UpdateStream::from_text(&text)
        .with_context(|| format!("parsing stream file {}", a.input.display()))?;
    let (left, right) = (stream.left_size(), stream.right_size());
    let config = MatcherConfig {
        left_size: left,
        right_size: right,
        k: a.k,
        c: a.c,
        delta: parse_delta(&a.delta, left, right)?,
        seed: a.seed,
    };
    let m = measure_match(&stream, config)?;
    let csv = format!(
        "n,k,samplers,opt,output_size,ratio,bytes\n{},{},{},{},{},{},{}\n",
        left + right,
        a.k,
        m.samplers,
        m.opt,
        m.output_size,
        fmt_f64(m.ratio),
        m.bytes
    );
    write_output(a.report.as_deref(), &csv)
}

fn run_sim(a: RunSimArgs) -> Result<()> {
    let text = fs::read_to_string(&a.instance)
        .with_context(|| format!("reading instance file {}", a.instance.display()))?;
    let inst = HardInstance::from_text(&text)
        .with_context(|| format!("parsing instance file {}", a.instance.display()))?;
    let params = inst.params();
    if let Some(k) = a.k {
        if k == 0 {
            bail!("--k must be at least 1");
        }
    }
    let budget = parse_budget(&a.budget)?;
    let proto_k = a.k.unwrap_or_else(|| params.side_size());
    let cell = SimCell {
        parties: params.parties(),
        q: params.q(),
        k: params.k(),
        proto_k: Some(proto_k),
        budget,
        strategy: a.strategy,
    };
    // Reuse the instance parsed from the file rather than regenerating.
    let strategy = match a.strategy {
        StrategyKind::Alg1 => dynamatch::sim::Strategy::Alg1 { k: proto_k },
        StrategyKind::Trivial => dynamatch::sim::Strategy::Trivial,
    };
    let run = dynamatch::sim::run_on_hard_instance(&inst, strategy, budget, a.seed)?;
    let csv = format!(
        "P,Q,k,budget,strategy,opt_lb,N,max_message_bytes,sum_overlap_Mp\n{},{},{},{},{},{},{},{},{}\n",
        cell.parties,
        cell.q,
        cell.k,
        fmt_budget(budget),
        a.strategy,
        run.opt_lower_bound,
        run.run.matching.len(),
        run.run.max_message_bytes(),
        run.overlap_sum(),
    );
    write_output(a.report.as_deref(), &csv)
}
