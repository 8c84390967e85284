//! Parameter sweeps and single-row replays.
//!
//! A sweep enumerates its parameter grid in nested order (as the flags are
//! listed below), runs `--trials` seeded trials per cell, and appends two
//! aggregate rows (`mean`, `stderr`) after each cell's trial rows. Rows are
//! flushed cell by cell so partial results survive an aborted run. Each
//! trial row records the `sub_seed` that fully determines it; the `replay`
//! subcommand re-runs exactly one such row from the values printed in it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};

use dynamatch::hard::HardParams;
use dynamatch::seeding::derive_seed;

use crate::trial::{
    fmt_budget, fmt_f64, mean_stderr, run_match_trial, run_sim_trial, MatchCell, MatchMeasure,
    SimCell, SimMeasure, StrategyKind,
};
use crate::{parse_budget, write_output};

const TAG_CELL: u64 = 0x53_57_43;
const TAG_TRIAL: u64 = 0x53_57_54;

pub const MATCH_HEADER: &str =
    "row,n,k,c,delta,edges,churn,trial,sub_seed,samplers,opt,output_size,ratio,bytes";
pub const SIM_HEADER: &str =
    "row,P,Q,k,proto_k,budget,strategy,trial,sub_seed,opt_lb,N,max_message_bytes,sum_overlap_Mp";

#[derive(Args)]
pub struct SweepArgs {
    #[command(subcommand)]
    mode: SweepMode,
}

#[derive(Subcommand)]
enum SweepMode {
    /// Streaming matcher on random graphs, over a (n, k, c, delta) grid.
    Match(MatchSweepArgs),
    /// Protocol runs on fresh hard instances, over a (P, Q, k, budget) grid.
    Sim(SimSweepArgs),
}

#[derive(Args)]
struct MatchSweepArgs {
    /// Total vertex counts; each graph uses n/2 vertices per side.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Edge budgets.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Provisioning multipliers.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    c: Vec<f64>,
    /// Failure targets; `auto` = 1/n^2.
    #[arg(long, value_delimiter = ',', default_value = "auto")]
    delta: Vec<String>,
    /// Edge counts; `auto` = 5 * (n/2), capped at the grid size.
    #[arg(long, value_delimiter = ',', default_value = "auto")]
    edges: Vec<String>,
    /// Decoy pairs per real edge, applied to every cell.
    #[arg(long, default_value_t = 0.0)]
    churn: f64,
    /// Trials per cell.
    #[arg(long)]
    trials: usize,
    /// Master seed; per-trial sub-seeds are split from (seed, cell, trial).
    #[arg(long)]
    seed: u64,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimSweepArgs {
    /// Party counts.
    #[arg(long = "P", value_delimiter = ',', required = true)]
    parties: Vec<usize>,
    /// Group parameters.
    #[arg(long = "Q", value_delimiter = ',', required = true)]
    q: Vec<usize>,
    /// Group sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Per-message byte budgets; `unlimited` allowed.
    #[arg(long, value_delimiter = ',', default_value = "unlimited")]
    budget: Vec<String>,
    #[arg(long, value_enum, default_value_t = StrategyKind::Alg1)]
    strategy: StrategyKind,
    /// Alg1 sample budget; `side` = the instance's side size.
    #[arg(long, default_value = "side")]
    proto_k: String,
    /// Trials per cell.
    #[arg(long)]
    trials: usize,
    /// Master seed; per-trial sub-seeds are split from (seed, cell, trial).
    #[arg(long)]
    seed: u64,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct ReplayArgs {
    #[command(subcommand)]
    mode: ReplayMode,
}

#[derive(Subcommand)]
enum ReplayMode {
    /// Reproduce one matcher sweep row.
    Match(ReplayMatchArgs),
    /// Reproduce one protocol sweep row.
    Sim(ReplaySimArgs),
}

#[derive(Args)]
struct ReplayMatchArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 4.0)]
    c: f64,
    /// As printed in the row (a number; `auto` also accepted).
    #[arg(long, default_value = "auto")]
    delta: String,
    #[arg(long)]
    edges: usize,
    #[arg(long, default_value_t = 0.0)]
    churn: f64,
    /// Trial index, echoed into the row.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// The row's recorded sub_seed.
    #[arg(long)]
    sub_seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplaySimArgs {
    #[arg(long = "P")]
    parties: usize,
    #[arg(long = "Q")]
    q: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "side")]
    proto_k: String,
    #[arg(long, default_value = "unlimited")]
    budget: String,
    #[arg(long, value_enum, default_value_t = StrategyKind::Alg1)]
    strategy: StrategyKind,
    /// Trial index, echoed into the row.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// The row's recorded sub_seed.
    #[arg(long)]
    sub_seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    match args.mode {
        SweepMode::Match(a) => sweep_match(a),
        SweepMode::Sim(a) => sweep_sim(a),
    }
}

pub fn replay(args: ReplayArgs) -> Result<()> {
    match args.mode {
        ReplayMode::Match(a) => {
            let cell = MatchCell {
                n: a.n,
                k: a.k,
                c: a.c,
                delta: Some(resolve_delta(&a.delta, a.n)?),
                edges: a.edges,
                churn: a.churn,
            };
            let m = run_match_trial(&cell, a.sub_seed)?;
            let out = format!("{MATCH_HEADER}\n{}\n", match_row(&cell, a.trial, a.sub_seed, &m));
            write_output(a.out.as_deref(), &out)
        }
        ReplayMode::Sim(a) => {
            let cell = SimCell {
                parties: a.parties,
                q: a.q,
                k: a.k,
                proto_k: resolve_proto_k(&a.proto_k)?,
                budget: parse_budget(&a.budget)?,
                strategy: a.strategy,
            };
            let m = run_sim_trial(&cell, a.sub_seed)?;
            let out = format!("{SIM_HEADER}\n{}\n", sim_row(&cell, a.trial, a.sub_seed, &m));
            write_output(a.out.as_deref(), &out)
        }
    }
}

fn resolve_delta(token: &str, n: usize) -> Result<f64> {
    let left = n / 2;
    crate::parse_delta(token, left, n - left)
}

/// `side` (use the instance's side size) or an explicit sample budget.
fn resolve_proto_k(token: &str) -> Result<Option<usize>> {
    if token == "side" {
        return Ok(None);
    }
    let k: usize = token.parse().with_context(|| format!("bad --proto-k value {token:?}"))?;
    Ok(Some(k))
}

fn auto_edges(n: usize) -> usize {
    let left = n / 2;
    (5 * left).min(left * (n - left))
}

fn match_row(cell: &MatchCell, trial: usize, sub_seed: u64, m: &MatchMeasure) -> String {
    format!(
        "trial,{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cell.n,
        cell.k,
        cell.c,
        cell.delta.expect("sweep cells carry a resolved delta"),
        cell.edges,
        cell.churn,
        trial,
        sub_seed,
        m.samplers,
        m.opt,
        m.output_size,
        fmt_f64(m.ratio),
        m.bytes
    )
}

fn sim_row(cell: &SimCell, trial: usize, sub_seed: u64, m: &SimMeasure) -> String {
    format!(
        "trial,{},{},{},{},{},{},{},{},{},{},{},{}",
        cell.parties,
        cell.q,
        cell.k,
        cell.proto_k.map_or_else(|| "side".to_string(), |k| k.to_string()),
        fmt_budget(cell.budget),
        cell.strategy,
        trial,
        sub_seed,
        m.opt_lb,
        m.n_out,
        m.max_message_bytes,
        m.sum_overlap
    )
}

/// Aggregate rows: a `mean` row with every measure column averaged, then a
/// `stderr` row carrying the standard error of the headline column (`ratio`
/// for matcher sweeps, `N` for protocol sweeps).
fn match_aggregate(cell: &MatchCell, ms: &[MatchMeasure]) -> String {
    let col = |f: fn(&MatchMeasure) -> f64| ms.iter().map(f).collect::<Vec<_>>();
    let prefix = format!(
        "{},{},{},{},{},{}",
        cell.n,
        cell.k,
        cell.c,
        cell.delta.expect("sweep cells carry a resolved delta"),
        cell.edges,
        cell.churn
    );
    let (ratio_mean, ratio_se) = mean_stderr(&col(|m| m.ratio));
    let mean = format!(
        "mean,{prefix},,,{},{},{},{},{}",
        fmt_f64(mean_stderr(&col(|m| m.samplers as f64)).0),
        fmt_f64(mean_stderr(&col(|m| m.opt as f64)).0),
        fmt_f64(mean_stderr(&col(|m| m.output_size as f64)).0),
        fmt_f64(ratio_mean),
        fmt_f64(mean_stderr(&col(|m| m.bytes as f64)).0),
    );
    format!("{mean}\nstderr,{prefix},,,,,,{},", fmt_f64(ratio_se))
}

fn sim_aggregate(cell: &SimCell, ms: &[SimMeasure]) -> String {
    let col = |f: fn(&SimMeasure) -> f64| ms.iter().map(f).collect::<Vec<_>>();
    let prefix = format!(
        "{},{},{},{},{},{}",
        cell.parties,
        cell.q,
        cell.k,
        cell.proto_k.map_or_else(|| "side".to_string(), |k| k.to_string()),
        fmt_budget(cell.budget),
        cell.strategy
    );
    let (n_mean, n_se) = mean_stderr(&col(|m| m.n_out as f64));
    let mean = format!(
        "mean,{prefix},,,{},{},{},{}",
        fmt_f64(mean_stderr(&col(|m| m.opt_lb as f64)).0),
        fmt_f64(n_mean),
        fmt_f64(mean_stderr(&col(|m| m.max_message_bytes as f64)).0),
        fmt_f64(mean_stderr(&col(|m| m.sum_overlap as f64)).0),
    );
    format!("{mean}\nstderr,{prefix},,,,{},,", fmt_f64(n_se))
}

fn sweep_match(a: MatchSweepArgs) -> Result<()> {
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    // Build and validate the whole grid before running anything.
    let mut cells = Vec::new();
    for &n in &a.n {
        for &k in &a.k {
            for &c in &a.c {
                for delta in &a.delta {
                    for edges in &a.edges {
                        let edges = if edges == "auto" {
                            auto_edges(n)
                        } else {
                            edges.parse().with_context(|| format!("bad --edges value {edges:?}"))?
                        };
                        cells.push(MatchCell {
                            n,
                            k,
                            c,
                            delta: Some(resolve_delta(delta, n)?),
                            edges,
                            churn: a.churn,
                        });
                    }
                }
            }
        }
    }
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{MATCH_HEADER}")?;
    for (cell_idx, cell) in cells.iter().enumerate() {
        let cell_seed = derive_seed(a.seed, TAG_CELL, cell_idx as u64);
        let mut measures = Vec::with_capacity(a.trials);
        for trial in 0..a.trials {
            let sub_seed = derive_seed(cell_seed, TAG_TRIAL, trial as u64);
            let m = run_match_trial(cell, sub_seed)
                .with_context(|| format!("cell {cell_idx} trial {trial}"))?;
            writeln!(w, "{}", match_row(cell, trial, sub_seed, &m))?;
            measures.push(m);
        }
        writeln!(w, "{}", match_aggregate(cell, &measures))?;
        w.flush()?; // keep completed cells on disk even if a later one fails
    }
    Ok(())
}

fn sweep_sim(a: SimSweepArgs) -> Result<()> {
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let proto_k = resolve_proto_k(&a.proto_k)?;
    let mut cells = Vec::new();
    for &parties in &a.parties {
        for &q in &a.q {
            for &k in &a.k {
                // Reject invalid grid combinations up front.
                HardParams::new(parties, q, k)
                    .with_context(|| format!("grid cell P={parties} Q={q} k={k}"))?;
                for budget in &a.budget {
                    cells.push(SimCell {
                        parties,
                        q,
                        k,
                        proto_k,
                        budget: parse_budget(budget)?,
                        strategy: a.strategy,
                    });
                }
            }
        }
    }
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{SIM_HEADER}")?;
    for (cell_idx, cell) in cells.iter().enumerate() {
        let cell_seed = derive_seed(a.seed, TAG_CELL, cell_idx as u64);
        let mut measures = Vec::with_capacity(a.trials);
        for trial in 0..a.trials {
            let sub_seed = derive_seed(cell_seed, TAG_TRIAL, trial as u64);
            let m = run_sim_trial(cell, sub_seed)
                .with_context(|| format!("cell {cell_idx} trial {trial}"))?;
            writeln!(w, "{}", sim_row(cell, trial, sub_seed, &m))?;
            measures.push(m);
        }
        writeln!(w, "{}", sim_aggregate(cell, &measures))?;
        w.flush()?;
    }
    Ok(())
}
