//! Simultaneous-message protocol simulator.
//!
//! `P` parties hold edge-disjoint subgraphs of one bipartite graph and share
//! a random seed. Each party independently computes a single message — a
//! list of its own edges — and sends it to a referee, who outputs a maximum
//! matching of everything received. Two party strategies are provided:
//!
//! * [`Strategy::Alg1`]: the parties agree (via the shared seed) on a subset
//!   `A'` of `min(k, |A|)` left vertices and each sends, for every `a ∈ A'`,
//!   its `min(deg(a), k)` lexicographically smallest incident edges.
//! * [`Strategy::Trivial`]: each party sends a maximum matching of its own
//!   graph, which already guarantees referee output at least `OPT/P`.
//!
//! Messages use a fixed-width wire format (4-byte party id, 4-byte edge
//! count, 8 bytes per edge) so that byte budgets are exact and reproducible.
//! [`truncate_message`] keeps the longest edge-list prefix that fits a
//! budget; the 8-byte header is always accounted, so budgets below 8 bytes
//! still yield an (empty) 8-byte message.
//!
//! [`run_on_hard_instance`] additionally reports, for instances from
//! [`crate::hard`], how much of the referee's matching comes from each
//! party's hidden matching — the quantity that separates large matchings
//! from small messages in that construction.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{maximum_matching, BipartiteGraph, GraphError, Matching};
use crate::hard::HardInstance;
use crate::seeding::{derive_seed, rng_from_seed, sample_subset};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("two messages claim party {party}")]
    DuplicateParty { party: usize },
    #[error("message from party {party} contains edge ({a}, {b}) outside its graph")]
    InvalidEdge { party: usize, a: usize, b: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub const MESSAGE_HEADER_BYTES: usize = 8;
pub const BYTES_PER_EDGE: usize = 8;

/// One party's message: an edge list with exact wire-size accounting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub party: usize,
    pub edges: Vec<(usize, usize)>,
    /// Exact serialized length: `8 + 8 * edges.len()`.
    pub byte_size: usize,
}

impl Message {
    pub fn new(party: usize, edges: Vec<(usize, usize)>) -> Self {
        let byte_size = MESSAGE_HEADER_BYTES + BYTES_PER_EDGE * edges.len();
        Self { party, edges, byte_size }
    }

    /// Fixed-width serialization (little-endian u32 fields). Vertex indices
    /// and the edge count must fit in 32 bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_size);
        out.extend_from_slice(&(self.party as u32).to_le_bytes());
        out.extend_from_slice(&(self.edges.len() as u32).to_le_bytes());
        for &(a, b) in &self.edges {
            out.extend_from_slice(&(a as u32).to_le_bytes());
            out.extend_from_slice(&(b as u32).to_le_bytes());
        }
        out
    }
}

/// Party strategies. `Alg1`'s `k` is both the size of the shared vertex
/// sample `A'` and the per-vertex edge cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Alg1 { k: usize },
    Trivial,
}

/// The left-vertex subset `A'` the parties agree on. Every party must call
/// this with the same `shared_seed`, `left_size`, and `k`.
pub fn shared_vertex_subset(left_size: usize, k: usize, shared_seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(derive_seed(shared_seed, TAG_SHARED_SUBSET, 0));
    sample_subset(left_size, k, &mut rng)
}

const TAG_SHARED_SUBSET: u64 = 0x53_49_4D_53;

/// Budget-`k` message: for each sampled `a ∈ A'`, the party's
/// `min(deg(a), k)` smallest incident edges. Deterministic given the seed.
pub fn party_message_alg1(
    party: usize,
    graph: &BipartiteGraph,
    shared_seed: u64,
    k: usize,
) -> Message {
    let mut edges = Vec::new();
    for a in shared_vertex_subset(graph.left_size(), k, shared_seed) {
        edges.extend(graph.neighbors(a).iter().take(k).map(|&b| (a, b)));
    }
    Message::new(party, edges)
}

/// Baseline: the party sends a maximum matching of its own graph.
pub fn party_message_trivial(party: usize, graph: &BipartiteGraph) -> Message {
    Message::new(party, party_matching_edges(graph))
}

fn party_matching_edges(graph: &BipartiteGraph) -> Vec<(usize, usize)> {
    maximum_matching(graph).pairs().collect()
}

/// Longest prefix of the edge list whose serialization fits `s_bytes`.
/// The header is unconditionally accounted, so the result's `byte_size` is
/// `min` over feasible prefixes but never below 8.
pub fn truncate_message(m: &Message, s_bytes: usize) -> Message {
    let keep = s_bytes.saturating_sub(MESSAGE_HEADER_BYTES) / BYTES_PER_EDGE;
    Message::new(m.party, m.edges.iter().take(keep).copied().collect())
}

/// Maximum matching over all received edges, after validating that every
/// message is from a distinct party and only contains that party's edges.
pub fn referee_combine(
    messages: &[Message],
    party_graphs: &[BipartiteGraph],
) -> Result<Matching, SimError> {
    check_dimensions(party_graphs)?;
    let mut seen_party = vec![false; party_graphs.len()];
    let mut received: BTreeSet<(usize, usize)> = BTreeSet::new();
    for m in messages {
        if m.party >= party_graphs.len() {
            return Err(SimError::InvalidParameter(format!(
                "message from party {} but only {} graphs declared",
                m.party,
                party_graphs.len()
            )));
        }
        if std::mem::replace(&mut seen_party[m.party], true) {
            return Err(SimError::DuplicateParty { party: m.party });
        }
        for &(a, b) in &m.edges {
            if !party_graphs[m.party].contains_edge(a, b) {
                return Err(SimError::InvalidEdge { party: m.party, a, b });
            }
            received.insert((a, b));
        }
    }
    let g = BipartiteGraph::new(
        party_graphs[0].left_size(),
        party_graphs[0].right_size(),
        received,
    )?;
    Ok(maximum_matching(&g))
}

fn check_dimensions(party_graphs: &[BipartiteGraph]) -> Result<(), SimError> {
    let first = party_graphs
        .first()
        .ok_or_else(|| SimError::InvalidParameter("no party graphs".into()))?;
    if party_graphs
        .iter()
        .any(|g| g.left_size() != first.left_size() || g.right_size() != first.right_size())
    {
        return Err(SimError::InvalidParameter("party graphs have mismatched sizes".into()));
    }
    Ok(())
}

/// A complete protocol execution.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub strategy: Strategy,
    /// Per-message byte budget; `None` = unlimited.
    pub budget: Option<usize>,
    pub seed: u64,
    pub messages: Vec<Message>,
    /// The referee's output matching `N`.
    pub matching: Matching,
}

impl ProtocolRun {
    pub fn max_message_bytes(&self) -> usize {
        self.messages.iter().map(|m| m.byte_size).max().unwrap_or(0)
    }
}

/// Runs the protocol on edge-disjoint party graphs: per-party messages,
/// optional truncation to `budget` bytes, then the referee.
pub fn run_protocol(
    party_graphs: &[BipartiteGraph],
    strategy: Strategy,
    budget: Option<usize>,
    seed: u64,
) -> Result<ProtocolRun, SimError> {
    check_dimensions(party_graphs)?;
    let mut all = BTreeSet::new();
    for (p, g) in party_graphs.iter().enumerate() {
        for &e in g.edges() {
            if !all.insert(e) {
                return Err(SimError::InvalidParameter(format!(
                    "party graphs are not edge-disjoint: edge {e:?} repeats (found in party {p})"
                )));
            }
        }
    }
    let messages: Vec<Message> = party_graphs
        .iter()
        .enumerate()
        .map(|(p, g)| match strategy {
            Strategy::Alg1 { k } => party_message_alg1(p, g, seed, k),
            Strategy::Trivial => party_message_trivial(p, g),
        })
        .map(|m| match budget {
            Some(s) => truncate_message(&m, s),
            None => m,
        })
        .collect();
    let matching = referee_combine(&messages, party_graphs)?;
    Ok(ProtocolRun { strategy, budget, seed, messages, matching })
}

/// A protocol run on a hard instance, with the quantities the construction
/// is about: the guaranteed-matching lower bound and the overlap of the
/// referee's output with each party's hidden matching.
#[derive(Clone, Debug)]
pub struct HardRun {
    pub run: ProtocolRun,
    /// `(Q+P)k/2`: guaranteed size of a maximum matching in the union.
    pub opt_lower_bound: usize,
    /// `|N ∩ M_p|` per party.
    pub overlaps: Vec<usize>,
}

impl HardRun {
    pub fn overlap_sum(&self) -> usize {
        self.overlaps.iter().sum()
    }
}

/// Runs the protocol on a hard instance and records hidden-matching
/// overlaps. Any matching in the union graph satisfies
/// `|N| <= 2Qk + sum_p |N ∩ M_p|` (edges outside the hidden matchings must
/// touch one of the `2Qk` vertices of the low groups), so that inequality
/// is asserted on every run.
pub fn run_on_hard_instance(
    inst: &HardInstance,
    strategy: Strategy,
    budget: Option<usize>,
    seed: u64,
) -> Result<HardRun, SimError> {
    let run = run_protocol(inst.party_graphs(), strategy, budget, seed)?;
    let overlaps: Vec<usize> = (0..inst.params().parties())
        .map(|p| {
            run.matching.pairs().filter(|&(a, b)| inst.hidden_matching(p).contains(a, b)).count()
        })
        .collect();
    let n = run.matching.len();
    let slack = 2 * inst.params().q() * inst.params().k();
    let overlap_sum: usize = overlaps.iter().sum();
    assert!(
        n <= slack + overlap_sum,
        "matching of size {n} exceeds 2Qk + overlap = {slack} + {overlap_sum}"
    );
    Ok(HardRun { run, opt_lower_bound: inst.params().opt_lower_bound(), overlaps })
}
