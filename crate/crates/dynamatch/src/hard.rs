//! Hard input distribution for the simultaneous-message matching protocol,
//! built from overlaid induced matchings (a Ruzsa–Szemerédi-style family).
//!
//! Both vertex sides are split into `Q + P` groups of `k` vertices each
//! (`P` = party count, `k` even). A *block* is the edge set placed between
//! one A-group and one B-group; every block here is a `k/2`-subset of a
//! cyclic-shift perfect matching between its two groups, so all edges of a
//! block share one shift value `(b mod k) - (a mod k) mod k`.
//!
//! The **global view** ([`build_global`]) assembles one graph per party:
//! party `p` places shift-`(p+1 mod k)` blocks between the first `Q` groups
//! on both sides, plus shift-0 blocks wiring its private group `Q+p` to the
//! first `Q` groups and to itself. The self-block is that party's *hidden
//! matching* `M_p`. Keeping `k/2` of each shifted matching and relabeling
//! whole groups by secret permutations yields instances whose union graph
//! has a matching of size at least `(Q+P)k/2`, while each party alone
//! cannot tell which of its blocks is the hidden one.
//!
//! The **local view** ([`build_local`]) draws a single party's graph
//! directly: `Q+1` A-groups, a uniform pairing onto `Q+1` B-groups, one
//! uniform `k/2`-block per group pair (shift 0 on paired blocks, shift 1
//! elsewhere, so the pairing is readable off the graph and the support can
//! be enumerated exactly). [`count_party_graphs`] gives the exact support
//! size; [`lower_bound_count`] the `(2^k/(k+1))^((Q+1)^2)` relaxation; and
//! [`enumerate_local_support`] materializes the whole support for small
//! parameters so sampling uniformity can be tested empirically.
//!
//! Party indices, groups, and vertices are all 0-based, including in the
//! instance text format.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::graph::{
    numbered_lines, parse_header, parse_pair_line, BipartiteGraph, GraphError, Matching,
};
use crate::seeding::{derive_seed, rng_from_seed, sample_arrangement, sample_subset};
use crate::stream::{stream_from_graph, StreamError, UpdateStream};

#[derive(Debug, Error)]
pub enum HardError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Largest local-view support [`enumerate_local_support`] will materialize.
pub const SUPPORT_ENUMERATION_LIMIT: u64 = 100_000;

/// Instance parameters: `parties` (P), `q` (Q), and group size `k`.
///
/// Validity: `1 <= Q < P`, `P <= k`, `k` even. `Q` far below `P` is the
/// regime the construction is designed for, so `Q > sqrt(P)` logs a warning
/// but is not rejected. The classical side condition `k <= n/P` is implied:
/// with `n = 2(Q+P)k` vertices it reduces to `P <= 2(Q+P)`, which always
/// holds, so no separate check is needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HardParams {
    parties: usize,
    q: usize,
    k: usize,
}

impl HardParams {
    pub fn new(parties: usize, q: usize, k: usize) -> Result<Self, HardError> {
        if q == 0 {
            return Err(HardError::InvalidParameter("Q must be >= 1".into()));
        }
        if q >= parties {
            return Err(HardError::InvalidParameter(format!(
                "Q must be smaller than the party count, got Q={q}, P={parties}"
            )));
        }
        if parties > k {
            return Err(HardError::InvalidParameter(format!(
                "group size k must be at least the party count, got k={k}, P={parties}"
            )));
        }
        if k % 2 != 0 {
            return Err(HardError::InvalidParameter(format!("k must be even, got {k}")));
        }
        let p = Self { parties, q, k };
        debug_assert!(p.k <= p.vertex_count() / p.parties);
        if (q * q) > parties {
            log::warn!("Q={q} exceeds sqrt(P={parties}); the hidden structure is weak there");
        }
        Ok(p)
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of vertex groups per side: `Q + P`.
    pub fn group_count(&self) -> usize {
        self.q + self.parties
    }

    /// Vertices per side: `(Q + P) * k`.
    pub fn side_size(&self) -> usize {
        self.group_count() * self.k
    }

    /// Total vertices: `2 * (Q + P) * k`.
    pub fn vertex_count(&self) -> usize {
        2 * self.side_size()
    }

    /// Constructive lower bound on the union graph's maximum matching:
    /// `(Q + P) * k / 2`.
    pub fn opt_lower_bound(&self) -> usize {
        self.group_count() * self.k / 2
    }
}

/// A full multi-party instance: per-party edge-disjoint graphs, each party's
/// hidden matching, and their union.
#[derive(Clone, Debug, PartialEq)]
pub struct HardInstance {
    params: HardParams,
    seed: u64,
    party_graphs: Vec<BipartiteGraph>,
    hidden: Vec<Matching>,
    /// Group relabelings; `None` for instances parsed from text.
    pi_a: Option<Vec<usize>>,
    pi_b: Option<Vec<usize>>,
    union_graph: BipartiteGraph,
}

impl HardInstance {
    pub fn params(&self) -> HardParams {
        self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn party_graph(&self, p: usize) -> &BipartiteGraph {
        &self.party_graphs[p]
    }

    pub fn party_graphs(&self) -> &[BipartiteGraph] {
        &self.party_graphs
    }

    /// Party `p`'s hidden matching `M_p` (its relabeled self-block).
    pub fn hidden_matching(&self, p: usize) -> &Matching {
        &self.hidden[p]
    }

    pub fn union_graph(&self) -> &BipartiteGraph {
        &self.union_graph
    }

    /// Group relabeling of the A side, if this instance was generated (not
    /// parsed).
    pub fn pi_a(&self) -> Option<&[usize]> {
        self.pi_a.as_deref()
    }

    pub fn pi_b(&self) -> Option<&[usize]> {
        self.pi_b.as_deref()
    }

    /// Serializes as `p hard <P> <Q> <k> <seed>` followed, per party, by a
    /// `g <p>` section of edge lines and a `hidden <p>` section of `M_p`
    /// edge lines. Group relabelings are not recorded.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "p hard {} {} {} {}\n",
            self.params.parties, self.params.q, self.params.k, self.seed
        );
        for p in 0..self.params.parties {
            s.push_str(&format!("g {p}\n"));
            for &(a, b) in self.party_graphs[p].edges() {
                s.push_str(&format!("e {a} {b}\n"));
            }
            s.push_str(&format!("hidden {p}\n"));
            for (a, b) in self.hidden[p].pairs() {
                s.push_str(&format!("e {a} {b}\n"));
            }
        }
        s
    }

    /// Parses the [`HardInstance::to_text`] format. Sections must appear in
    /// order (`g 0`, `hidden 0`, `g 1`, ...); hidden edges must belong to
    /// their party graph; party graphs must be pairwise edge-disjoint.
    pub fn from_text(text: &str) -> Result<Self, HardError> {
        let mut lines = numbered_lines(text).peekable();
        let (hline, header) = lines
            .next()
            .ok_or_else(|| HardError::Parse { line: 1, msg: "empty input".into() })?;
        let fields = parse_header(hline, header, "hard")
            .map_err(|msg| HardError::Parse { line: hline, msg })?;
        if fields.len() != 4 {
            return Err(HardError::Parse {
                line: hline,
                msg: format!("expected `p hard <P> <Q> <k> <seed>`, got {header:?}"),
            });
        }
        let params = HardParams::new(fields[0], fields[1], fields[2])?;
        let seed = fields[3] as u64;
        let side = params.side_size();

        let mut party_graphs = Vec::with_capacity(params.parties);
        let mut hidden = Vec::with_capacity(params.parties);
        for p in 0..params.parties {
            expect_section(&mut lines, "g", p)?;
            let graph = BipartiteGraph::new(side, side, take_edge_lines(&mut lines)?)?;
            expect_section(&mut lines, "hidden", p)?;
            let mut pairs = Vec::new();
            for (line, l) in take_edge_lines_numbered(&mut lines)? {
                let (a, b) = parse_pair_line(line, l, "e")?;
                if !graph.contains_edge(a, b) {
                    return Err(HardError::Parse {
                        line,
                        msg: format!("hidden edge ({a}, {b}) is not in party {p}'s graph"),
                    });
                }
                pairs.push((a, b));
            }
            party_graphs.push(graph);
            hidden.push(Matching::new(pairs)?);
        }
        if let Some((line, l)) = lines.next() {
            return Err(HardError::Parse { line, msg: format!("unexpected trailing line {l:?}") });
        }
        let union_graph = union_of(&params, &party_graphs)?;
        Ok(Self { params, seed, party_graphs, hidden, pi_a: None, pi_b: None, union_graph })
    }
}

fn expect_section<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
    tag: &str,
    p: usize,
) -> Result<(), HardError> {
    match lines.next() {
        Some((line, l)) if l.split_ascii_whitespace().collect::<Vec<_>>() == [tag, &p.to_string()] => {
            let _ = line;
            Ok(())
        }
        Some((line, l)) => {
            Err(HardError::Parse { line, msg: format!("expected `{tag} {p}`, got {l:?}") })
        }
        None => Err(HardError::Parse { line: 0, msg: format!("missing `{tag} {p}` section") }),
    }
}

/// Consumes the maximal run of `e a b` lines, keeping line numbers.
fn take_edge_lines_numbered<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
) -> Result<Vec<(usize, &'a str)>, HardError> {
    let mut out = Vec::new();
    while matches!(lines.peek(), Some((_, l)) if l.split_ascii_whitespace().next() == Some("e")) {
        out.push(lines.next().expect("peeked"));
    }
    Ok(out)
}

fn take_edge_lines<'a>(
    lines: &mut std::iter::Peekable<impl Iterator<Item = (usize, &'a str)>>,
) -> Result<Vec<(usize, usize)>, HardError> {
    take_edge_lines_numbered(lines)?
        .into_iter()
        .map(|(line, l)| parse_pair_line(line, l, "e").map_err(HardError::from))
        .collect()
}

fn union_of(
    params: &HardParams,
    party_graphs: &[BipartiteGraph],
) -> Result<BipartiteGraph, GraphError> {
    let side = params.side_size();
    let all: Vec<(usize, usize)> =
        party_graphs.iter().flat_map(|g| g.edges().iter().copied()).collect();
    // DuplicateEdge here means the party graphs were not edge-disjoint.
    BipartiteGraph::new(side, side, all)
}

const TAG_GLOBAL: u64 = 0x48_47_4C_42;
const TAG_LOCAL: u64 = 0x48_4C_4F_43;
const TAG_STREAMS: u64 = 0x48_53_54_52;

/// Offsets `t` of a shift-`s` block between groups `ga` and `gb` become
/// edges `(ga*k + t, gb*k + (t+s) mod k)`.
fn block_edges(
    k: usize,
    ga: usize,
    gb: usize,
    shift: usize,
    offsets: &[usize],
) -> Vec<(usize, usize)> {
    offsets.iter().map(|&t| (ga * k + t, gb * k + (t + shift) % k)).collect()
}

/// Builds a full instance. Draw order (one seeded stream): A-side group
/// relabeling, B-side group relabeling, then for each party `p` in order a
/// `k/2` offset subset per block, row-major over the party's sorted group
/// list `{0..Q-1, Q+p}` on both sides.
pub fn build_global(params: HardParams, seed: u64) -> HardInstance {
    let (q, parties, k) = (params.q, params.parties, params.k);
    let groups = params.group_count();
    let side = params.side_size();
    let mut rng = rng_from_seed(derive_seed(seed, TAG_GLOBAL, 0));
    let pi_a = sample_arrangement(groups, groups, &mut rng);
    let pi_b = sample_arrangement(groups, groups, &mut rng);

    let relabel = |(a, b): (usize, usize)| -> (usize, usize) {
        (pi_a[a / k] * k + a % k, pi_b[b / k] * k + b % k)
    };

    let mut party_graphs = Vec::with_capacity(parties);
    let mut hidden = Vec::with_capacity(parties);
    for p in 0..parties {
        let mut own_groups: Vec<usize> = (0..q).collect();
        own_groups.push(q + p);
        let mut edges = Vec::with_capacity((q + 1) * (q + 1) * k / 2);
        let mut self_block = Vec::new();
        for &ga in &own_groups {
            for &gb in &own_groups {
                // Parties overlap only on blocks between the first Q groups,
                // where each uses its own cyclic shift; blocks touching the
                // private group Q+p are unshifted.
                let shift = if ga < q && gb < q { (p + 1) % k } else { 0 };
                let offsets = sample_subset(k, k / 2, &mut rng);
                let block = block_edges(k, ga, gb, shift, &offsets);
                if ga == q + p && gb == q + p {
                    self_block = block.clone();
                }
                edges.extend(block);
            }
        }
        let relabeled: Vec<(usize, usize)> = edges.into_iter().map(relabel).collect();
        party_graphs.push(
            BipartiteGraph::new(side, side, relabeled)
                .expect("blocks within one party are vertex-group disjoint"),
        );
        hidden.push(
            Matching::new(self_block.into_iter().map(relabel))
                .expect("a block is a partial matching"),
        );
    }
    let union_graph =
        union_of(&params, &party_graphs).expect("distinct shifts keep party graphs edge-disjoint");
    HardInstance {
        params,
        seed,
        party_graphs,
        hidden,
        pi_a: Some(pi_a),
        pi_b: Some(pi_b),
        union_graph,
    }
}

/// One party's graph drawn directly from its marginal distribution, plus
/// which block plays the hidden matching.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalView {
    params: HardParams,
    graph: BipartiteGraph,
    hidden: Matching,
    groups_a: Vec<usize>,
    groups_b: Vec<usize>,
    /// `(a_group, b_group)` pairs carrying the shift-0 blocks, sorted.
    pairing: Vec<(usize, usize)>,
}

impl LocalView {
    pub fn params(&self) -> HardParams {
        self.params
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn hidden_matching(&self) -> &Matching {
        &self.hidden
    }

    /// A-side groups touched by the graph, sorted.
    pub fn groups_a(&self) -> &[usize] {
        &self.groups_a
    }

    pub fn groups_b(&self) -> &[usize] {
        &self.groups_b
    }

    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }
}

/// Assembles the per-block edge lists of a local-view graph. `groups_a` is
/// sorted; `partner[i]` is the B-group paired with `groups_a[i]`; `subsets`
/// holds one offset list per block, row-major over sorted `groups_a` x
/// sorted partner values.
fn local_blocks(
    params: HardParams,
    groups_a: &[usize],
    partner: &[usize],
    subsets: &[Vec<usize>],
) -> Vec<Vec<(usize, usize)>> {
    let k = params.k;
    let mut groups_b = partner.to_vec();
    groups_b.sort_unstable();
    let m = groups_a.len();
    let mut blocks = Vec::with_capacity(m * m);
    for (ii, &ga) in groups_a.iter().enumerate() {
        for (jj, &gb) in groups_b.iter().enumerate() {
            let shift = usize::from(partner[ii] != gb);
            blocks.push(block_edges(k, ga, gb, shift, &subsets[ii * m + jj]));
        }
    }
    blocks
}

/// Draws one party's input. Draw order (one seeded stream): the `Q+1`
/// A-groups, the ordered B-group assignment, one offset subset per block
/// (row-major), then the hidden block index.
///
/// Paired blocks use shift 0 and all others shift 1, so distinct structure
/// choices give distinct graphs and the support size equals
/// [`count_party_graphs`]; each component is drawn uniformly and
/// independently, so the graph distribution is uniform over that support.
pub fn build_local(params: HardParams, seed: u64) -> LocalView {
    let m = params.q + 1;
    let mut rng = rng_from_seed(derive_seed(seed, TAG_LOCAL, 0));
    let groups_a = sample_subset(params.group_count(), m, &mut rng);
    let partner = sample_arrangement(params.group_count(), m, &mut rng);
    let subsets: Vec<Vec<usize>> =
        (0..m * m).map(|_| sample_subset(params.k, params.k / 2, &mut rng)).collect();
    let hidden_index = rng.random_range(0..m * m);

    let blocks = local_blocks(params, &groups_a, &partner, &subsets);
    let side = params.side_size();
    let edges: Vec<(usize, usize)> = blocks.iter().flatten().copied().collect();
    let graph = BipartiteGraph::new(side, side, edges).expect("blocks are group-disjoint");
    let hidden = Matching::new(blocks[hidden_index].iter().copied())
        .expect("a block is a partial matching");
    let mut groups_b = partner.clone();
    groups_b.sort_unstable();
    let mut pairing: Vec<(usize, usize)> =
        groups_a.iter().copied().zip(partner.iter().copied()).collect();
    pairing.sort_unstable();
    LocalView { params, graph, hidden, groups_a, groups_b, pairing }
}

/// Exact number of distinct local-view graphs:
/// `C(Q+P, Q+1) * (Q+P)!/(P-1)! * C(k, k/2)^((Q+1)^2)`.
pub fn count_party_graphs(params: HardParams) -> BigUint {
    let g = params.group_count() as u64;
    let m = (params.q + 1) as u64;
    let k = params.k as u64;
    let blocks = ((params.q + 1) * (params.q + 1)) as u32;
    big_binomial(g, m) * rising_product(params.parties as u64, g) * pow_uint(big_binomial(k, k / 2), blocks)
}

/// Closed-form lower bound on [`count_party_graphs`]:
/// `C(Q+P, Q+1) * (Q+P)!/(P-1)! * (2^k/(k+1))^((Q+1)^2)`, exact rational.
pub fn lower_bound_count(params: HardParams) -> BigRational {
    let g = params.group_count() as u64;
    let m = (params.q + 1) as u64;
    let blocks = (params.q + 1) * (params.q + 1);
    let prefix = big_binomial(g, m) * rising_product(params.parties as u64, g);
    let base = BigRational::new(
        BigInt::from(pow_uint(BigUint::from(2u32), params.k as u32)),
        BigInt::from(params.k as u64 + 1),
    );
    let mut acc = BigRational::from_integer(BigInt::from(prefix));
    for _ in 0..blocks {
        acc *= &base;
    }
    acc
}

/// Checks `C(a-b, c) * (a-b)^b <= C(a, c) * (a-c)^b` by exact evaluation.
/// Requires `a, b, c >= 1` and `c <= a - b`.
pub fn check_binomial_shift_bound(a: u64, b: u64, c: u64) -> Result<bool, HardError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(HardError::InvalidParameter("a, b, c must be positive".into()));
    }
    if b >= a || c > a - b {
        return Err(HardError::InvalidParameter(format!(
            "need c <= a - b with a > b, got a={a}, b={b}, c={c}"
        )));
    }
    let exp = u32::try_from(b)
        .map_err(|_| HardError::InvalidParameter(format!("exponent b={b} is unreasonably large")))?;
    let lhs = big_binomial(a - b, c) * pow_uint(BigUint::from(a - b), exp);
    let rhs = big_binomial(a, c) * pow_uint(BigUint::from(a - c), exp);
    Ok(lhs <= rhs)
}

/// Materializes every graph in the local-view support, in a deterministic
/// order. Errors if the support exceeds [`SUPPORT_ENUMERATION_LIMIT`].
pub fn enumerate_local_support(params: HardParams) -> Result<Vec<BipartiteGraph>, HardError> {
    let count = count_party_graphs(params);
    if count > BigUint::from(SUPPORT_ENUMERATION_LIMIT) {
        return Err(HardError::InvalidParameter(format!(
            "support has {count} graphs, enumeration is capped at {SUPPORT_ENUMERATION_LIMIT}"
        )));
    }
    let groups = params.group_count();
    let m = params.q + 1;
    let side = params.side_size();
    let block_choices = combinations(params.k, params.k / 2);
    let mut out = Vec::new();
    for groups_a in combinations(groups, m) {
        for partner in arrangements(groups, m) {
            // Odometer over one subset choice per block.
            let mut digit = vec![0usize; m * m];
            loop {
                let subsets: Vec<Vec<usize>> =
                    digit.iter().map(|&d| block_choices[d].clone()).collect();
                let blocks = local_blocks(params, &groups_a, &partner, &subsets);
                let edges: Vec<(usize, usize)> = blocks.iter().flatten().copied().collect();
                out.push(
                    BipartiteGraph::new(side, side, edges).expect("blocks are group-disjoint"),
                );
                let mut pos = 0;
                while pos < digit.len() {
                    digit[pos] += 1;
                    if digit[pos] < block_choices.len() {
                        break;
                    }
                    digit[pos] = 0;
                    pos += 1;
                }
                if pos == digit.len() {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Streams for one instance: one per party plus one for the union graph.
#[derive(Clone, Debug)]
pub struct InstanceStreams {
    pub party_streams: Vec<UpdateStream>,
    pub union_stream: UpdateStream,
}

/// Encodes an instance as turnstile streams with the given decoy churn.
pub fn instance_to_streams(
    inst: &HardInstance,
    churn: f64,
    seed: u64,
) -> Result<InstanceStreams, StreamError> {
    let parties = inst.params().parties();
    let mut party_streams = Vec::with_capacity(parties);
    for p in 0..parties {
        party_streams.push(stream_from_graph(
            inst.party_graph(p),
            churn,
            derive_seed(seed, TAG_STREAMS, p as u64),
        )?);
    }
    let union_stream =
        stream_from_graph(inst.union_graph(), churn, derive_seed(seed, TAG_STREAMS, parties as u64))?;
    Ok(InstanceStreams { party_streams, union_stream })
}

fn pow_uint(base: BigUint, exp: u32) -> BigUint {
    num_traits::pow::pow(base, exp as usize)
}

/// Exact binomial coefficient.
fn big_binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `lo * (lo+1) * ... * hi` (1 when the range is empty).
fn rising_product(lo: u64, hi: u64) -> BigUint {
    let mut acc = BigUint::one();
    for t in lo..=hi {
        acc *= BigUint::from(t);
    }
    acc
}

/// All r-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(n: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, r, v + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, r, 0, &mut cur, &mut out);
    out
}

/// All ordered r-arrangements of distinct elements of `0..n`.
fn arrangements(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    let mut used = vec![false; n];
    fn rec(
        n: usize,
        r: usize,
        cur: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, r, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    rec(n, r, &mut cur, &mut used, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::maximum_matching;
    use std::collections::{BTreeMap, BTreeSet};

    fn params(p: usize, q: usize, k: usize) -> HardParams {
        HardParams::new(p, q, k).unwrap()
    }

    #[test]
    fn parameter_gates() {
        assert!(HardParams::new(2, 1, 4).is_ok());
        assert!(HardParams::new(2, 1, 5).is_err()); // odd k
        assert!(HardParams::new(2, 0, 4).is_err()); // Q = 0
        assert!(HardParams::new(1, 1, 4).is_err()); // Q >= P
        assert!(HardParams::new(3, 2, 2).is_err()); // P > k
        let p = params(4, 2, 8);
        assert_eq!(p.group_count(), 6);
        assert_eq!(p.side_size(), 48);
        assert_eq!(p.vertex_count(), 96);
        assert_eq!(p.opt_lower_bound(), 24);
    }

    #[test]
    fn global_build_small_example() {
        let inst = build_global(params(2, 1, 4), 7);
        for p in 0..2 {
            assert_eq!(inst.party_graph(p).edge_count(), 8); // (Q+1)^2 * k/2
            assert_eq!(inst.hidden_matching(p).len(), 2); // k/2
        }
        // OPT >= (Q+P)k/2 = 6, by exact maximum matching.
        assert!(maximum_matching(inst.union_graph()).len() >= 6);
    }

    #[test]
    fn global_build_is_deterministic() {
        let p = params(2, 1, 4);
        assert_eq!(build_global(p, 5), build_global(p, 5));
        assert_ne!(build_global(p, 5).union_graph(), build_global(p, 6).union_graph());
    }

    #[test]
    fn party_graphs_are_edge_disjoint() {
        let inst = build_global(params(4, 2, 8), 13);
        let mut seen = BTreeSet::new();
        for g in inst.party_graphs() {
            for &e in g.edges() {
                assert!(seen.insert(e), "edge {e:?} appears in two party graphs");
            }
        }
        assert_eq!(inst.union_graph().edge_count(), seen.len());
        assert!(maximum_matching(inst.union_graph()).len() >= inst.params().opt_lower_bound());
    }

    #[test]
    fn hidden_matching_avoids_low_groups_and_lies_in_party_graph() {
        let inst = build_global(params(4, 2, 8), 21);
        let k = inst.params().k();
        let q = inst.params().q();
        let low_a: BTreeSet<usize> = inst.pi_a().unwrap()[..q].iter().copied().collect();
        let low_b: BTreeSet<usize> = inst.pi_b().unwrap()[..q].iter().copied().collect();
        for p in 0..inst.params().parties() {
            for (a, b) in inst.hidden_matching(p).pairs() {
                assert!(inst.party_graph(p).contains_edge(a, b));
                assert!(!low_a.contains(&(a / k)), "M_{p} touches a low A-group");
                assert!(!low_b.contains(&(b / k)), "M_{p} touches a low B-group");
            }
        }
    }

    /// Groups the edges of `g` by (A-group, B-group) blocks.
    fn blocks_of(g: &BipartiteGraph, k: usize) -> BTreeMap<(usize, usize), Vec<(usize, usize)>> {
        let mut m: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for &(a, b) in g.edges() {
            m.entry((a / k, b / k)).or_default().push((a, b));
        }
        m
    }

    fn assert_party_structure(g: &BipartiteGraph, p: HardParams) {
        let blocks = blocks_of(g, p.k());
        let ga: BTreeSet<usize> = blocks.keys().map(|&(a, _)| a).collect();
        let gb: BTreeSet<usize> = blocks.keys().map(|&(_, b)| b).collect();
        assert_eq!(ga.len(), p.q() + 1);
        assert_eq!(gb.len(), p.q() + 1);
        assert_eq!(blocks.len(), (p.q() + 1) * (p.q() + 1), "group pairs must form a biclique");
        for ((_, _), edges) in &blocks {
            assert_eq!(edges.len(), p.k() / 2);
            let shift0 = (edges[0].1 % p.k() + p.k() - edges[0].0 % p.k()) % p.k();
            for &(a, b) in edges {
                assert_eq!((b % p.k() + p.k() - a % p.k()) % p.k(), shift0);
            }
        }
    }

    #[test]
    fn global_party_graphs_match_local_structure() {
        for (pp, q, k) in [(2, 1, 4), (4, 2, 8)] {
            let p = params(pp, q, k);
            let inst = build_global(p, 3);
            for g in inst.party_graphs() {
                assert_party_structure(g, p);
            }
            let local = build_local(p, 3);
            assert_party_structure(local.graph(), p);
        }
    }

    #[test]
    fn shifted_matchings_partition_a_regular_graph() {
        // Shifts 1..=P between two k-groups are edge-disjoint perfect
        // matchings whose union is P-regular.
        let (p, k) = (5, 8);
        let all: Vec<usize> = (0..k).collect();
        let mut seen = BTreeSet::new();
        let mut deg_a = vec![0usize; k];
        let mut deg_b = vec![0usize; k];
        for shift in 1..=p {
            let edges = block_edges(k, 0, 0, shift % k, &all);
            assert_eq!(edges.len(), k);
            for (a, b) in edges {
                assert!(seen.insert((a, b)), "shifts must not collide");
                deg_a[a] += 1;
                deg_b[b] += 1;
            }
        }
        assert!(deg_a.iter().chain(&deg_b).all(|&d| d == p));
    }

    #[test]
    fn local_view_shape() {
        let p = params(4, 2, 8);
        let lv = build_local(p, 42);
        assert_eq!(lv.graph().edge_count(), (p.q() + 1) * (p.q() + 1) * p.k() / 2);
        assert_eq!(lv.groups_a().len(), p.q() + 1);
        assert_eq!(lv.groups_b().len(), p.q() + 1);
        assert_eq!(lv.hidden_matching().len(), p.k() / 2);
        // The hidden block's edges are in the graph.
        for (a, b) in lv.hidden_matching().pairs() {
            assert!(lv.graph().contains_edge(a, b));
        }
        // The pairing maps groups_a onto groups_b bijectively.
        let bs: BTreeSet<usize> = lv.pairing().iter().map(|&(_, b)| b).collect();
        assert_eq!(bs, lv.groups_b().iter().copied().collect());
    }

    #[test]
    fn counting_formula_examples() {
        assert_eq!(count_party_graphs(params(2, 1, 2)), BigUint::from(288u32));
        let lb = lower_bound_count(params(2, 1, 2));
        assert_eq!(lb, BigRational::new(BigInt::from(4608), BigInt::from(81)));
        let lb4 = lower_bound_count(params(2, 1, 4));
        assert_eq!(lb4, BigRational::new(BigInt::from(1_179_648), BigInt::from(625)));
    }

    #[test]
    fn count_exceeds_lower_bound_on_many_triples() {
        let mut checked = 0;
        for p in 2..7usize {
            for q in 1..p {
                for k in [p + p % 2, p + p % 2 + 2, p + p % 2 + 4] {
                    let pr = params(p, q, k);
                    let count = BigRational::from_integer(BigInt::from(count_party_graphs(pr)));
                    assert!(count > lower_bound_count(pr), "P={p} Q={q} k={k}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 20, "only {checked} triples checked");
    }

    #[test]
    fn support_enumeration_matches_count() {
        let p = params(2, 1, 2);
        let support = enumerate_local_support(p).unwrap();
        assert_eq!(BigUint::from(support.len() as u64), count_party_graphs(p));
        let distinct: BTreeSet<&BipartiteGraph> = support.iter().collect();
        assert_eq!(distinct.len(), support.len(), "support graphs must be distinct");
        // Refuses to enumerate anything huge.
        assert!(enumerate_local_support(params(4, 2, 8)).is_err());
    }

    #[test]
    fn local_sampling_is_uniform_over_the_support() {
        // 10^4 draws over the 288-graph support: expected count 34.7 per
        // graph, sigma = sqrt(10^4 * p(1-p)) = 5.88, so a 5-sigma band is
        // [6, 64] after rounding to integers.
        let p = params(2, 1, 2);
        let support = enumerate_local_support(p).unwrap();
        let mut counts: BTreeMap<&BipartiteGraph, u32> =
            support.iter().map(|g| (g, 0)).collect();
        let trials = 10_000u64;
        for t in 0..trials {
            let lv = build_local(p, derive_seed(0x10CA1, 0, t));
            *counts.get_mut(lv.graph()).expect("draw outside enumerated support") += 1;
        }
        for (_, &c) in &counts {
            assert!((6..=64).contains(&c), "count {c} outside the 5-sigma band");
        }
    }

    #[test]
    fn hidden_block_is_uniform_over_blocks() {
        // (Q+1)^2 = 4 block positions; 4000 draws => expected 1000 each,
        // 5 sigma = 5 * sqrt(4000 * 1/4 * 3/4) ~ 137.
        let p = params(2, 1, 2);
        let mut counts = [0u32; 4];
        for t in 0..4000u64 {
            let lv = build_local(p, derive_seed(0x10CA1, 1, t));
            let (a, b) = lv.hidden_matching().pairs().next().unwrap();
            let i = lv.groups_a().iter().position(|&g| g == a / p.k()).unwrap();
            let j = lv.groups_b().iter().position(|&g| g == b / p.k()).unwrap();
            counts[i * (p.q() + 1) + j] += 1;
        }
        for c in counts {
            assert!((863..=1137).contains(&c), "hidden-block count {c} out of band");
        }
    }

    #[test]
    fn binomial_shift_bound_examples() {
        assert!(check_binomial_shift_bound(10, 2, 3).unwrap());
        for a in 2..20u64 {
            for b in 1..a {
                // boundary c = a - b: left side is (a-b)^b * 1
                assert!(check_binomial_shift_bound(a, b, a - b).unwrap());
            }
        }
        assert!(check_binomial_shift_bound(10, 8, 3).is_err()); // c > a-b
        assert!(check_binomial_shift_bound(0, 1, 1).is_err());
    }

    #[test]
    fn binomial_shift_bound_exhaustive_small() {
        for a in 2..=40u64 {
            for b in 1..a {
                for c in 1..=(a - b) {
                    assert!(
                        check_binomial_shift_bound(a, b, c).unwrap(),
                        "violated at a={a} b={b} c={c}"
                    );
                }
            }
        }
    }

    #[test]
    fn streams_round_trip_the_instance() {
        let inst = build_global(params(2, 1, 4), 11);
        for churn in [0.0, 0.7] {
            let streams = instance_to_streams(&inst, churn, 9).unwrap();
            assert_eq!(streams.party_streams.len(), 2);
            for (p, s) in streams.party_streams.iter().enumerate() {
                assert_eq!(&crate::stream::materialize(s).unwrap(), inst.party_graph(p));
            }
            assert_eq!(&crate::stream::materialize(&streams.union_stream).unwrap(), inst.union_graph());
        }
    }

    #[test]
    fn text_round_trip() {
        let inst = build_global(params(2, 1, 4), 23);
        let text = inst.to_text();
        let parsed = HardInstance::from_text(&text).unwrap();
        assert_eq!(parsed.params(), inst.params());
        assert_eq!(parsed.seed(), inst.seed());
        assert_eq!(parsed.party_graphs(), inst.party_graphs());
        for p in 0..2 {
            assert_eq!(parsed.hidden_matching(p), inst.hidden_matching(p));
        }
        assert!(parsed.pi_a().is_none());
        // A second round trip is byte-identical.
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn parse_rejects_malformed_instances() {
        assert!(HardInstance::from_text("").is_err());
        assert!(HardInstance::from_text("p hard 2 1\n").is_err());
        assert!(HardInstance::from_text("p hard 2 1 4 0\nhidden 0\n").is_err());
        // Hidden edge outside the party graph.
        let bad = "p hard 2 1 4 0\ng 0\ne 0 0\nhidden 0\ne 0 1\ng 1\ne 1 1\nhidden 1\ne 1 1\n";
        let err = HardInstance::from_text(bad).unwrap_err();
        assert!(matches!(err, HardError::Parse { line: 5, .. }), "{err}");
        // Party graphs sharing an edge are rejected via the union build.
        let dup = "p hard 2 1 4 0\ng 0\ne 0 0\nhidden 0\ne 0 0\ng 1\ne 0 0\nhidden 1\ne 0 0\n";
        assert!(matches!(HardInstance::from_text(dup), Err(HardError::Graph(_))));
        // Out-of-order sections.
        let ooo = "p hard 2 1 4 0\ng 1\nhidden 1\ng 0\nhidden 0\n";
        assert!(HardInstance::from_text(ooo).is_err());
    }
}
