//! Bipartite graphs and matchings.
//!
//! Vertices are dense 0-based indices: the left side is `0..left_size`, the
//! right side is `0..right_size`, and an edge `(a, b)` pairs left vertex `a`
//! with right vertex `b`. Multiplicity lives in the streaming layer; a graph
//! here is always a simple edge set.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({a}, {b}) out of range for a {left}x{right} bipartite graph")]
    VertexOutOfRange { a: usize, b: usize, left: usize, right: usize },
    #[error("duplicate edge ({a}, {b})")]
    DuplicateEdge { a: usize, b: usize },
    #[error("pairs ({a0}, {b0}) and ({a1}, {b1}) share a vertex")]
    SharedVertex { a0: usize, b0: usize, a1: usize, b1: usize },
    #[error("edge ({a}, {b}) is not in the graph")]
    EdgeNotInGraph { a: usize, b: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Simple bipartite graph over dense vertex indices.
///
/// Edges are held sorted lexicographically, so two graphs are equal iff they
/// have the same sizes and the same edge set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BipartiteGraph {
    left_size: usize,
    right_size: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds a graph, validating bounds and rejecting duplicate edges.
    pub fn new(
        left_size: usize,
        right_size: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge { a: w[0].0, b: w[0].1 });
            }
        }
        let mut adj = vec![Vec::new(); left_size];
        for &(a, b) in &edges {
            if a >= left_size || b >= right_size {
                return Err(GraphError::VertexOutOfRange {
                    a,
                    b,
                    left: left_size,
                    right: right_size,
                });
            }
            adj[a].push(b);
        }
        Ok(Self { left_size, right_size, edges, adj })
    }

    /// Graph with no edges.
    pub fn empty(left_size: usize, right_size: usize) -> Self {
        Self { left_size, right_size, edges: Vec::new(), adj: vec![Vec::new(); left_size] }
    }

    pub fn left_size(&self) -> usize {
        self.left_size
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Right neighbors of left vertex `a`, sorted ascending.
    pub fn neighbors(&self, a: usize) -> &[usize] {
        &self.adj[a]
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adj[a].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        a < self.left_size && self.adj[a].binary_search(&b).is_ok()
    }

    /// Serializes as a `p bip` header plus one `e` line per edge.
    ///
    /// ```text
    /// p bip <left> <right>
    /// e <a> <b>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p bip {} {}", self.left_size, self.right_size).unwrap();
        for &(a, b) in &self.edges {
            writeln!(out, "e {a} {b}").unwrap();
        }
        out
    }

    /// Parses the format written by [`BipartiteGraph::to_text`].
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = numbered_lines(text);
        let (line, header) = lines
            .next()
            .ok_or_else(|| GraphError::Parse { line: 1, msg: "missing header".into() })?;
        let fields =
            parse_header(line, header, "bip").map_err(|msg| GraphError::Parse { line, msg })?;
        let [left, right] = fields[..] else {
            return Err(GraphError::Parse {
                line,
                msg: format!("expected `p bip <left> <right>`, got {header:?}"),
            });
        };
        let mut edges = Vec::new();
        for (line, l) in lines {
            edges.push(parse_edge_line(line, l)?);
        }
        Self::new(left, right, edges)
    }
}

/// Splits into trimmed non-empty lines with 1-based numbering.
pub(crate) fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses `p <kind> <int>...`, returning the integer fields.
pub(crate) fn parse_header(_line: usize, s: &str, kind: &str) -> Result<Vec<usize>, String> {
    let mut parts = s.split_ascii_whitespace();
    if parts.next() != Some("p") || parts.next() != Some(kind) {
        return Err(format!("expected `p {kind}` header, got {s:?}"));
    }
    parts
        .map(|t| t.parse::<usize>().map_err(|_| format!("bad integer {t:?} in header")))
        .collect()
}

pub(crate) fn parse_edge_line(line: usize, s: &str) -> Result<(usize, usize), GraphError> {
    parse_pair_line(line, s, "e")
}

pub(crate) fn parse_pair_line(
    line: usize,
    s: &str,
    tag: &str,
) -> Result<(usize, usize), GraphError> {
    let parts: Vec<&str> = s.split_ascii_whitespace().collect();
    let bad = |msg: String| GraphError::Parse { line, msg };
    if parts.len() != 3 || parts[0] != tag {
        return Err(bad(format!("expected `{tag} <a> <b>`, got {s:?}")));
    }
    let a = parts[1].parse().map_err(|_| bad(format!("bad index {:?}", parts[1])))?;
    let b = parts[2].parse().map_err(|_| bad(format!("bad index {:?}", parts[2])))?;
    Ok((a, b))
}

/// A set of vertex-disjoint edges.
///
/// [`Matching::new`] enforces disjointness. Text parsed from untrusted input
/// can be wrapped with [`Matching::from_pairs_unchecked`] and then audited
/// with [`is_valid_matching`].
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Matching {
    pairs: BTreeSet<(usize, usize)>,
}

impl Matching {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let m = Self::from_pairs_unchecked(pairs);
        if let Some((p, q)) = m.first_shared_vertex() {
            return Err(GraphError::SharedVertex { a0: p.0, b0: p.1, a1: q.0, b1: q.1 });
        }
        Ok(m)
    }

    /// Wraps pairs without checking disjointness.
    pub fn from_pairs_unchecked(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self { pairs: pairs.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    fn first_shared_vertex(&self) -> Option<((usize, usize), (usize, usize))> {
        let mut seen_a = std::collections::BTreeMap::new();
        let mut seen_b = std::collections::BTreeMap::new();
        for &(a, b) in &self.pairs {
            if let Some(&prev) = seen_a.get(&a) {
                return Some(((a, prev), (a, b)));
            }
            if let Some(&prev) = seen_b.get(&b) {
                return Some(((prev, b), (a, b)));
            }
            seen_a.insert(a, b);
            seen_b.insert(b, a);
        }
        None
    }

    /// One `m <a> <b>` line per pair, lexicographic order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &(a, b) in &self.pairs {
            writeln!(out, "m {a} {b}").unwrap();
        }
        out
    }

    /// Parses the format written by [`Matching::to_text`] without validating
    /// disjointness (see [`is_valid_matching`]).
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut pairs = Vec::new();
        for (line, l) in numbered_lines(text) {
            pairs.push(parse_pair_line(line, l, "m")?);
        }
        Ok(Self::from_pairs_unchecked(pairs))
    }
}

/// True iff `m`'s pairs are vertex-disjoint and every pair is an edge of `g`.
pub fn is_valid_matching(g: &BipartiteGraph, m: &Matching) -> bool {
    m.first_shared_vertex().is_none() && m.pairs().all(|(a, b)| g.contains_edge(a, b))
}

/// Uniform random graph with exactly `edge_count` distinct edges.
///
/// Cell pairs are drawn as a uniform subset of the `left * right` grid:
/// directly when the grid is small enough to index, by rejection sampling
/// when the grid is huge but sparse.
pub fn random_bipartite_graph(
    left_size: usize,
    right_size: usize,
    edge_count: usize,
    seed: u64,
) -> Result<BipartiteGraph, GraphError> {
    let cells = left_size.checked_mul(right_size).ok_or_else(|| {
        GraphError::InvalidParameter("left_size * right_size overflows".into())
    })?;
    if edge_count > cells {
        return Err(GraphError::InvalidParameter(format!(
            "cannot place {edge_count} distinct edges in a {left_size}x{right_size} graph"
        )));
    }
    let mut rng = crate::seeding::rng_from_seed(seed);
    let edges: Vec<(usize, usize)> = if cells <= 1 << 24 {
        crate::seeding::sample_subset(cells, edge_count, &mut rng)
            .into_iter()
            .map(|i| (i / right_size, i % right_size))
            .collect()
    } else {
        use rand::Rng;
        let mut set = BTreeSet::new();
        while set.len() < edge_count {
            set.insert((rng.random_range(0..left_size), rng.random_range(0..right_size)));
        }
        set.into_iter().collect()
    };
    BipartiteGraph::new(left_size, right_size, edges)
}

/// Maximum-cardinality matching via Hopcroft-Karp, `O(|E| sqrt(|V|))`.
pub fn maximum_matching(g: &BipartiteGraph) -> Matching {
    const INF: usize = usize::MAX;
    let n = g.left_size();
    // pair_a[a] / pair_b[b] hold the matched partner or INF.
    let mut pair_a = vec![INF; n];
    let mut pair_b = vec![INF; g.right_size()];
    let mut dist = vec![INF; n];
    let mut queue = std::collections::VecDeque::new();

    // BFS layers alternating free/matched edges; true iff an augmenting path exists.
    let bfs = |pair_a: &[usize], pair_b: &[usize], dist: &mut [usize],
               queue: &mut std::collections::VecDeque<usize>| {
        queue.clear();
        for a in 0..n {
            if pair_a[a] == INF {
                dist[a] = 0;
                queue.push_back(a);
            } else {
                dist[a] = INF;
            }
        }
        let mut found = false;
        while let Some(a) = queue.pop_front() {
            for &b in g.neighbors(a) {
                match pair_b[b] {
                    INF => found = true,
                    a2 => {
                        if dist[a2] == INF {
                            dist[a2] = dist[a] + 1;
                            queue.push_back(a2);
                        }
                    }
                }
            }
        }
        found
    };

    fn dfs(
        g: &BipartiteGraph,
        a: usize,
        pair_a: &mut [usize],
        pair_b: &mut [usize],
        dist: &mut [usize],
    ) -> bool {
        const INF: usize = usize::MAX;
        for &b in g.neighbors(a) {
            let a2 = pair_b[b];
            if a2 == INF || (dist[a2] == dist[a] + 1 && dfs(g, a2, pair_a, pair_b, dist)) {
                pair_a[a] = b;
                pair_b[b] = a;
                return true;
            }
        }
        dist[a] = INF;
        false
    }

    while bfs(&pair_a, &pair_b, &mut dist, &mut queue) {
        for a in 0..n {
            if pair_a[a] == INF {
                dfs(g, a, &mut pair_a, &mut pair_b, &mut dist);
            }
        }
    }

    Matching::from_pairs_unchecked(
        (0..n).filter(|&a| pair_a[a] != INF).map(|a| (a, pair_a[a])),
    )
}

/// Greedy maximal matching scanning edges in lexicographic order.
///
/// Maximality gives the classic 2-approximation: the result has at least
/// half the edges of a maximum matching.
pub fn greedy_matching(g: &BipartiteGraph) -> Matching {
    greedy_matching_in_order(g, g.edges().iter().copied()).expect("own edges are valid")
}

/// Greedy maximal matching visiting candidate edges in the caller's order.
///
/// Every candidate must be an edge of `g`; repeats are allowed and ignored
/// after the first visit.
pub fn greedy_matching_in_order(
    g: &BipartiteGraph,
    order: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Matching, GraphError> {
    let mut used_a = vec![false; g.left_size()];
    let mut used_b = vec![false; g.right_size()];
    let mut pairs = Vec::new();
    for (a, b) in order {
        if !g.contains_edge(a, b) {
            return Err(GraphError::EdgeNotInGraph { a, b });
        }
        if !used_a[a] && !used_b[b] {
            used_a[a] = true;
            used_b[b] = true;
            pairs.push((a, b));
        }
    }
    Ok(Matching::from_pairs_unchecked(pairs))
}

/// Maximum matching size by exhaustive branch-and-bound over the edge list.
///
/// Independent of [`maximum_matching`] on purpose: small instances can be
/// cross-checked against this reference. Cost is exponential in the edge
/// count, so it refuses graphs with more than 24 edges.
pub fn exhaustive_maximum_matching_size(g: &BipartiteGraph) -> usize {
    assert!(g.edge_count() <= 24, "reference search is exponential; got {} edges", g.edge_count());
    fn go(
        edges: &[(usize, usize)],
        i: usize,
        used_a: &mut Vec<bool>,
        used_b: &mut Vec<bool>,
        size: usize,
    ) -> usize {
        if i == edges.len() {
            return size;
        }
        // Even taking every remaining edge cannot beat this bound.
        let mut best = go(edges, i + 1, used_a, used_b, size);
        let (a, b) = edges[i];
        if !used_a[a] && !used_b[b] {
            used_a[a] = true;
            used_b[b] = true;
            best = best.max(go(edges, i + 1, used_a, used_b, size + 1));
            used_a[a] = false;
            used_b[b] = false;
        }
        best
    }
    let mut used_a = vec![false; g.left_size()];
    let mut used_b = vec![false; g.right_size()];
    go(g.edges(), 0, &mut used_a, &mut used_b, 0)
}
