//! Turnstile edge-update streams.
//!
//! A stream is a sequence of signed unit updates `(a, b, +1/-1)` over the
//! cells of a bipartite adjacency matrix. Multiplicities may wander during
//! the stream; only the *final* values are constrained: every cell must end
//! in `{0..cap}` for the stream to describe a simple graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use thiserror::Error;

use crate::graph::{numbered_lines, parse_header, BipartiteGraph};
use crate::seeding::rng_from_seed;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("update delta must be +1 or -1, got {delta}")]
    InvalidDelta { delta: i32 },
    #[error("update ({a}, {b}) out of range for a {left}x{right} stream")]
    VertexOutOfRange { a: usize, b: usize, left: usize, right: usize },
    #[error("cell ({a}, {b}) ends with negative multiplicity {multiplicity}")]
    NegativeFinalMultiplicity { a: usize, b: usize, multiplicity: i64 },
    #[error("cell ({a}, {b}) ends with multiplicity {multiplicity}, above the cap {cap}")]
    CapExceeded { a: usize, b: usize, multiplicity: i64, cap: i64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// One signed edge update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeUpdate {
    pub a: usize,
    pub b: usize,
    pub delta: i32,
}

impl EdgeUpdate {
    pub fn insert(a: usize, b: usize) -> Self {
        Self { a, b, delta: 1 }
    }

    pub fn delete(a: usize, b: usize) -> Self {
        Self { a, b, delta: -1 }
    }
}

/// A finite turnstile stream with declared dimensions and multiplicity cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateStream {
    left_size: usize,
    right_size: usize,
    cap: i64,
    updates: Vec<EdgeUpdate>,
}

impl UpdateStream {
    /// Empty stream; `cap >= 1` is the bound on final multiplicities.
    pub fn new(left_size: usize, right_size: usize, cap: i64) -> Result<Self, StreamError> {
        if cap < 1 {
            return Err(StreamError::InvalidParameter(format!("cap must be >= 1, got {cap}")));
        }
        Ok(Self { left_size, right_size, cap, updates: Vec::new() })
    }

    /// Appends one update after validating its shape.
    pub fn push(&mut self, u: EdgeUpdate) -> Result<(), StreamError> {
        if u.delta != 1 && u.delta != -1 {
            return Err(StreamError::InvalidDelta { delta: u.delta });
        }
        if u.a >= self.left_size || u.b >= self.right_size {
            return Err(StreamError::VertexOutOfRange {
                a: u.a,
                b: u.b,
                left: self.left_size,
                right: self.right_size,
            });
        }
        self.updates.push(u);
        Ok(())
    }

    pub fn left_size(&self) -> usize {
        self.left_size
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn updates(&self) -> &[EdgeUpdate] {
        &self.updates
    }

    /// Serializes as a `p ts` header plus one `u` line per update.
    ///
    /// ```text
    /// p ts <left> <right> <cap>
    /// u <a> <b> +1
    /// u <a> <b> -1
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p ts {} {} {}", self.left_size, self.right_size, self.cap).unwrap();
        for u in &self.updates {
            let sign = if u.delta == 1 { "+1" } else { "-1" };
            writeln!(out, "u {} {} {sign}", u.a, u.b).unwrap();
        }
        out
    }

    /// Parses the format written by [`UpdateStream::to_text`]. The delta
    /// token must be exactly `+1` or `-1`.
    pub fn from_text(text: &str) -> Result<Self, StreamError> {
        let mut lines = numbered_lines(text);
        let (line, header) = lines
            .next()
            .ok_or(StreamError::Parse { line: 1, msg: "missing header".into() })?;
        let fields = parse_header(line, header, "ts")
            .map_err(|msg| StreamError::Parse { line, msg })?;
        if fields.len() != 3 {
            return Err(StreamError::Parse {
                line,
                msg: format!("expected `p ts <left> <right> <cap>`, got {header:?}"),
            });
        }
        let mut stream = Self::new(fields[0], fields[1], fields[2] as i64)?;
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_ascii_whitespace().collect();
            let bad = |msg: String| StreamError::Parse { line, msg };
            if parts.len() != 4 || parts[0] != "u" {
                return Err(bad(format!("expected `u <a> <b> <+1|-1>`, got {l:?}")));
            }
            let a = parts[1].parse().map_err(|_| bad(format!("bad index {:?}", parts[1])))?;
            let b = parts[2].parse().map_err(|_| bad(format!("bad index {:?}", parts[2])))?;
            let delta = match parts[3] {
                "+1" => 1,
                "-1" => -1,
                other => return Err(bad(format!("bad delta {other:?}"))),
            };
            stream.push(EdgeUpdate { a, b, delta }).map_err(|e| StreamError::Parse {
                line,
                msg: e.to_string(),
            })?;
        }
        Ok(stream)
    }
}

/// Final multiplicity of every touched cell, in lexicographic cell order.
pub fn final_multiplicities(stream: &UpdateStream) -> BTreeMap<(usize, usize), i64> {
    let mut mult = BTreeMap::new();
    for u in stream.updates() {
        *mult.entry((u.a, u.b)).or_insert(0i64) += i64::from(u.delta);
    }
    mult
}

/// Collapses a stream to the graph of cells with final multiplicity >= 1.
///
/// Fails if any cell ends negative or above the stream's cap; intermediate
/// excursions are fine.
pub fn materialize(stream: &UpdateStream) -> Result<BipartiteGraph, StreamError> {
    let mut edges = Vec::new();
    for ((a, b), m) in final_multiplicities(stream) {
        if m < 0 {
            return Err(StreamError::NegativeFinalMultiplicity { a, b, multiplicity: m });
        }
        if m > stream.cap() {
            return Err(StreamError::CapExceeded { a, b, multiplicity: m, cap: stream.cap() });
        }
        if m >= 1 {
            edges.push((a, b));
        }
    }
    Ok(BipartiteGraph::new(stream.left_size(), stream.right_size(), edges)?)
}

/// Encodes `g` as a turnstile stream: one insert per edge in shuffled order,
/// plus `ceil(churn * |E|)` decoy insert/delete pairs.
///
/// Each decoy picks a uniform cell (it may coincide with a real edge),
/// inserts `+1` at a uniform position and `-1` at a uniform strictly later
/// position, so every decoy cancels and `materialize` returns exactly `g`.
pub fn stream_from_graph(
    g: &BipartiteGraph,
    churn: f64,
    seed: u64,
) -> Result<UpdateStream, StreamError> {
    if !churn.is_finite() || churn < 0.0 {
        return Err(StreamError::InvalidParameter(format!(
            "churn must be a finite non-negative number, got {churn}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut base: Vec<EdgeUpdate> =
        g.edges().iter().map(|&(a, b)| EdgeUpdate::insert(a, b)).collect();
    for i in (1..base.len()).rev() {
        base.swap(i, rng.random_range(0..=i));
    }

    let decoys = (churn * g.edge_count() as f64).ceil() as usize;
    let mut updates = base;
    if g.left_size() > 0 && g.right_size() > 0 {
        for _ in 0..decoys {
            let a = rng.random_range(0..g.left_size());
            let b = rng.random_range(0..g.right_size());
            let at = rng.random_range(0..=updates.len());
            updates.insert(at, EdgeUpdate::insert(a, b));
            let del_at = rng.random_range(at + 1..=updates.len());
            updates.insert(del_at, EdgeUpdate::delete(a, b));
        }
    }

    let mut stream = UpdateStream::new(g.left_size(), g.right_size(), 1)?;
    for u in updates {
        stream.push(u)?;
    }
    Ok(stream)
}
