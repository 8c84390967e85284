//! Helpers shared by the unit tests.

use rand::Rng;

use crate::graph::{random_bipartite_graph, BipartiteGraph};
use crate::seeding::rng_from_seed;

/// Random graph with a uniformly chosen edge count in `0..=max_edges`.
pub(crate) fn random_graph(
    left: usize,
    right: usize,
    max_edges: usize,
    seed: u64,
) -> BipartiteGraph {
    let mut rng = rng_from_seed(seed);
    let target = rng.random_range(0..=max_edges.min(left * right));
    random_graph_exact(left, right, target, seed ^ 0x5A5A)
}

/// Random graph with exactly `edges` distinct edges.
pub(crate) fn random_graph_exact(
    left: usize,
    right: usize,
    edges: usize,
    seed: u64,
) -> BipartiteGraph {
    random_bipartite_graph(left, right, edges, seed).expect("valid test parameters")
}
