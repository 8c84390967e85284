//! Bipartite matching in dynamic (turnstile) graph streams.
//!
//! The crate is organized around one pipeline:
//!
//! * [`graph`] — bipartite graphs, matchings, and exact maximum-matching
//!   solvers (Hopcroft–Karp plus a brute-force reference oracle).
//! * [`stream`] — turnstile edge streams: signed `±1` updates whose final
//!   multiplicities define a graph, with generators that interleave
//!   insert-then-delete decoys.
//! * [`l0_sampler`] — mergeable linear sketches that return a uniform
//!   nonzero coordinate of the underlying signed multiplicity vector.
//! * [`matcher`] — the one-pass streaming matcher: a sampled vertex set,
//!   banks of l0-sketches, and an exact matching on the recovered subgraph,
//!   trading approximation for space through a single budget `k`.
//! * [`hard`] — a generator for multi-party inputs made of overlaid induced
//!   matchings, on which any protocol that sends few bits per party misses
//!   most of the matching; includes exact support counting.
//! * [`sim`] — a simultaneous-message protocol simulator (parties send one
//!   message each; a referee outputs a matching) with byte-exact message
//!   accounting and budget truncation.
//! * [`seeding`] — the reproducibility layer: every randomized component is
//!   a pure function of a `u64` seed.
//!
//! All randomness is deterministic given the seeds, so every experiment in
//! the companion CLI can be replayed bit-for-bit.

pub mod graph;
pub mod hard;
pub mod l0_sampler;
pub mod matcher;
pub mod seeding;
pub mod sim;
pub mod stream;

#[cfg(doctest)]
mod book;

#[cfg(test)]
pub(crate) mod testutil;

pub use graph::{maximum_matching, BipartiteGraph, Matching};
pub use l0_sampler::{L0Sketch, SampleResult};
pub use matcher::{run_matcher_on_stream, MatcherConfig, StreamingMatcher};
pub use stream::{EdgeUpdate, UpdateStream};
