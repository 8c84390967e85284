//! One-pass streaming bipartite matcher.
//!
//! The matcher trades approximation for space through a single budget `k`:
//! it samples a set `A'` of `min(k, left_size)` left vertices up front, and
//! for each sampled vertex maintains `ceil(c * k * log2(n))` independent
//! [`L0Sketch`]es over that vertex's incident-edge substream (`n` is the
//! total vertex count). Edge updates for unsampled vertices are discarded on
//! arrival. After the stream ends, every sketch is sampled once, each vertex
//! keeps its first `k` distinct recovered neighbors, and an exact maximum
//! matching on the recovered subgraph is returned.
//!
//! Sampling `A'` uniformly makes the expected ratio `OPT / |output|` at most
//! `n / k`; the sketch provisioning is a coupon-collector bound, enough to
//! recover `min(k, degree)` distinct neighbors per sampled vertex with
//! probability `1 - n^-Theta(c)`. Everything is driven by one master seed,
//! so runs are reproducible bit for bit.

use thiserror::Error;

use crate::graph::{maximum_matching, BipartiteGraph, Matching};
use crate::l0_sampler::{L0Sketch, SampleResult, SketchError};
use crate::seeding::{derive_seed, rng_from_seed, sample_subset};
use crate::stream::{EdgeUpdate, UpdateStream};

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("update ({a}, {b}) out of range for a {left}x{right} matcher")]
    UpdateOutOfRange { a: usize, b: usize, left: usize, right: usize },
    #[error("update delta must be +1 or -1, got {delta}")]
    InvalidDelta { delta: i32 },
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// Provisioning multiplier used when none is given; generous enough that
/// recovery failures do not show up at desk scale.
pub const DEFAULT_PROVISIONING: f64 = 4.0;

/// Per-sketch failure target used when none is given: `1/n^2`, so a union
/// bound over all sketches leaves the total failure probability vanishing.
pub fn default_delta(left_size: usize, right_size: usize) -> f64 {
    let n = (left_size + right_size).max(2) as f64;
    (1.0 / (n * n)).min(0.25)
}

/// Configuration for [`StreamingMatcher`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatcherConfig {
    pub left_size: usize,
    pub right_size: usize,
    /// Budget: size of the sampled vertex set and edges kept per vertex.
    pub k: usize,
    /// Sampler provisioning multiplier (`>= 1`).
    pub c: f64,
    /// Per-sketch failure probability target, in `(0, 1/2)`.
    pub delta: f64,
    pub seed: u64,
}

impl MatcherConfig {
    /// Config with default provisioning `c` and failure target `delta`.
    pub fn new(left_size: usize, right_size: usize, k: usize, seed: u64) -> Self {
        Self {
            left_size,
            right_size,
            k,
            c: DEFAULT_PROVISIONING,
            delta: default_delta(left_size, right_size),
            seed,
        }
    }

    pub fn with_provisioning(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Sketches maintained per sampled vertex: `ceil(c * k * log2(n))` with
    /// `n = left_size + right_size`.
    pub fn samplers_per_vertex(&self) -> usize {
        let n = (self.left_size + self.right_size).max(2) as f64;
        (self.c * self.k as f64 * n.log2()).ceil() as usize
    }

    fn validate(&self) -> Result<(), MatcherError> {
        if self.k == 0 {
            return Err(MatcherError::InvalidParameter("budget k must be >= 1".into()));
        }
        if !self.c.is_finite() || self.c < 1.0 {
            return Err(MatcherError::InvalidParameter(format!(
                "provisioning c must be >= 1, got {}",
                self.c
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(MatcherError::InvalidParameter(format!(
                "delta must lie in (0, 0.5), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Result of [`StreamingMatcher::finalize`].
#[derive(Clone, Debug)]
pub struct MatcherOutput {
    /// Maximum matching of the recovered subgraph.
    pub matching: Matching,
    /// Recovered edges (up to `k` per sampled vertex), lexicographic order.
    pub recovered_edges: Vec<(usize, usize)>,
}

/// Space accounting for a matcher instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceReport {
    pub sampled_vertices: usize,
    pub samplers_per_vertex: usize,
    /// Total sketches: `sampled_vertices * samplers_per_vertex`.
    pub sketch_count: usize,
    pub cell_count: usize,
    pub serialized_bytes: usize,
    /// `ceil((c + 1) * k^2 * log2(n))`: the sketch budget the instance must
    /// stay within.
    pub sketch_budget: usize,
}

/// Streaming matcher state. Build with [`StreamingMatcher::new`], feed every
/// update once via [`StreamingMatcher::process`], then call
/// [`StreamingMatcher::finalize`] — which takes the matcher by value, so the
/// one-pass discipline is enforced by the type system.
#[derive(Clone, Debug)]
pub struct StreamingMatcher {
    config: MatcherConfig,
    sampled: Vec<usize>,
    /// bank_of[a] = position of `a` in `sampled`, or usize::MAX.
    bank_of: Vec<usize>,
    banks: Vec<Vec<L0Sketch>>,
}

const TAG_SUBSET: u64 = 0x4D_53_55_42;
const TAG_SKETCH: u64 = 0x4D_53_4B_45;

impl StreamingMatcher {
    pub fn new(config: MatcherConfig) -> Result<Self, MatcherError> {
        config.validate()?;
        let mut rng = rng_from_seed(derive_seed(config.seed, TAG_SUBSET, 0));
        let sampled = if config.right_size == 0 {
            Vec::new() // no possible edges, nothing worth sketching
        } else {
            sample_subset(config.left_size, config.k, &mut rng)
        };
        let mut bank_of = vec![usize::MAX; config.left_size];
        for (pos, &a) in sampled.iter().enumerate() {
            bank_of[a] = pos;
        }
        let per_vertex = config.samplers_per_vertex();
        let mut banks = Vec::with_capacity(sampled.len());
        for pos in 0..sampled.len() {
            let mut bank = Vec::with_capacity(per_vertex);
            for s in 0..per_vertex {
                let seed = derive_seed(config.seed, TAG_SKETCH, (pos * per_vertex + s) as u64);
                bank.push(L0Sketch::new(config.right_size, config.delta, seed)?);
            }
            banks.push(bank);
        }
        Ok(Self { config, sampled, bank_of, banks })
    }

    pub fn config(&self) -> &MatcherConfig {
        &self.config
    }

    /// The sampled vertex set `A'`, sorted ascending.
    pub fn sampled_vertices(&self) -> &[usize] {
        &self.sampled
    }

    /// Feeds one edge update. Updates for unsampled left vertices are
    /// discarded; updates for sampled ones fan out to that vertex's sketches.
    pub fn process(&mut self, update: &EdgeUpdate) -> Result<(), MatcherError> {
        if update.delta != 1 && update.delta != -1 {
            return Err(MatcherError::InvalidDelta { delta: update.delta });
        }
        if update.a >= self.config.left_size || update.b >= self.config.right_size {
            return Err(MatcherError::UpdateOutOfRange {
                a: update.a,
                b: update.b,
                left: self.config.left_size,
                right: self.config.right_size,
            });
        }
        let pos = self.bank_of[update.a];
        if pos == usize::MAX {
            return Ok(());
        }
        for sketch in &mut self.banks[pos] {
            sketch.update(update.b, i64::from(update.delta))?;
        }
        Ok(())
    }

    /// Samples every sketch, keeps the first `k` distinct neighbors per
    /// sampled vertex (in sketch-index order), and returns a maximum
    /// matching of the recovered subgraph.
    pub fn finalize(self) -> Result<MatcherOutput, MatcherError> {
        let mut edges = Vec::new();
        let mut seen = vec![false; self.config.right_size];
        for (pos, &a) in self.sampled.iter().enumerate() {
            let mut kept = Vec::new();
            for sketch in &self.banks[pos] {
                if kept.len() == self.config.k {
                    break;
                }
                if let SampleResult::Sample(b) = sketch.sample() {
                    if !seen[b] {
                        seen[b] = true;
                        kept.push(b);
                    }
                }
            }
            for &b in &kept {
                seen[b] = false; // reset scratch for the next vertex
                edges.push((a, b));
            }
        }
        edges.sort_unstable();
        let graph = BipartiteGraph::new(self.config.left_size, self.config.right_size, edges)?;
        Ok(MatcherOutput {
            matching: maximum_matching(&graph),
            recovered_edges: graph.edges().to_vec(),
        })
    }

    /// Space accounting; also checks the sketch-count budget.
    pub fn space_report(&self) -> SpaceReport {
        let per_vertex = self.config.samplers_per_vertex();
        let sketch_count = self.sampled.len() * per_vertex;
        let cell_count = self.banks.iter().flatten().map(L0Sketch::cell_count).sum();
        let serialized_bytes = self.banks.iter().flatten().map(L0Sketch::serialized_len).sum();
        let n = (self.config.left_size + self.config.right_size).max(2) as f64;
        let sketch_budget =
            ((self.config.c + 1.0) * (self.config.k * self.config.k) as f64 * n.log2()).ceil()
                as usize;
        assert!(
            sketch_count <= sketch_budget,
            "sketch count {sketch_count} exceeds budget {sketch_budget}"
        );
        SpaceReport {
            sampled_vertices: self.sampled.len(),
            samplers_per_vertex: per_vertex,
            sketch_count,
            cell_count,
            serialized_bytes,
            sketch_budget,
        }
    }

    #[cfg(test)]
    fn banks(&self) -> &[Vec<L0Sketch>] {
        &self.banks
    }
}

/// Runs a matcher over a whole stream: one pass, then finalize.
pub fn run_matcher_on_stream(
    config: MatcherConfig,
    stream: &UpdateStream,
) -> Result<MatcherOutput, MatcherError> {
    if stream.left_size() != config.left_size || stream.right_size() != config.right_size {
        return Err(MatcherError::InvalidParameter(format!(
            "stream is {}x{} but the matcher expects {}x{}",
            stream.left_size(),
            stream.right_size(),
            config.left_size,
            config.right_size
        )));
    }
    let mut matcher = StreamingMatcher::new(config)?;
    for u in stream.updates() {
        matcher.process(u)?;
    }
    matcher.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_valid_matching;
    use crate::stream::{materialize, stream_from_graph};
    use crate::testutil::{random_graph, random_graph_exact};

    fn perfect_matching_graph(n: usize) -> BipartiteGraph {
        BipartiteGraph::new(n, n, (0..n).map(|i| (i, i))).unwrap()
    }

    #[test]
    fn config_validation() {
        let ok = MatcherConfig::new(4, 4, 1, 0);
        assert!(StreamingMatcher::new(ok).is_ok());
        assert!(StreamingMatcher::new(MatcherConfig { k: 0, ..ok }).is_err());
        assert!(StreamingMatcher::new(MatcherConfig { c: 0.5, ..ok }).is_err());
        assert!(StreamingMatcher::new(MatcherConfig { delta: 0.5, ..ok }).is_err());
        assert!(StreamingMatcher::new(MatcherConfig { delta: 0.0, ..ok }).is_err());
    }

    #[test]
    fn samples_all_vertices_when_k_covers_the_left_side() {
        let cfg = MatcherConfig::new(6, 6, 10, 3);
        let m = StreamingMatcher::new(cfg).unwrap();
        assert_eq!(m.sampled_vertices(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn same_seed_means_same_state() {
        let cfg = MatcherConfig::new(20, 10, 4, 99);
        let a = StreamingMatcher::new(cfg).unwrap();
        let b = StreamingMatcher::new(cfg).unwrap();
        assert_eq!(a.sampled_vertices(), b.sampled_vertices());
        assert_eq!(a.banks(), b.banks());
        assert_ne!(
            a.sampled_vertices(),
            StreamingMatcher::new(MatcherConfig { seed: 100, ..cfg }).unwrap().sampled_vertices()
        );
    }

    #[test]
    fn sampled_set_frequency_is_uniform() {
        // P(v in A') = k / left = 0.1; +-0.01 over 10^4 seeds.
        let trials = 10_000u64;
        let mut counts = vec![0u32; 100];
        for t in 0..trials {
            let cfg = MatcherConfig::new(100, 1, 10, derive_seed(0xA11, 0, t))
                .with_provisioning(1.0)
                .with_delta(0.25);
            let m = StreamingMatcher::new(cfg).unwrap();
            for &a in m.sampled_vertices() {
                counts[a] += 1;
            }
        }
        for &c in counts.iter() {
            let f = f64::from(c) / trials as f64;
            assert!((f - 0.10).abs() <= 0.01, "frequency {f} out of band");
        }
    }

    #[test]
    fn unsampled_updates_are_discarded() {
        let cfg = MatcherConfig::new(8, 8, 2, 5).with_provisioning(1.0).with_delta(0.25);
        let mut m = StreamingMatcher::new(cfg).unwrap();
        let outside: usize = (0..8).find(|a| !m.sampled_vertices().contains(a)).unwrap();
        m.process(&EdgeUpdate::insert(outside, 3)).unwrap();
        assert!(m.banks().iter().flatten().all(L0Sketch::is_zero));
        let out = m.finalize().unwrap();
        assert!(out.matching.is_empty());
        assert!(out.recovered_edges.is_empty());
    }

    #[test]
    fn process_validates_updates() {
        let cfg = MatcherConfig::new(4, 4, 1, 0);
        let mut m = StreamingMatcher::new(cfg).unwrap();
        assert!(matches!(
            m.process(&EdgeUpdate { a: 0, b: 0, delta: 3 }),
            Err(MatcherError::InvalidDelta { delta: 3 })
        ));
        assert!(matches!(
            m.process(&EdgeUpdate::insert(4, 0)),
            Err(MatcherError::UpdateOutOfRange { .. })
        ));
    }

    #[test]
    fn cancelled_edges_leave_no_trace() {
        let cfg = MatcherConfig::new(4, 4, 4, 1);
        let mut m = StreamingMatcher::new(cfg).unwrap();
        for a in 0..4 {
            m.process(&EdgeUpdate::insert(a, a)).unwrap();
            m.process(&EdgeUpdate::delete(a, a)).unwrap();
        }
        let out = m.finalize().unwrap();
        assert!(out.matching.is_empty());
        assert!(out.recovered_edges.is_empty());
    }

    #[test]
    fn update_order_does_not_change_state_or_output() {
        let g = random_graph_exact(10, 10, 30, 77);
        let fwd_stream = stream_from_graph(&g, 0.5, 8).unwrap();
        let mut rev = fwd_stream.updates().to_vec();
        rev.reverse();

        let cfg = MatcherConfig::new(10, 10, 4, 21).with_provisioning(1.0);
        let mut fwd = StreamingMatcher::new(cfg).unwrap();
        let mut bwd = StreamingMatcher::new(cfg).unwrap();
        for u in fwd_stream.updates() {
            fwd.process(u).unwrap();
        }
        for u in &rev {
            bwd.process(u).unwrap();
        }
        assert_eq!(fwd.banks(), bwd.banks());
        let (a, b) = (fwd.finalize().unwrap(), bwd.finalize().unwrap());
        assert_eq!(a.matching, b.matching);
        assert_eq!(a.recovered_edges, b.recovered_edges);
    }

    #[test]
    fn generous_budget_recovers_everything() {
        let g = perfect_matching_graph(8);
        let stream = stream_from_graph(&g, 0.0, 2).unwrap();
        let out = run_matcher_on_stream(MatcherConfig::new(8, 8, 8, 4), &stream).unwrap();
        assert_eq!(out.recovered_edges, g.edges());
        assert_eq!(out.matching.len(), 8);
        assert!(is_valid_matching(&g, &out.matching));
    }

    #[test]
    fn output_is_sound_under_churn() {
        for trial in 0..20 {
            let seed = derive_seed(0xA12, 1, trial);
            let g = random_graph(12, 12, 40, seed);
            let stream = stream_from_graph(&g, 1.0, seed ^ 3).unwrap();
            let out =
                run_matcher_on_stream(MatcherConfig::new(12, 12, 5, seed ^ 4), &stream).unwrap();
            let materialized = materialize(&stream).unwrap();
            assert_eq!(materialized, g);
            for &(a, b) in &out.recovered_edges {
                assert!(g.contains_edge(a, b), "phantom edge ({a}, {b}) seed {seed}");
            }
            assert!(is_valid_matching(&g, &out.matching));
        }
    }

    #[test]
    fn space_report_counts_sketches() {
        // k=1 on a 2+2-vertex graph: one sampled vertex, ceil(1*1*log2(4)) = 2 sketches.
        let cfg = MatcherConfig::new(2, 2, 1, 0).with_provisioning(1.0).with_delta(0.25);
        let m = StreamingMatcher::new(cfg).unwrap();
        let report = m.space_report();
        assert_eq!(report.sampled_vertices, 1);
        assert_eq!(report.samplers_per_vertex, 2);
        assert_eq!(report.sketch_count, 2);
        assert!(report.sketch_count <= report.sketch_budget);
        assert_eq!(
            report.serialized_bytes,
            m.banks().iter().flatten().map(L0Sketch::serialized_len).sum::<usize>()
        );

        // Empty left side: nothing to sketch.
        let empty = StreamingMatcher::new(MatcherConfig::new(0, 4, 3, 0)).unwrap();
        assert_eq!(empty.space_report().sketch_count, 0);
        assert!(empty.finalize().unwrap().matching.is_empty());
    }

    #[test]
    fn doubling_k_roughly_quadruples_sketches() {
        let base = MatcherConfig::new(64, 64, 4, 9).with_provisioning(1.0);
        let doubled = MatcherConfig::new(64, 64, 8, 9).with_provisioning(1.0);
        let s1 = StreamingMatcher::new(base).unwrap().space_report().sketch_count;
        let s2 = StreamingMatcher::new(doubled).unwrap().space_report().sketch_count;
        let ratio = s2 as f64 / s1 as f64;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stream_runner_checks_dimensions() {
        let stream = UpdateStream::new(4, 4, 1).unwrap();
        let cfg = MatcherConfig::new(5, 4, 1, 0);
        assert!(matches!(
            run_matcher_on_stream(cfg, &stream),
            Err(MatcherError::InvalidParameter(_))
        ));
    }

    #[test]
    fn ratio_stays_reasonable_on_random_graphs() {
        // Tiny version of the approximation experiment: n = 32, k = 8 =>
        // E[OPT/out] <= 4; the observed mean sits far below the bound.
        let mut ratio_sum = 0.0;
        let trials = 15;
        for trial in 0..trials {
            let seed = derive_seed(0xA13, 2, trial);
            let g = random_graph_exact(16, 16, 100, seed);
            let stream = stream_from_graph(&g, 0.0, seed ^ 1).unwrap();
            let out =
                run_matcher_on_stream(MatcherConfig::new(16, 16, 8, seed ^ 2), &stream).unwrap();
            let opt = maximum_matching(&g).len();
            assert!(!out.matching.is_empty());
            ratio_sum += opt as f64 / out.matching.len() as f64;
        }
        assert!(ratio_sum / trials as f64 <= 4.0);
    }
}
