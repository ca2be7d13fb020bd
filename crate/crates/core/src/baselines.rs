//! Reference reductions: effective-resistance sampling and matching-based
//! coarsening.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ContractionMap, EdgeId, WeightedGraph};
use crate::laplacian::PseudoinverseState;
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsifierConfig {
    /// Draws with replacement.
    pub samples: usize,
    pub seed: u64,
}

/// `w_e Omega_e` for every edge under the combinatorial Laplacian.
pub fn leverage_scores(g: &WeightedGraph) -> Result<BTreeMap<EdgeId, f64>> {
    let mut unit = g.clone();
    for n in g.nodes() {
        unit.set_node_weight(n, 1.0)?;
    }
    let state = PseudoinverseState::build(&unit)?;
    g.edges()
        .map(|(id, e)| Ok((id, e.weight * state.omega(&e)?)))
        .collect()
}

struct Sampler {
    ids: Vec<EdgeId>,
    probabilities: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl Sampler {
    fn new(g: &WeightedGraph) -> Result<Self> {
        if g.num_edges() == 0 {
            return Err(Error::InvalidParameter("graph has no edges".into()));
        }
        let scores = leverage_scores(g)?;
        let total: f64 = scores.values().sum();
        let ids: Vec<EdgeId> = scores.keys().copied().collect();
        let probabilities: Vec<f64> = scores.values().map(|s| s / total).collect();
        let index = WeightedIndex::new(&probabilities)
            .map_err(|e| Error::InvalidParameter(format!("sampling weights: {e}")))?;
        Ok(Self {
            ids,
            probabilities,
            index,
        })
    }

    fn assemble(&self, g: &WeightedGraph, counts: &BTreeMap<usize, usize>, draws: usize) -> Result<WeightedGraph> {
        let mut out = WeightedGraph::new();
        for (n, w) in g.node_weights() {
            out.add_node(n, w)?;
        }
        for (&i, &c) in counts {
            let e = g.edge(self.ids[i])?;
            out.add_edge(e.u, e.v, c as f64 * e.weight / (draws as f64 * self.probabilities[i]))?;
        }
        Ok(out)
    }
}

/// Samples `samples` edges with probability proportional to `w_e Omega_e`
/// and gives each draw weight `w_e / (N p_e)`. The result may be
/// disconnected.
pub fn ss_sparsify(g: &WeightedGraph, config: &SparsifierConfig) -> Result<WeightedGraph> {
    if config.samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let sampler = Sampler::new(g)?;
    let mut rng = substream(config.seed, &[]);
    let mut counts = BTreeMap::new();
    for _ in 0..config.samples {
        *counts.entry(sampler.index.sample(&mut rng)).or_insert(0) += 1;
    }
    sampler.assemble(g, &counts, config.samples)
}

/// Draws until `target_edges` distinct edges are present; returns the graph
/// and the number of draws used as `N`.
pub fn ss_sparsify_to_edges(g: &WeightedGraph, target_edges: usize, seed: u64) -> Result<(WeightedGraph, usize)> {
    if target_edges == 0 || target_edges > g.num_edges() {
        return Err(Error::InvalidParameter(format!(
            "target {target_edges} edges outside [1, {}]",
            g.num_edges()
        )));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let sampler = Sampler::new(g)?;
    let mut rng = substream(seed, &[]);
    let mut counts = BTreeMap::new();
    let mut draws = 0;
    while counts.len() < target_edges {
        *counts.entry(sampler.index.sample(&mut rng)).or_insert(0) += 1;
        draws += 1;
    }
    Ok((sampler.assemble(g, &counts, draws)?, draws))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingStrategy {
    Random,
    HeavyEdge,
}

impl std::str::FromStr for MatchingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "rm" => Ok(MatchingStrategy::Random),
            "heavy" | "heavy_edge" | "hem" => Ok(MatchingStrategy::HeavyEdge),
            other => Err(Error::InvalidParameter(format!("unknown matching `{other}`"))),
        }
    }
}

/// Greedy matching over edges in descending weight; equal weights are
/// ordered randomly.
pub fn heavy_edge_matching<R: Rng + ?Sized>(g: &WeightedGraph, rng: &mut R) -> Vec<EdgeId> {
    let mut edges: Vec<(EdgeId, f64)> = g.edges().map(|(id, e)| (id, e.weight)).collect();
    edges.shuffle(rng);
    edges.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut used = std::collections::HashSet::new();
    let mut matching = Vec::new();
    for (id, _) in edges {
        let e = g.edge(id).expect("edge listed by the graph");
        if !used.contains(&e.u) && !used.contains(&e.v) {
            used.insert(e.u);
            used.insert(e.v);
            matching.push(id);
        }
    }
    matching
}

fn matching<R: Rng + ?Sized>(g: &WeightedGraph, strategy: MatchingStrategy, rng: &mut R) -> Vec<EdgeId> {
    match strategy {
        MatchingStrategy::Random => g.maximal_independent_edge_set(rng),
        MatchingStrategy::HeavyEdge => heavy_edge_matching(g, rng),
    }
}

/// Contracts a full matching `levels` times.
pub fn matching_coarsen(
    g: &WeightedGraph,
    strategy: MatchingStrategy,
    levels: usize,
    seed: u64,
) -> Result<(WeightedGraph, ContractionMap)> {
    coarsen(g, strategy, seed, |_, level| level >= levels)
}

/// Contracts matched edges, level by level, until `target_nodes` remain.
/// The last level stops part way through its matching.
pub fn matching_coarsen_to_nodes(
    g: &WeightedGraph,
    strategy: MatchingStrategy,
    target_nodes: usize,
    seed: u64,
) -> Result<(WeightedGraph, ContractionMap)> {
    if target_nodes == 0 || target_nodes > g.num_nodes() {
        return Err(Error::InvalidParameter(format!(
            "target {target_nodes} nodes outside [1, {}]",
            g.num_nodes()
        )));
    }
    coarsen(g, strategy, seed, |graph, _| graph.num_nodes() <= target_nodes)
}

fn coarsen(
    g: &WeightedGraph,
    strategy: MatchingStrategy,
    seed: u64,
    done: impl Fn(&WeightedGraph, usize) -> bool,
) -> Result<(WeightedGraph, ContractionMap)> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut graph = g.clone();
    let mut map = ContractionMap::identity(g);
    let mut level = 0;
    while !done(&graph, level) && graph.num_edges() > 0 {
        let mut rng = substream(seed, &[level as u64]);
        for id in matching(&graph, strategy, &mut rng) {
            if done(&graph, level) {
                break;
            }
            let record = graph.contract_edge(id)?;
            map.apply(&record);
        }
        level += 1;
    }
    Ok((graph, map))
}
