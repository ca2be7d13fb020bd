//! Iterative reduction: sample an independent edge set, act on the fraction
//! with the lowest `beta*`, and repeat until a stop criterion fires.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{
    beta_star_in, expected_error, optimal_action_in, ActionDistribution, ActionSpace, EdgeAction, EdgeQuantities,
    Priority,
};
use crate::error::{Error, Result};
use crate::graph::{ContractionMap, Edge, EdgeId, NodeId, WeightedGraph};
use crate::laplacian::PseudoinverseState;
use crate::rng::substream;
use crate::sketch::{ConjugateGradient, OmegaSketch, ProjectionMatrix, SketchState};

pub const DEFAULT_Q: f64 = 1.0 / 16.0;
pub const DEFAULT_D: f64 = 0.25;
pub const MAX_REDRAWS: usize = 32;
/// Consecutive iterations without an eligible edge before giving up.
pub const MAX_STALLED_ITERATIONS: usize = 64;

const TAG_MATCHING: u64 = 0;
const TAG_ACTION: u64 = 1;
const TAG_SKETCH: u64 = 2;

/// Largest `x` a sketched non-bridge edge may report.
const SKETCH_X_CEILING: f64 = 1.0 - 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCriterion {
    EdgeBudget(usize),
    NodeBudget(usize),
    ErrorCap(f64),
    BetaCap(f64),
    MaxIterations(usize),
}

impl StopCriterion {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StopCriterion::NodeBudget(0) => Err(Error::UnreachableStop("node budget must be at least 1".into())),
            StopCriterion::ErrorCap(c) | StopCriterion::BetaCap(c) if !(c >= 0.0) => {
                Err(Error::InvalidParameter(format!("cap {c} must be nonnegative")))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for StopCriterion {
    type Err = Error;

    /// `edges=N`, `nodes=N`, `error=X`, `beta=X` or `iters=N`.
    fn from_str(s: &str) -> Result<Self> {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("stop criterion `{s}` is not key=value")))?;
        let bad = || Error::InvalidParameter(format!("bad value in stop criterion `{s}`"));
        let c = match key.trim() {
            "edges" => StopCriterion::EdgeBudget(value.trim().parse().map_err(|_| bad())?),
            "nodes" => StopCriterion::NodeBudget(value.trim().parse().map_err(|_| bad())?),
            "iters" => StopCriterion::MaxIterations(value.trim().parse().map_err(|_| bad())?),
            "error" => StopCriterion::ErrorCap(value.trim().parse().map_err(|_| bad())?),
            "beta" => StopCriterion::BetaCap(value.trim().parse().map_err(|_| bad())?),
            other => return Err(Error::InvalidParameter(format!("unknown stop criterion `{other}`"))),
        };
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for StopCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopCriterion::EdgeBudget(n) => write!(f, "edges={n}"),
            StopCriterion::NodeBudget(n) => write!(f, "nodes={n}"),
            StopCriterion::ErrorCap(x) => write!(f, "error={x}"),
            StopCriterion::BetaCap(x) => write!(f, "beta={x}"),
            StopCriterion::MaxIterations(n) => write!(f, "iters={n}"),
        }
    }
}

/// How `Omega_e` and `m_e` are obtained each iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityMode {
    /// From the maintained dense pseudoinverse.
    Exact,
    /// From fresh `k`-row sketches; bridges are detected exactly.
    Sketch { k: usize, epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub q: f64,
    pub d: f64,
    pub priority: Priority,
    /// Reduction stops as soon as any criterion fires.
    pub stop: Vec<StopCriterion>,
    pub seed: u64,
    pub quantity_mode: QuantityMode,
    pub action_space: ActionSpace,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            q: DEFAULT_Q,
            d: DEFAULT_D,
            priority: Priority::Edges,
            stop: Vec::new(),
            seed: 0,
            quantity_mode: QuantityMode::Exact,
            action_space: ActionSpace::Full,
        }
    }
}

impl ReductionConfig {
    pub fn with_stop(stop: StopCriterion) -> Self {
        Self {
            stop: vec![stop],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidParameter(format!("q = {} must lie in (0, 1]", self.q)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParameter(format!("d = {} must be positive", self.d)));
        }
        if self.stop.is_empty() {
            return Err(Error::InvalidParameter("at least one stop criterion is required".into()));
        }
        for s in &self.stop {
            s.validate()?;
        }
        self.action_space.validate()?;
        if let QuantityMode::Sketch { k, epsilon } = self.quantity_mode {
            if k == 0 || !(epsilon > 0.0) {
                return Err(Error::InvalidParameter("sketch needs k >= 1 and epsilon > 0".into()));
            }
        }
        Ok(())
    }
}

/// One acted-on edge of an iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActedEdge {
    pub edge: EdgeId,
    pub u: NodeId,
    pub v: NodeId,
    pub weight: f64,
    pub x: f64,
    pub m: f64,
    pub beta_star: f64,
    pub p_delete: f64,
    pub p_contract: f64,
    pub action: EdgeAction,
    pub expected_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `None` when no sampled edge had a finite `beta*`.
    pub beta: Option<f64>,
    pub sampled: usize,
    pub acted: Vec<ActedEdge>,
    pub redraws: usize,
    pub deletions: usize,
    pub contractions: usize,
    pub reweights: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Running total including this iteration.
    pub estimated_error: f64,
}

impl IterationRecord {
    pub fn iteration_error(&self) -> f64 {
        self.acted.iter().map(|a| a.expected_error).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub records: Vec<IterationRecord>,
}

impl ReductionTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_deletions(&self) -> usize {
        self.records.iter().map(|r| r.deletions).sum()
    }

    pub fn total_contractions(&self) -> usize {
        self.records.iter().map(|r| r.contractions).sum()
    }

    /// Concatenation; running totals of `other` are shifted by this trace's.
    pub fn extend(&mut self, other: &ReductionTrace) {
        let base = estimated_total_error(self);
        let offset = self.records.len();
        for r in &other.records {
            let mut r = r.clone();
            r.iteration += offset;
            r.estimated_error += base;
            self.records.push(r);
        }
    }

    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect::<Result<_>>()?;
        Ok(Self { records })
    }
}

/// Sum of the expected errors of every acted edge.
pub fn estimated_total_error(trace: &ReductionTrace) -> f64 {
    trace.records.iter().map(IterationRecord::iteration_error).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaSelection {
    pub beta: Option<f64>,
    /// Indices into the input, ascending.
    pub selected: Vec<usize>,
}

/// Picks the `ceil(q len)` smallest finite `beta*` values; `beta` is the
/// largest of them.
pub fn select_beta(beta_stars: &[f64], q: f64) -> Result<BetaSelection> {
    if beta_stars.is_empty() {
        return Err(Error::InvalidParameter("no sampled edges".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q = {q} must lie in (0, 1]")));
    }
    let mut finite: Vec<usize> = (0..beta_stars.len()).filter(|&i| beta_stars[i].is_finite()).collect();
    finite.sort_by(|&a, &b| beta_stars[a].total_cmp(&beta_stars[b]).then(a.cmp(&b)));
    let count = ((q * beta_stars.len() as f64).ceil() as usize).min(finite.len());
    let mut selected: Vec<usize> = finite[..count].to_vec();
    let beta = selected.last().map(|&i| beta_stars[i]);
    selected.sort_unstable();
    Ok(BetaSelection { beta, selected })
}

/// Result of [`reduce_graph`].
#[derive(Clone, Debug)]
pub struct Reduction {
    pub graph: WeightedGraph,
    pub map: ContractionMap,
    /// Present in exact mode.
    pub state: Option<PseudoinverseState>,
    pub trace: ReductionTrace,
}

impl Reduction {
    pub fn estimated_error(&self) -> f64 {
        estimated_total_error(&self.trace)
    }
}

/// Applies one drawn outcome to the graph, the map and the state.
pub fn apply_edge_action(
    graph: &mut WeightedGraph,
    map: &mut ContractionMap,
    state: &mut PseudoinverseState,
    edge_id: EdgeId,
    action: EdgeAction,
) -> Result<()> {
    let edge = graph.edge(edge_id)?;
    match action {
        EdgeAction::Keep => Ok(()),
        EdgeAction::Reweight(a) => {
            state.woodbury_reweight(edge_id, &edge, a * edge.weight)?;
            graph.set_edge_weight(edge_id, edge.weight * (1.0 + a))
        }
        EdgeAction::Delete => {
            state.woodbury_reweight(edge_id, &edge, -edge.weight)?;
            graph.remove_edge(edge_id).map(|_| ())
        }
        EdgeAction::Contract => {
            let record = graph.contract_edge(edge_id)?;
            state.contraction_update(&record)?;
            map.apply(&record);
            Ok(())
        }
    }
}

struct Candidate {
    id: EdgeId,
    edge: Edge,
    eq: EdgeQuantities,
    beta_star: f64,
}

enum Quantities {
    Exact,
    Sketch { m: SketchState, omega: OmegaSketch },
}

fn stop_reached(stops: &[StopCriterion], g: &WeightedGraph, iteration: usize, error: f64) -> bool {
    stops.iter().any(|s| match *s {
        StopCriterion::EdgeBudget(t) => g.num_edges() <= t,
        StopCriterion::NodeBudget(t) => g.num_nodes() <= t,
        StopCriterion::ErrorCap(c) => error >= c,
        StopCriterion::MaxIterations(n) => iteration >= n,
        StopCriterion::BetaCap(_) => false,
    })
}

fn check_reachable(g: &WeightedGraph, config: &ReductionConfig) -> Result<()> {
    if let ActionSpace::DeletionOnly { .. } = config.action_space {
        let floor = g.num_nodes().saturating_sub(1);
        let reachable = config.stop.iter().any(|s| match *s {
            StopCriterion::EdgeBudget(t) => t >= floor,
            StopCriterion::NodeBudget(t) => t >= g.num_nodes(),
            _ => true,
        });
        if !reachable {
            return Err(Error::UnreachableStop(format!(
                "without contraction the graph keeps {} nodes and at least {floor} edges",
                g.num_nodes()
            )));
        }
    }
    Ok(())
}

/// Reduces a connected graph; deterministic for a fixed config.
pub fn reduce_graph(g: &WeightedGraph, config: &ReductionConfig) -> Result<Reduction> {
    config.validate()?;
    if g.num_nodes() == 0 {
        return Err(Error::InvalidParameter("graph has no nodes".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    check_reachable(g, config)?;

    let mut graph = g.clone();
    let mut map = ContractionMap::identity(g);
    let mut state = match config.quantity_mode {
        QuantityMode::Exact => Some(PseudoinverseState::build(g)?),
        QuantityMode::Sketch { .. } => None,
    };
    let mut trace = ReductionTrace::default();
    let mut error = 0.0;
    let mut stalled = 0;
    let mut iteration = 0;

    while !stop_reached(&config.stop, &graph, iteration, error) && graph.num_edges() > 0 {
        let mut rng = substream(config.seed, &[iteration as u64, TAG_MATCHING]);
        let matching = graph.maximal_independent_edge_set(&mut rng);
        let candidates = evaluate(&graph, state.as_ref(), &matching, config, iteration)?;
        let stars: Vec<f64> = candidates.iter().map(|c| c.beta_star).collect();
        let selection = select_beta(&stars, config.q)?;

        let Some(beta) = selection.beta else {
            stalled += 1;
            if stalled > MAX_STALLED_ITERATIONS {
                return Err(Error::Stalled { iterations: stalled });
            }
            trace.records.push(IterationRecord {
                iteration,
                beta: None,
                sampled: matching.len(),
                acted: Vec::new(),
                redraws: 0,
                deletions: 0,
                contractions: 0,
                reweights: 0,
                nodes: graph.num_nodes(),
                edges: graph.num_edges(),
                estimated_error: error,
            });
            iteration += 1;
            continue;
        };
        stalled = 0;
        if config
            .stop
            .iter()
            .any(|s| matches!(*s, StopCriterion::BetaCap(cap) if beta > cap))
        {
            break;
        }

        let chosen: Vec<(&Candidate, ActionDistribution)> = selection
            .selected
            .iter()
            .map(|&i| {
                let c = &candidates[i];
                optimal_action_in(&c.eq, beta, config.action_space).map(|dist| (c, dist))
            })
            .collect::<Result<_>>()?;
        let iteration_error: f64 = chosen.iter().map(|(c, dist)| expected_error(&c.eq, dist)).sum();
        if config
            .stop
            .iter()
            .any(|s| matches!(*s, StopCriterion::ErrorCap(cap) if error + iteration_error > cap))
        {
            break;
        }

        let (actions, redraws) = draw_connected(&graph, &chosen, config.seed, iteration)?;

        let mut acted = Vec::with_capacity(chosen.len());
        let (mut deletions, mut contractions, mut reweights) = (0, 0, 0);
        for ((c, dist), &action) in chosen.iter().zip(&actions) {
            match action {
                EdgeAction::Delete => deletions += 1,
                EdgeAction::Contract => contractions += 1,
                EdgeAction::Reweight(_) => reweights += 1,
                EdgeAction::Keep => {}
            }
            acted.push(ActedEdge {
                edge: c.id,
                u: c.edge.u,
                v: c.edge.v,
                weight: c.edge.weight,
                x: c.eq.x,
                m: c.eq.m,
                beta_star: c.beta_star,
                p_delete: dist.p_delete,
                p_contract: dist.p_contract,
                action,
                expected_error: expected_error(&c.eq, dist),
            });
        }

        // Reweights and deletions, then contractions.
        for pass_contract in [false, true] {
            for a in &acted {
                if (a.action == EdgeAction::Contract) != pass_contract {
                    continue;
                }
                match state.as_mut() {
                    Some(s) => apply_edge_action(&mut graph, &mut map, s, a.edge, a.action)?,
                    None => apply_to_graph(&mut graph, &mut map, a.edge, a.action)?,
                }
            }
        }

        error += iteration_error;
        if let Some(s) = state.as_mut() {
            s.add_estimated_error(iteration_error);
            s.maybe_rebuild(&graph)?;
        }
        trace.records.push(IterationRecord {
            iteration,
            beta: Some(beta),
            sampled: matching.len(),
            acted,
            redraws,
            deletions,
            contractions,
            reweights,
            nodes: graph.num_nodes(),
            edges: graph.num_edges(),
            estimated_error: error,
        });
        iteration += 1;
    }

    Ok(Reduction {
        graph,
        map,
        state,
        trace,
    })
}

fn apply_to_graph(graph: &mut WeightedGraph, map: &mut ContractionMap, id: EdgeId, action: EdgeAction) -> Result<()> {
    match action {
        EdgeAction::Keep => Ok(()),
        EdgeAction::Reweight(a) => {
            let w = graph.edge(id)?.weight;
            graph.set_edge_weight(id, w * (1.0 + a))
        }
        EdgeAction::Delete => graph.remove_edge(id).map(|_| ()),
        EdgeAction::Contract => {
            let record = graph.contract_edge(id)?;
            map.apply(&record);
            Ok(())
        }
    }
}

/// Draws outcomes until the deletions leave the graph connected.
fn draw_connected(
    graph: &WeightedGraph,
    chosen: &[(&Candidate, ActionDistribution)],
    seed: u64,
    iteration: usize,
) -> Result<(Vec<EdgeAction>, usize)> {
    for attempt in 0..MAX_REDRAWS {
        let actions: Vec<EdgeAction> = chosen
            .iter()
            .map(|(c, dist)| {
                let u: f64 = substream(seed, &[iteration as u64, TAG_ACTION, attempt as u64, c.id as u64]).random();
                dist.sample(u)
            })
            .collect();
        let deleted: Vec<EdgeId> = chosen
            .iter()
            .zip(&actions)
            .filter(|(_, a)| **a == EdgeAction::Delete)
            .map(|((c, _), _)| c.id)
            .collect();
        if deleted.is_empty() {
            return Ok((actions, attempt));
        }
        let mut probe = graph.clone();
        for &e in &deleted {
            probe.remove_edge(e)?;
        }
        if probe.is_connected() {
            return Ok((actions, attempt));
        }
    }
    Err(Error::RedrawLimit {
        iteration,
        attempts: MAX_REDRAWS,
    })
}

fn evaluate(
    graph: &WeightedGraph,
    state: Option<&PseudoinverseState>,
    matching: &[EdgeId],
    config: &ReductionConfig,
    iteration: usize,
) -> Result<Vec<Candidate>> {
    let quantities = match config.quantity_mode {
        QuantityMode::Exact => Quantities::Exact,
        QuantityMode::Sketch { k, epsilon } => {
            let mut rng = substream(config.seed, &[iteration as u64, TAG_SKETCH]);
            let weights: Vec<f64> = graph.node_weights().map(|(_, w)| w).collect();
            let solver = ConjugateGradient::default();
            let projection = ProjectionMatrix::random(&weights, k, epsilon, &mut rng)?;
            Quantities::Sketch {
                m: SketchState::build(graph, &projection, &solver)?,
                omega: OmegaSketch::build(graph, k, &solver, &mut rng)?,
            }
        }
    };
    let bridges = match quantities {
        Quantities::Sketch { .. } => graph.bridges(),
        Quantities::Exact => Default::default(),
    };
    matching
        .par_iter()
        .map(|&id| {
            let edge = graph.edge(id)?;
            let (x, m) = match &quantities {
                Quantities::Exact => {
                    let s = state.ok_or_else(|| Error::InvalidParameter("exact mode without state".into()))?;
                    let (x, m) = s.edge_scalars(&edge)?;
                    (x.clamp(f64::MIN_POSITIVE, 1.0), m.max(f64::MIN_POSITIVE))
                }
                Quantities::Sketch { m, omega } => {
                    let x = if bridges.contains(&id) {
                        1.0
                    } else {
                        (edge.weight * omega.approx_omega(&edge)?).clamp(f64::MIN_POSITIVE, SKETCH_X_CEILING)
                    };
                    (x, m.approx_m_e(&edge)?.max(f64::MIN_POSITIVE))
                }
            };
            let triangles = match config.priority {
                Priority::Edges => graph.triangle_count(id)?,
                Priority::Nodes => 0,
            };
            let eq = EdgeQuantities::new(x, m, triangles, config.priority)?;
            let beta_star = beta_star_in(&eq, config.d, config.action_space)?;
            Ok(Candidate {
                id,
                edge,
                eq,
                beta_star,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn triangle() -> WeightedGraph {
        WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn select_beta_examples() {
        let s = select_beta(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap();
        assert_eq!(s.selected, vec![0, 1]);
        assert_eq!(s.beta, Some(2.0));

        let s = select_beta(&[f64::INFINITY, f64::INFINITY, 1.0], 1.0).unwrap();
        assert_eq!(s.selected, vec![2]);
        assert_eq!(s.beta, Some(1.0));

        let s = select_beta(&[7.5], 0.01).unwrap();
        assert_eq!(s.selected, vec![0]);

        let s = select_beta(&[f64::INFINITY], 1.0).unwrap();
        assert!(s.selected.is_empty());
        assert_eq!(s.beta, None);

        assert!(select_beta(&[], 0.5).is_err());
        assert!(select_beta(&[1.0], 0.0).is_err());
    }

    #[test]
    fn stop_criterion_parsing() {
        assert_eq!("edges=10".parse::<StopCriterion>().unwrap(), StopCriterion::EdgeBudget(10));
        assert_eq!("beta=0.5".parse::<StopCriterion>().unwrap(), StopCriterion::BetaCap(0.5));
        assert!("nodes=0".parse::<StopCriterion>().is_err());
        assert!("bogus=1".parse::<StopCriterion>().is_err());
        let c = StopCriterion::ErrorCap(2.5);
        assert_eq!(c.to_string().parse::<StopCriterion>().unwrap(), c);
    }

    #[test]
    fn zero_iterations_is_identity() {
        let g = triangle();
        let r = reduce_graph(&g, &ReductionConfig::with_stop(StopCriterion::MaxIterations(0))).unwrap();
        assert_eq!(r.graph, g);
        assert!(r.trace.is_empty());
        assert_eq!(r.map.num_supernodes(), 3);
    }

    #[test]
    fn path_only_contracts() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let mut config = ReductionConfig::with_stop(StopCriterion::NodeBudget(1));
        config.seed = 11;
        let r = reduce_graph(&g, &config).unwrap();
        assert_eq!(r.graph.num_nodes(), 1);
        assert_eq!(r.trace.total_deletions(), 0);
        assert_eq!(r.trace.total_contractions(), 3);
        assert_relative_eq!(r.graph.total_node_weight(), 4.0);
    }

    #[test]
    fn disconnected_input_rejected() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let err = reduce_graph(&g, &ReductionConfig::with_stop(StopCriterion::MaxIterations(3))).unwrap_err();
        assert!(matches!(err, Error::Disconnected));
    }

    #[test]
    fn unreachable_budget_without_contraction() {
        let g = triangle();
        let mut config = ReductionConfig::with_stop(StopCriterion::EdgeBudget(1));
        config.action_space = ActionSpace::DeletionOnly { max_reweight: 2.0 };
        assert!(matches!(reduce_graph(&g, &config), Err(Error::UnreachableStop(_))));
        config.stop = vec![StopCriterion::NodeBudget(2)];
        assert!(matches!(reduce_graph(&g, &config), Err(Error::UnreachableStop(_))));
    }

    #[test]
    fn running_error_is_nondecreasing_and_matches_total() {
        let mut edges = Vec::new();
        for i in 0..12 {
            edges.push((i, (i + 1) % 12, 1.0));
            edges.push((i, (i + 5) % 12, 0.5));
        }
        let g = WeightedGraph::from_edges(12, &edges).unwrap();
        let mut config = ReductionConfig::with_stop(StopCriterion::NodeBudget(4));
        config.q = 0.5;
        config.seed = 3;
        let r = reduce_graph(&g, &config).unwrap();
        assert!(r.graph.is_connected());
        let mut prev = 0.0;
        for rec in &r.trace.records {
            assert!(rec.estimated_error >= prev);
            prev = rec.estimated_error;
        }
        assert_relative_eq!(prev, r.estimated_error(), max_relative = 1e-12);
        assert_relative_eq!(prev, r.state.as_ref().unwrap().estimated_error(), max_relative = 1e-12);
        r.map.validate(&g, &r.graph).unwrap();
    }

    #[test]
    fn trace_round_trips_and_is_deterministic() {
        let g = WeightedGraph::from_edges(
            6,
            &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 3.0), (5, 0, 1.0), (0, 3, 1.0), (1, 4, 1.0)],
        )
        .unwrap();
        let mut config = ReductionConfig::with_stop(StopCriterion::EdgeBudget(3));
        config.q = 1.0;
        config.seed = 99;
        let a = reduce_graph(&g, &config).unwrap();
        let b = reduce_graph(&g, &config).unwrap();
        assert_eq!(a.trace, b.trace);
        let text = a.trace.to_json_lines().unwrap();
        assert_eq!(text.lines().count(), a.trace.len());
        assert_eq!(ReductionTrace::from_json_lines(&text).unwrap(), a.trace);
    }

    #[test]
    fn total_error_of_regime_three_triangle_action() {
        let mut config = ReductionConfig::with_stop(StopCriterion::MaxIterations(1));
        config.d = 1.5;
        config.q = 1.0;
        let r = reduce_graph(&triangle(), &config).unwrap();
        assert_eq!(r.trace.records[0].acted.len(), 1);
        assert_relative_eq!(r.estimated_error(), 2.0 / 9.0, max_relative = 1e-9);

        let mut joined = r.trace.clone();
        joined.extend(&r.trace);
        assert_relative_eq!(estimated_total_error(&joined), 4.0 / 9.0, max_relative = 1e-9);
        assert_eq!(estimated_total_error(&ReductionTrace::default()), 0.0);
    }

    #[test]
    fn sketch_mode_reduces_and_stays_connected() {
        let mut edges = Vec::new();
        for i in 0..20 {
            edges.push((i, (i + 1) % 20, 1.0));
            edges.push((i, (i + 3) % 20, 1.0));
        }
        let g = WeightedGraph::from_edges(20, &edges).unwrap();
        let mut config = ReductionConfig::with_stop(StopCriterion::EdgeBudget(20));
        config.quantity_mode = QuantityMode::Sketch { k: 24, epsilon: 0.5 };
        config.q = 0.5;
        let r = reduce_graph(&g, &config).unwrap();
        assert!(r.state.is_none());
        assert!(r.graph.is_connected());
        assert!(r.graph.num_edges() <= 20);
    }
}
