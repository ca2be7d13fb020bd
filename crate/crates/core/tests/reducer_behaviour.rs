use graphreduce::action::{ActionSpace, EdgeAction};
use graphreduce::generate;
use graphreduce::graph::WeightedGraph;
use graphreduce::reducer::{reduce_graph, QuantityMode, ReductionConfig, StopCriterion};
use graphreduce::rng::substream;
use proptest::prelude::*;

#[test]
fn triangle_outcome_frequencies_match_the_recorded_probabilities() {
    let g = generate::cycle(3).unwrap();
    let runs = 10_000;
    let (mut deletes, mut contracts, mut reweights) = (0usize, 0usize, 0usize);
    let mut probs = None;
    for seed in 0..runs {
        let mut config = ReductionConfig::with_stop(StopCriterion::MaxIterations(1));
        config.q = 1.0;
        config.d = 1.5;
        config.seed = seed;
        let r = reduce_graph(&g, &config).unwrap();
        let acted = &r.trace.records[0].acted;
        assert_eq!(acted.len(), 1);
        let a = &acted[0];
        // All edges of the unit triangle are equivalent.
        let p = (a.p_delete, a.p_contract);
        assert!(probs.map_or(true, |q: (f64, f64)| (q.0 - p.0).abs() < 1e-12 && (q.1 - p.1).abs() < 1e-12));
        probs = Some(p);
        match a.action {
            EdgeAction::Delete => deletes += 1,
            EdgeAction::Contract => contracts += 1,
            EdgeAction::Reweight(_) => reweights += 1,
            EdgeAction::Keep => {}
        }
    }
    let (pd, pc) = probs.unwrap();
    assert!(pd > 0.0 && pc > 0.0, "expected a delete-or-contract action, got ({pd}, {pc})");
    let n = runs as f64;
    for (count, p) in [(deletes, pd), (contracts, pc), (reweights, 1.0 - pd - pc)] {
        let sd = (n * p * (1.0 - p)).sqrt();
        assert!((count as f64 - n * p).abs() <= 3.0 * sd + 1e-9, "{count} vs {}", n * p);
    }
}

#[test]
fn path_is_only_ever_contracted() {
    let g = generate::path(4, None).unwrap();
    for seed in 0..32 {
        let mut config = ReductionConfig::with_stop(StopCriterion::NodeBudget(1));
        config.seed = seed;
        let r = reduce_graph(&g, &config).unwrap();
        assert_eq!(r.trace.total_deletions(), 0);
        assert_eq!(r.graph.num_nodes(), 1);
    }
}

#[test]
fn trees_reduce_without_deletions() {
    for seed in 0..8 {
        let g = generate::random_tree(32, &mut substream(seed, &[])).unwrap();
        let mut config = ReductionConfig::with_stop(StopCriterion::NodeBudget(1));
        config.seed = seed;
        let r = reduce_graph(&g, &config).unwrap();
        assert_eq!(r.trace.total_deletions(), 0, "seed {seed}");
        assert_eq!(r.graph.num_nodes(), 1);
        r.map.validate(&g, &r.graph).unwrap();
    }
}

#[test]
fn sketch_mode_reduces_and_stays_connected() {
    let g = generate::er(48, 0.2, &mut substream(5, &[])).unwrap();
    let mut config = ReductionConfig::with_stop(StopCriterion::EdgeBudget(g.num_edges() / 2));
    config.quantity_mode = QuantityMode::Sketch { k: 48, epsilon: 0.5 };
    config.q = 0.25;
    config.seed = 2;
    let r = reduce_graph(&g, &config).unwrap();
    assert!(r.graph.is_connected());
    assert!(r.graph.num_edges() <= g.num_edges() / 2);
    assert!(r.state.is_none());
    assert!(r.estimated_error() > 0.0);
}

#[test]
fn deletion_only_space_keeps_every_node() {
    let g = generate::er(40, 0.25, &mut substream(8, &[])).unwrap();
    let mut config = ReductionConfig::with_stop(StopCriterion::EdgeBudget(g.num_edges() / 2));
    config.action_space = ActionSpace::DeletionOnly { max_reweight: 2.0 };
    config.q = 0.25;
    let r = reduce_graph(&g, &config).unwrap();
    assert_eq!(r.graph.num_nodes(), 40);
    assert_eq!(r.trace.total_contractions(), 0);
    assert!(r.graph.is_connected());
}

#[test]
fn error_cap_bounds_the_estimate() {
    let g = generate::er(40, 0.25, &mut substream(3, &[])).unwrap();
    let cap = 0.5;
    let mut config = ReductionConfig::with_stop(StopCriterion::ErrorCap(cap));
    config.stop.push(StopCriterion::EdgeBudget(1));
    let r = reduce_graph(&g, &config).unwrap();
    assert!(r.estimated_error() <= cap);
    assert!(r.graph.num_edges() < g.num_edges());
}

fn random_connected(n: usize, extra: usize, seed: u64) -> WeightedGraph {
    use rand::Rng;
    let mut rng = substream(seed, &[]);
    let mut g = WeightedGraph::with_nodes(n);
    for i in 1..n {
        let j = rng.random_range(0..i);
        g.add_edge(i, j, rng.random_range(0.2..3.0)).unwrap();
    }
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            g.add_edge(a, b, rng.random_range(0.2..3.0)).unwrap();
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reduction_is_connected_deterministic_and_consistent(n in 4usize..24, extra in 0usize..40, seed: u64, nodes: bool) {
        let g = random_connected(n, extra, seed);
        let stop = if nodes { StopCriterion::NodeBudget(n / 2) } else { StopCriterion::EdgeBudget(g.num_edges() / 2) };
        let mut config = ReductionConfig::with_stop(stop);
        config.q = 0.5;
        config.seed = seed;
        let a = reduce_graph(&g, &config).unwrap();
        let b = reduce_graph(&g, &config).unwrap();
        prop_assert_eq!(&a.graph, &b.graph);
        prop_assert_eq!(&a.trace, &b.trace);
        prop_assert!(a.graph.is_connected());
        prop_assert!(a.map.validate(&g, &a.graph).is_ok());
        prop_assert!((a.graph.total_node_weight() - g.total_node_weight()).abs() < 1e-9 * n as f64);
        let last = a.trace.records.last();
        prop_assert_eq!(last.map_or(g.num_edges(), |r| r.edges), a.graph.num_edges());
    }
}
