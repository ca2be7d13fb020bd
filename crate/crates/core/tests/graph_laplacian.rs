use approx::assert_relative_eq;
use graphreduce::graph::{ContractionMap, WeightedGraph};
use graphreduce::laplacian::{lift, LaplacianMatrix, PseudoinverseState};
use graphreduce::rng::substream;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Connected graph: a random spanning tree plus extra edges, random weights.
fn connected_graph(n: usize, extra: usize, seed: u64, node_weights: bool) -> WeightedGraph {
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
    if node_weights {
        for i in 0..n {
            g.set_node_weight(i, rng.random_range(0.5..4.0)).unwrap();
        }
    }
    g
}

fn max_matching_size(g: &WeightedGraph) -> usize {
    let edges: Vec<(usize, usize)> = g.edges().map(|(_, e)| (e.u, e.v)).collect();
    fn go(edges: &[(usize, usize)], used: &mut Vec<bool>) -> usize {
        match edges.split_first() {
            None => 0,
            Some((&(u, v), rest)) => {
                let skip = go(rest, used);
                if used[u] || used[v] {
                    return skip;
                }
                used[u] = true;
                used[v] = true;
                let take = 1 + go(rest, used);
                used[u] = false;
                used[v] = false;
                skip.max(take)
            }
        }
    }
    go(&edges, &mut vec![false; g.num_nodes()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contraction_conserves_node_weight_and_merges_edges(n in 3usize..12, extra in 0usize..20, seed: u64, k in 1usize..4) {
        let g = connected_graph(n, extra, seed, true);
        let total = g.total_node_weight();
        let total_edge: f64 = g.edges().map(|(_, e)| e.weight).sum();
        let mut h = g.clone();
        let mut map = ContractionMap::identity(&g);
        let mut rng = substream(seed, &[1]);
        let mut removed_weight = 0.0;
        for _ in 0..k.min(n - 1) {
            let ids: Vec<_> = h.edge_ids().collect();
            let id = ids[rng.random_range(0..ids.len())];
            removed_weight += h.edge(id).unwrap().weight;
            let rec = h.contract_edge(id).unwrap();
            map.apply(&rec);
        }
        prop_assert!((h.total_node_weight() - total).abs() < 1e-9 * total);
        let left: f64 = h.edges().map(|(_, e)| e.weight).sum();
        prop_assert!((left + removed_weight - total_edge).abs() < 1e-9 * total_edge);
        prop_assert!(h.is_connected());
        prop_assert!(map.validate(&g, &h).is_ok());
    }

    #[test]
    fn random_matching_is_maximal_and_half_optimal(n in 2usize..=10, extra in 0usize..12, seed: u64) {
        let g = connected_graph(n, extra, seed, false);
        let m = g.maximal_independent_edge_set(&mut substream(seed, &[2]));
        let mut covered = vec![false; n];
        for &id in &m {
            let e = g.edge(id).unwrap();
            prop_assert!(!covered[e.u] && !covered[e.v]);
            covered[e.u] = true;
            covered[e.v] = true;
        }
        for (_, e) in g.edges() {
            prop_assert!(covered[e.u] || covered[e.v], "not maximal");
        }
        prop_assert!(2 * m.len() >= max_matching_size(&g));
    }

    #[test]
    fn foster_sum_is_n_minus_one(n in 2usize..=50, extra in 0usize..60, seed: u64, weighted: bool) {
        let g = connected_graph(n, extra, seed, weighted);
        let s = PseudoinverseState::build(&g).unwrap();
        let total: f64 = g.edges().map(|(_, e)| e.weight * s.omega(&e).unwrap()).sum();
        prop_assert!((total - (n - 1) as f64).abs() < 1e-8 * n as f64);
    }

    #[test]
    fn pseudoinverse_identities(n in 2usize..20, extra in 0usize..20, seed: u64) {
        let g = connected_graph(n, extra, seed, true);
        let s = PseudoinverseState::build(&g).unwrap();
        let l = LaplacianMatrix::from_graph(&g).matrix;
        let pl = s.matrix() * &l;
        let expected = DMatrix::identity(n, n) - s.projector();
        prop_assert!((pl - expected).abs().max() < 1e-9);
        let winv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, s.node_weights().iter().map(|w| 1.0 / w)));
        let sym = s.matrix() * winv;
        prop_assert!((&sym - sym.transpose()).abs().max() < 1e-10);
    }

    #[test]
    fn incremental_updates_match_recompute(n in 3usize..=8, extra in 0usize..10, seed: u64) {
        let mut g = connected_graph(n, extra, seed, true);
        let mut s = PseudoinverseState::build(&g).unwrap();
        let mut rng = substream(seed, &[3]);
        for _ in 0..6 {
            if g.num_nodes() < 2 {
                break;
            }
            let ids: Vec<_> = g.edge_ids().collect();
            let id = ids[rng.random_range(0..ids.len())];
            let e = g.edge(id).unwrap();
            if rng.random::<bool>() {
                let factor = rng.random_range(0.3..3.0);
                s.woodbury_reweight(id, &e, (factor - 1.0) * e.weight).unwrap();
                g.set_edge_weight(id, e.weight * factor).unwrap();
            } else {
                let rec = g.contract_edge(id).unwrap();
                s.contraction_update(&rec).unwrap();
            }
            let fresh = PseudoinverseState::build(&g).unwrap();
            let scale = fresh.matrix().abs().max().max(1e-12);
            prop_assert!((s.matrix() - fresh.matrix()).abs().max() <= 1e-8 * scale);
        }
    }
}

#[test]
fn contraction_is_the_heavy_edge_limit() {
    let g = connected_graph(7, 6, 17, true);
    let (id, e) = g.edges().nth(2).unwrap();
    let mut heavy = g.clone();
    heavy.set_edge_weight(id, 1e6).unwrap();
    let limit = PseudoinverseState::build(&heavy).unwrap();
    let limit = lift(limit.matrix(), limit.order(), limit.node_weights(), &ContractionMap::identity(&g)).unwrap();

    let mut reduced = g.clone();
    let mut map = ContractionMap::identity(&g);
    let rec = reduced.contract_edge(id).unwrap();
    map.apply(&rec);
    let s = PseudoinverseState::build(&reduced).unwrap();
    let lifted = s.lift(&map).unwrap();
    let scale = lifted.matrix.abs().max();
    assert!((&lifted.matrix - &limit.matrix).abs().max() < 1e-5 * scale, "edge {e:?}");
}

#[test]
fn bridges_have_unit_leverage() {
    let mut g = connected_graph(12, 8, 5, false);
    g.add_node(12, 1.0).unwrap();
    g.add_edge(12, 3, 0.7).unwrap();
    let s = PseudoinverseState::build(&g).unwrap();
    let bridges = g.bridges();
    assert!(bridges.contains(&g.edge_between(3, 12).unwrap()));
    for (id, e) in g.edges() {
        let x = e.weight * s.omega(&e).unwrap();
        if bridges.contains(&id) {
            assert_relative_eq!(x, 1.0, max_relative = 1e-9);
        } else {
            assert!(x < 1.0 - 1e-9);
        }
    }
}
