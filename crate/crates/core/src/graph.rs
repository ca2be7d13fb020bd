//! Weighted undirected multigraph with node masses and contraction.
//!
//! Parallel edges never coexist: inserting or contracting onto an existing
//! node pair sums the weights into the edge that is already there. Node and
//! edge identifiers are stable across mutations, and a contraction keeps the
//! smaller endpoint id as the supernode.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

/// An undirected edge stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: f64,
}

impl Edge {
    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Signed incidence vector `b_e`: `+1` on `plus`, `-1` on `minus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IncidenceVector {
    pub plus: NodeId,
    pub minus: NodeId,
}

impl IncidenceVector {
    /// Dense form over `order`, where `order[i]` is the node at position `i`.
    pub fn to_dense(&self, order: &[NodeId]) -> Vec<f64> {
        order
            .iter()
            .map(|&n| {
                if n == self.plus {
                    1.0
                } else if n == self.minus {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// An edge absorbed into an existing edge during contraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergedEdge {
    pub neighbor: NodeId,
    pub kept: EdgeId,
    pub absorbed: EdgeId,
}

/// What `contract_edge` did to the graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionRecord {
    pub edge: EdgeId,
    pub survivor: NodeId,
    pub removed: NodeId,
    pub contracted_weight: f64,
    /// Edges of the removed node that became parallel and were summed.
    pub merged: Vec<MergedEdge>,
    /// Edges of the removed node re-attached to the survivor unchanged.
    pub reattached: Vec<EdgeId>,
    /// The graph now has a single node.
    pub single_node: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedGraph {
    node_weight: BTreeMap<NodeId, f64>,
    edges: BTreeMap<EdgeId, Edge>,
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, EdgeId>>,
    next_edge: EdgeId,
}

fn check_weight(w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight(w))
    }
}

impl WeightedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Graph on nodes `0..n` with unit node weights and no edges.
    pub fn with_nodes(n: usize) -> Self {
        let mut g = Self::new();
        for i in 0..n {
            g.node_weight.insert(i, 1.0);
            g.adjacency.insert(i, BTreeMap::new());
        }
        g
    }

    /// Builds a unit-node-weight graph from `(u, v, w)` triples.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId, f64)]) -> Result<Self> {
        let mut g = Self::with_nodes(n);
        for &(u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    /// Inserts a node or overwrites the weight of an existing one.
    pub fn add_node(&mut self, id: NodeId, weight: f64) -> Result<()> {
        check_weight(weight)?;
        self.node_weight.insert(id, weight);
        self.adjacency.entry(id).or_default();
        Ok(())
    }

    pub fn set_node_weight(&mut self, id: NodeId, weight: f64) -> Result<()> {
        check_weight(weight)?;
        match self.node_weight.get_mut(&id) {
            Some(w) => {
                *w = weight;
                Ok(())
            }
            None => Err(Error::UnknownNode(id)),
        }
    }

    /// Adds an edge, creating missing endpoints with unit weight. An edge on
    /// an existing pair is merged by summing weights and keeps its id.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, weight: f64) -> Result<EdgeId> {
        check_weight(weight)?;
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        for n in [a, b] {
            if !self.node_weight.contains_key(&n) {
                self.add_node(n, 1.0)?;
            }
        }
        if let Some(id) = self.edge_between(a, b) {
            self.edges.get_mut(&id).expect("indexed edge").weight += weight;
            return Ok(id);
        }
        let id = self.next_edge;
        self.next_edge += 1;
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        self.edges.insert(id, Edge { u, v, weight });
        self.adjacency.get_mut(&u).unwrap().insert(v, id);
        self.adjacency.get_mut(&v).unwrap().insert(u, id);
        Ok(id)
    }

    pub fn num_nodes(&self) -> usize {
        self.node_weight.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Node ids in ascending order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_weight.keys().copied()
    }

    pub fn node_weights(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.node_weight.iter().map(|(&n, &w)| (n, w))
    }

    pub fn node_weight(&self, n: NodeId) -> Option<f64> {
        self.node_weight.get(&n).copied()
    }

    pub fn has_node(&self, n: NodeId) -> bool {
        self.node_weight.contains_key(&n)
    }

    pub fn total_node_weight(&self) -> f64 {
        self.node_weight.values().sum()
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, Edge)> + '_ {
        self.edges.iter().map(|(&id, &e)| (id, e))
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.keys().copied()
    }

    pub fn edge(&self, e: EdgeId) -> Result<Edge> {
        self.edges.get(&e).copied().ok_or(Error::UnknownEdge(e))
    }

    pub fn has_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.adjacency.get(&a)?.get(&b).copied()
    }

    /// `(neighbor, edge)` pairs in ascending neighbor order.
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = (NodeId, EdgeId)> + '_ {
        self.adjacency
            .get(&n)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&k, &e)| (k, e)))
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adjacency.get(&n).map_or(0, |m| m.len())
    }

    pub fn incidence(&self, e: EdgeId) -> Result<IncidenceVector> {
        let edge = self.edge(e)?;
        Ok(IncidenceVector {
            plus: edge.u,
            minus: edge.v,
        })
    }

    pub fn set_edge_weight(&mut self, e: EdgeId, weight: f64) -> Result<()> {
        check_weight(weight)?;
        match self.edges.get_mut(&e) {
            Some(edge) => {
                edge.weight = weight;
                Ok(())
            }
            None => Err(Error::UnknownEdge(e)),
        }
    }

    pub fn remove_edge(&mut self, e: EdgeId) -> Result<Edge> {
        let edge = self.edges.remove(&e).ok_or(Error::UnknownEdge(e))?;
        self.adjacency.get_mut(&edge.u).unwrap().remove(&edge.v);
        self.adjacency.get_mut(&edge.v).unwrap().remove(&edge.u);
        Ok(edge)
    }

    /// Merges the endpoints of `e` into the smaller id. Node weights add,
    /// edges of the removed endpoint move to the survivor, and any pair made
    /// parallel is merged by summing weights into the survivor's edge.
    pub fn contract_edge(&mut self, e: EdgeId) -> Result<ContractionRecord> {
        let edge = self.remove_edge(e)?;
        let (survivor, removed) = (edge.u, edge.v);
        let removed_weight = self.node_weight.remove(&removed).expect("endpoint");
        *self.node_weight.get_mut(&survivor).unwrap() += removed_weight;

        let moved = self.adjacency.remove(&removed).unwrap_or_default();
        let mut merged = Vec::new();
        let mut reattached = Vec::new();
        for (nbr, id) in moved {
            self.adjacency.get_mut(&nbr).unwrap().remove(&removed);
            let moving = self.edges.remove(&id).expect("indexed edge");
            if let Some(kept) = self.edge_between(survivor, nbr) {
                self.edges.get_mut(&kept).unwrap().weight += moving.weight;
                merged.push(MergedEdge {
                    neighbor: nbr,
                    kept,
                    absorbed: id,
                });
            } else {
                let (u, v) = if survivor < nbr {
                    (survivor, nbr)
                } else {
                    (nbr, survivor)
                };
                self.edges.insert(
                    id,
                    Edge {
                        u,
                        v,
                        weight: moving.weight,
                    },
                );
                self.adjacency.get_mut(&survivor).unwrap().insert(nbr, id);
                self.adjacency.get_mut(&nbr).unwrap().insert(survivor, id);
                reattached.push(id);
            }
        }
        Ok(ContractionRecord {
            edge: e,
            survivor,
            removed,
            contracted_weight: edge.weight,
            merged,
            reattached,
            single_node: self.num_nodes() == 1,
        })
    }

    /// Number of triangles containing `e` (common neighbours of its endpoints).
    pub fn triangle_count(&self, e: EdgeId) -> Result<usize> {
        let edge = self.edge(e)?;
        let (a, b) = (&self.adjacency[&edge.u], &self.adjacency[&edge.v]);
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        Ok(small.keys().filter(|k| large.contains_key(k)).count())
    }

    /// Connected-component label per node, labels dense from 0.
    pub fn components(&self) -> BTreeMap<NodeId, usize> {
        let mut label = BTreeMap::new();
        let mut next = 0;
        for start in self.nodes() {
            if label.contains_key(&start) {
                continue;
            }
            let mut stack = vec![start];
            label.insert(start, next);
            while let Some(n) = stack.pop() {
                for (m, _) in self.neighbors(n) {
                    if !label.contains_key(&m) {
                        label.insert(m, next);
                        stack.push(m);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn num_components(&self) -> usize {
        self.components().values().max().map_or(0, |m| m + 1)
    }

    /// True iff the graph has at most one connected component.
    pub fn is_connected(&self) -> bool {
        self.num_components() <= 1
    }

    /// Edges whose removal disconnects their component.
    pub fn bridges(&self) -> BTreeSet<EdgeId> {
        let mut disc: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut low: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut out = BTreeSet::new();
        let mut time = 0;
        for root in self.nodes() {
            if disc.contains_key(&root) {
                continue;
            }
            // (node, parent edge, neighbour list, cursor)
            let mut stack: Vec<(NodeId, Option<EdgeId>, Vec<(NodeId, EdgeId)>, usize)> = Vec::new();
            disc.insert(root, time);
            low.insert(root, time);
            time += 1;
            stack.push((root, None, self.neighbors(root).collect(), 0));
            while let Some(top) = stack.last_mut() {
                let (node, parent_edge) = (top.0, top.1);
                if top.3 < top.2.len() {
                    let (nbr, eid) = top.2[top.3];
                    top.3 += 1;
                    if Some(eid) == parent_edge {
                        continue;
                    }
                    if let Some(&d) = disc.get(&nbr) {
                        let l = low.get_mut(&node).unwrap();
                        *l = (*l).min(d);
                    } else {
                        disc.insert(nbr, time);
                        low.insert(nbr, time);
                        time += 1;
                        stack.push((nbr, Some(eid), self.neighbors(nbr).collect(), 0));
                    }
                } else {
                    stack.pop();
                    if let Some(parent) = stack.last() {
                        let child_low = low[&node];
                        let p = parent.0;
                        let pl = low.get_mut(&p).unwrap();
                        *pl = (*pl).min(child_low);
                        if child_low > disc[&p] {
                            out.insert(parent_edge.unwrap());
                        }
                    }
                }
            }
        }
        out
    }

    /// Random maximal matching: visit nodes in random order and pair each
    /// unmatched node with a uniformly chosen unmatched neighbour.
    pub fn maximal_independent_edge_set<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<EdgeId> {
        let mut order: Vec<NodeId> = self.nodes().collect();
        order.shuffle(rng);
        let mut matched = BTreeSet::new();
        let mut out = Vec::new();
        for n in order {
            if matched.contains(&n) {
                continue;
            }
            let available: Vec<(NodeId, EdgeId)> = self
                .neighbors(n)
                .filter(|(m, _)| !matched.contains(m))
                .collect();
            if available.is_empty() {
                continue;
            }
            let (m, e) = available[rng.random_range(0..available.len())];
            matched.insert(n);
            matched.insert(m);
            out.push(e);
        }
        out
    }
}

/// Partition of the original nodes into supernodes of a reduced graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionMap {
    supernode_of: BTreeMap<NodeId, NodeId>,
    members: BTreeMap<NodeId, Vec<NodeId>>,
}

impl ContractionMap {
    pub fn identity(g: &WeightedGraph) -> Self {
        Self {
            supernode_of: g.nodes().map(|n| (n, n)).collect(),
            members: g.nodes().map(|n| (n, vec![n])).collect(),
        }
    }

    /// Builds a map from `(original, supernode)` pairs.
    pub fn from_pairs<I: IntoIterator<Item = (NodeId, NodeId)>>(pairs: I) -> Self {
        let mut supernode_of = BTreeMap::new();
        let mut members: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (orig, sup) in pairs {
            supernode_of.insert(orig, sup);
            members.entry(sup).or_default().push(orig);
        }
        for m in members.values_mut() {
            m.sort_unstable();
        }
        Self {
            supernode_of,
            members,
        }
    }

    pub fn apply(&mut self, record: &ContractionRecord) {
        let moved = self.members.remove(&record.removed).unwrap_or_default();
        for &orig in &moved {
            self.supernode_of.insert(orig, record.survivor);
        }
        let target = self.members.entry(record.survivor).or_default();
        target.extend(moved);
        target.sort_unstable();
    }

    pub fn supernode(&self, original: NodeId) -> Option<NodeId> {
        self.supernode_of.get(&original).copied()
    }

    pub fn members(&self, supernode: NodeId) -> &[NodeId] {
        self.members.get(&supernode).map_or(&[], |v| v.as_slice())
    }

    /// Original nodes in ascending order.
    pub fn originals(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.supernode_of.keys().copied()
    }

    pub fn supernodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.keys().copied()
    }

    pub fn num_original(&self) -> usize {
        self.supernode_of.len()
    }

    pub fn num_supernodes(&self) -> usize {
        self.members.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.supernode_of.iter().map(|(&o, &s)| (o, s))
    }

    /// Checks that the map partitions `original`'s nodes onto `reduced`'s
    /// nodes and that every supernode weighs the sum of its members.
    pub fn validate(&self, original: &WeightedGraph, reduced: &WeightedGraph) -> Result<()> {
        if !original.nodes().eq(self.originals()) {
            return Err(Error::DimensionMismatch(
                "map does not cover the original node set".into(),
            ));
        }
        if !reduced.nodes().eq(self.supernodes()) {
            return Err(Error::DimensionMismatch(
                "map supernodes differ from the reduced node set".into(),
            ));
        }
        for (sup, members) in &self.members {
            let total: f64 = members
                .iter()
                .map(|&m| original.node_weight(m).unwrap())
                .sum();
            let w = reduced.node_weight(*sup).unwrap();
            if (total - w).abs() > 1e-9 * total.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "supernode {sup} weighs {w} but its members sum to {total}"
                )));
            }
        }
        Ok(())
    }
}
