//! Node-weighted Laplacians and their pseudoinverse.
//!
//! For node masses `W_n` and edge weights `W_e` the reduced Laplacian is
//! `L = W_n^-1 B^T W_e B`. Its pseudoinverse is `(L + J)^-1 - J` with the
//! weighted projector `J = 1 w_n^T / (1^T w_n)`, so that
//! `L^+ L = L L^+ = I - J`. Neither matrix is symmetric when node weights
//! differ, but `L^+ W_n^-1` is.
//!
//! [`PseudoinverseState`] keeps `L^+` for the current graph and updates it in
//! O(n^2) per reweight (Woodbury) or contraction (the infinite-weight limit of
//! the same update followed by a merge of the two identical rows).

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{ContractionMap, ContractionRecord, Edge, EdgeId, NodeId, WeightedGraph};

/// Full recompute after this many incremental updates.
pub const REBUILD_INTERVAL: usize = 512;

/// `1 + dw * omega` at or below this is treated as a disconnecting deletion.
pub const MIN_WOODBURY_DENOMINATOR: f64 = 1e-10;

/// Dense reduced Laplacian over the current nodes.
#[derive(Clone, Debug)]
pub struct LaplacianMatrix {
    pub matrix: DMatrix<f64>,
    pub order: Vec<NodeId>,
    pub node_weights: Vec<f64>,
}

impl LaplacianMatrix {
    pub fn from_graph(g: &WeightedGraph) -> Self {
        let (order, position) = node_index(g);
        let node_weights: Vec<f64> = g.node_weights().map(|(_, w)| w).collect();
        let mut matrix = combinatorial_laplacian_indexed(g, &position);
        for (i, w) in node_weights.iter().enumerate() {
            matrix.row_mut(i).scale_mut(1.0 / w);
        }
        Self {
            matrix,
            order,
            node_weights,
        }
    }

    /// `W_n L`, the symmetric form.
    pub fn mass_weighted(&self) -> DMatrix<f64> {
        let mut out = self.matrix.clone();
        for (i, w) in self.node_weights.iter().enumerate() {
            out.row_mut(i).scale_mut(*w);
        }
        out
    }
}

/// `B^T W_e B` ignoring node weights, in ascending node order.
pub fn combinatorial_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let (_, position) = node_index(g);
    combinatorial_laplacian_indexed(g, &position)
}

fn combinatorial_laplacian_indexed(
    g: &WeightedGraph,
    position: &HashMap<NodeId, usize>,
) -> DMatrix<f64> {
    let n = position.len();
    let mut l = DMatrix::zeros(n, n);
    for (_, e) in g.edges() {
        let (i, j) = (position[&e.u], position[&e.v]);
        l[(i, i)] += e.weight;
        l[(j, j)] += e.weight;
        l[(i, j)] -= e.weight;
        l[(j, i)] -= e.weight;
    }
    l
}

fn node_index(g: &WeightedGraph) -> (Vec<NodeId>, HashMap<NodeId, usize>) {
    let order: Vec<NodeId> = g.nodes().collect();
    let position = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    (order, position)
}

/// `J = 1 w^T / (1^T w)`.
pub fn weighted_projector(node_weights: &[f64]) -> DMatrix<f64> {
    let n = node_weights.len();
    let total: f64 = node_weights.iter().sum();
    DMatrix::from_fn(n, n, |_, j| node_weights[j] / total)
}

/// Dense pseudoinverse of the current reduced graph plus bookkeeping.
#[derive(Clone, Debug)]
pub struct PseudoinverseState {
    pinv: DMatrix<f64>,
    order: Vec<NodeId>,
    position: HashMap<NodeId, usize>,
    node_weights: Vec<f64>,
    estimated_error: f64,
    updates_since_rebuild: usize,
}

impl PseudoinverseState {
    /// Computes `(L + J)^-1 - J` for a connected graph.
    pub fn build(g: &WeightedGraph) -> Result<Self> {
        if g.num_nodes() == 0 {
            return Err(Error::InvalidParameter("graph has no nodes".into()));
        }
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        let lap = LaplacianMatrix::from_graph(g);
        let j = weighted_projector(&lap.node_weights);
        let shifted = &lap.matrix + &j;
        let inv = shifted.try_inverse().ok_or_else(|| {
            Error::Singular("L + J is not invertible (zero weights or disconnection)".into())
        })?;
        let position = lap
            .order
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i))
            .collect();
        Ok(Self {
            pinv: inv - j,
            order: lap.order,
            position,
            node_weights: lap.node_weights,
            estimated_error: 0.0,
            updates_since_rebuild: 0,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    pub fn position(&self, n: NodeId) -> Result<usize> {
        self.position.get(&n).copied().ok_or(Error::UnknownNode(n))
    }

    pub fn projector(&self) -> DMatrix<f64> {
        weighted_projector(&self.node_weights)
    }

    /// Running total of expected squared Frobenius error of the actions
    /// applied so far.
    pub fn estimated_error(&self) -> f64 {
        self.estimated_error
    }

    pub fn add_estimated_error(&mut self, amount: f64) {
        self.estimated_error += amount;
    }

    pub fn updates_since_rebuild(&self) -> usize {
        self.updates_since_rebuild
    }

    /// `y = L^+ W_n^-1 b` and `z^T = b^T L^+` for edge endpoints `(u, v)`.
    fn woodbury_vectors(&self, u: NodeId, v: NodeId) -> Result<(DVector<f64>, DVector<f64>)> {
        let (i, j) = (self.position(u)?, self.position(v)?);
        let (wi, wj) = (self.node_weights[i], self.node_weights[j]);
        let y = self.pinv.column(i) / wi - self.pinv.column(j) / wj;
        let z = (self.pinv.row(i) - self.pinv.row(j)).transpose();
        Ok((y, z))
    }

    /// `Omega_e = b^T L^+ W_n^-1 b`.
    pub fn omega(&self, edge: &Edge) -> Result<f64> {
        let (i, j) = (self.position(edge.u)?, self.position(edge.v)?);
        let (wi, wj) = (self.node_weights[i], self.node_weights[j]);
        let p = &self.pinv;
        Ok(p[(i, i)] / wi - p[(i, j)] / wj - p[(j, i)] / wi + p[(j, j)] / wj)
    }

    /// `m_e = w_e b^T L^+ L^+ W_n^-1 b`, the Frobenius norm of the lifted
    /// rank-one change direction.
    pub fn m_e(&self, edge: &Edge) -> Result<f64> {
        let (y, _) = self.woodbury_vectors(edge.u, edge.v)?;
        let norm: f64 = y
            .iter()
            .zip(&self.node_weights)
            .map(|(yi, w)| w * yi * yi)
            .sum();
        Ok(edge.weight * norm)
    }

    /// `(w_e Omega_e, m_e)` in one pass.
    pub fn edge_scalars(&self, edge: &Edge) -> Result<(f64, f64)> {
        let (y, _) = self.woodbury_vectors(edge.u, edge.v)?;
        let (i, j) = (self.position(edge.u)?, self.position(edge.v)?);
        let omega = y[i] - y[j];
        let norm: f64 = y
            .iter()
            .zip(&self.node_weights)
            .map(|(yi, w)| w * yi * yi)
            .sum();
        Ok((edge.weight * omega, edge.weight * norm))
    }

    /// Rank-one update for changing the weight of `edge` by `delta_w`.
    /// Fails when the change would disconnect the graph.
    pub fn woodbury_reweight(&mut self, id: EdgeId, edge: &Edge, delta_w: f64) -> Result<()> {
        if delta_w == 0.0 {
            return Ok(());
        }
        let (y, z) = self.woodbury_vectors(edge.u, edge.v)?;
        let (i, j) = (self.position(edge.u)?, self.position(edge.v)?);
        let omega = y[i] - y[j];
        let denominator = 1.0 + delta_w * omega;
        if denominator <= MIN_WOODBURY_DENOMINATOR {
            return Err(Error::BridgeDeletion {
                edge: id,
                denominator,
            });
        }
        self.pinv.ger(-delta_w / denominator, &y, &z, 1.0);
        self.updates_since_rebuild += 1;
        Ok(())
    }

    /// Updates the state after `record` was applied to the graph: the
    /// infinite-weight limit of the Woodbury update makes the two endpoint
    /// rows identical, then the removed node is folded into the survivor.
    pub fn contraction_update(&mut self, record: &ContractionRecord) -> Result<()> {
        let s = self.position(record.survivor)?;
        let r = self.position(record.removed)?;
        if self.dim() == 2 {
            self.pinv = DMatrix::zeros(1, 1);
        } else {
            let (y, z) = self.woodbury_vectors(record.survivor, record.removed)?;
            let omega = y[s] - y[r];
            if omega <= 0.0 {
                return Err(Error::Singular(format!(
                    "non-positive effective resistance {omega:e} on contracted edge {}",
                    record.edge
                )));
            }
            self.pinv.ger(-1.0 / omega, &y, &z, 1.0);
            let removed_col = self.pinv.column(r).clone_owned();
            let mut survivor_col = self.pinv.column_mut(s);
            survivor_col += removed_col;
            let p = std::mem::replace(&mut self.pinv, DMatrix::zeros(0, 0));
            self.pinv = p.remove_row(r).remove_column(r);
        }
        self.node_weights[s] += self.node_weights[r];
        self.node_weights.remove(r);
        self.order.remove(r);
        self.position = self
            .order
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i))
            .collect();
        self.updates_since_rebuild += 1;
        Ok(())
    }

    /// Recomputes from scratch, keeping the error total.
    pub fn rebuild(&mut self, g: &WeightedGraph) -> Result<()> {
        let err = self.estimated_error;
        *self = Self::build(g)?;
        self.estimated_error = err;
        Ok(())
    }

    pub fn maybe_rebuild(&mut self, g: &WeightedGraph) -> Result<bool> {
        if self.updates_since_rebuild >= REBUILD_INTERVAL {
            self.rebuild(g)?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Lifted pseudoinverse `C^T L^+ W_n^-1 C` on the original nodes.
    pub fn lift(&self, map: &ContractionMap) -> Result<LiftedOperator> {
        lift(&self.pinv, &self.order, &self.node_weights, map)
    }
}

/// A reduced operator expressed on the original node set.
#[derive(Clone, Debug)]
pub struct LiftedOperator {
    pub matrix: DMatrix<f64>,
    /// Original node ids, ascending.
    pub order: Vec<NodeId>,
}

/// `C^T A W_n^-1 C` for a reduced matrix `A` over `order` with masses
/// `node_weights`: entry `(i, j)` is `A[s(i), s(j)] / w[s(j)]`.
pub fn lift(
    reduced: &DMatrix<f64>,
    order: &[NodeId],
    node_weights: &[f64],
    map: &ContractionMap,
) -> Result<LiftedOperator> {
    if reduced.nrows() != order.len() || reduced.ncols() != order.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but order has {} nodes",
            reduced.nrows(),
            reduced.ncols(),
            order.len()
        )));
    }
    if node_weights.len() != order.len() {
        return Err(Error::DimensionMismatch("node weight count".into()));
    }
    let position: HashMap<NodeId, usize> =
        order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let originals: Vec<NodeId> = map.originals().collect();
    let index: Vec<usize> = originals
        .iter()
        .map(|&o| {
            let sup = map.supernode(o).ok_or(Error::UnknownNode(o))?;
            position.get(&sup).copied().ok_or(Error::UnknownNode(sup))
        })
        .collect::<Result<_>>()?;
    let n = originals.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        reduced[(index[i], index[j])] / node_weights[index[j]]
    });
    Ok(LiftedOperator {
        matrix,
        order: originals,
    })
}
