//! Johnson–Lindenstrauss sketches of `m_e` and `Omega_e`.
//!
//! With the symmetrised Laplacian `L^ = W_n^-1/2 (B^T W_e B) W_n^-1/2`,
//!
//! ```text
//! m_e     = w_e || L^+ W_n^-1/2 b_e ||^2
//! Omega_e =     || W_e^1/2 B W_n^-1/2 L^+ W_n^-1/2 b_e ||^2
//! ```
//!
//! Both are squared norms of columns of a matrix product, so projecting with
//! a random `k x n` (or `k x |E|`) matrix and solving `L^ z_i = q_i` for each
//! of the `k` rows gives every edge's estimate from two columns of `Z`.
//! Any SPD-on-range iterative solver meeting the residual contract works; a
//! Jacobi-preconditioned conjugate gradient is provided.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Edge, NodeId, WeightedGraph};

pub const DEFAULT_DIMENSION_CONSTANT: f64 = 4.0;
pub const MAX_PROJECTION_ITERATIONS: usize = 100;

/// `k = ceil(c ln n / eps^2)`, at least 1.
pub fn target_dimension(n: usize, epsilon: f64, c: f64) -> usize {
    let n = n.max(2) as f64;
    ((c * n.ln() / (epsilon * epsilon)).ceil() as usize).max(1)
}

/// Random `k x n` projection whose rows are orthogonal to `sqrt(w_n)`.
#[derive(Clone, Debug)]
pub struct ProjectionMatrix {
    pub matrix: DMatrix<f64>,
    pub epsilon: f64,
}

impl ProjectionMatrix {
    pub fn k(&self) -> usize {
        self.matrix.nrows()
    }

    /// Rademacher entries `+-1/sqrt(k)`, then alternately rescale columns to
    /// unit length and remove each row's `sqrt(w_n)`-weighted mean, until all
    /// column norms are within `epsilon / 4` of one.
    pub fn random<R: Rng + ?Sized>(node_weights: &[f64], k: usize, epsilon: f64, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("projection dimension k must be >= 1".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
        }
        let n = node_weights.len();
        let scale = 1.0 / (k as f64).sqrt();
        let mut q = DMatrix::from_fn(k, n, |_, _| if rng.random::<bool>() { scale } else { -scale });
        let sqrt_w: Vec<f64> = node_weights.iter().map(|w| w.sqrt()).collect();
        let sqrt_sum: f64 = sqrt_w.iter().sum();
        let tolerance = epsilon / 4.0;
        for _ in 0..MAX_PROJECTION_ITERATIONS {
            for mut col in q.column_iter_mut() {
                let norm = col.norm();
                if norm > 0.0 {
                    col /= norm;
                }
            }
            for mut row in q.row_iter_mut() {
                let mean: f64 = row.iter().zip(&sqrt_w).map(|(a, s)| a * s).sum::<f64>() / sqrt_sum;
                row.add_scalar_mut(-mean);
            }
            let worst = q
                .column_iter()
                .map(|c| (c.norm() - 1.0).abs())
                .fold(0.0, f64::max);
            if worst <= tolerance {
                return Ok(Self { matrix: q, epsilon });
            }
        }
        Err(Error::ProjectionNotConverged(MAX_PROJECTION_ITERATIONS))
    }

    /// Deterministic `(n-1) x n` orthonormal basis of the complement of
    /// `sqrt(w_n)`; projecting with it is an isometry on that complement.
    pub fn orthonormal_complement(node_weights: &[f64]) -> Self {
        let n = node_weights.len();
        let s = DVector::from_iterator(n, node_weights.iter().map(|w| w.sqrt())).normalize();
        let mut basis: Vec<DVector<f64>> = vec![s];
        let mut rows = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dot(&v);
                    v -= b * c;
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                v /= norm;
                basis.push(v.clone());
                rows.push(v.transpose());
            }
            if rows.len() + 1 == n {
                break;
            }
        }
        let matrix = if rows.is_empty() {
            DMatrix::zeros(0, n)
        } else {
            DMatrix::from_rows(&rows)
        };
        Self { matrix, epsilon: 0.0 }
    }
}

/// `W_n^-1/2 (B^T W_e B) W_n^-1/2` in adjacency form.
#[derive(Clone, Debug)]
pub struct SymmetrizedLaplacian {
    order: Vec<NodeId>,
    position: HashMap<NodeId, usize>,
    inv_sqrt_w: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
    diagonal: Vec<f64>,
}

impl SymmetrizedLaplacian {
    pub fn new(g: &WeightedGraph) -> Self {
        let order: Vec<NodeId> = g.nodes().collect();
        let position: HashMap<NodeId, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let inv_sqrt_w: Vec<f64> = g.node_weights().map(|(_, w)| 1.0 / w.sqrt()).collect();
        let mut neighbors = vec![Vec::new(); order.len()];
        let mut diagonal = vec![0.0; order.len()];
        for (_, e) in g.edges() {
            let (i, j) = (position[&e.u], position[&e.v]);
            neighbors[i].push((j, e.weight));
            neighbors[j].push((i, e.weight));
            diagonal[i] += e.weight * inv_sqrt_w[i] * inv_sqrt_w[i];
            diagonal[j] += e.weight * inv_sqrt_w[j] * inv_sqrt_w[j];
        }
        Self {
            order,
            position,
            inv_sqrt_w,
            neighbors,
            diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn position(&self, n: NodeId) -> Result<usize> {
        self.position.get(&n).copied().ok_or(Error::UnknownNode(n))
    }

    pub fn inv_sqrt_weights(&self) -> &[f64] {
        &self.inv_sqrt_w
    }

    /// Unit vector along the kernel, `sqrt(w_n) / ||sqrt(w_n)||`.
    pub fn kernel(&self) -> Vec<f64> {
        let s: Vec<f64> = self.inv_sqrt_w.iter().map(|v| 1.0 / v).collect();
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        s.into_iter().map(|v| v / norm).collect()
    }

    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            let yi = z[i] * self.inv_sqrt_w[i];
            let acc: f64 = nbrs
                .iter()
                .map(|&(j, w)| w * (yi - z[j] * self.inv_sqrt_w[j]))
                .sum();
            out[i] = acc * self.inv_sqrt_w[i];
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solver for `L^ z = rhs` with `rhs` orthogonal to the kernel; must return
/// the kernel-free solution with `||L^ z - rhs|| <= tolerance * ||rhs||`.
pub trait PsdSolver: Sync {
    fn tolerance(&self) -> f64;
    fn solve(&self, op: &SymmetrizedLaplacian, rhs: &[f64]) -> Result<(Vec<f64>, SolveStats)>;
}

/// Jacobi-preconditioned conjugate gradient.
#[derive(Clone, Copy, Debug)]
pub struct ConjugateGradient {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ConjugateGradient {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 20_000,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_component(v: &mut [f64], unit: &[f64]) {
    let c = dot(v, unit);
    v.iter_mut().zip(unit).for_each(|(a, u)| *a -= c * u);
}

impl PsdSolver for ConjugateGradient {
    fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn solve(&self, op: &SymmetrizedLaplacian, rhs: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let n = op.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch(format!("rhs has {} entries, operator {n}", rhs.len())));
        }
        let kernel = op.kernel();
        let mut b = rhs.to_vec();
        remove_component(&mut b, &kernel);
        let b_norm = dot(&b, &b).sqrt();
        let mut x = vec![0.0; n];
        if b_norm == 0.0 {
            return Ok((
                x,
                SolveStats {
                    iterations: 0,
                    relative_residual: 0.0,
                },
            ));
        }
        let precond: Vec<f64> = op
            .diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        let mut r = b.clone();
        let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, p)| a * p).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        let mut residual = 1.0;
        for it in 0..self.max_iterations {
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
            r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
            residual = dot(&r, &r).sqrt() / b_norm;
            if residual <= self.tolerance {
                remove_component(&mut x, &kernel);
                return Ok((
                    x,
                    SolveStats {
                        iterations: it + 1,
                        relative_residual: residual,
                    },
                ));
            }
            z.iter_mut()
                .zip(r.iter().zip(&precond))
                .for_each(|(zi, (ri, pi))| *zi = ri * pi);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        Err(Error::SolverNotConverged {
            residual,
            iterations: self.max_iterations,
        })
    }
}

fn solve_rows<S: PsdSolver>(op: &SymmetrizedLaplacian, rhs: &DMatrix<f64>, solver: &S) -> Result<(DMatrix<f64>, f64)> {
    let rows: Vec<(Vec<f64>, SolveStats)> = (0..rhs.nrows())
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = rhs.row(i).iter().copied().collect();
            solver.solve(op, &row)
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|(_, s)| s.relative_residual).fold(0.0, f64::max);
    let n = op.dim();
    let z = DMatrix::from_fn(rhs.nrows(), n, |i, j| rows[i].0[j]);
    Ok((z, worst))
}

/// `Z = Q L^+`, one solve per projection row.
#[derive(Clone, Debug)]
pub struct SketchState {
    z: DMatrix<f64>,
    op: SymmetrizedLaplacian,
    tolerance: f64,
    worst_residual: f64,
}

impl SketchState {
    pub fn build<S: PsdSolver>(g: &WeightedGraph, projection: &ProjectionMatrix, solver: &S) -> Result<Self> {
        let op = SymmetrizedLaplacian::new(g);
        if projection.matrix.ncols() != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "projection has {} columns, graph {} nodes",
                projection.matrix.ncols(),
                op.dim()
            )));
        }
        let (z, worst_residual) = solve_rows(&op, &projection.matrix, solver)?;
        Ok(Self {
            z,
            op,
            tolerance: solver.tolerance(),
            worst_residual,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Largest relative residual over the `k` solves.
    pub fn worst_residual(&self) -> f64 {
        self.worst_residual
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// `w_e || Z W_n^-1/2 b_e ||^2`.
    pub fn approx_m_e(&self, edge: &Edge) -> Result<f64> {
        Ok(edge.weight * column_difference_norm2(&self.z, &self.op, edge)?)
    }
}

fn column_difference_norm2(z: &DMatrix<f64>, op: &SymmetrizedLaplacian, edge: &Edge) -> Result<f64> {
    let (i, j) = (op.position(edge.u)?, op.position(edge.v)?);
    let (si, sj) = (op.inv_sqrt_w[i], op.inv_sqrt_w[j]);
    Ok(z
        .row_iter()
        .map(|row| {
            let d = row[i] * si - row[j] * sj;
            d * d
        })
        .sum())
}

/// Sketch of `Omega_e` for every edge from `k` solves against the projected
/// weighted incidence matrix.
#[derive(Clone, Debug)]
pub struct OmegaSketch {
    z: DMatrix<f64>,
    op: SymmetrizedLaplacian,
    worst_residual: f64,
}

impl OmegaSketch {
    pub fn build<R: Rng + ?Sized, S: PsdSolver>(g: &WeightedGraph, k: usize, solver: &S, rng: &mut R) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("sketch dimension k must be >= 1".into()));
        }
        let op = SymmetrizedLaplacian::new(g);
        let scale = 1.0 / (k as f64).sqrt();
        let mut rhs = DMatrix::zeros(k, op.dim());
        for (_, e) in g.edges() {
            let (a, b) = (op.position(e.u)?, op.position(e.v)?);
            let sw = e.weight.sqrt();
            for i in 0..k {
                let s = if rng.random::<bool>() { scale } else { -scale };
                rhs[(i, a)] += s * sw * op.inv_sqrt_w[a];
                rhs[(i, b)] -= s * sw * op.inv_sqrt_w[b];
            }
        }
        let (z, worst_residual) = solve_rows(&op, &rhs, solver)?;
        Ok(Self { z, op, worst_residual })
    }

    pub fn worst_residual(&self) -> f64 {
        self.worst_residual
    }

    pub fn approx_omega(&self, edge: &Edge) -> Result<f64> {
        column_difference_norm2(&self.z, &self.op, edge)
    }
}
