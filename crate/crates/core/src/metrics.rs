//! Similarity measures between an original operator and a reduced one
//! expressed on the original nodes.
//!
//! `d_x(L0, L1) = acosh(1 + ||(L0 - L1) x||^2 ||x||^2 / (2 (x'L0x)(x'L1x)))`
//! is a fractional error that is symmetric, scale invariant and bounded
//! below by `|ln(x'L0x / x'L1x)|`. Supremum values reported here are always
//! maxima over an explicit vector set, hence lower bounds of the true one.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ContractionMap, WeightedGraph};
use crate::laplacian::{combinatorial_laplacian, lift, LaplacianMatrix, PseudoinverseState};

/// Quadratic forms at or below this fraction of `||A|| ||x||^2` count as zero.
const QUADRATIC_FORM_FLOOR: f64 = 1e-13;
/// Relative eigenvalue cutoff separating the kernel from the spectrum.
const KERNEL_CUTOFF: f64 = 1e-9;

/// Removes the component along the all-ones vector in the inner product
/// weighted by `node_weights` (unweighted when `None`).
pub fn project_out_constant(x: &DVector<f64>, node_weights: Option<&[f64]>) -> DVector<f64> {
    let (num, den) = match node_weights {
        Some(w) => (x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>(), w.iter().sum::<f64>()),
        None => (x.sum(), x.len() as f64),
    };
    x.add_scalar(-num / den)
}

/// `acosh(1 + t)` without cancellation for small `t`.
fn acosh_one_plus(t: f64) -> f64 {
    (t + (t * (t + 2.0)).sqrt()).ln_1p()
}

pub fn hyperbolic_distance_x(l0: &DMatrix<f64>, l1: &DMatrix<f64>, x: &DVector<f64>) -> Result<f64> {
    if l0.shape() != l1.shape() || l0.ncols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "operators {:?} and {:?} against a vector of length {}",
            l0.shape(),
            l1.shape(),
            x.len()
        )));
    }
    let xx = x.norm_squared();
    let l0x = l0 * x;
    let l1x = l1 * x;
    let a = x.dot(&l0x);
    let b = x.dot(&l1x);
    let floor0 = QUADRATIC_FORM_FLOOR * l0.norm() * xx;
    let floor1 = QUADRATIC_FORM_FLOOR * l1.norm() * xx;
    if !(a > floor0) || !(b > floor1) {
        return Err(Error::InvalidParameter(format!(
            "quadratic forms must be positive (got {a:e} and {b:e})"
        )));
    }
    let diff = (l0x - l1x).norm_squared();
    Ok(acosh_one_plus(diff * xx / (2.0 * a * b)))
}

/// Largest `d_x` over the vectors on which both quadratic forms are positive.
pub fn hyperbolic_distance_sup(l0: &DMatrix<f64>, l1: &DMatrix<f64>, vectors: &[DVector<f64>]) -> Result<f64> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter("empty vector set".into()));
    }
    let mut best: Option<f64> = None;
    for x in vectors {
        match hyperbolic_distance_x(l0, l1, x) {
            Ok(d) => best = Some(best.map_or(d, |b| b.max(d))),
            Err(Error::InvalidParameter(_)) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no vector has positive quadratic forms".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaViolation {
    pub index: usize,
    pub d_x: f64,
    pub ratio: f64,
}

/// Outcome of checking `d_x <= ln sigma  =>  1/sigma <= x'L1x / x'L0x <= sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub sigma: f64,
    pub samples: usize,
    /// Vectors with `d_x <= ln sigma`.
    pub premise_count: usize,
    /// Vectors skipped because a quadratic form vanished.
    pub degenerate: usize,
    pub violations: Vec<SigmaViolation>,
}

impl SigmaReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_sigma_approx(
    l0: &DMatrix<f64>,
    l1: &DMatrix<f64>,
    sigma: f64,
    vectors: &[DVector<f64>],
) -> Result<SigmaReport> {
    if !(sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be >= 1")));
    }
    let ln_sigma = sigma.ln();
    // Rounding slack on both comparisons.
    let slack = 1e-12;
    let mut report = SigmaReport {
        sigma,
        samples: vectors.len(),
        premise_count: 0,
        degenerate: 0,
        violations: Vec::new(),
    };
    for (index, x) in vectors.iter().enumerate() {
        let d_x = match hyperbolic_distance_x(l0, l1, x) {
            Ok(d) => d,
            Err(Error::InvalidParameter(_)) => {
                report.degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if d_x > ln_sigma + slack {
            continue;
        }
        report.premise_count += 1;
        let ratio = x.dot(&(l1 * x)) / x.dot(&(l0 * x));
        if ratio > sigma * (1.0 + slack) || ratio < (1.0 - slack) / sigma {
            report.violations.push(SigmaViolation { index, d_x, ratio });
        }
    }
    Ok(report)
}

/// Ascending eigenvalues and matching eigenvectors of `(A + A') / 2`.
pub fn sorted_eigen(a: &DMatrix<f64>) -> (Vec<f64>, Vec<DVector<f64>>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = idx.iter().map(|&i| eig.eigenvectors.column(i).clone_owned()).collect();
    (values, vectors)
}

/// Eigenvalues above the kernel cutoff, ascending.
pub fn nontrivial_spectrum(a: &DMatrix<f64>) -> Vec<f64> {
    let (values, _) = sorted_eigen(a);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values.into_iter().filter(|&v| v > KERNEL_CUTOFF * top).collect()
}

/// Mean of `|l~_i - l_i| / l_i` over the `k` lowest nontrivial eigenvalues.
/// Zero eigenvalues of either operator are excluded before pairing.
pub fn eigen_relative_error(l: &DMatrix<f64>, l_tilde: &DMatrix<f64>, k: usize) -> Result<f64> {
    if l.shape() != l_tilde.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", l.shape(), l_tilde.shape())));
    }
    let n = l.nrows();
    if k == 0 || k + 1 >= n {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in [1, n - 1) for n = {n}")));
    }
    let a = nontrivial_spectrum(l);
    let b = nontrivial_spectrum(l_tilde);
    if a.len() < k || b.len() < k {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the nontrivial spectrum ({} and {})",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(&b).take(k).map(|(x, y)| (y - x).abs() / x).sum::<f64>() / k as f64)
}

/// `x' dL x` for a unit vector `x`.
pub fn first_order_eigen_shift(delta: &DMatrix<f64>, x: &DVector<f64>) -> Result<f64> {
    if delta.nrows() != x.len() || delta.ncols() != x.len() {
        return Err(Error::DimensionMismatch("operator and vector sizes differ".into()));
    }
    if (x.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("vector norm {} is not 1", x.norm())));
    }
    Ok(x.dot(&(delta * x)))
}

pub fn frobenius_error_squared(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok((a - b).norm_squared())
}

/// Moore-Penrose pseudoinverse of a symmetric matrix; handles any number of
/// components.
pub fn symmetric_pseudoinverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = sorted_eigen(a);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (v, x) in values.iter().zip(&vectors) {
        if v.abs() > KERNEL_CUTOFF * top {
            out.ger(1.0 / v, x, x, 1.0);
        }
    }
    out
}

/// Eigenvector of the smallest nontrivial eigenvalue of a symmetric
/// Laplacian.
pub fn fiedler_vector(laplacian: &DMatrix<f64>) -> Result<DVector<f64>> {
    nontrivial_eigenvector(laplacian, |_| 0)
}

/// Eigenvector at the median of the nontrivial spectrum.
pub fn median_eigenvector(laplacian: &DMatrix<f64>) -> Result<DVector<f64>> {
    nontrivial_eigenvector(laplacian, |count| count / 2)
}

fn nontrivial_eigenvector(laplacian: &DMatrix<f64>, pick: impl Fn(usize) -> usize) -> Result<DVector<f64>> {
    let (values, vectors) = sorted_eigen(laplacian);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nontrivial: Vec<usize> = (0..values.len()).filter(|&i| values[i] > KERNEL_CUTOFF * top).collect();
    if nontrivial.is_empty() {
        return Err(Error::InvalidParameter("operator has no nontrivial eigenvalue".into()));
    }
    Ok(vectors[nontrivial[pick(nontrivial.len())]].clone())
}

/// `(lifted L^+, lifted L)` of a reduction on the original nodes. A
/// disconnected reduction (possible for sampling baselines) with unit node
/// weights falls back to the Moore-Penrose pseudoinverse.
pub fn lifted_operators(reduced: &WeightedGraph, map: &ContractionMap) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let lap = LaplacianMatrix::from_graph(reduced);
    let lifted_l = lift(&lap.matrix, &lap.order, &lap.node_weights, map)?.matrix;
    if reduced.is_connected() {
        let state = PseudoinverseState::build(reduced)?;
        return Ok((state.lift(map)?.matrix, lifted_l));
    }
    if lap.node_weights.iter().any(|&w| w != 1.0) {
        return Err(Error::Disconnected);
    }
    let pinv = symmetric_pseudoinverse(&combinatorial_laplacian(reduced));
    Ok((lift(&pinv, &lap.order, &lap.node_weights, map)?.matrix, lifted_l))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorDistance {
    pub vector_id: String,
    /// `None` where a quadratic form vanished.
    pub d_x: Option<f64>,
    /// `x' L~ x / x' L x` for the lifted Laplacian.
    pub quadratic_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub algorithm: String,
    pub level: String,
    pub vectors: Vec<VectorDistance>,
    pub eigen_relative_error: Option<f64>,
    pub frobenius_true: f64,
    pub frobenius_estimated: Option<f64>,
    pub nodes: usize,
    pub edges: usize,
    pub connected: bool,
}

pub const REPORT_CSV_HEADER: &str = "algorithm,level,vector_id,d_x,quadratic_ratio,eigen_relative_error,frobenius_true,frobenius_estimated,nodes,edges,connected";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One CSV row per vector, without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for v in &self.vectors {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.algorithm,
                self.level,
                v.vector_id,
                opt(v.d_x),
                opt(v.quadratic_ratio),
                opt(self.eigen_relative_error),
                self.frobenius_true,
                opt(self.frobenius_estimated),
                self.nodes,
                self.edges,
                self.connected
            );
        }
        out
    }
}

/// Pseudoinverse and Laplacian of an original graph with its reference
/// vectors, reused across comparisons.
#[derive(Clone, Debug)]
pub struct Reference {
    pub pinv: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub vectors: Vec<(String, DVector<f64>)>,
    node_weights: Vec<f64>,
}

impl Reference {
    /// Reference vectors are the Fiedler and median eigenvectors of the
    /// symmetric Laplacian.
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        let map = ContractionMap::identity(g);
        let state = PseudoinverseState::build(g)?;
        let lap = LaplacianMatrix::from_graph(g);
        let laplacian = lift(&lap.matrix, &lap.order, &lap.node_weights, &map)?.matrix;
        let sym = combinatorial_laplacian(g);
        let vectors = vec![
            ("fiedler".to_string(), fiedler_vector(&sym)?),
            ("median".to_string(), median_eigenvector(&sym)?),
        ];
        Ok(Self {
            pinv: state.lift(&map)?.matrix,
            laplacian,
            vectors,
            node_weights: lap.node_weights,
        })
    }

    pub fn with_vectors(mut self, vectors: Vec<(String, DVector<f64>)>) -> Self {
        self.vectors = vectors;
        self
    }

    /// Compares a reduction against this reference. `eigen_k` is clamped to
    /// what both spectra support.
    pub fn compare(
        &self,
        algorithm: &str,
        level: &str,
        reduced: &WeightedGraph,
        map: &ContractionMap,
        estimated_error: Option<f64>,
        eigen_k: usize,
    ) -> Result<ComparisonReport> {
        let (pinv, lap) = lifted_operators(reduced, map)?;
        let vectors = self
            .vectors
            .iter()
            .map(|(id, x)| {
                let x = project_out_constant(x, Some(&self.node_weights));
                let d_x = match hyperbolic_distance_x(&self.pinv, &pinv, &x) {
                    Ok(d) => Some(d),
                    Err(Error::InvalidParameter(_)) => None,
                    Err(e) => return Err(e),
                };
                let base = x.dot(&(&self.laplacian * &x));
                let quadratic_ratio = (base > 0.0).then(|| x.dot(&(&lap * &x)) / base);
                Ok(VectorDistance {
                    vector_id: id.clone(),
                    d_x,
                    quadratic_ratio,
                })
            })
            .collect::<Result<_>>()?;
        let spectrum_k = eigen_k
            .min(reduced.num_nodes().saturating_sub(1))
            .min(self.laplacian.nrows().saturating_sub(2));
        let eigen_relative_error = if spectrum_k == 0 {
            None
        } else {
            eigen_relative_error(&self.laplacian, &lap, spectrum_k).ok()
        };
        Ok(ComparisonReport {
            algorithm: algorithm.to_string(),
            level: level.to_string(),
            vectors,
            eigen_relative_error,
            frobenius_true: frobenius_error_squared(&self.pinv, &pinv)?,
            frobenius_estimated: estimated_error,
            nodes: reduced.num_nodes(),
            edges: reduced.num_edges(),
            connected: reduced.is_connected(),
        })
    }
}
