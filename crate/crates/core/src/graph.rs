//! Per-view KNN graphs and the GCN renormalization D̃^{-1/2}(A+I)D̃^{-1/2}.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::parallel;
use crate::tape::{Tape, Var};

/// Tolerance used when validating symmetry of incoming adjacency matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Param(format!("unknown metric `{other}`"))),
        }
    }
}

/// Feature matrix of one view: m samples × n_v features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub view: usize,
}

impl FeatureMatrix {
    pub fn new(values: Matrix, view: usize) -> Self {
        FeatureMatrix { values, view }
    }

    pub fn samples(&self) -> usize {
        self.values.rows()
    }

    /// Column-wise standardization to zero mean and unit variance. Constant
    /// columns are centered and left at zero.
    pub fn standardized(&self) -> FeatureMatrix {
        FeatureMatrix {
            values: standardize_columns(&self.values),
            view: self.view,
        }
    }
}

pub fn standardize_columns(x: &Matrix) -> Matrix {
    let (m, n) = x.shape();
    if m == 0 {
        return x.clone();
    }
    let means: Vec<f64> = x.col_sums().into_iter().map(|s| s / m as f64).collect();
    let mut vars = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            let d = x.get(i, j) - means[j];
            vars[j] += d * d;
        }
    }
    let stds: Vec<f64> = vars.into_iter().map(|v| (v / m as f64).sqrt()).collect();
    Matrix::from_fn(m, n, |i, j| {
        let d = x.get(i, j) - means[j];
        if stds[j] > 1e-12 {
            d / stds[j]
        } else {
            0.0
        }
    })
}

/// Dense symmetric non-negative adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Matrix,
    renormalized: bool,
}

impl Graph {
    /// Wraps an adjacency matrix after validating shape, symmetry and sign.
    pub fn from_adjacency(adjacency: Matrix, renormalized: bool) -> Result<Self> {
        if !adjacency.is_square() {
            return Err(Error::shape("graph", adjacency.shape(), (adjacency.rows(), adjacency.rows())));
        }
        if !adjacency.is_finite() || adjacency.as_slice().iter().any(|&x| x < 0.0) {
            return Err(Error::Domain("adjacency entries must be finite and non-negative".into()));
        }
        let asym = adjacency.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::Domain(format!("adjacency is not symmetric (max |A-Aᵀ| = {asym:e})")));
        }
        if renormalized && (0..adjacency.rows()).any(|i| adjacency.get(i, i) <= 0.0) {
            return Err(Error::Domain("renormalized adjacency needs a positive diagonal".into()));
        }
        Ok(Graph {
            adjacency,
            renormalized,
        })
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn into_adjacency(self) -> Matrix {
        self.adjacency
    }

    pub fn is_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn nodes(&self) -> usize {
        self.adjacency.rows()
    }

    /// Returns D̃^{-1/2}(A+I)D̃^{-1/2} with D̃ the degree matrix of A+I.
    /// Applying it to an already renormalized graph is an error.
    pub fn renormalize(&self) -> Result<Graph> {
        if self.renormalized {
            return Err(Error::Param("graph is already renormalized".into()));
        }
        Ok(Graph {
            adjacency: renormalize_matrix(&self.adjacency),
            renormalized: true,
        })
    }
}

fn renormalize_matrix(a: &Matrix) -> Matrix {
    let m = a.rows();
    let inv_sqrt: Vec<f64> = a
        .row_sums()
        .into_iter()
        .map(|d| 1.0 / (d + 1.0).sqrt())
        .collect();
    Matrix::from_fn(m, m, |i, j| {
        let v = a.get(i, j) + if i == j { 1.0 } else { 0.0 };
        v * (inv_sqrt[i] * inv_sqrt[j])
    })
}

/// Differentiable renormalization of a square adjacency node.
pub fn renormalize_on_tape(tape: &mut Tape, a: Var) -> Result<Var> {
    let (m, n) = tape.shape(a);
    if m != n {
        return Err(Error::shape("renormalize", (m, n), (m, m)));
    }
    let eye = tape.leaf(Matrix::identity(m));
    let with_loops = tape.add(a, eye)?;
    let degree = tape.sum_rows(with_loops);
    let log_degree = tape.ln(degree)?;
    let half = tape.scale(log_degree, -0.5);
    let inv_sqrt = tape.exp(half)?;
    let left = tape.broadcast(inv_sqrt, m, m)?;
    let row = tape.transpose(inv_sqrt);
    let right = tape.broadcast(row, m, m)?;
    let scaled = tape.mul(with_loops, left)?;
    tape.mul(scaled, right)
}

fn distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                1.0 - dot / (na * nb)
            }
        }
    }
}

/// The `k` nearest neighbours of every sample, excluding itself. Distance ties
/// go to the lower sample index.
pub fn nearest_neighbors(x: &Matrix, k: usize, metric: Metric) -> Result<Vec<Vec<usize>>> {
    let m = x.rows();
    if k == 0 || k >= m {
        return Err(Error::Param(format!("k must satisfy 1 <= k < m (k = {k}, m = {m})")));
    }
    if let Some(i) = (0..m).find(|&i| x.row_slice(i).iter().any(|v| v.is_nan())) {
        return Err(Error::Domain(format!("feature row {i} contains NaN")));
    }
    Ok(parallel::map_indices(m, |i| {
        let xi = x.row_slice(i);
        let mut cand: Vec<(f64, usize)> = (0..m)
            .filter(|&j| j != i)
            .map(|j| (distance(metric, xi, x.row_slice(j)), j))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cand.into_iter().take(k).map(|(_, j)| j).collect()
    }))
}

/// Binary KNN adjacency symmetrized by logical OR, zero diagonal.
pub fn build_knn_graph(x: &FeatureMatrix, k: usize, metric: Metric) -> Result<Graph> {
    let m = x.samples();
    let neighbors = nearest_neighbors(&x.values, k, metric)?;
    let mut a = Matrix::zeros(m, m);
    for (i, nbrs) in neighbors.iter().enumerate() {
        for &j in nbrs {
            a.set(i, j, 1.0);
            a.set(j, i, 1.0);
        }
    }
    Ok(Graph {
        adjacency: a,
        renormalized: false,
    })
}
