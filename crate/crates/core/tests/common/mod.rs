//! Scalar-loop reference implementations, written independently of the
//! library's matrix and tape code.

#![allow(dead_code, clippy::needless_range_loop)]

use mgcn_core::graph::Graph;
use mgcn_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Grid = Vec<Vec<f64>>;

pub fn grid(m: &Matrix) -> Grid {
    (0..m.rows()).map(|i| m.row_slice(i).to_vec()).collect()
}

pub fn max_abs_diff(a: &Grid, b: &Matrix) -> f64 {
    assert_eq!((a.len(), a[0].len()), b.shape());
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        for j in 0..a[0].len() {
            worst = worst.max((a[i][j] - b.get(i, j)).abs());
        }
    }
    worst
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|x| (x - hi).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

pub fn matmul(a: &Grid, b: &Grid) -> Grid {
    let (n, k, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Brute-force KNN adjacency: OR-symmetrized, zero diagonal, ties to the lower index.
pub fn knn_oracle(x: &Grid, k: usize) -> Grid {
    let m = x.len();
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..m {
        let mut taken = vec![false; m];
        taken[i] = true;
        for _ in 0..k {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..m {
                if taken[j] {
                    continue;
                }
                let d = euclidean(&x[i], &x[j]);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            let (_, j) = best.unwrap();
            taken[j] = true;
            a[i][j] = 1.0;
            a[j][i] = 1.0;
        }
    }
    a
}

pub fn renormalize_oracle(a: &Grid) -> Grid {
    let m = a.len();
    let mut t = a.clone();
    for i in 0..m {
        t[i][i] += 1.0;
    }
    let deg: Vec<f64> = t.iter().map(|r| r.iter().sum()).collect();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            out[i][j] = t[i][j] / (deg[i].sqrt() * deg[j].sqrt());
        }
    }
    out
}

pub struct FusionOracle {
    pub weights: Grid,
    pub complementary: Vec<Grid>,
    pub alpha: Vec<f64>,
    pub fused: Grid,
}

pub fn fusion_oracle(graphs: &[Grid], raw: &Grid) -> FusionOracle {
    let v = graphs.len();
    let m = graphs[0].len();
    let weights: Grid = raw.iter().map(|r| softmax(r)).collect();
    let mut complementary = Vec::new();
    for a in 0..v {
        let mut g = vec![vec![0.0; m]; m];
        for b in 0..v {
            for i in 0..m {
                for j in 0..m {
                    g[i][j] += weights[a][b] * graphs[b][i][j];
                }
            }
        }
        complementary.push(g);
    }
    let mut col = vec![0.0; v];
    for r in &weights {
        for (c, x) in col.iter_mut().zip(r) {
            *c += x;
        }
    }
    let total: f64 = col.iter().sum();
    let alpha: Vec<f64> = col.iter().map(|c| c / total).collect();
    let mut fused = vec![vec![0.0; m]; m];
    for a in 0..v {
        for i in 0..m {
            for j in 0..m {
                fused[i][j] += alpha[a] * complementary[a][i][j];
            }
        }
    }
    FusionOracle {
        weights,
        complementary,
        alpha,
        fused,
    }
}

pub fn glm_oracle(fused: &Grid, s1: &Grid, s2: &Grid, gamma: f64) -> Grid {
    let m = fused.len();
    let r = s1[0].len();
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut d = 0.0;
            for k in 0..r {
                d += s1[i][k] * s2[j][k] - s2[i][k] * s1[j][k];
            }
            out[i][j] = fused[i][j] * sigmoid(gamma * d.abs());
        }
    }
    out
}

pub struct SelectionOracle {
    pub in_degree: Vec<f64>,
    pub difference: Grid,
    pub permutation: Grid,
    pub raw_confidence: Vec<f64>,
    pub confidence: Vec<f64>,
    pub coefficients: Grid,
    pub threshold: f64,
    pub selected: Grid,
}

pub fn dcg(row: &[f64]) -> f64 {
    row.iter()
        .enumerate()
        .map(|(j, p)| (2f64.powf(*p) - 1.0) / ((j + 2) as f64).log2())
        .sum()
}

pub fn permutation_oracle(a: &[f64], tau: f64) -> Grid {
    let m = a.len();
    let row_sum: Vec<f64> = (0..m).map(|i| (0..m).map(|j| (a[i] - a[j]).abs()).sum()).collect();
    (1..=m)
        .map(|i| {
            let scale = (m + 1) as f64 - 2.0 * i as f64;
            let logits: Vec<f64> = (0..m).map(|j| (scale * a[j] - row_sum[j]) / tau).collect();
            softmax(&logits)
        })
        .collect()
}

pub fn selection_oracle(refined: &Grid, raw_threshold: f64, tau: f64) -> SelectionOracle {
    let m = refined.len();
    let in_degree: Vec<f64> = (0..m)
        .map(|j| {
            let (mut s, mut n) = (0.0, 0usize);
            for row in refined {
                if row[j] != 0.0 {
                    s += row[j];
                    n += 1;
                }
            }
            if n == 0 {
                0.0
            } else {
                s / n as f64
            }
        })
        .collect();
    let difference: Grid = (0..m)
        .map(|i| (0..m).map(|j| (in_degree[i] - in_degree[j]).abs()).collect())
        .collect();
    let permutation = permutation_oracle(&in_degree, tau);
    let raw_confidence: Vec<f64> = permutation.iter().map(|r| dcg(r)).collect();
    let lo = raw_confidence.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw_confidence.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let confidence: Vec<f64> = raw_confidence
        .iter()
        .map(|c| if hi == lo { 0.5 } else { (c - lo) / (hi - lo) })
        .collect();
    let coefficients: Grid = (0..m)
        .map(|i| (0..m).map(|j| (confidence[i] + confidence[j]) / 2.0).collect())
        .collect();
    let threshold = sigmoid(raw_threshold);
    let gated: Grid = coefficients
        .iter()
        .map(|r| r.iter().map(|c| (c - threshold).max(0.0)).collect())
        .collect();
    let top = gated.iter().flatten().cloned().fold(0.0, f64::max);
    let selected: Grid = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if top == 0.0 { refined[i][j] } else { refined[i][j] * gated[i][j] / top })
                .collect()
        })
        .collect();
    SelectionOracle {
        in_degree,
        difference,
        permutation,
        raw_confidence,
        confidence,
        coefficients,
        threshold,
        selected,
    }
}

/// Plain GCN: ReLU on hidden layers, row softmax on the output.
pub fn gcn_oracle(a: &Grid, x: &Grid, weights: &[Grid]) -> Grid {
    let mut h = x.clone();
    for (l, w) in weights.iter().enumerate() {
        let out = matmul(a, &matmul(&h, w));
        h = if l + 1 == weights.len() {
            out.iter().map(|r| softmax(r)).collect()
        } else {
            out.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect()
        };
    }
    h
}

pub fn loss_oracle(z: &Grid, labels: &[usize], labeled: &[usize]) -> f64 {
    labeled.iter().map(|&i| -z[i][labels[i]].max(1e-12).ln()).sum()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Grid {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(lo..hi)).collect()).collect()
}

pub fn to_matrix(g: &Grid) -> Matrix {
    Matrix::from_rows(g)
}

/// Random symmetric binary graph with zero diagonal where every node has at
/// least one neighbour, already renormalized.
pub fn random_graph(rng: &mut ChaCha8Rng, m: usize, density: f64) -> Graph {
    let mut a = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            if rng.random_bool(density) {
                a[i][j] = 1.0;
                a[j][i] = 1.0;
            }
        }
        let j = (i + 1) % m;
        a[i][j] = 1.0;
        a[j][i] = 1.0;
    }
    Graph::from_adjacency(to_matrix(&a), false).unwrap().renormalize().unwrap()
}
