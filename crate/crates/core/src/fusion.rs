//! Two-stage adaptive fusion of per-view graphs.
//!
//! Stage one mixes every view's graph into a complementary graph per view
//! using a row-stochastic weight matrix (softmax of trainable raw weights).
//! Stage two weights those complementary graphs by view importance α, the
//! normalized column sums of the same weight matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::tape::{Tape, Var};

/// Trainable cross-view weights (V×V, pre-softmax).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    pub raw: Matrix,
}

impl FusionParams {
    /// All-zero raw weights: uniform fusion.
    pub fn uniform(views: usize) -> Self {
        FusionParams {
            raw: Matrix::zeros(views, views),
        }
    }

    pub fn views(&self) -> usize {
        self.raw.rows()
    }
}

/// Tape handles for one fusion pass.
#[derive(Debug, Clone)]
pub struct FusionVars {
    pub weights: Var,
    pub alpha: Var,
    pub complementary: Vec<Var>,
    pub fused: Var,
}

/// Plain-value fusion result.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedGraph {
    pub fused: Matrix,
    pub complementary: Vec<Matrix>,
    pub weights: Matrix,
    pub alpha: Vec<f64>,
}

impl FusedGraph {
    /// Evaluates the fusion without keeping a tape around.
    pub fn compute(graphs: &[Graph], params: &FusionParams) -> Result<FusedGraph> {
        let mut tape = Tape::new();
        let raw = tape.leaf(params.raw.clone());
        let vars: Vec<Var> = graphs.iter().map(|g| tape.leaf(g.adjacency().clone())).collect();
        check_graphs(graphs)?;
        let out = fuse_on_tape(&mut tape, &vars, raw)?;
        Ok(FusedGraph {
            fused: tape.value(out.fused).clone(),
            complementary: out.complementary.iter().map(|&v| tape.value(v).clone()).collect(),
            weights: tape.value(out.weights).clone(),
            alpha: tape.value(out.alpha).as_slice().to_vec(),
        })
    }
}

/// All inputs must be renormalized and share the node count.
pub fn check_graphs(graphs: &[Graph]) -> Result<()> {
    let first = graphs
        .first()
        .ok_or_else(|| Error::Param("at least one view graph is required".into()))?;
    for g in graphs {
        if g.nodes() != first.nodes() {
            return Err(Error::shape("fusion", first.adjacency().shape(), g.adjacency().shape()));
        }
        if !g.is_renormalized() {
            return Err(Error::Param("fusion expects renormalized view graphs".into()));
        }
    }
    Ok(())
}

/// Row-wise softmax of the raw weights.
pub fn normalize_weights(tape: &mut Tape, raw: Var) -> Result<Var> {
    let (r, c) = tape.shape(raw);
    if r != c {
        return Err(Error::shape("normalize_weights", (r, c), (r, r)));
    }
    Ok(tape.softmax_rows(raw))
}

/// A_w^(v) = Σ_i W[v,i]·A^(i) for every view v.
pub fn complementary_graphs(tape: &mut Tape, graphs: &[Var], weights: Var) -> Result<Vec<Var>> {
    let views = graphs.len();
    if tape.shape(weights) != (views, views) {
        return Err(Error::shape("complementary_graphs", tape.shape(weights), (views, views)));
    }
    let shape = tape.shape(graphs[0]);
    if let Some(&bad) = graphs.iter().find(|&&g| tape.shape(g) != shape) {
        return Err(Error::shape("complementary_graphs", shape, tape.shape(bad)));
    }
    let mut out = Vec::with_capacity(views);
    for v in 0..views {
        let mut acc: Option<Var> = None;
        for (i, &g) in graphs.iter().enumerate() {
            let w = tape.entry(weights, v, i)?;
            let term = tape.mul_scalar(g, w)?;
            acc = Some(match acc {
                None => term,
                Some(prev) => tape.add(prev, term)?,
            });
        }
        out.push(acc.expect("at least one view"));
    }
    Ok(out)
}

/// α_i = Σ_v W[v,i], normalized to sum to one. Returned as a 1×V row.
pub fn view_importance(tape: &mut Tape, weights: Var) -> Result<Var> {
    let (_, views) = tape.shape(weights);
    let column_sums = tape.sum_cols(weights);
    let total = tape.sum(column_sums);
    let denom = tape.broadcast(total, 1, views)?;
    tape.div(column_sums, denom)
}

/// A_f = Σ_i α_i·A_w^(i).
pub fn fuse(tape: &mut Tape, complementary: &[Var], alpha: Var) -> Result<Var> {
    if tape.shape(alpha) != (1, complementary.len()) {
        return Err(Error::shape("fuse", tape.shape(alpha), (1, complementary.len())));
    }
    let mut acc: Option<Var> = None;
    for (i, &g) in complementary.iter().enumerate() {
        let a = tape.entry(alpha, 0, i)?;
        let term = tape.mul_scalar(g, a)?;
        acc = Some(match acc {
            None => term,
            Some(prev) => tape.add(prev, term)?,
        });
    }
    acc.ok_or_else(|| Error::Param("at least one view graph is required".into()))
}

/// Full two-stage fusion on the tape.
pub fn fuse_on_tape(tape: &mut Tape, graphs: &[Var], raw: Var) -> Result<FusionVars> {
    if graphs.is_empty() {
        return Err(Error::Param("at least one view graph is required".into()));
    }
    let weights = normalize_weights(tape, raw)?;
    let complementary = complementary_graphs(tape, graphs, weights)?;
    let alpha = view_importance(tape, weights)?;
    let fused = fuse(tape, &complementary, alpha)?;
    Ok(FusionVars {
        weights,
        alpha,
        complementary,
        fused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn renorm(a: Matrix) -> Graph {
        Graph::from_adjacency(a, false).unwrap().renormalize().unwrap()
    }

    fn path3() -> Graph {
        renorm(Matrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
        ]))
    }

    fn triangle() -> Graph {
        renorm(Matrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 }))
    }

    #[test]
    fn zero_raw_weights_are_uniform() {
        let mut t = Tape::new();
        let raw = t.leaf(Matrix::zeros(2, 2));
        let w = normalize_weights(&mut t, raw).unwrap();
        assert_eq!(t.value(w), &Matrix::filled(2, 2, 0.5));
    }

    #[test]
    fn softmax_closed_form() {
        let mut t = Tape::new();
        let raw = t.leaf(Matrix::from_rows(&[vec![3f64.ln(), 0.0], vec![0.0, 0.0]]));
        let w = normalize_weights(&mut t, raw).unwrap();
        assert!((t.value(w).get(0, 0) - 0.75).abs() < 1e-15);
        assert!((t.value(w).get(0, 1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_view_passes_through() {
        let g = path3();
        let fused = FusedGraph::compute(std::slice::from_ref(&g), &FusionParams::uniform(1)).unwrap();
        assert_eq!(&fused.complementary[0], g.adjacency());
        assert_eq!(&fused.fused, g.adjacency());
        assert_eq!(fused.alpha, vec![1.0]);
    }

    #[test]
    fn selector_row_picks_first_view() {
        let (g1, g2) = (path3(), triangle());
        let mut t = Tape::new();
        let a1 = t.leaf(g1.adjacency().clone());
        let a2 = t.leaf(g2.adjacency().clone());
        let w = t.leaf(Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        let comp = complementary_graphs(&mut t, &[a1, a2], w).unwrap();
        assert_eq!(t.value(comp[0]), g1.adjacency());
    }

    #[test]
    fn uniform_importance() {
        let mut t = Tape::new();
        let w = t.leaf(Matrix::filled(4, 4, 0.25));
        let alpha = view_importance(&mut t, w).unwrap();
        assert!(t.value(alpha).max_abs_diff(&Matrix::filled(1, 4, 0.25)) < 1e-15);
    }

    #[test]
    fn empty_column_has_zero_importance() {
        let mut t = Tape::new();
        let w = t.leaf(Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]));
        let alpha = view_importance(&mut t, w).unwrap();
        assert_eq!(t.value(alpha).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn uniform_cascade_averages_views() {
        let (g1, g2) = (path3(), triangle());
        let fused = FusedGraph::compute(&[g1.clone(), g2.clone()], &FusionParams::uniform(2)).unwrap();
        let avg = g1.adjacency().add(g2.adjacency()).unwrap().scale(0.5);
        assert!(fused.fused.max_abs_diff(&avg) < 1e-15);
    }

    #[test]
    fn identical_views_fuse_to_themselves() {
        let g = triangle();
        let params = FusionParams {
            raw: Matrix::from_rows(&[vec![0.3, -1.0, 2.0], vec![0.0, 0.5, 0.1], vec![1.0, 1.0, -0.2]]),
        };
        let fused = FusedGraph::compute(&[g.clone(), g.clone(), g.clone()], &params).unwrap();
        assert!(fused.fused.max_abs_diff(g.adjacency()) < 1e-15);
    }

    #[test]
    fn mismatched_nodes_rejected() {
        let small = renorm(Matrix::zeros(2, 2));
        assert!(matches!(
            FusedGraph::compute(&[path3(), small], &FusionParams::uniform(2)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn unnormalized_views_rejected() {
        let raw = Graph::from_adjacency(Matrix::zeros(3, 3), false).unwrap();
        assert!(FusedGraph::compute(&[raw], &FusionParams::uniform(1)).is_err());
    }
}
