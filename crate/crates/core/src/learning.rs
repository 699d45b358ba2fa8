//! Graph learning module: Â = A_f ⊙ sigmoid(γ·|S1·S2ᵀ − S2·S1ᵀ|).
//!
//! The difference S1·S2ᵀ − S2·S1ᵀ is antisymmetric, so its absolute value is
//! symmetric and has a zero diagonal. The mask therefore keeps Â symmetric,
//! halves the diagonal, and shrinks every other entry by a factor in (0.5, 1).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmParams {
    pub s1: Matrix,
    pub s2: Matrix,
    pub gamma: f64,
}

impl GlmParams {
    /// S1, S2 drawn from U(-1/√m, 1/√m).
    pub fn random(m: usize, gamma: f64, rng: &mut impl Rng) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Param(format!("gamma must be > 0, got {gamma}")));
        }
        let bound = 1.0 / (m.max(1) as f64).sqrt();
        let mut draw = || Matrix::from_fn(m, m, |_, _| rng.random_range(-bound..bound));
        let s1 = draw();
        let s2 = draw();
        Ok(GlmParams { s1, s2, gamma })
    }
}

/// Shrinkage mask sigmoid(γ·|S1·S2ᵀ − S2·S1ᵀ|) on the tape.
pub fn shrinkage_mask(tape: &mut Tape, s1: Var, s2: Var, gamma: f64) -> Result<Var> {
    if tape.shape(s1) != tape.shape(s2) {
        return Err(Error::shape("refine_graph", tape.shape(s1), tape.shape(s2)));
    }
    // S2·S1ᵀ is the transpose of S1·S2ᵀ, so one product suffices
    let s2t = tape.transpose(s2);
    let p12 = tape.matmul(s1, s2t)?;
    let p21 = tape.transpose(p12);
    let diff = tape.sub(p12, p21)?;
    let magnitude = tape.abs(diff);
    let scaled = tape.scale(magnitude, gamma);
    Ok(tape.sigmoid(scaled))
}

/// Refines the fused graph with the learned mask.
pub fn refine_graph(tape: &mut Tape, fused: Var, s1: Var, s2: Var, gamma: f64) -> Result<Var> {
    let mask = shrinkage_mask(tape, s1, s2, gamma)?;
    if tape.shape(mask) != tape.shape(fused) {
        return Err(Error::shape("refine_graph", tape.shape(fused), tape.shape(mask)));
    }
    tape.mul(fused, mask)
}

/// Plain-value wrapper around [`refine_graph`].
pub fn refine_values(fused: &Matrix, params: &GlmParams) -> Result<Matrix> {
    let mut tape = Tape::new();
    let a = tape.leaf(fused.clone());
    let s1 = tape.leaf(params.s1.clone());
    let s2 = tape.leaf(params.s2.clone());
    let out = refine_graph(&mut tape, a, s1, s2, params.gamma)?;
    Ok(tape.value(out).clone())
}
