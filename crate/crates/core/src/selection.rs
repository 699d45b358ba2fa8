//! Differentiable node selection.
//!
//! Node in-degrees (mean non-zero column entries of Â) are relaxed into a
//! row-stochastic permutation matrix P with a temperature-controlled softmax.
//! Each row of P is scored with a DCG-style sum that rewards mass at early
//! positions, min-max normalized into confidences Ī, and every edge (i, j) is
//! gated by ReLU((Ī_i + Ī_j)/2 − θ) with a learnable threshold θ.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tape::{Tape, Var};

/// Tape handles for one selection pass.
#[derive(Debug, Clone, Copy)]
pub struct SelectionVars {
    /// m×1 mean of non-zero entries per column.
    pub in_degree: Var,
    pub difference: Var,
    pub permutation: Var,
    /// m×1 raw DCG confidences.
    pub raw_confidence: Var,
    /// m×1 normalized confidences in [0, 1].
    pub confidence: Var,
    pub coefficients: Var,
    /// 1×1 effective threshold θ = sigmoid(raw θ).
    pub threshold: Var,
    pub selected: Var,
}

fn check_square(tape: &Tape, a: Var, op: &'static str) -> Result<usize> {
    let (r, c) = tape.shape(a);
    if r != c {
        return Err(Error::shape(op, (r, c), (r, r)));
    }
    Ok(r)
}

fn check_column(tape: &Tape, v: Var, op: &'static str) -> Result<usize> {
    let (r, c) = tape.shape(v);
    if c != 1 {
        return Err(Error::shape(op, (r, c), (r, 1)));
    }
    Ok(r)
}

/// [a_s]_j = Σ_i Â_ij / δ_j with δ_j the number of non-zero entries in column
/// j (a_s = 0 for empty columns). The counts are constants of the forward pass.
/// Returns an m×1 column.
pub fn column_mean_nonzero(tape: &mut Tape, a: Var) -> Result<Var> {
    let value = tape.value(a);
    let (rows, cols) = value.shape();
    let mut counts = vec![0usize; cols];
    for i in 0..rows {
        for (c, &x) in counts.iter_mut().zip(value.row_slice(i)) {
            if x != 0.0 {
                *c += 1;
            }
        }
    }
    let inv = Matrix::row(
        &counts
            .iter()
            .map(|&c| if c == 0 { 0.0 } else { 1.0 / c as f64 })
            .collect::<Vec<_>>(),
    );
    let sums = tape.sum_cols(a);
    let means = tape.mul_const(sums, inv)?;
    Ok(tape.transpose(means))
}

/// Δ_ij = |a_i − a_j| for an m×1 column `a`.
pub fn pairwise_difference(tape: &mut Tape, a: Var) -> Result<Var> {
    let m = check_column(tape, a, "pairwise_difference")?;
    let down = tape.broadcast(a, m, m)?;
    let row = tape.transpose(a);
    let across = tape.broadcast(row, m, m)?;
    let diff = tape.sub(down, across)?;
    Ok(tape.abs(diff))
}

/// Row i (1-based) of P is softmax(((m + 1 − 2i)·a − Δ·𝟙) / τ).
pub fn relaxed_permutation(tape: &mut Tape, a: Var, tau: f64) -> Result<(Var, Var)> {
    if !(tau > 0.0) {
        return Err(Error::Param(format!("temperature must be > 0, got {tau}")));
    }
    let m = check_column(tape, a, "relaxed_permutation")?;
    let delta = pairwise_difference(tape, a)?;
    let delta_sum = tape.sum_rows(delta);
    let delta_row = tape.transpose(delta_sum);
    let delta_b = tape.broadcast(delta_row, m, m)?;

    let coef = Matrix::column(
        &(0..m)
            .map(|i| m as f64 - 1.0 - 2.0 * i as f64)
            .collect::<Vec<_>>(),
    );
    let coef = tape.leaf(coef);
    let coef_b = tape.broadcast(coef, m, m)?;
    let a_row = tape.transpose(a);
    let a_b = tape.broadcast(a_row, m, m)?;
    let scaled = tape.mul(coef_b, a_b)?;
    let logits = tape.sub(scaled, delta_b)?;
    let logits = tape.scale(logits, 1.0 / tau);
    Ok((tape.softmax_rows(logits), delta))
}

/// 𝓘_i = Σ_j (2^{P_ij} − 1) / log₂(j + 1), j 1-based. Returns an m×1 column.
pub fn dcg_confidence(tape: &mut Tape, p: Var) -> Result<Var> {
    let (m, n) = tape.shape(p);
    let discount = Matrix::from_fn(m, n, |_, j| 1.0 / ((j + 2) as f64).log2());
    let gains = tape.exp2(p);
    let gains = tape.add_scalar(gains, -1.0);
    let weighted = tape.mul_const(gains, discount)?;
    Ok(tape.sum_rows(weighted))
}

/// Min-max normalization of the confidences. The positions of the minimum and
/// maximum are fixed for the backward pass; their values carry gradient. When
/// all confidences are equal every node gets 0.5.
pub fn normalize_confidence(tape: &mut Tape, scores: Var) -> Result<Var> {
    let (m, c) = tape.shape(scores);
    let lo = tape.min(scores);
    let hi = tape.max(scores);
    let span = tape.value(hi).item() - tape.value(lo).item();
    if !(span > 0.0) {
        return Ok(tape.leaf(Matrix::filled(m, c, 0.5)));
    }
    let range = tape.sub(hi, lo)?;
    let lo_b = tape.broadcast(lo, m, c)?;
    let range_b = tape.broadcast(range, m, c)?;
    let shifted = tape.sub(scores, lo_b)?;
    tape.div(shifted, range_b)
}

/// DCG score followed by min-max normalization.
pub fn node_confidence(tape: &mut Tape, p: Var) -> Result<(Var, Var)> {
    check_square(tape, p, "node_confidence")?;
    let raw = dcg_confidence(tape, p)?;
    let norm = normalize_confidence(tape, raw)?;
    Ok((raw, norm))
}

/// C_ij = (Ī_i + Ī_j) / 2.
pub fn confidence_coefficients(tape: &mut Tape, confidence: Var) -> Result<Var> {
    let m = check_column(tape, confidence, "confidence_coefficients")?;
    let down = tape.broadcast(confidence, m, m)?;
    let row = tape.transpose(confidence);
    let across = tape.broadcast(row, m, m)?;
    let sum = tape.add(down, across)?;
    Ok(tape.scale(sum, 0.5))
}

/// A_select = Â ⊙ C_sel / max(C_sel) with C_sel = ReLU(C − sigmoid(raw θ)).
/// When every coefficient is gated off, Â is returned unchanged.
pub fn select_nodes(tape: &mut Tape, refined: Var, coefficients: Var, raw_threshold: Var) -> Result<(Var, Var)> {
    let m = check_square(tape, refined, "select_nodes")?;
    if tape.shape(coefficients) != (m, m) {
        return Err(Error::shape("select_nodes", (m, m), tape.shape(coefficients)));
    }
    if tape.shape(raw_threshold) != (1, 1) {
        return Err(Error::shape("select_nodes", tape.shape(raw_threshold), (1, 1)));
    }
    let theta = tape.sigmoid(raw_threshold);
    let theta_b = tape.broadcast(theta, m, m)?;
    let shifted = tape.sub(coefficients, theta_b)?;
    let gated = tape.relu(shifted);
    let peak = tape.max(gated);
    if tape.value(peak).item() <= 0.0 {
        return Ok((refined, theta));
    }
    let peak_b = tape.broadcast(peak, m, m)?;
    let ratio = tape.div(gated, peak_b)?;
    Ok((tape.mul(refined, ratio)?, theta))
}

/// The whole selection pipeline from a refined adjacency node.
pub fn select_on_tape(tape: &mut Tape, refined: Var, raw_threshold: Var, tau: f64) -> Result<SelectionVars> {
    check_square(tape, refined, "select_on_tape")?;
    let in_degree = column_mean_nonzero(tape, refined)?;
    let (permutation, difference) = relaxed_permutation(tape, in_degree, tau)?;
    let (raw_confidence, confidence) = node_confidence(tape, permutation)?;
    let coefficients = confidence_coefficients(tape, confidence)?;
    let (selected, threshold) = select_nodes(tape, refined, coefficients, raw_threshold)?;
    Ok(SelectionVars {
        in_degree,
        difference,
        permutation,
        raw_confidence,
        confidence,
        coefficients,
        threshold,
        selected,
    })
}

/// Non-differentiable baseline: keep the k largest entries of each row (ties
/// to the lower column index) and zero the rest. Rows are treated
/// independently, so the result need not be symmetric.
pub fn hard_topk_baseline(a: &Matrix, k: usize) -> Result<Matrix> {
    let (rows, cols) = a.shape();
    if k == 0 || k > cols {
        return Err(Error::Param(format!("top-k needs 1 <= k <= {cols}, got {k}")));
    }
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let row = a.row_slice(i);
        let mut idx: Vec<usize> = (0..cols).collect();
        idx.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        for &j in idx.iter().take(k) {
            out.set(i, j, row[j]);
        }
    }
    Ok(out)
}
