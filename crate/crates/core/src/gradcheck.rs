//! Central finite-difference gradient checking.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Outcome of [`finite_difference_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// max |analytic − numeric| / max(1, |numeric|) over all entries.
    pub max_rel_error: f64,
    /// (parameter index, flat entry index) where the maximum occurred.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }
}

/// Compares analytic gradients against central differences.
///
/// `f` maps a parameter list to `(value, gradients)`, where `gradients` has one
/// matrix per parameter with matching shape. The analytic gradients are taken
/// from the call at the unperturbed point; the perturbed calls only use the
/// value.
pub fn finite_difference_check<F>(mut f: F, params: &[Matrix], step: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[Matrix]) -> Result<(f64, Vec<Matrix>)>,
{
    if !(step > 0.0) {
        return Err(Error::Param(format!("finite-difference step must be > 0, got {step}")));
    }
    let (value, analytic) = f(params)?;
    if !value.is_finite() {
        return Err(Error::Domain(format!("function value is not finite: {value}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Param(format!(
            "expected {} gradients, got {}",
            params.len(),
            analytic.len()
        )));
    }
    for (g, p) in analytic.iter().zip(params) {
        if g.shape() != p.shape() {
            return Err(Error::shape("finite_difference_check", p.shape(), g.shape()));
        }
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
    };
    let mut work = params.to_vec();
    for p in 0..params.len() {
        for e in 0..params[p].len() {
            let orig = params[p].as_slice()[e];
            work[p].as_mut_slice()[e] = orig + step;
            let plus = f(&work)?.0;
            work[p].as_mut_slice()[e] = orig - step;
            let minus = f(&work)?.0;
            work[p].as_mut_slice()[e] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Domain(format!(
                    "function value is not finite near parameter {p} entry {e}"
                )));
            }
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[p].as_slice()[e];
            let rel = (a - numeric).abs() / numeric.abs().max(1.0);
            if rel > report.max_rel_error {
                report = GradCheckReport {
                    max_rel_error: rel,
                    worst: (p, e),
                    analytic: a,
                    numeric,
                };
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::Tape;

    fn sum_of_squares(params: &[Matrix]) -> Result<(f64, Vec<Matrix>)> {
        let mut t = Tape::new();
        let w = t.leaf(params[0].clone());
        let sq = t.mul(w, w)?;
        let l = t.sum(sq);
        let g = t.backward(l)?;
        Ok((t.value(l).item(), vec![g.get(w).clone()]))
    }

    #[test]
    fn quadratic_is_nearly_exact() {
        let w = Matrix::from_fn(3, 3, |i, j| i as f64 - 0.5 * j as f64 + 0.25);
        let report = finite_difference_check(sum_of_squares, &[w], 1e-6).unwrap();
        assert!(report.max_rel_error <= 1e-9, "{report:?}");
    }

    #[test]
    fn discontinuity_is_flagged() {
        // step function with a zero "analytic" gradient, evaluated at the jump
        let f = |p: &[Matrix]| -> Result<(f64, Vec<Matrix>)> {
            let x = p[0].item();
            Ok((if x >= 0.0 { 1.0 } else { 0.0 }, vec![Matrix::scalar(0.0)]))
        };
        let report = finite_difference_check(f, &[Matrix::scalar(0.0)], 1e-6).unwrap();
        assert!(!report.passes(1e-4));
        // relative error saturates at 1 when the claimed gradient is zero
        assert!(report.max_rel_error > 0.5);
    }

    #[test]
    fn non_finite_output_is_domain_error() {
        let f = |_: &[Matrix]| -> Result<(f64, Vec<Matrix>)> { Ok((f64::NAN, vec![Matrix::scalar(0.0)])) };
        let err = finite_difference_check(f, &[Matrix::scalar(1.0)], 1e-6).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn rejects_non_positive_step() {
        let err = finite_difference_check(sum_of_squares, &[Matrix::scalar(1.0)], 0.0).unwrap_err();
        assert!(matches!(err, Error::Param(_)));
    }
}
