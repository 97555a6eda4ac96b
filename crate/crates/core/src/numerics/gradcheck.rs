use alloc::format;
use alloc::vec::Vec;

use super::DenseMatrix;
use crate::{Error, Result};

/// Outcome of [`finite_difference_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(block, index)` of the entry with the largest error.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }
}

/// Compares `analytic` gradients with central differences of `loss` at every
/// parameter entry.
///
/// The relative error of one entry is `|a - n| / max(1, |a|, |n|)`.
pub fn finite_difference_check<F>(
    params: &[DenseMatrix],
    analytic: &[DenseMatrix],
    h: f64,
    mut loss: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[DenseMatrix]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step {h} must be positive")));
    }
    if params.len() != analytic.len() {
        return Err(Error::GradCheck(format!(
            "{} parameter blocks but {} gradient blocks",
            params.len(),
            analytic.len()
        )));
    }
    for (p, a) in params.iter().zip(analytic) {
        if p.shape() != a.shape() {
            return Err(Error::Shape { op: "finite_difference_check", left: p.shape(), right: a.shape() });
        }
    }

    let mut work: Vec<DenseMatrix> = params.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0 };
    for block in 0..work.len() {
        for idx in 0..work[block].data().len() {
            let original = work[block].data()[idx];
            work[block].data_mut()[idx] = original + h;
            let plus = loss(&work);
            work[block].data_mut()[idx] = original - h;
            let minus = loss(&work);
            work[block].data_mut()[idx] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::GradCheck(format!(
                    "non-finite loss perturbing block {block} entry {idx}"
                )));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[block].data()[idx];
            let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = Some((block, idx));
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::filled(1, 1, v)
    }

    #[test]
    fn quadratic() {
        let r = finite_difference_check(&[scalar(3.0)], &[scalar(6.0)], 1e-6, |p| {
            let t = p[0].get(0, 0);
            t * t
        })
        .unwrap();
        assert!(r.max_rel_error <= 1e-9, "{r:?}");
        assert_eq!(r.checked, 1);
    }

    #[test]
    fn constant_loss() {
        let r = finite_difference_check(&[scalar(3.0)], &[scalar(0.0)], 1e-6, |_| 4.0).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
    }

    #[test]
    fn doubled_gradient_is_caught() {
        let r = finite_difference_check(&[scalar(3.0)], &[scalar(12.0)], 1e-6, |p| {
            let t = p[0].get(0, 0);
            t * t
        })
        .unwrap();
        // |12 - 6| / 12
        assert!((r.max_rel_error - 0.5).abs() < 1e-6);
        assert!(!r.passes(1e-5));
    }

    #[test]
    fn non_finite_loss_fails() {
        let r = finite_difference_check(&[scalar(1.0)], &[scalar(0.0)], 1e-6, |_| f64::NAN);
        assert!(matches!(r, Err(Error::GradCheck(_))));
    }
}
