use alloc::format;
use alloc::vec::Vec;

use crate::numerics::DenseMatrix;
use crate::{Error, Result};

/// For every row, the `k` nearest other rows by Euclidean distance, nearest
/// first. Ties go to the lower index.
pub fn knn_graph(features: &DenseMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = features.rows();
    if k == 0 || k >= n {
        return Err(Error::Config(format!("k = {k} must satisfy 1 <= k < {n} points")));
    }
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let xi = features.row(i);
        candidates.clear();
        for j in (0..n).filter(|&j| j != i) {
            let d: f64 = xi.iter().zip(features.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            candidates.push((d, j));
        }
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, by_distance);
        }
        let nearest = &mut candidates[..k];
        nearest.sort_unstable_by(by_distance);
        out.push(nearest.iter().map(|&(_, j)| j).collect());
    }
    Ok(out)
}
