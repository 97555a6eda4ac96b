use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps row-major `data`. Fails if the length is wrong or any entry is
    /// not finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                op: "DenseMatrix::new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        let m = DenseMatrix { rows, cols, data };
        m.ensure_finite("DenseMatrix::new")?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape {
                    op: "DenseMatrix::from_rows",
                    left: (rows.len(), cols),
                    right: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Single-column matrix.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { context: format!("{context}") })
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Returns a new matrix with rows reordered so that row `i` of the
    /// result is row `order[i]` of `self`.
    pub fn select_rows(&self, order: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(order.len() * self.cols);
        for &r in order {
            data.extend_from_slice(self.row(r));
        }
        DenseMatrix { rows: order.len(), cols: self.cols, data }
    }

    /// Adds a `1 x cols` row vector to every row.
    pub fn add_row_broadcast(&mut self, bias: &DenseMatrix) -> Result<()> {
        if bias.rows != 1 || bias.cols != self.cols {
            return Err(Error::Shape {
                op: "add_row_broadcast",
                left: self.shape(),
                right: bias.shape(),
            });
        }
        for row in self.data.chunks_exact_mut(self.cols) {
            for (v, b) in row.iter_mut().zip(&bias.data) {
                *v += b;
            }
        }
        Ok(())
    }

    /// Column sums as a `1 x cols` matrix.
    pub fn column_sums(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(1, self.cols);
        for row in self.data.chunks_exact(self.cols.max(1)) {
            for (o, v) in out.data.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    /// `self += other`, elementwise.
    pub fn add_assign(&mut self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape { op: "add_assign", left: self.shape(), right: other.shape() });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hconcat(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::Shape { op: "hconcat", left: self.shape(), right: other.shape() });
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(DenseMatrix { rows: self.rows, cols, data })
    }

    /// Splits columns at `at`, the inverse of [`hconcat`](Self::hconcat).
    pub fn hsplit(&self, at: usize) -> (DenseMatrix, DenseMatrix) {
        assert!(at <= self.cols, "hsplit: {at} > {} columns", self.cols);
        let mut left = Vec::with_capacity(self.rows * at);
        let mut right = Vec::with_capacity(self.rows * (self.cols - at));
        for r in 0..self.rows {
            let row = self.row(r);
            left.extend_from_slice(&row[..at]);
            right.extend_from_slice(&row[at..]);
        }
        (
            DenseMatrix { rows: self.rows, cols: at, data: left },
            DenseMatrix { rows: self.rows, cols: self.cols - at, data: right },
        )
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Standard matrix product `a * b`.
///
/// Every output entry is accumulated over `k` in increasing order, whatever
/// the blocking, so results are reproducible bit for bit.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::Shape { op: "matmul", left: a.shape(), right: b.shape() });
    }
    let mut out = vec![0.0; a.rows * b.cols];
    // Post-ReLU operands are often mostly zero; skipping them beats blocking.
    let zeros = a.data.iter().filter(|&&v| v == 0.0).count();
    if 4 * zeros >= a.data.len() && b.cols >= 8 {
        kernels::gemm_skip_zeros(&a.data, &b.data, &mut out, a.cols, b.cols);
    } else {
        kernels::gemm(&a.data, &b.data, &mut out, a.rows, a.cols, b.cols);
    }
    let out = DenseMatrix { rows: a.rows, cols: b.cols, data: out };
    out.ensure_finite("matmul")?;
    Ok(out)
}

/// Row-at-a-time `out += a * b`, skipping zero entries of `a`.
#[inline(always)]
fn gemm_skip_zeros_body(a: &[f64], b: &[f64], out: &mut [f64], k: usize, m: usize) {
    if k == 0 || m == 0 {
        return;
    }
    for (a_row, out_row) in a.chunks_exact(k).zip(out.chunks_exact_mut(m)) {
        for (&x, b_row) in a_row.iter().zip(b.chunks_exact(m)) {
            if x == 0.0 {
                continue;
            }
            for (o, &y) in out_row.iter_mut().zip(b_row) {
                *o += x * y;
            }
        }
    }
}

/// `out (n x m) += aᵀ * b` with `a` of shape `r x n`, `b` of shape `r x m`.
#[inline(always)]
fn gemm_tn_body(a: &[f64], b: &[f64], out: &mut [f64], n: usize, m: usize) {
    if n == 0 || m == 0 {
        return;
    }
    for (a_row, b_row) in a.chunks_exact(n).zip(b.chunks_exact(m)) {
        for (&x, out_row) in a_row.iter().zip(out.chunks_exact_mut(m)) {
            if x == 0.0 {
                continue;
            }
            for (o, &y) in out_row.iter_mut().zip(b_row) {
                *o += x * y;
            }
        }
    }
}

/// Kernel entry points. With the `std` feature on x86-64, AVX2 builds of the
/// same loops are chosen at run time. No FMA is enabled, so each lane rounds
/// exactly like the scalar code and results do not depend on the CPU.
pub(crate) mod kernels {
    macro_rules! dispatch {
        ($name:ident, $body:ident, ($($arg:ident: $ty:ty),*)) => {
            pub(crate) fn $name($($arg: $ty),*) {
                #[cfg(all(feature = "std", target_arch = "x86_64"))]
                {
                    #[target_feature(enable = "avx2")]
                    unsafe fn wide($($arg: $ty),*) {
                        super::$body($($arg),*)
                    }
                    if std::is_x86_feature_detected!("avx2") {
                        // SAFETY: the CPU supports AVX2.
                        return unsafe { wide($($arg),*) };
                    }
                }
                super::$body($($arg),*)
            }
        };
    }

    dispatch!(gemm, gemm_body, (a: &[f64], b: &[f64], out: &mut [f64], n: usize, k: usize, m: usize));
    dispatch!(gemm_skip_zeros, gemm_skip_zeros_body, (a: &[f64], b: &[f64], out: &mut [f64], k: usize, m: usize));
    dispatch!(gemm_tn, gemm_tn_body, (a: &[f64], b: &[f64], out: &mut [f64], n: usize, m: usize));
}

const MR: usize = 4;
const NR: usize = 8;

/// `out (n x m) += a (n x k) * b (k x m)`, row-major, register-blocked in
/// `MR x NR` tiles.
#[inline(always)]
fn gemm_body(a: &[f64], b: &[f64], out: &mut [f64], n: usize, k: usize, m: usize) {
    let n_main = n - n % MR;
    let m_main = m - m % NR;
    for i in (0..n_main).step_by(MR) {
        let a_rows: [&[f64]; MR] = core::array::from_fn(|r| &a[(i + r) * k..(i + r + 1) * k]);
        for j in (0..m_main).step_by(NR) {
            let mut acc = [[0.0f64; NR]; MR];
            for (p, b_row) in b.chunks_exact(m).enumerate().take(k) {
                let bp: &[f64; NR] = b_row[j..j + NR].try_into().expect("tile");
                for (acc_row, a_row) in acc.iter_mut().zip(&a_rows) {
                    let x = a_row[p];
                    for (o, &y) in acc_row.iter_mut().zip(bp) {
                        *o += x * y;
                    }
                }
            }
            for (r, acc_row) in acc.iter().enumerate() {
                let o = &mut out[(i + r) * m + j..(i + r) * m + j + NR];
                for (o, &v) in o.iter_mut().zip(acc_row) {
                    *o += v;
                }
            }
        }
        // Leftover columns.
        for r in i..i + MR {
            for j in m_main..m {
                let mut s = 0.0;
                for p in 0..k {
                    s += a[r * k + p] * b[p * m + j];
                }
                out[r * m + j] += s;
            }
        }
    }
    // Leftover rows.
    for r in n_main..n {
        let out_row = &mut out[r * m..(r + 1) * m];
        for p in 0..k {
            let x = a[r * k + p];
            for (o, &y) in out_row.iter_mut().zip(&b[p * m..(p + 1) * m]) {
                *o += x * y;
            }
        }
    }
}

/// `aᵀ * b` without materializing the transpose. Zero entries of `a` are
/// skipped, which pays off on post-ReLU activations.
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(Error::Shape { op: "matmul_tn", left: (a.cols, a.rows), right: b.shape() });
    }
    let (n, m) = (a.cols, b.cols);
    let mut out = vec![0.0; n * m];
    kernels::gemm_tn(&a.data, &b.data, &mut out, n, m);
    let out = DenseMatrix { rows: n, cols: m, data: out };
    out.ensure_finite("matmul_tn")?;
    Ok(out)
}

/// `a * bᵀ`. Transposing `b` (usually a small weight matrix) first keeps
/// the inner loop a vectorizable row update.
pub fn matmul_nt(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(Error::Shape { op: "matmul_nt", left: a.shape(), right: (b.cols, b.rows) });
    }
    matmul(a, &b.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_product() {
        let a = DenseMatrix::from_rows(&[[3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert_eq!(matmul(&DenseMatrix::identity(2), &a).unwrap(), a);
        assert_eq!(matmul(&a, &DenseMatrix::identity(2)).unwrap(), a);
    }

    #[test]
    fn row_times_column() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[3.0], [4.0]]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap().data(), &[11.0]);
    }

    #[test]
    fn mismatch_names_both_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let err = matmul(&a, &a).unwrap_err();
        assert_eq!(err, Error::Shape { op: "matmul", left: (2, 3), right: (2, 3) });
        let msg = alloc::string::ToString::to_string(&err);
        assert!(msg.contains("2x3 vs 2x3"), "{msg}");
    }

    #[test]
    fn transposed_products_agree() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0, -2.0], [0.5, 3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[2.0, 1.0], [-1.0, 0.25]]).unwrap();
        assert_eq!(matmul_tn(&a, &b).unwrap(), matmul(&a.transpose(), &b).unwrap());
        let c = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [0.0, -1.0, 5.0], [2.0, 2.0, 2.0]]).unwrap();
        assert_eq!(matmul_nt(&a, &c).unwrap(), matmul(&a, &c.transpose()).unwrap());
        assert!(matmul_tn(&a, &c).is_err());
        assert!(matmul_nt(&a, &b).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let a = DenseMatrix::from_rows(&[[1e200]]).unwrap();
        assert!(matches!(matmul(&a, &a), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn rejects_nan_on_construction() {
        assert!(DenseMatrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn concat_split_roundtrip() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[5.0], [6.0]]).unwrap();
        let c = a.hconcat(&b).unwrap();
        assert_eq!(c.row(1), &[3.0, 4.0, 6.0]);
        let (l, r) = c.hsplit(2);
        assert_eq!((l, r), (a, b));
    }
}
