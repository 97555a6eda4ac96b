use super::{glorot_uniform, matmul, matmul_nt, matmul_tn, DenseMatrix, Prng};
use crate::{Error, Result};

/// Affine map `x * W + b` applied to each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: DenseMatrix,
    /// `1 x out` row vector.
    pub bias: DenseMatrix,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn new(fan_in: usize, fan_out: usize, rng: &mut Prng) -> Self {
        Linear { weight: glorot_uniform(fan_in, fan_out, rng), bias: DenseMatrix::zeros(1, fan_out) }
    }

    pub fn from_parts(weight: DenseMatrix, bias: DenseMatrix) -> Result<Self> {
        if bias.rows() != 1 || bias.cols() != weight.cols() {
            return Err(Error::Shape { op: "Linear", left: weight.shape(), right: bias.shape() });
        }
        Ok(Linear { weight, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = matmul(x, &self.weight)?;
        out.add_row_broadcast(&self.bias)?;
        out.ensure_finite("linear forward")?;
        Ok(out)
    }

    /// Given the forward input `x` and the gradient at the output, returns
    /// `(grad_weight, grad_bias, grad_x)`.
    pub fn backward(
        &self,
        x: &DenseMatrix,
        upstream: &DenseMatrix,
    ) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
        let grad_w = matmul_tn(x, upstream)?;
        let grad_b = upstream.column_sums();
        let grad_x = matmul_nt(upstream, &self.weight)?;
        Ok((grad_w, grad_b, grad_x))
    }
}
