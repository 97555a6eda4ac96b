use super::NormalizedAdjacency;
use crate::numerics::{matmul, matmul_nt, matmul_tn, DenseMatrix, Linear, Prng};
use crate::Result;

/// Graph convolution `Â * H * W + b`, evaluated as `Â * (H * W) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    /// `in x out`.
    pub weight: DenseMatrix,
    /// `1 x out`.
    pub bias: DenseMatrix,
}

impl GcnLayer {
    pub fn new(fan_in: usize, fan_out: usize, rng: &mut Prng) -> Self {
        let Linear { weight, bias } = Linear::new(fan_in, fan_out, rng);
        GcnLayer { weight, bias }
    }

    pub fn from_parts(weight: DenseMatrix, bias: DenseMatrix) -> Result<Self> {
        let Linear { weight, bias } = Linear::from_parts(weight, bias)?;
        Ok(GcnLayer { weight, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    /// Pre-activation output.
    pub fn forward(&self, adjacency: &NormalizedAdjacency, h: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = adjacency.apply(&matmul(h, &self.weight)?)?;
        out.add_row_broadcast(&self.bias)?;
        out.ensure_finite("gcn layer")?;
        Ok(out)
    }

    /// `(grad_weight, grad_bias, grad_h)` from the layer input `h` and the
    /// gradient of the pre-activation output. Uses `Âᵀ = Â`. `grad_h` is
    /// skipped (`None`) when `need_input_grad` is false.
    pub fn backward(
        &self,
        adjacency: &NormalizedAdjacency,
        h: &DenseMatrix,
        upstream: &DenseMatrix,
        need_input_grad: bool,
    ) -> Result<(DenseMatrix, DenseMatrix, Option<DenseMatrix>)> {
        let spread = adjacency.apply(upstream)?;
        let grad_w = matmul_tn(h, &spread)?;
        let grad_b = upstream.column_sums();
        let grad_h = if need_input_grad { Some(matmul_nt(&spread, &self.weight)?) } else { None };
        Ok((grad_w, grad_b, grad_h))
    }
}
