//! Dense matrices, the seeded PRNG, initialization, Adam and the small set
//! of differentiable primitives shared by every model.

mod adam;
mod gradcheck;
mod init;
mod linear;
mod matrix;
mod ops;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{finite_difference_check, GradCheckReport};
pub use init::glorot_uniform;
pub use linear::Linear;
pub use matrix::{matmul, matmul_nt, matmul_tn, DenseMatrix};
pub use ops::{dropout, relu, relu_backward, DropoutMask, Mode};
pub use rng::Prng;
