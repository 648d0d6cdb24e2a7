//! Packed linear algebra over GF(2).

mod matrix;
mod sample;
mod toeplitz;
mod vector;

pub use matrix::BitMatrix;
pub use sample::{sample_noise, sample_uniform_matrix, sample_uniform_vector, NoiseRate};
pub use toeplitz::{vec_mat_mul, ToeplitzMatrix};
pub use vector::{hamming_distance, hamming_weight, BitVector};

#[cfg(test)]
pub(crate) use matrix::mul_vec_scalar;

/// `m · v` over GF(2).
pub fn mat_vec_mul(m: &BitMatrix, v: &BitVector) -> crate::Result<BitVector> {
    m.mul_vec(v)
}
