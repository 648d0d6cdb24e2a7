use serde::{Deserialize, Serialize};

use super::matrix::BitMatrix;
use super::vector::{words_for, BitVector, WORD_BITS};
use crate::error::{check_dim, Error, Result};
use crate::rng::SeededStream;

/// A binary Toeplitz matrix stored as its `rows + cols - 1` diagonal bits.
///
/// Entry `(i, j)` is `diag_seed[i - j + cols - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToeplitzMatrix {
    rows: usize,
    cols: usize,
    diag_seed: BitVector,
}

fn seed_len(rows: usize, cols: usize) -> usize {
    (rows + cols).saturating_sub(1)
}

impl ToeplitzMatrix {
    pub fn new(rows: usize, cols: usize, diag_seed: BitVector) -> Result<Self> {
        check_dim("ToeplitzMatrix::new", seed_len(rows, cols), diag_seed.len())?;
        Ok(Self {
            rows,
            cols,
            diag_seed,
        })
    }

    pub fn random(rows: usize, cols: usize, stream: &mut SeededStream) -> Self {
        let diag_seed = BitVector::random(seed_len(rows, cols), stream);
        Self {
            rows,
            cols,
            diag_seed,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn diag_seed(&self) -> &BitVector {
        &self.diag_seed
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "index out of range");
        self.diag_seed.get(i + self.cols - 1 - j)
    }

    pub fn expand(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Recovers the diagonal seed from a dense matrix, rejecting non-Toeplitz input.
    pub fn from_dense(m: &BitMatrix) -> Result<Self> {
        let (rows, cols) = (m.rows(), m.cols());
        let mut seed = BitVector::zeros(seed_len(rows, cols));
        for k in 0..seed.len() {
            // Read each diagonal at its first cell: row max(0, k-cols+1).
            let i = (k + 1).saturating_sub(cols);
            let j = i + cols - 1 - k;
            seed.set(k, m.get(i, j));
        }
        let t = Self::new(rows, cols, seed)?;
        if t.expand() != *m {
            return Err(Error::InvalidParams("matrix is not Toeplitz".into()));
        }
        Ok(t)
    }

    /// Row vector times matrix: `out[j] = sum_i v[i] * M[i][j]` over GF(2).
    ///
    /// Column `j` of the matrix is the seed window starting at `cols - 1 - j`,
    /// so each output bit is one windowed dot product against the seed.
    pub fn vec_mul(&self, v: &BitVector) -> Result<BitVector> {
        check_dim("vec_mat_mul", self.rows, v.len())?;
        let mut out = BitVector::zeros(self.cols);
        let vw = v.words();
        let nw = words_for(self.rows);
        for j in 0..self.cols {
            let base = self.cols - 1 - j;
            let mut acc = 0u64;
            for (w, vword) in vw.iter().enumerate().take(nw) {
                acc ^= vword & self.diag_seed.word_at(base + w * WORD_BITS);
            }
            if acc.count_ones() & 1 == 1 {
                out.set(j, true);
            }
        }
        Ok(out)
    }
}

/// `v · m` for a Toeplitz `m`, without materializing the dense matrix.
pub fn vec_mat_mul(v: &BitVector, m: &ToeplitzMatrix) -> Result<BitVector> {
    m.vec_mul(v)
}
