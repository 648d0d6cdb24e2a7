use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::vector::{dot_words, tail_mask, words_for, BitVector, WORD_BITS};
use crate::error::{check_dim, Error, Result};
use crate::rng::SeededStream;

/// Dense row-major GF(2) matrix; each row is padded to whole words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[BitVector]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            check_dim("BitMatrix::from_rows", cols, row.len())?;
            m.row_words_mut(i).copy_from_slice(row.words());
        }
        Ok(m)
    }

    /// Uniformly random matrix drawn from `stream`, row by row.
    pub fn random(rows: usize, cols: usize, stream: &mut SeededStream) -> Self {
        let mut m = Self::zeros(rows, cols);
        stream.fill_words(&mut m.data);
        m.canonicalize();
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols, "index out of range");
        (self.data[i * self.stride + j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, bit: bool) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        let w = &mut self.data[i * self.stride + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        if bit {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub(crate) fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> BitVector {
        BitVector::from_words(self.cols, self.row_words(i).to_vec()).expect("row width")
    }

    /// `self · v` over GF(2).
    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        self.mul_vec_top(v, self.rows)
    }

    /// Product of the first `rows` rows with `v`, i.e. `top_rows(self, rows) · v`.
    pub fn mul_vec_top(&self, v: &BitVector, rows: usize) -> Result<BitVector> {
        check_dim("mat_vec_mul", self.cols, v.len())?;
        if rows > self.rows {
            return Err(Error::DimensionMismatch {
                op: "mat_vec_mul rows",
                expected: self.rows,
                actual: rows,
            });
        }
        let mut out = BitVector::zeros(rows);
        let vw = v.words();
        let ow = out.words_mut();
        for i in 0..rows {
            if dot_words(self.row_words(i), vw) {
                ow[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    /// Size in bits of the matrix as sent on the wire.
    pub fn bit_len(&self) -> usize {
        self.rows * self.cols
    }

    fn canonicalize(&mut self) {
        if self.stride == 0 {
            return;
        }
        let mask = tail_mask(self.cols);
        for i in 0..self.rows {
            self.data[i * self.stride + self.stride - 1] &= mask;
        }
    }

    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.data.iter().flat_map(|w| w.to_le_bytes()).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(rows: usize, cols: usize, s: &str) -> Result<Self> {
        let stride = words_for(cols);
        let expected = rows * stride * 8;
        let bytes = hex::decode(s).map_err(|e| Error::Encoding(e.to_string()))?;
        if bytes.len() != expected {
            return Err(Error::Encoding(format!(
                "{} hex bytes cannot hold a {rows}x{cols} matrix",
                bytes.len()
            )));
        }
        let data: Vec<u64> = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let mut m = Self {
            rows,
            cols,
            stride,
            data,
        };
        let before = m.data.clone();
        m.canonicalize();
        if m.data != before {
            return Err(Error::Encoding("padding bits are not zero".into()));
        }
        Ok(m)
    }
}

/// Reference product used by tests: explicit per-entry parity, no word tricks.
#[cfg(test)]
pub(crate) fn mul_vec_scalar(m: &BitMatrix, v: &BitVector) -> BitVector {
    BitVector::from_bits(
        (0..m.rows()).map(|i| (0..m.cols()).fold(false, |acc, j| acc ^ (m.get(i, j) & v.get(j)))),
    )
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({}x{})", self.rows, self.cols)?;
        for i in 0..self.rows.min(16) {
            for j in 0..self.cols.min(96) {
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct HexMatrix {
    rows: usize,
    cols: usize,
    hex: String,
}

impl Serialize for BitMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HexMatrix {
            rows: self.rows,
            cols: self.cols,
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let h = HexMatrix::deserialize(d)?;
        BitMatrix::from_hex(h.rows, h.cols, &h.hex).map_err(serde::de::Error::custom)
    }
}
