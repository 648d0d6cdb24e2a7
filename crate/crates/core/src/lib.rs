//! HB-family authentication over GF(2), a key-tree scheme for private tag
//! identification, closed-form error-rate analysis, and a seeded Monte Carlo
//! simulator.

pub mod analysis;
pub mod error;
pub mod gf2;
pub mod hb;
pub mod rng;
pub mod sim;
pub mod tree;

pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVector, NoiseRate, ToeplitzMatrix};
pub use hb::ProtocolParams;
pub use rng::{RootSeed, SeededStream};

/// Default floating-point probability type.
pub type Prob = f64;
/// Exact rational probability type.
pub type ExactProb = num_rational::BigRational;
pub type BranchModel64 = analysis::BranchModel<f64>;
pub type BranchModel32 = analysis::BranchModel<f32>;
pub type BranchModelExact = analysis::BranchModel<ExactProb>;
