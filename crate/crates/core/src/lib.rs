//! Random walks decorated by transposition products on `Z^d` and small graphs:
//! exact and sampled return probabilities, flip classes, the killed chain on
//! boxes, Dirichlet spectra, symmetric-group representations, and density of
//! states bounds.

pub mod chain;
pub mod dirichlet;
pub mod error;
pub mod ids;
pub mod lehmer;
pub mod peierls;
pub mod perm;
pub mod scalar;
pub mod spectra;
pub mod verify;
pub mod walk;
pub mod young;

pub use error::{Error, Result};
pub use perm::{Site, SparsePermutation};
pub use scalar::{Real, Scalar};
pub use walk::{MonteCarloEstimate, PathStatistics, WalkPath};

/// Exact probabilities.
pub type ExactProb = num_rational::BigRational;
/// Floating point probabilities.
pub type Prob = f64;
/// Single precision probabilities, for large chain sweeps.
pub type Prob32 = f32;

pub type ChainSweepF64 = chain::ChainSweep<Prob>;
pub type ChainSweepExact = chain::ChainSweep<ExactProb>;
pub type IrrepMatricesF64 = young::IrrepMatrices<f64>;
