//! Deterministic primitives shared by the rest of the crate: seeded randomness,
//! Gaussian draws, closed-form 2x2 spectra and 1D optimal transport.

mod linalg2;
mod rng;
pub(crate) mod transport;

pub use linalg2::{cond2x2, eig2x2, Matrix2};
pub use rng::{gaussian_sample, Rng};
pub use transport::wasserstein2_1d;
