//! Matrix-valued spherical functions of the pair `(SL(2,C), SU(2))`.
//!
//! For a K-type `ell` and a complex spectral parameter `p` the crate builds the
//! `ell + 1` families `H_k(t, p)`, `0 < t < 1`, evaluates them, and checks the
//! identities they satisfy: the radial ODEs, boundary and `t -> 0` limits,
//! parameter equivalences, adjoints, and a three-term recursion in `p`.

pub mod bispectral;
pub mod error;
pub mod geometry;
pub mod lsq;
pub mod repmat;
pub mod specfun;
pub mod spherical;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Largest modulus among complex entries.
pub fn max_abs<'a>(it: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    it.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}
