//! Desk-scale laboratory for Anderson's orthogonality catastrophe.
//!
//! The crate discretizes a pair of Schrödinger operators `H = -Δ + V₀` and
//! `H' = H + V` in a growing box, computes ground-state overlaps, Anderson
//! integrals and spectral shifts of the induced Fermi seas, and compares the
//! observed logarithmic growth with the decay exponent predicted from
//! scattering theory.

pub mod bessel;
pub mod error;
pub mod model;
pub mod overlap;
pub mod scaling;
pub mod scattering;
pub mod spectra;
pub mod tridiag;

pub use error::{Error, Result};
