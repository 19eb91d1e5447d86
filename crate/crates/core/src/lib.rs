//! Spin Wigner function kernels tailored to probabilistic-unitary noise.
//!
//! The crate builds phase-space kernels for finite-dimensional systems,
//! checks the Stratonovich-Weyl conditions by quadrature, simulates the
//! matching noise channels and inverts their attenuation of expectation values.
//!
//! Layout:
//! - [`operator`]: dense matrices, Hermitian bases, density matrices
//! - [`quadrature`]: Gauss rules and product grids
//! - [`harmonics`]: real hyperspherical harmonics and convolution on spheres
//! - [`coherent`]: coherent-state families and coefficient tables
//! - [`kernels`]: kernel constructions, verification, Wigner transform
//! - [`noise`]: probabilistic-unitary channels and the Bell-pair gadget
//! - [`mitigation`]: attenuation profiles and rescaled expectation values
//! - [`formats`]: JSON and CSV interchange

pub mod coherent;
pub mod error;
pub mod formats;
pub mod harmonics;
pub mod kernels;
pub mod mitigation;
pub mod noise;
pub mod operator;
pub mod quadrature;

pub use error::{Error, Result};

/// Library version embedded in every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
