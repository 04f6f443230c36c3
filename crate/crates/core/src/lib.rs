//! Numerics for a q-deformed harmonic oscillator built on q-Charlier
//! polynomials.
//!
//! Layers, bottom up:
//! - [`qcore`]: q-shifted factorials and terminating basic hypergeometric sums
//! - [`charlier`]: the polynomials, their weight and structural identities
//! - [`oscillator`]: wave functions, ladder operators, Hamiltonian
//! - [`coherent`]: eigenstates of the annihilation operator
//! - [`fourier`]: the bilinear kernel and the discrete q-Fourier transform
//! - [`biortho`]: biorthogonal `3 phi 2` rational functions
//! - [`verify`]: identity checks that back the `qosc verify` command

pub mod biortho;
pub mod charlier;
pub mod coherent;
mod dd;
pub mod error;
pub mod fourier;
pub mod oscillator;
pub mod qcore;
pub mod scaled;
pub mod verify;

pub use charlier::{LatticePoint, QContext};
pub use error::{QError, Result};
pub use oscillator::GridFunction;
pub use qcore::CNum;
pub use scaled::Scaled;
