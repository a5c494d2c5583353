//! Dynamical quantum phase transitions of a transverse-field Ising ring
//! coupled to Markovian and non-Markovian dephasing baths through its
//! conserved energy current.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: operator construction, bath rate functions, state preparation, the
//! two evolution engines and the observables measured on their output.
//! File formats, configuration and the command line live in the `dqpt`
//! companion crate.
//!
//! Conventions used throughout:
//!
//! * Units: the bath fundamental frequency Ω sets the scale. Every energy and
//!   rate is expressed in units of Ω and the bath period is `T = 2π/Ω`. The
//!   energy current carries units of Ω² and the couplings `g_l` units of
//!   Ω⁻¹, so `g_l Ĵ` is a frequency.
//! * Sites are labelled 1..=N. Site 1 is the most significant factor of every
//!   Kronecker product, so basis index `b` has site `j` in state `|↓⟩` iff
//!   bit `N - j` of `b` is set.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bathrates;
pub mod engine;
mod error;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod prep;
pub mod spinops;

pub use error::{Error, Result};

/// Complex scalar used for all amplitudes and matrix entries.
pub type C64 = num_complex::Complex64;

/// Dense row-major complex matrix.
pub type CMatrix = ndarray::Array2<C64>;

/// Dense complex vector.
pub type CVector = ndarray::Array1<C64>;
