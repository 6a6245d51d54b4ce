//! Quasienergy states of a parametrically driven nonlinear oscillator.
//!
//! The oscillator is driven near twice its eigenfrequency. In the frame
//! rotating at half the drive frequency its dynamics is governed by the
//! time-independent RWA Hamiltonian
//!
//! ```text
//! H = -δ n + (n² + n)/2 + (f/2)(a² + a†²)
//! ```
//!
//! All quantities use ħ = 1 with energies and rates in units of the
//! nonlinearity `V` and time in units of `1/V`. The dimensionless controls are
//! the detuning `δ = δω_F/V`, the drive `f = F̃/V`, the damping `γ̃ = Γ/V` and
//! the ramp speed `s̃ = s₀/V²`. Only [`floquet`] works with lab-frame
//! frequencies.
//!
//! The crate is `no_std` and needs only `alloc`; file formats, configuration
//! and the command-line driver live in the `paraosc` crate.

#![no_std]
// `num_traits::Float` supplies the libm float methods; when another crate in
// the build enables std the inherent methods win and the import goes unused.
#![allow(unused_imports)]

extern crate alloc;

pub mod error;
pub mod floquet;
pub mod fock;
pub mod lz;
pub mod ode;
pub mod open;
pub mod radiation;
pub mod ramp;
pub mod rwa;
pub mod special;
pub mod spectrum;
pub mod wigner;

mod linalg;

pub use error::{Error, Result};
pub use fock::{ComplexOperator, DensityMatrix, FockSpace, Parity, StateVector};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
