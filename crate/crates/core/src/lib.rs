//! Helmholtz free energies for multicomponent fluids, built from measurable
//! constitutive data.
//!
//! The crate assembles the free energy density f(T, ρ) of a mixture from a
//! molar-volume law υ̂(T, p, x), the specific heat at one reference pressure
//! and reference entropy/enthalpy data, then derives pressure, chemical
//! potentials, Hessians and caloric functions from it. On top of that sit
//! consistency audits (convexity in ρ, concavity in T, the thermal-expansion
//! versus compressibility inequality) and numerical diagnostics for the
//! incompressible limit: singular and continuous limit free energies,
//! convergence-rate sweeps, convex conjugation and the dual first-order PDE.

pub mod constitutive;
pub mod eos;
pub mod error;
pub mod limits;
pub mod mixing;
pub mod numerics;
pub mod potentials;
pub mod regimes;
pub mod stability;
pub mod state;

pub use error::{Error, Result};

/// Crate version, embedded in every report header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
