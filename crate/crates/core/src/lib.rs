//! Qubits coupled to photons hopping on hyperbolic lattices.
//!
//! The crate builds finite `{p,q}` tessellations of the Poincaré disk, the
//! single-excitation qubit–photon Hamiltonian on them, and the observables
//! derived from it: spectra and densities of states, lattice and continuum
//! Green functions, bound states, qubit relaxation and effective spin models.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundstates;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod hamiltonian;
pub mod numeric;
pub mod special;
pub mod spectral;
pub mod spinmodel;
pub mod tessellation;

pub use error::{Error, Result};
