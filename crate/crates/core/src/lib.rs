//! Symmetry-sector level spectroscopy for the J1-J2 Heisenberg ring.
//!
//! The crate provides the building blocks of a variational pipeline that
//! tracks the singlet and triplet excitations of the frustrated spin-1/2
//! chain through their energy crossing: sparse operators and exact
//! diagonalization, pure and density-matrix circuit simulation, equivariant
//! layered ansatz circuits, momentum projection, gate-level noise, and
//! zero-noise extrapolation.

pub mod ansatz;
pub mod error;
pub mod lanczos;
pub mod noise;
pub mod spectroscopy;
pub mod spectrum;
pub mod operators;
pub mod state;
pub mod symmetrize;
pub mod vqe;
pub mod zne;

pub use error::{Error, Result};
