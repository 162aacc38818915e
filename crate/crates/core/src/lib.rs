//! Multistate contracted VQE (MC-VQE) energies and fully response-relaxed
//! analytical gradients on a dense statevector simulator.
//!
//! The crate works at the level of active-space Hamiltonian matrix elements:
//! it consumes E_ext, (p|h|q) and (pq|rs), and returns state energies and
//! the relaxed one- and two-particle densities, which are exactly the
//! derivatives dE/d(p|h|q) and 2·dE/d(pq|rs).

pub mod density;
pub mod error;
pub mod fabric;
pub mod fci;
pub mod fermion;
pub mod fixtures;
pub mod integrals;
pub mod jw;
pub mod mcvqe;
pub mod optimize;
pub mod pauli;
pub mod response;
pub mod shift;
pub mod statevector;
pub mod validation;

pub use density::{relaxed_densities, DensityFlavor, DensityPair};
pub use error::{Error, Result};
pub use fabric::{FabricLayout, GateKind};
pub use integrals::{ActiveSpaceIntegrals, ElementId, SectorSpec};
pub use jw::{map_hamiltonian, map_number_operators, JwHamiltonian};
pub use mcvqe::{McVqeProblem, McVqeSolution, SubspaceResult};
pub use optimize::LbfgsOptions;
pub use pauli::{PauliOperator, PauliWord};
pub use response::{GradientRecord, ResponseSettings, ResponseSolution};
pub use shift::{FdStencil, ShiftRule};
pub use statevector::{CsfKind, CsfSpec, Statevector};
