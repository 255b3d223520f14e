//! Spin Hamiltonian of a defect electron spin S coupled to one nucleus I.
//!
//! Matrices live on the electron ⊗ nuclear product space, each factor in the
//! descending-m basis, and are expressed in MHz.

mod levels;
mod operators;
mod terms;

use thiserror::Error;

pub use levels::{
    diagonalize, diagonalize_matrix, transition_table, zeeman_sweep, LevelDiagram, OpticalLine, SpinLabel, SweepOptions,
    TransitionFilter, ZeemanSweep,
};
pub use operators::{hermiticity_defect, spin_operators, Spin, SpinOperatorSet, CMatrix, C64};
pub use terms::{
    build_hamiltonian, build_hamiltonian_with, effective_hamiltonian, hyperfine_term, quadrupole_prefactor_mhz,
    quadrupole_term, zfs_term, HamiltonianOptions, HamiltonianTerms, SpinHamiltonian, SpinWarning, ZfsConvention,
};

pub(crate) use operators::max_abs;

/// Relative tolerance for the Hermiticity check.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("invalid spin {0}: must be a non-negative multiple of 1/2")]
    InvalidSpin(f64),
    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NonHermitian { defect: f64 },
    #[error("matrix dimension {found} does not match (2S+1)(2I+1) = {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("field axis must be a finite non-zero vector")]
    InvalidAxis,
    #[error("field values must be finite and sorted ascending")]
    UnsortedFields,
    #[error("non-finite magnetic field")]
    NonFiniteField,
}
