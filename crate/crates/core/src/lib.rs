//! Post-processing of first-principles point-defect results: formation
//! energies and charge transition levels, the Madelung correction for
//! charged cubic supercells, spin-Hamiltonian level structures, C2v
//! selection rules and Stark-shift fits.

pub mod chargecorr;
pub mod cli;
pub mod dataset;
pub mod report;
pub mod spinham;
pub mod stark;
pub mod symmetry;
pub mod thermo;
pub mod units;

pub use dataset::{load_dataset, Dataset, DatasetError};
