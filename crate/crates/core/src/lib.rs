//! Numerical thermodynamic formalism on subshifts defined by an admissibility
//! relation and an a priori measure on the alphabet.
//!
//! The crate works with locally constant potentials, for which the
//! generalized Ruelle operator is an exact finite nonnegative matrix acting on
//! functions of the leading `k - 1` symbols. On top of the maximal eigendata it
//! provides Gibbs states as cylinder functionals, entropy and pressure,
//! zero-temperature sweeps with a max-mean-cycle oracle, involution kernels
//! with the bilateral Gibbs extension, and countable Markov shifts with
//! eventually constant predecessor columns.

pub mod cms;
mod error;
pub mod involution;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod potential;
pub mod thermo;
pub mod transfer;
pub mod zerotemp;

pub use error::{Error, Result};
pub use measure::CylinderMeasure;
pub use model::{build_model, Alphabet, AdmissibilityModel, AprioriMeasure, SubshiftModel, Word};
pub use potential::Potential;
pub use transfer::{assemble_operator, power_iterate, GapRatio, SpectralData, TransferMatrix};

/// Default sup-norm tolerance for eigen-solvers.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default iteration cap for eigen-solvers.
pub const DEFAULT_MAX_ITER: usize = 100_000;
