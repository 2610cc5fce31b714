//! Pinned three-determinant MCSCF in the Borland-Dennis setting.
//!
//! The crate is organized bottom-up:
//!
//! * [`gpc`]: natural occupation numbers, Pauli and generalized Pauli
//!   constraints, distances to the Hartree-Fock point and to the pinned facet.
//! * [`fock`]: Slater determinants, wavefunctions, one-particle reduced density
//!   matrices, natural orbitals, selection rules, Slater-Condon matrix
//!   elements and full configuration interaction.
//! * [`radial`]: Shull-Lowdin and hydrogen-like s-orbitals with closed-form
//!   integrals, and the integral tables of an atom with nuclear charge `Z`.
//! * [`ansatz`]: the pinned state `alpha|1,2,3> + beta|1,4,5> + gamma|2,4,6>`
//!   with its two spin-adapted orbital assignments and orbital rotations.
//! * [`solver`]: exponent optimization, Hartree-Fock pre-optimization and the
//!   pinned MCSCF solver.
//! * [`bounds`]: exact-spectrum diagnostics relating facet distance to the
//!   recovered correlation energy.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod bounds;
mod dd;
pub mod error;
pub mod fock;
pub mod gpc;
pub mod oracle;
pub mod radial;
pub mod sampling;
pub mod solver;
pub mod tables;

pub use error::{Error, Result};
pub use tables::{IntegralTables, OrbitalKind};
pub use ansatz::{BDCoefficients, OrbitalRotation, SpinAssignment};
pub use bounds::BoundReport;
pub use fock::{Determinant, Wavefunction};
pub use gpc::{ConstraintReport, OccupationVector};
pub use radial::RadialFunction;
pub use solver::{AssignmentPolicy, SolveResult, SolverConfig};
