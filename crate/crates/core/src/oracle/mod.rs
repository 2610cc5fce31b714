//! Independent reference implementations used to cross-check the fast code
//! paths in tests and in the `verify` suites.

pub mod fock;
pub mod quadrature;
