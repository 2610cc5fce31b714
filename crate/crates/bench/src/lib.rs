//! Fixtures shared by the benchmarks.

use pinning_core::radial::{build_basis, build_integral_tables};
use pinning_core::sampling::random_tables;
use pinning_core::{IntegralTables, OrbitalKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const A: f64 = 2.6864;
pub const B: f64 = 1.2751;

/// Lithium integral tables with `m` Shull-Lowdin functions.
pub fn lithium_tables(m: usize) -> IntegralTables {
    let basis = build_basis(m, A, B).expect("valid basis");
    build_integral_tables(&basis, 3.0).expect("valid tables")
}

/// Reproducible random tables of the given kind and size.
pub fn random(kind: OrbitalKind, n: usize, real: bool, seed: u64) -> IntegralTables {
    random_tables(&mut ChaCha8Rng::seed_from_u64(seed), kind, n, real)
}
