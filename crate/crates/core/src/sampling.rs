//! Seeded random instances: integral tables, unitaries and states. Used by
//! the verification suites and the tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::tables::{IntegralTables, OrbitalKind};

fn sym(rng: &mut impl Rng) -> f64 {
    rng.random_range(-1.0..1.0)
}

fn complex(rng: &mut impl Rng, real: bool) -> Complex64 {
    Complex64::new(sym(rng), if real { 0.0 } else { sym(rng) })
}

/// Random antihermitian matrix with entries of magnitude up to `scale`.
pub fn random_antihermitian(rng: &mut impl Rng, n: usize, scale: f64, real: bool) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        if !real {
            m[(i, i)] = Complex64::new(0.0, scale * sym(rng));
        }
        for j in i + 1..n {
            let z = complex(rng, real) * scale;
            m[(i, j)] = z;
            m[(j, i)] = -z.conj();
        }
    }
    m
}

/// Haar-like random unitary (orthogonal when `real`).
pub fn random_unitary(rng: &mut impl Rng, n: usize, real: bool) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(n, n, |_, _| complex(rng, real));
    m.qr().q()
}

/// Random tables with the symmetries of a hermitian two-body operator. The
/// one-body part is shifted so that low-index orbitals are favoured, which
/// keeps the spectra of small test problems well separated.
pub fn random_tables(rng: &mut impl Rng, kind: OrbitalKind, n: usize, real: bool) -> IntegralTables {
    let zero = Complex64::new(0.0, 0.0);
    let mut h = vec![zero; n * n];
    for p in 0..n {
        h[p * n + p] = Complex64::new(sym(rng) + 1.5 * p as f64 - 2.0, 0.0);
        for q in p + 1..n {
            let z = complex(rng, real) * 0.5;
            h[p * n + q] = z;
            h[q * n + p] = z.conj();
        }
    }
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    let raw: Vec<Complex64> = (0..n.pow(4)).map(|_| complex(rng, real) * 0.3).collect();
    let mut g = vec![zero; n.pow(4)];
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let mut orbit = vec![
                        raw[idx(p, q, r, s)],
                        raw[idx(q, p, s, r)].conj(),
                        raw[idx(r, s, p, q)],
                        raw[idx(s, r, q, p)].conj(),
                    ];
                    if real {
                        orbit.extend([
                            raw[idx(q, p, r, s)],
                            raw[idx(p, q, s, r)],
                            raw[idx(s, r, p, q)],
                            raw[idx(r, s, q, p)],
                        ]);
                    }
                    let mean = orbit.iter().sum::<Complex64>() / orbit.len() as f64;
                    g[idx(p, q, r, s)] = mean;
                }
            }
        }
    }
    // Positive Coulomb diagonal, as for a physical interaction.
    for p in 0..n {
        for r in 0..n {
            let bump = if p == r { 1.0 } else { 0.5 };
            g[idx(p, p, r, r)] += Complex64::new(bump, 0.0);
        }
    }
    IntegralTables::new(kind, n, h, g, 0.0).expect("consistent sizes")
}
