//! Slow reference implementations of the determinant algebra.
//!
//! The Hamiltonian is assembled by applying every term of the
//! second-quantized operator to every determinant, and the 1-RDM is obtained
//! by contracting the antisymmetrized first-quantization wavefunction.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{Determinant, Wavefunction};
use crate::tables::IntegralTables;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Applies `a_i` (bit `i`) to a determinant, counting transpositions by hand.
fn annihilate(occ: &[usize], i: usize) -> Option<(f64, Vec<usize>)> {
    let pos = occ.iter().position(|&x| x == i)?;
    let mut rest = occ.to_vec();
    rest.remove(pos);
    Some((if pos % 2 == 0 { 1.0 } else { -1.0 }, rest))
}

/// Applies `a+_i`: prepend, then bubble into sorted position.
fn create(occ: &[usize], i: usize) -> Option<(f64, Vec<usize>)> {
    if occ.contains(&i) {
        return None;
    }
    let mut v = vec![i];
    v.extend_from_slice(occ);
    let mut sign = 1.0;
    let mut k = 0;
    while k + 1 < v.len() && v[k] > v[k + 1] {
        v.swap(k, k + 1);
        sign = -sign;
        k += 1;
    }
    Some((sign, v))
}

fn to_det(occ: &[usize]) -> Determinant {
    Determinant::from_bits(occ.iter().fold(0u64, |b, &i| b | 1 << i))
}

/// `<a|H|b>` for all pairs in `basis`, summing every operator term.
pub fn hamiltonian_matrix(t: &IntegralTables, basis: &[Determinant]) -> DMatrix<Complex64> {
    let d = t.n_spin_orbitals();
    let index = |k: &Determinant| basis.iter().position(|x| x == k);
    let mut m = DMatrix::from_element(basis.len(), basis.len(), ZERO);
    for (col, b) in basis.iter().enumerate() {
        let occ: Vec<usize> = b.indices().collect();
        m[(col, col)] += Complex64::new(t.constant(), 0.0);
        for p in 0..d {
            for q in 0..d {
                let h = t.one_body(p, q);
                if h == ZERO {
                    continue;
                }
                let Some((s1, o1)) = annihilate(&occ, q) else { continue };
                let Some((s2, o2)) = create(&o1, p) else { continue };
                if let Some(row) = index(&to_det(&o2)) {
                    m[(row, col)] += h * (s1 * s2);
                }
            }
        }
        // 1/2 sum <pq|rs> a+_p a+_q a_s a_r
        for p in 0..d {
            for q in 0..d {
                for r in 0..d {
                    for s in 0..d {
                        let v = t.two_body(p, q, r, s);
                        if v == ZERO {
                            continue;
                        }
                        let Some((s1, o1)) = annihilate(&occ, r) else { continue };
                        let Some((s2, o2)) = annihilate(&o1, s) else { continue };
                        let Some((s3, o3)) = create(&o2, q) else { continue };
                        let Some((s4, o4)) = create(&o3, p) else { continue };
                        if let Some(row) = index(&to_det(&o4)) {
                            m[(row, col)] += v * (0.5 * s1 * s2 * s3 * s4);
                        }
                    }
                }
            }
        }
    }
    m
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    if n == 0 {
        return vec![(vec![], 1.0)];
    }
    let mut out = Vec::new();
    for (perm, sign) in permutations(n - 1) {
        for pos in 0..=perm.len() {
            let mut p = perm.clone();
            p.insert(pos, n - 1);
            // Inserting at `pos` moves the new element past `len - pos` others.
            let s = if (perm.len() - pos) % 2 == 0 { sign } else { -sign };
            out.push((p, s));
        }
    }
    out
}

/// `rho = N tr_{N-1} |Psi><Psi|` from the full antisymmetric tensor.
pub fn one_rdm_first_quantized(psi: &Wavefunction) -> DMatrix<Complex64> {
    let d = psi.dimension();
    let n = psi.particles();
    let size = d.pow(n as u32);
    let mut tensor = vec![ZERO; size];
    let norm = (1..=n).map(|k| k as f64).product::<f64>().sqrt();
    let perms = permutations(n);
    for (k, c) in psi.iter() {
        let occ: Vec<usize> = k.indices().collect();
        for (perm, sign) in &perms {
            let idx = perm.iter().fold(0, |acc, &j| acc * d + occ[j]);
            tensor[idx] += c * (sign / norm);
        }
    }
    let rest = size / d;
    let mut rho = DMatrix::from_element(d, d, ZERO);
    for p in 0..d {
        for q in 0..d {
            let s: Complex64 = (0..rest).map(|x| tensor[p * rest + x] * tensor[q * rest + x].conj()).sum();
            rho[(p, q)] = s * n as f64;
        }
    }
    rho
}
