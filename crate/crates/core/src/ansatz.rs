//! The pinned Borland-Dennis state `alpha|1,2,3> + beta|1,4,5> + gamma|2,4,6>`
//! and its embedding into an orbital basis.
//!
//! The labels `1..6` refer to natural spin orbitals. For spin-free tables a
//! [`SpinAssignment`] maps them onto the spin orbitals of the first three
//! spatial orbitals so that all three determinants are spin-adapted
//! doublets. For tables of [`OrbitalKind::SpinOrbital`] kind the labels are
//! the first six spin orbitals and the assignment plays no role.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, Determinant, Wavefunction};
use crate::gpc::OccupationVector;
use crate::tables::{IntegralTables, OrbitalKind};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Labels of the three determinants, 1-based.
pub const BD_CONFIGURATIONS: [[usize; 3]; 3] = [[1, 2, 3], [1, 4, 5], [2, 4, 6]];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BDCoefficients {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl BDCoefficients {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64) -> Result<Self> {
        let c = Self { alpha, beta, gamma };
        let norm2 = c.weights().iter().sum::<f64>();
        if (norm2 - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::NotNormalized(norm2.sqrt()));
        }
        Ok(c)
    }

    pub fn real(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0), Complex64::new(gamma, 0.0))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_vector(v: &Vector3<Complex64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(Self { alpha: v[0] / n, beta: v[1] / n, gamma: v[2] / n })
    }

    pub fn hartree_fock() -> Self {
        Self { alpha: ONE, beta: ZERO, gamma: ZERO }
    }

    pub fn to_vector(&self) -> Vector3<Complex64> {
        Vector3::new(self.alpha, self.beta, self.gamma)
    }

    /// `(|alpha|^2, |beta|^2, |gamma|^2)`.
    pub fn weights(&self) -> [f64; 3] {
        [self.alpha.norm_sqr(), self.beta.norm_sqr(), self.gamma.norm_sqr()]
    }

    /// Multiplies by the phase that makes `alpha` (or the first nonzero
    /// coefficient) real and positive.
    pub fn phase_fixed(&self) -> Self {
        let lead = [self.alpha, self.beta, self.gamma].into_iter().find(|c| c.norm() > 1e-14).unwrap_or(ONE);
        let p = lead.conj() / lead.norm();
        Self { alpha: self.alpha * p, beta: self.beta * p, gamma: self.gamma * p }
    }
}

/// Whether the coefficients order the natural occupation numbers as labelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfConsistency {
    /// `|beta| >= |gamma|`.
    pub beta_ge_gamma: bool,
    /// `|alpha|^2 >= |beta|^2 + |gamma|^2`.
    pub alpha_dominant: bool,
}

impl SelfConsistency {
    pub fn satisfied(&self) -> bool {
        self.beta_ge_gamma && self.alpha_dominant
    }
}

pub fn check_selfconsistency(c: &BDCoefficients) -> SelfConsistency {
    const TOL: f64 = 1e-12;
    let [a, b, g] = c.weights();
    SelfConsistency { beta_ge_gamma: b >= g - TOL, alpha_dominant: a >= b + g - TOL }
}

/// Occupancies of the labels `1..6`:
/// `(|a|^2+|b|^2, |a|^2+|g|^2, |a|^2, |b|^2+|g|^2, |b|^2, |g|^2)`.
pub fn bd_label_occupancies(c: &BDCoefficients) -> [f64; 6] {
    let [a, b, g] = c.weights();
    [a + b, a + g, a, b + g, b, g]
}

/// Natural occupation numbers in closed form. Requires the self-consistency
/// conditions, otherwise the label occupancies are not decreasing.
pub fn bd_non_closed_form(c: &BDCoefficients) -> Result<OccupationVector> {
    OccupationVector::normalized_to(bd_label_occupancies(c).to_vec(), 3)
}

/// The state over the six labelled spin orbitals.
pub fn bd_state(c: &BDCoefficients) -> Result<Wavefunction> {
    let amps = [c.alpha, c.beta, c.gamma];
    let terms = BD_CONFIGURATIONS
        .iter()
        .zip(amps)
        .map(|(occ, a)| Ok((Determinant::new(occ, 6)?, a)))
        .collect::<Result<Vec<_>>>()?;
    Wavefunction::from_terms(6, 3, terms)
}

/// The two spin-adapted ways of attaching the labels to `phi_1, phi_2, phi_3`.
///
/// | label | A        | B        |
/// |-------|----------|----------|
/// | 1     | phi_1 up | phi_2 up |
/// | 2     | phi_2 up | phi_1 up |
/// | 3     | phi_1 dn | phi_1 dn |
/// | 4     | phi_3 up | phi_3 up |
/// | 5     | phi_3 dn | phi_2 dn |
/// | 6     | phi_2 dn | phi_3 dn |
///
/// Under A the determinants are `phi_1^2 phi_2`, `phi_1 phi_3^2`,
/// `phi_2^2 phi_3`; under B the last two trade places.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinAssignment {
    A,
    B,
}

impl SpinAssignment {
    pub const ALL: [SpinAssignment; 2] = [SpinAssignment::A, SpinAssignment::B];

    /// `(spatial orbital, spin)` of labels `1..6`, 0-based orbitals, spin 0 = up.
    pub fn orbitals(self) -> [(usize, u8); 6] {
        match self {
            SpinAssignment::A => [(0, 0), (1, 0), (0, 1), (2, 0), (2, 1), (1, 1)],
            SpinAssignment::B => [(1, 0), (0, 0), (0, 1), (2, 0), (1, 1), (2, 1)],
        }
    }
}

impl fmt::Display for SpinAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpinAssignment::A => "A",
            SpinAssignment::B => "B",
        })
    }
}

impl FromStr for SpinAssignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(SpinAssignment::A),
            "B" | "b" => Ok(SpinAssignment::B),
            _ => Err(Error::InvalidArgument(format!("unknown spin assignment `{s}`"))),
        }
    }
}

/// 0-based spin-orbital index of each label in the tables' own indexing.
pub fn label_embedding(assignment: SpinAssignment, tables: &IntegralTables) -> Result<[usize; 6]> {
    match tables.kind() {
        OrbitalKind::Spatial => {
            if tables.n_orb() < 3 {
                return Err(Error::DimensionMismatch { expected: 3, found: tables.n_orb() });
            }
            Ok(assignment.orbitals().map(|(p, s)| 2 * p + s as usize))
        }
        OrbitalKind::SpinOrbital => {
            if tables.n_orb() < 6 {
                return Err(Error::DimensionMismatch { expected: 6, found: tables.n_orb() });
            }
            Ok([0, 1, 2, 3, 4, 5])
        }
    }
}

/// The three determinants in the tables' indexing with the signs relating
/// them to the labelled determinants: `|l1 l2 l3> = sign |K>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnsatzSpace {
    pub determinants: [Determinant; 3],
    pub signs: [f64; 3],
    pub dimension: usize,
}

pub fn ansatz_space(assignment: SpinAssignment, tables: &IntegralTables) -> Result<AnsatzSpace> {
    let map = label_embedding(assignment, tables)?;
    let mut determinants = [Determinant::from_bits(0); 3];
    let mut signs = [1.0; 3];
    for (k, occ) in BD_CONFIGURATIONS.iter().enumerate() {
        let mut idx: Vec<usize> = occ.iter().map(|&l| map[l - 1]).collect();
        // Parity of the sorting permutation.
        let mut sign = 1.0;
        for i in 0..idx.len() {
            for j in 0..idx.len() - 1 - i {
                if idx[j] > idx[j + 1] {
                    idx.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        determinants[k] = Determinant::from_bits(idx.iter().fold(0u64, |b, &i| b | 1 << i));
        signs[k] = sign;
    }
    Ok(AnsatzSpace { determinants, signs, dimension: tables.n_spin_orbitals() })
}

/// Hamiltonian over the three labelled determinants.
pub fn secular_matrix(space: &AnsatzSpace, tables: &IntegralTables) -> Matrix3<Complex64> {
    Matrix3::from_fn(|i, j| {
        fock::matrix_element(&space.determinants[i], &space.determinants[j], tables) * (space.signs[i] * space.signs[j])
    })
}

/// The state in the tables' spin-orbital indexing.
pub fn embedded_state(c: &BDCoefficients, space: &AnsatzSpace) -> Result<Wavefunction> {
    let amps = [c.alpha, c.beta, c.gamma];
    Wavefunction::from_terms(
        space.dimension,
        3,
        (0..3).map(|k| (space.determinants[k], amps[k] * space.signs[k])),
    )
}

/// `<Psi|H|Psi>` for the pinned state.
pub fn ansatz_energy(c: &BDCoefficients, assignment: SpinAssignment, tables: &IntegralTables) -> Result<f64> {
    let space = ansatz_space(assignment, tables)?;
    let h = secular_matrix(&space, tables);
    let v = c.to_vector();
    Ok((v.adjoint() * h * v)[(0, 0)].re / v.norm_squared())
}

/// Lowest eigenpair of the secular matrix.
pub fn secular_ground(space: &AnsatzSpace, tables: &IntegralTables) -> (f64, BDCoefficients) {
    let h = secular_matrix(space, tables);
    let eig = h.symmetric_eigen();
    let i = eig.eigenvalues.imin();
    let v = eig.eigenvectors.column(i).into_owned();
    let c = BDCoefficients::from_vector(&v).expect("unit eigenvector").phase_fixed();
    (eig.eigenvalues[i], c)
}

/// Antihermitian generator `eta` of the orbital rotation `U = exp(eta)`;
/// the rotated orbitals are `phi'_j = sum_p U_pj phi_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitalRotation {
    eta: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RotationRepr {
    dimension: usize,
    eta: Vec<Vec<Complex64>>,
}

impl Serialize for OrbitalRotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dimension();
        RotationRepr { dimension: n, eta: (0..n).map(|i| (0..n).map(|j| self.eta[(i, j)]).collect()).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrbitalRotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RotationRepr::deserialize(d)?;
        if r.eta.len() != r.dimension || r.eta.iter().any(|row| row.len() != r.dimension) {
            return Err(serde::de::Error::custom("rotation generator has the wrong shape"));
        }
        let m = DMatrix::from_fn(r.dimension, r.dimension, |i, j| r.eta[i][j]);
        OrbitalRotation::new(m).map_err(serde::de::Error::custom)
    }
}

impl OrbitalRotation {
    pub const ANTIHERMITIAN_TOL: f64 = 1e-12;

    pub fn new(eta: DMatrix<Complex64>) -> Result<Self> {
        if eta.nrows() != eta.ncols() {
            return Err(Error::DimensionMismatch { expected: eta.nrows(), found: eta.ncols() });
        }
        let defect = (&eta + eta.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > Self::ANTIHERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!("generator is not antihermitian (defect {defect:e})")));
        }
        Ok(Self { eta })
    }

    pub fn identity(n: usize) -> Self {
        Self { eta: DMatrix::from_element(n, n, ZERO) }
    }

    /// Generator of a unitary, via its principal logarithm.
    pub fn from_unitary(u: &DMatrix<Complex64>) -> Result<Self> {
        let n = u.nrows();
        let defect = (u.adjoint() * u - DMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > 1e-10 {
            return Err(Error::InvalidArgument(format!("matrix is not unitary (defect {defect:e})")));
        }
        let (q, t) = nalgebra::Schur::new(u.clone()).unpack();
        let log_t = DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(0.0, t[(i, i)].arg()) } else { ZERO });
        let l = &q * log_t * q.adjoint();
        Ok(Self { eta: (&l - l.adjoint()) * Complex64::new(0.5, 0.0) })
    }

    pub fn dimension(&self) -> usize {
        self.eta.nrows()
    }

    pub fn eta(&self) -> &DMatrix<Complex64> {
        &self.eta
    }

    pub fn unitary(&self) -> DMatrix<Complex64> {
        self.eta.exp()
    }

    /// `exp(eta) exp(other.eta)` as a single rotation.
    pub fn compose(&self, other: &OrbitalRotation) -> Result<Self> {
        Self::from_unitary(&(self.unitary() * other.unitary()))
    }
}

/// Derivative of `exp` at `x` in direction `e`, the upper-right block of
/// `exp([[x, e], [0, x]])`.
pub fn exp_frechet(x: &DMatrix<Complex64>, e: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = x.nrows();
    let mut big = DMatrix::from_element(2 * n, 2 * n, ZERO);
    big.view_mut((0, 0), (n, n)).copy_from(x);
    big.view_mut((n, n), (n, n)).copy_from(x);
    big.view_mut((0, n), (n, n)).copy_from(e);
    big.exp().view((0, n), (n, n)).into_owned()
}

/// Tables expressed over the rotated orbitals `exp(eta)`.
pub fn rotate_orbitals(rot: &OrbitalRotation, tables: &IntegralTables) -> Result<IntegralTables> {
    if rot.dimension() != tables.n_orb() {
        return Err(Error::DimensionMismatch { expected: tables.n_orb(), found: rot.dimension() });
    }
    tables.transformed(&rot.unitary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{all_determinants, apply_number_combo, one_rdm, natural_occupations, NumberOperatorCombo};
    use crate::sampling::{random_antihermitian, random_tables};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    pub(crate) fn random_coefficients(rng: &mut ChaCha8Rng) -> BDCoefficients {
        let v = Vector3::from_fn(|_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        BDCoefficients::from_vector(&v).unwrap()
    }

    /// Coefficients inside the self-consistent region, where the labels are
    /// the natural orbitals in decreasing order.
    fn ordered_coefficients(rng: &mut ChaCha8Rng) -> BDCoefficients {
        let a2: f64 = rng.random_range(0.5..=1.0);
        let rest = 1.0 - a2;
        let g2: f64 = rng.random_range(0.0..=0.5) * rest;
        let phase = |rng: &mut ChaCha8Rng| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        BDCoefficients::new(
            phase(rng) * a2.sqrt(),
            phase(rng) * (rest - g2).sqrt(),
            phase(rng) * g2.sqrt(),
        )
        .unwrap()
    }

    #[test]
    fn coefficient_validation() {
        assert!(BDCoefficients::real(1.0, 0.1, 0.0).is_err());
        assert!(BDCoefficients::real(0.8f64.sqrt(), 0.15f64.sqrt(), 0.05f64.sqrt()).is_ok());
        let fixed = BDCoefficients::new(Complex64::new(0.0, 1.0), c(0.0), c(0.0)).unwrap().phase_fixed();
        assert_eq!(fixed.alpha, c(1.0));
    }

    #[test]
    fn state_examples() {
        let hf = bd_state(&BDCoefficients::hartree_fock()).unwrap();
        assert_eq!(hf.support(0.0).len(), 1);
        let no = natural_occupations(&one_rdm(&hf).unwrap()).unwrap();
        assert_eq!(no.occupations.entries(), &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);

        let k = BDCoefficients::real(0.8f64.sqrt(), 0.15f64.sqrt(), 0.05f64.sqrt()).unwrap();
        let psi = bd_state(&k).unwrap();
        let no = natural_occupations(&one_rdm(&psi).unwrap()).unwrap();
        for (a, b) in no.occupations.entries().iter().zip([0.95, 0.85, 0.8, 0.2, 0.15, 0.05]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(crate::gpc::bd_inequality(&no.occupations).unwrap().abs() < 1e-14);
        let closed = bd_non_closed_form(&k).unwrap();
        for (a, b) in closed.entries().iter().zip(no.occupations.entries()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn self_consistency_examples() {
        let ok = BDCoefficients::real(0.8f64.sqrt(), 0.15f64.sqrt(), 0.05f64.sqrt()).unwrap();
        assert!(check_selfconsistency(&ok).satisfied());
        let bad = BDCoefficients::real(0.4f64.sqrt(), 0.35f64.sqrt(), 0.25f64.sqrt()).unwrap();
        let r = check_selfconsistency(&bad);
        assert!(r.beta_ge_gamma && !r.alpha_dominant);
        assert!(bd_non_closed_form(&bad).is_err());
        assert!(check_selfconsistency(&BDCoefficients::hartree_fock()).satisfied());
    }

    #[test]
    fn assignments_are_spin_adapted() {
        for a in SpinAssignment::ALL {
            let orbs = a.orbitals();
            for p in 0..3 {
                let spins: Vec<u8> = orbs.iter().filter(|(q, _)| *q == p).map(|(_, s)| *s).collect();
                assert_eq!(spins.len(), 2);
                assert!(spins.contains(&0) && spins.contains(&1));
            }
            // Every determinant carries two up spins and one down spin.
            for occ in BD_CONFIGURATIONS {
                let ups = occ.iter().filter(|&&l| orbs[l - 1].1 == 0).count();
                assert_eq!(ups, 2, "{a} {occ:?}");
            }
        }
        assert_eq!("B".parse::<SpinAssignment>().unwrap(), SpinAssignment::B);
        assert!("C".parse::<SpinAssignment>().is_err());
    }

    #[test]
    fn hartree_fock_limit_is_single_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_tables(&mut rng, OrbitalKind::Spatial, 4, true);
        let e = ansatz_energy(&BDCoefficients::hartree_fock(), SpinAssignment::A, &t).unwrap();
        let det = Determinant::new(&[1, 2, 3], 8).unwrap();
        let direct = fock::slater_condon(&det, &det, &t).unwrap().re;
        assert!((e - direct).abs() < 1e-12);
        let small = random_tables(&mut rng, OrbitalKind::Spatial, 2, true);
        assert!(ansatz_energy(&BDCoefficients::hartree_fock(), SpinAssignment::A, &small).is_err());
    }

    #[test]
    fn energy_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (kind, n) in [(OrbitalKind::SpinOrbital, 6), (OrbitalKind::Spatial, 3), (OrbitalKind::Spatial, 4)] {
            let t = random_tables(&mut rng, kind, n, false);
            for a in SpinAssignment::ALL {
                let k = random_coefficients(&mut rng);
                let space = ansatz_space(a, &t).unwrap();
                let psi = embedded_state(&k, &space).unwrap();
                let basis = all_determinants(t.n_spin_orbitals(), 3).unwrap();
                let h = crate::oracle::fock::hamiltonian_matrix(&t, &basis);
                let v = psi.to_dense(&basis);
                let dense = (v.adjoint() * h * &v)[(0, 0)].re;
                assert!((ansatz_energy(&k, a, &t).unwrap() - dense).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn assignments_share_the_optimal_energy() {
        // Both assignments span the same three spatial configurations.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = random_tables(&mut rng, OrbitalKind::Spatial, 3, true);
        let ea = secular_ground(&ansatz_space(SpinAssignment::A, &t).unwrap(), &t).0;
        let eb = secular_ground(&ansatz_space(SpinAssignment::B, &t).unwrap(), &t).0;
        assert!((ea - eb).abs() < 1e-12);
    }

    #[test]
    fn energy_gauge_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = random_tables(&mut rng, OrbitalKind::Spatial, 4, false);
        let k = random_coefficients(&mut rng);
        let phase = Complex64::from_polar(1.0, 0.7);
        let shifted = BDCoefficients::new(k.alpha * phase, k.beta * phase, k.gamma * phase).unwrap();
        let e1 = ansatz_energy(&k, SpinAssignment::A, &t).unwrap();
        assert!((ansatz_energy(&shifted, SpinAssignment::A, &t).unwrap() - e1).abs() < 1e-12);
        // Orbital phases only relabel the coefficient phases, so the
        // optimal energy is unchanged.
        let phases = DMatrix::from_diagonal(&DVector::from_fn(4, |i, _| Complex64::from_polar(1.0, 0.3 * i as f64 + 0.1)));
        let gauged = t.transformed(&phases).unwrap();
        let space = ansatz_space(SpinAssignment::A, &t).unwrap();
        let e_opt = secular_ground(&space, &t).0;
        let e_gauged = secular_ground(&space, &gauged).0;
        assert!((e_opt - e_gauged).abs() < 1e-12);
    }

    #[test]
    fn rotation_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let t = random_tables(&mut rng, OrbitalKind::Spatial, 4, false);
        let same = rotate_orbitals(&OrbitalRotation::identity(4), &t).unwrap();
        assert!(same.h_slice().iter().zip(t.h_slice()).all(|(a, b)| (a - b).norm() < 1e-14));

        let theta = std::f64::consts::FRAC_PI_2;
        let mut eta = DMatrix::from_element(4, 4, ZERO);
        eta[(0, 1)] = c(-theta);
        eta[(1, 0)] = c(theta);
        let swapped = rotate_orbitals(&OrbitalRotation::new(eta).unwrap(), &t).unwrap();
        assert!((swapped.h(0, 0) - t.h(1, 1)).norm() < 1e-12);
        assert!((swapped.h(1, 1) - t.h(0, 0)).norm() < 1e-12);
        assert!((swapped.g(0, 0, 0, 0) - t.g(1, 1, 1, 1)).norm() < 1e-12);

        let bad = DMatrix::from_element(2, 2, c(1.0));
        assert!(OrbitalRotation::new(bad).is_err());
        assert!(rotate_orbitals(&OrbitalRotation::identity(3), &t).is_err());
    }

    #[test]
    fn rotation_preserves_fci_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let t = random_tables(&mut rng, OrbitalKind::Spatial, 4, false);
        let e0 = fock::full_ci_ground(&t, 3, 8).unwrap().0;
        let rot = OrbitalRotation::new(random_antihermitian(&mut rng, 4, 1.0, false)).unwrap();
        let u = rot.unitary();
        assert!((u.adjoint() * &u - DMatrix::identity(4, 4)).iter().all(|z| z.norm() < 1e-10));
        let e1 = fock::full_ci_ground(&rotate_orbitals(&rot, &t).unwrap(), 3, 8).unwrap().0;
        assert!((e0 - e1).abs() < 1e-10);
    }

    #[test]
    fn rotations_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = random_tables(&mut rng, OrbitalKind::Spatial, 4, false);
        let r1 = OrbitalRotation::new(random_antihermitian(&mut rng, 4, 0.2, false)).unwrap();
        let r2 = OrbitalRotation::new(random_antihermitian(&mut rng, 4, 0.2, false)).unwrap();
        let sequential = rotate_orbitals(&r2, &rotate_orbitals(&r1, &t).unwrap()).unwrap();
        let joint = rotate_orbitals(&r1.compose(&r2).unwrap(), &t).unwrap();
        assert!(sequential.g_slice().iter().zip(joint.g_slice()).all(|(a, b)| (a - b).norm() < 1e-8));
        let back = OrbitalRotation::from_unitary(&r1.unitary()).unwrap();
        assert!((back.eta() - r1.eta()).iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn frechet_derivative_matches_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let x = random_antihermitian(&mut rng, 4, 0.7, false);
        let e = random_antihermitian(&mut rng, 4, 1.0, false);
        let h = 1e-5;
        let fd = ((&x + &e * c(h)).exp() - (&x - &e * c(h)).exp()) / c(2.0 * h);
        assert!((exp_frechet(&x, &e) - fd).iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn rotation_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let r = OrbitalRotation::new(random_antihermitian(&mut rng, 3, 0.5, false)).unwrap();
        let back: OrbitalRotation = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn closed_form_matches_rdm(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = ordered_coefficients(&mut rng);
            let psi = bd_state(&k).unwrap();
            let no = natural_occupations(&one_rdm(&psi).unwrap()).unwrap();
            let closed = bd_non_closed_form(&k).unwrap();
            for (a, b) in closed.entries().iter().zip(no.occupations.entries()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!(crate::gpc::bd_inequality(&no.occupations).unwrap().abs() < 1e-12);
        }

        #[test]
        fn every_state_is_annihilated(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi = bd_state(&random_coefficients(&mut rng)).unwrap();
            for op in NumberOperatorCombo::borland_dennis() {
                prop_assert!(apply_number_combo(&op, &psi).unwrap().norm() <= 1e-12);
            }
        }
    }
}
