//! Slater determinants over a finite spin-orbital basis.
//!
//! Spin orbitals carry 1-based labels `1..=d` in the public interface and are
//! stored as bits `0..d-1` internally. A [`Determinant`] with occupied labels
//! `i_1 < ... < i_N` is the state `a+_{i_1} ... a+_{i_N} |0>`, so amplitudes
//! always refer to index-sorted determinants and all fermionic signs are
//! resolved inside this module.
//!
//! For tables of [`OrbitalKind::Spatial`] kind spin orbital `2p - 1` is
//! spatial orbital `p` with spin up and `2p` the same orbital with spin down.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpc::{LinearConstraint, OccupationVector};
use crate::tables::{IntegralTables, OrbitalKind};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest supported number of spin orbitals.
pub const MAX_SPIN_ORBITALS: usize = 64;
/// Tolerance on `sum |c_i|^2 = 1`.
pub const NORM_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Largest configuration space accepted by [`full_ci_ground`].
pub const MAX_FCI_DIMENSION: usize = 100_000;
/// Dense diagonalization is used below this dimension.
pub const DENSE_LIMIT: usize = 2000;

/// Occupation bit pattern of a Slater determinant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Determinant {
    bits: u64,
}

impl Determinant {
    /// From strictly increasing 1-based labels, each at most `d`.
    pub fn new(occupied: &[usize], d: usize) -> Result<Self> {
        if d > MAX_SPIN_ORBITALS {
            return Err(Error::InvalidArgument(format!("at most {MAX_SPIN_ORBITALS} spin orbitals, got {d}")));
        }
        let mut bits = 0u64;
        let mut last = 0;
        for &i in occupied {
            if i == 0 || i > d {
                return Err(Error::InvalidArgument(format!("spin orbital {i} outside 1..={d}")));
            }
            if i <= last {
                return Err(Error::InvalidArgument(format!(
                    "occupied list {occupied:?} is not strictly increasing"
                )));
            }
            last = i;
            bits |= 1 << (i - 1);
        }
        Ok(Self { bits })
    }

    pub fn from_bits(bits: u64) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn particles(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Highest occupied label, 0 for the vacuum.
    pub fn max_label(&self) -> usize {
        64 - self.bits.leading_zeros() as usize
    }

    /// Occupied 1-based labels in increasing order.
    pub fn occupied(&self) -> Vec<usize> {
        self.indices().map(|i| i + 1).collect()
    }

    /// Occupied 0-based bit positions in increasing order.
    pub fn indices(&self) -> impl Iterator<Item = usize> {
        let mut b = self.bits;
        std::iter::from_fn(move || {
            if b == 0 {
                None
            } else {
                let i = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(i)
            }
        })
    }

    /// Whether 1-based label `i` is occupied.
    pub fn contains(&self, i: usize) -> bool {
        (1..=64).contains(&i) && self.bits >> (i - 1) & 1 == 1
    }

    #[inline]
    fn occ(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    /// `(-1)^(number of occupied bits below i)`.
    #[inline]
    fn parity_below(&self, i: usize) -> f64 {
        if (self.bits & ((1u64 << i) - 1)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// `a_i |self>` on bit `i`, as a sign and the resulting determinant.
    #[inline]
    pub(crate) fn annihilate(&self, i: usize) -> Option<(f64, Self)> {
        self.occ(i).then(|| (self.parity_below(i), Self { bits: self.bits & !(1 << i) }))
    }

    /// `a+_i |self>` on bit `i`.
    #[inline]
    pub(crate) fn create(&self, i: usize) -> Option<(f64, Self)> {
        (!self.occ(i)).then(|| (self.parity_below(i), Self { bits: self.bits | 1 << i }))
    }

    /// `a+_p a_q |self>` on bits.
    #[inline]
    pub(crate) fn excite(&self, p: usize, q: usize) -> Option<(f64, Self)> {
        let (s1, d) = self.annihilate(q)?;
        let (s2, d) = d.create(p)?;
        Some((s1 * s2, d))
    }
}

impl Ord for Determinant {
    /// Lexicographic order of the occupied label lists.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        let x = self.bits ^ other.bits;
        if x == 0 {
            return Ordering::Equal;
        }
        let low = x & x.wrapping_neg();
        if self.bits & low != 0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for Determinant {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.occupied().iter().map(|i| i.to_string()).collect();
        write!(f, "|{}>", labels.join(","))
    }
}

impl Serialize for Determinant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.occupied().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Determinant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let occ = Vec::<usize>::deserialize(d)?;
        Determinant::new(&occ, MAX_SPIN_ORBITALS).map_err(serde::de::Error::custom)
    }
}

/// All determinants of `n` particles in `d` spin orbitals, in lexicographic
/// order.
pub fn all_determinants(d: usize, n: usize) -> Result<Vec<Determinant>> {
    if d > MAX_SPIN_ORBITALS {
        return Err(Error::InvalidArgument(format!("at most {MAX_SPIN_ORBITALS} spin orbitals, got {d}")));
    }
    if n > d {
        return Err(Error::ParticleMismatch { expected: d, found: n });
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        out.push(Determinant::from_bits(idx.iter().fold(0u64, |b, &i| b | 1 << i)));
        // Advance the rightmost index that still has room.
        let mut k = n;
        while k > 0 && idx[k - 1] == d - n + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return Ok(out);
        }
        idx[k - 1] += 1;
        for j in k..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `C(d, n)` as a float, to test space sizes without overflow.
pub fn space_dimension(d: usize, n: usize) -> f64 {
    if n > d {
        return 0.0;
    }
    (0..n).fold(1.0, |acc, i| acc * (d - i) as f64 / (i + 1) as f64)
}

/// Finite superposition of determinants with complex amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WavefunctionRepr", into = "WavefunctionRepr")]
pub struct Wavefunction {
    d: usize,
    n: usize,
    amps: BTreeMap<Determinant, Complex64>,
}

#[derive(Serialize, Deserialize)]
struct WavefunctionRepr {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    terms: Vec<(Vec<usize>, f64, f64)>,
}

impl From<Wavefunction> for WavefunctionRepr {
    fn from(w: Wavefunction) -> Self {
        Self {
            d: w.d,
            n: w.n,
            terms: w.amps.iter().map(|(k, c)| (k.occupied(), c.re, c.im)).collect(),
        }
    }
}

impl TryFrom<WavefunctionRepr> for Wavefunction {
    type Error = Error;

    fn try_from(r: WavefunctionRepr) -> Result<Self> {
        let mut w = Wavefunction::new(r.d, r.n)?;
        for (occ, re, im) in r.terms {
            w.add(Determinant::new(&occ, r.d)?, Complex64::new(re, im))?;
        }
        Ok(w)
    }
}

impl Wavefunction {
    /// The zero vector of `n` particles in `d` spin orbitals.
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || d > MAX_SPIN_ORBITALS {
            return Err(Error::InvalidArgument(format!("dimension must lie in 1..={MAX_SPIN_ORBITALS}, got {d}")));
        }
        if n > d {
            return Err(Error::ParticleMismatch { expected: d, found: n });
        }
        Ok(Self { d, n, amps: BTreeMap::new() })
    }

    pub fn from_terms(
        d: usize,
        n: usize,
        terms: impl IntoIterator<Item = (Determinant, Complex64)>,
    ) -> Result<Self> {
        let mut w = Self::new(d, n)?;
        for (k, c) in terms {
            w.add(k, c)?;
        }
        Ok(w)
    }

    /// Single determinant with amplitude one.
    pub fn determinant(d: usize, occupied: &[usize]) -> Result<Self> {
        Self::from_terms(d, occupied.len(), [(Determinant::new(occupied, d)?, Complex64::new(1.0, 0.0))])
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    /// Adds `c` to the amplitude of `det`.
    pub fn add(&mut self, det: Determinant, c: Complex64) -> Result<()> {
        if det.particles() != self.n {
            return Err(Error::ParticleMismatch { expected: self.n, found: det.particles() });
        }
        if det.max_label() > self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: det.max_label() });
        }
        *self.amps.entry(det).or_insert(ZERO) += c;
        Ok(())
    }

    pub fn amplitude(&self, det: &Determinant) -> Complex64 {
        self.amps.get(det).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Determinant, &Complex64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Determinants whose amplitude exceeds `tol` in magnitude.
    pub fn support(&self, tol: f64) -> BTreeSet<Determinant> {
        self.amps.iter().filter(|(_, c)| c.norm() > tol).map(|(k, _)| *k).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.amps.values_mut().for_each(|c| *c *= s);
        out
    }

    /// Drops amplitudes with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.amps.retain(|_, c| c.norm() > tol);
        out
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().map(|(k, c)| c.conj() * other.amplitude(k)).sum()
    }

    /// Multiplies by the phase that makes the largest amplitude real and
    /// positive (the first of equally large ones).
    pub fn phase_fixed(&self) -> Self {
        let mut best: Option<Complex64> = None;
        for c in self.amps.values() {
            if best.is_none_or(|b| c.norm() > b.norm() + 1e-12) {
                best = Some(*c);
            }
        }
        match best {
            Some(b) if b.norm() > 0.0 => self.scaled(b.conj() / b.norm()),
            _ => self.clone(),
        }
    }

    /// Returns the normalized state or an error carrying its norm.
    fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.norm()))
        }
    }

    /// Amplitudes on the lexicographic list of all determinants.
    pub fn to_dense(&self, basis: &[Determinant]) -> DVector<Complex64> {
        DVector::from_iterator(basis.len(), basis.iter().map(|k| self.amplitude(k)))
    }

    pub fn from_dense(d: usize, n: usize, basis: &[Determinant], v: &DVector<Complex64>) -> Result<Self> {
        Self::from_terms(d, n, basis.iter().zip(v.iter()).filter(|(_, c)| **c != ZERO).map(|(k, c)| (*k, *c)))
    }
}

/// One-particle reduced density matrix with entries `rho_pq = <a+_q a_p>`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneRdm {
    matrix: DMatrix<Complex64>,
    particles: usize,
}

impl OneRdm {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-10;

    pub fn from_matrix(matrix: DMatrix<Complex64>, particles: usize) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        let defect = (&matrix - matrix.adjoint()).camax();
        if defect > Self::HERMITICITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let trace = matrix.trace().re;
        if (trace - particles as f64).abs() > Self::TRACE_TOL {
            return Err(Error::InvalidOccupations(format!("trace {trace} differs from N = {particles}")));
        }
        Ok(Self { matrix, particles })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// `rho_pq = <Psi| a+_q a_p |Psi>` for a normalized state.
pub fn one_rdm(psi: &Wavefunction) -> Result<OneRdm> {
    psi.require_normalized()?;
    let d = psi.dimension();
    let mut rho = DMatrix::from_element(d, d, ZERO);
    for (j, cj) in psi.iter() {
        for p in j.indices() {
            for q in 0..d {
                // <K| a+_q a_p |J> with K = a+_q a_p J.
                if let Some((sign, k)) = j.excite(q, p) {
                    let ck = psi.amplitude(&k);
                    if ck != ZERO {
                        rho[(p, q)] += ck.conj() * cj * sign;
                    }
                }
            }
        }
    }
    // Remove rounding asymmetry.
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    OneRdm::from_matrix(rho, psi.particles())
}

/// Natural occupation numbers and natural orbitals (columns of `orbitals`,
/// expressed in the original spin-orbital basis).
#[derive(Clone, Debug)]
pub struct NaturalOrbitals {
    pub occupations: OccupationVector,
    pub orbitals: DMatrix<Complex64>,
}

/// Diagonalizes the 1-RDM. Occupations are sorted decreasingly. Inside a
/// degenerate block the orbitals are obtained by Gram-Schmidt on the block
/// projector applied to unit vectors `e_1, e_2, ...`; every orbital is then
/// multiplied by the phase that makes its largest component real positive.
pub fn natural_occupations(rdm: &OneRdm) -> Result<NaturalOrbitals> {
    let d = rdm.dimension();
    let eig = SymmetricEigen::new(rdm.matrix().clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut orbitals = DMatrix::from_element(d, d, ZERO);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && values[end - 1] - values[end] <= DEGENERACY_TOL {
            end += 1;
        }
        let block: Vec<DVector<Complex64>> = order[start..end].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        let canonical = if block.len() == 1 { block } else { canonical_block_basis(&block, d) };
        for (k, v) in canonical.into_iter().enumerate() {
            orbitals.set_column(start + k, &fix_vector_phase(v));
        }
        start = end;
    }
    let clamped = values.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
    Ok(NaturalOrbitals { occupations: OccupationVector::new(clamped)?, orbitals })
}

fn canonical_block_basis(block: &[DVector<Complex64>], d: usize) -> Vec<DVector<Complex64>> {
    let k = block.len();
    let mut out: Vec<DVector<Complex64>> = Vec::with_capacity(k);
    for j in 0..d {
        if out.len() == k {
            break;
        }
        // P e_j
        let mut v = DVector::from_element(d, ZERO);
        for b in block {
            v += b * b[j].conj();
        }
        for _ in 0..2 {
            for u in &out {
                let overlap = u.dotc(&v);
                v -= u * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / Complex64::new(norm, 0.0));
        }
    }
    out
}

fn fix_vector_phase(v: DVector<Complex64>) -> DVector<Complex64> {
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[best].norm() + 1e-12 {
            best = i;
        }
    }
    let b = v[best];
    if b.norm() == 0.0 {
        return v;
    }
    v * (b.conj() / b.norm())
}

/// Determinant of a small dense complex matrix by Gaussian elimination.
fn small_det(mut m: Vec<Complex64>, k: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..k {
        let pivot = (c..k).max_by(|&a, &b| m[a * k + c].norm().total_cmp(&m[b * k + c].norm())).unwrap();
        if m[pivot * k + c] == ZERO {
            return ZERO;
        }
        if pivot != c {
            for j in 0..k {
                m.swap(pivot * k + j, c * k + j);
            }
            det = -det;
        }
        let p = m[c * k + c];
        det *= p;
        for r in c + 1..k {
            let f = m[r * k + c] / p;
            if f != ZERO {
                for j in c..k {
                    let t = m[c * k + j];
                    m[r * k + j] -= f * t;
                }
            }
        }
    }
    det
}

/// Applies the one-particle unitary `a+_p -> sum_q U_qp a+_q` to `psi`.
/// Amplitudes of magnitude at most `prune` are dropped.
pub fn rotate_wavefunction(psi: &Wavefunction, u: &DMatrix<Complex64>, prune: f64) -> Result<Wavefunction> {
    let d = psi.dimension();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
    }
    let n = psi.particles();
    let targets = all_determinants(d, n)?;
    let sources: Vec<(Vec<usize>, Complex64)> = psi.iter().map(|(k, c)| (k.indices().collect(), *c)).collect();
    let amps: Vec<Complex64> = targets
        .par_iter()
        .map(|t| {
            let rows: Vec<usize> = t.indices().collect();
            sources
                .iter()
                .map(|(cols, c)| {
                    let m: Vec<Complex64> = rows.iter().flat_map(|&r| cols.iter().map(move |&s| u[(r, s)])).collect();
                    small_det(m, n) * c
                })
                .sum()
        })
        .collect();
    Wavefunction::from_terms(d, n, targets.into_iter().zip(amps).filter(|(_, c)| c.norm() > prune))
}

/// Re-expresses `psi` over determinants of its own natural spin orbitals,
/// ordered by decreasing occupation.
pub fn transform_to_natural_basis(psi: &Wavefunction) -> Result<Wavefunction> {
    let no = natural_occupations(&one_rdm(psi)?)?;
    rotate_wavefunction(psi, &no.orbitals.adjoint(), 1e-14)
}

/// `D = constant + sum_i weights_i n_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberOperatorCombo {
    pub constant: f64,
    pub weights: Vec<f64>,
}

impl NumberOperatorCombo {
    pub fn new(constant: f64, weights: Vec<f64>) -> Result<Self> {
        if !constant.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("number-operator coefficients must be finite".into()));
        }
        Ok(Self { constant, weights })
    }

    pub fn zero(d: usize) -> Self {
        Self { constant: 0.0, weights: vec![0.0; d] }
    }

    pub fn from_constraint(c: &LinearConstraint) -> Self {
        Self { constant: c.kappa0 as f64, weights: c.kappas.iter().map(|&k| k as f64).collect() }
    }

    /// The inequality `2 - n_1 - n_2 - n_4` and the three equalities
    /// `1 - n_1 - n_6`, `1 - n_2 - n_5`, `1 - n_3 - n_4`.
    pub fn borland_dennis() -> [Self; 4] {
        let [a, b, c] = LinearConstraint::borland_dennis_equalities();
        [
            Self::from_constraint(&LinearConstraint::borland_dennis()),
            Self::from_constraint(&a),
            Self::from_constraint(&b),
            Self::from_constraint(&c),
        ]
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    /// Eigenvalue on a determinant.
    pub fn eigenvalue(&self, det: &Determinant) -> f64 {
        self.constant + det.indices().map(|i| self.weights.get(i).copied().unwrap_or(0.0)).sum::<f64>()
    }

    fn integer_coefficients(&self) -> Option<(i64, Vec<i64>)> {
        let as_int = |x: f64| (x.fract() == 0.0 && x.abs() < 1e15).then_some(x as i64);
        let c = as_int(self.constant)?;
        let w = self.weights.iter().map(|&x| as_int(x)).collect::<Option<Vec<_>>>()?;
        Some((c, w))
    }

    /// Whether the eigenvalue on `det` vanishes, exactly for integer
    /// coefficients and to 1e-12 relative precision otherwise.
    pub fn annihilates(&self, det: &Determinant) -> bool {
        match self.integer_coefficients() {
            Some((c, w)) => c + det.indices().map(|i| w.get(i).copied().unwrap_or(0)).sum::<i64>() == 0,
            None => {
                let scale = self.constant.abs() + self.weights.iter().map(|x| x.abs()).sum::<f64>();
                self.eigenvalue(det).abs() <= 1e-12 * scale.max(1.0)
            }
        }
    }

    /// `<psi|D|psi> / <psi|psi>`.
    pub fn expectation(&self, psi: &Wavefunction) -> f64 {
        let norm2: f64 = psi.iter().map(|(_, c)| c.norm_sqr()).sum();
        psi.iter().map(|(k, c)| c.norm_sqr() * self.eigenvalue(k)).sum::<f64>() / norm2
    }
}

/// Determinants annihilated by `op`.
pub fn selection_rule_configs(op: &NumberOperatorCombo, n: usize, d: usize) -> Result<BTreeSet<Determinant>> {
    if op.dimension() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.dimension() });
    }
    Ok(all_determinants(d, n)?.into_iter().filter(|k| op.annihilates(k)).collect())
}

/// Determinants annihilated by every operator in `ops`.
pub fn joint_selection_rule_configs(ops: &[NumberOperatorCombo], n: usize, d: usize) -> Result<BTreeSet<Determinant>> {
    let mut out: BTreeSet<Determinant> = all_determinants(d, n)?.into_iter().collect();
    for op in ops {
        let allowed = selection_rule_configs(op, n, d)?;
        out.retain(|k| allowed.contains(k));
    }
    Ok(out)
}

/// `D |psi>`: every amplitude scaled by the eigenvalue of its determinant.
pub fn apply_number_combo(op: &NumberOperatorCombo, psi: &Wavefunction) -> Result<Wavefunction> {
    if op.dimension() != psi.dimension() {
        return Err(Error::DimensionMismatch { expected: psi.dimension(), found: op.dimension() });
    }
    Wavefunction::from_terms(psi.dimension(), psi.particles(), psi.iter().map(|(k, c)| (*k, c * op.eigenvalue(k))))
}

fn check_tables(a: &Determinant, tables: &IntegralTables) -> Result<()> {
    let d = tables.n_spin_orbitals();
    if a.max_label() > d {
        return Err(Error::DimensionMismatch { expected: d, found: a.max_label() });
    }
    Ok(())
}

/// `<a|H|b>` by the Slater-Condon rules.
pub fn slater_condon(a: &Determinant, b: &Determinant, tables: &IntegralTables) -> Result<Complex64> {
    if a.particles() != b.particles() {
        return Err(Error::ParticleMismatch { expected: a.particles(), found: b.particles() });
    }
    check_tables(a, tables)?;
    check_tables(b, tables)?;
    Ok(matrix_element(a, b, tables))
}

pub(crate) fn matrix_element(a: &Determinant, b: &Determinant, t: &IntegralTables) -> Complex64 {
    let diff = a.bits ^ b.bits;
    match diff.count_ones() {
        0 => {
            let occ: Vec<usize> = a.indices().collect();
            let mut e = Complex64::new(t.constant(), 0.0);
            for (x, &i) in occ.iter().enumerate() {
                e += t.one_body(i, i);
                for &j in &occ[x + 1..] {
                    e += t.two_body(i, j, i, j) - t.two_body(i, j, j, i);
                }
            }
            e
        }
        2 => {
            let p = (a.bits & diff).trailing_zeros() as usize;
            let m = (b.bits & diff).trailing_zeros() as usize;
            let (sign, _) = b.excite(p, m).expect("single excitation");
            let mut e = t.one_body(p, m);
            for n in b.indices().filter(|&n| n != m) {
                e += t.two_body(p, n, m, n) - t.two_body(p, n, n, m);
            }
            e * sign
        }
        4 => {
            let mut parts = Determinant::from_bits(a.bits & diff).indices();
            let (p, q) = (parts.next().unwrap(), parts.next().unwrap());
            let mut holes = Determinant::from_bits(b.bits & diff).indices();
            let (m, n) = (holes.next().unwrap(), holes.next().unwrap());
            // a+_p a+_q a_n a_m |b>
            let (s1, k) = b.annihilate(m).unwrap();
            let (s2, k) = k.annihilate(n).unwrap();
            let (s3, k) = k.create(q).unwrap();
            let (s4, _) = k.create(p).unwrap();
            (t.two_body(p, q, m, n) - t.two_body(p, q, n, m)) * (s1 * s2 * s3 * s4)
        }
        _ => ZERO,
    }
}

/// `<psi|H|psi>` for a normalized state.
pub fn energy_expectation(psi: &Wavefunction, tables: &IntegralTables) -> Result<f64> {
    psi.require_normalized()?;
    let terms: Vec<(&Determinant, &Complex64)> = psi.iter().collect();
    for (k, _) in &terms {
        check_tables(k, tables)?;
    }
    let mut e = ZERO;
    for (a, ca) in &terms {
        for (b, cb) in &terms {
            e += ca.conj() * matrix_element(a, b, tables) * **cb;
        }
    }
    Ok(e.re)
}

/// Orbital-resolved density matrices `gamma_pq = sum_s <a+_ps a_qs>` and
/// `Gamma_pqrs = sum_st <a+_ps a+_rt a_st a_qs>` (index `((p*n+q)*n+r)*n+s`),
/// so that `E = c + sum h_pq gamma_pq + 1/2 sum (pq|rs) Gamma_pqrs`.
pub fn orbital_rdms(psi: &Wavefunction, tables: &IntegralTables) -> Result<(DMatrix<Complex64>, Vec<Complex64>)> {
    let d = tables.n_spin_orbitals();
    if psi.dimension() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi.dimension() });
    }
    let n = tables.n_orb();
    let mut gamma = DMatrix::from_element(n, n, ZERO);
    let mut big = vec![ZERO; n.pow(4)];
    for (j, cj) in psi.iter() {
        for qq in j.indices() {
            let (q, sq) = tables.spin_orbital(qq);
            for pp in 0..d {
                let (p, sp) = tables.spin_orbital(pp);
                if sp != sq {
                    continue;
                }
                if let Some((sign, k)) = j.excite(pp, qq) {
                    let ck = psi.amplitude(&k);
                    if ck != ZERO {
                        gamma[(p, q)] += ck.conj() * cj * sign;
                    }
                }
            }
            let (s1, j1) = j.annihilate(qq).unwrap();
            for ss in j1.indices() {
                let (s, st) = tables.spin_orbital(ss);
                let (s2, j2) = j1.annihilate(ss).unwrap();
                for rr in 0..d {
                    let (r, rt) = tables.spin_orbital(rr);
                    if rt != st {
                        continue;
                    }
                    let Some((s3, j3)) = j2.create(rr) else { continue };
                    for pp in 0..d {
                        let (p, sp) = tables.spin_orbital(pp);
                        if sp != sq {
                            continue;
                        }
                        let Some((s4, k)) = j3.create(pp) else { continue };
                        let ck = psi.amplitude(&k);
                        if ck != ZERO {
                            big[((p * n + q) * n + r) * n + s] += ck.conj() * cj * (s1 * s2 * s3 * s4);
                        }
                    }
                }
            }
        }
    }
    Ok((gamma, big))
}

/// Energy from orbital-resolved density matrices.
pub fn energy_from_rdms(tables: &IntegralTables, gamma: &DMatrix<Complex64>, big: &[Complex64]) -> f64 {
    let n = tables.n_orb();
    let mut e = Complex64::new(tables.constant(), 0.0);
    for p in 0..n {
        for q in 0..n {
            e += tables.h(p, q) * gamma[(p, q)];
        }
    }
    let g = tables.g_slice();
    e += g.iter().zip(big).map(|(a, b)| a * b).sum::<Complex64>() * 0.5;
    e.re
}

/// Configuration space used by full CI. For spin-free tables the ground
/// state is Kramers degenerate, so the space is restricted to
/// `ceil(N/2)` spin-up and `floor(N/2)` spin-down electrons.
pub fn fci_space(tables: &IntegralTables, n: usize) -> Result<Vec<Determinant>> {
    let d = tables.n_spin_orbitals();
    let all_size = space_dimension(d, n);
    let dets = match tables.kind() {
        OrbitalKind::SpinOrbital => {
            if all_size > MAX_FCI_DIMENSION as f64 {
                return Err(Error::SpaceTooLarge(all_size as usize));
            }
            all_determinants(d, n)?
        }
        OrbitalKind::Spatial => {
            let k = tables.n_orb();
            let (up, down) = (n.div_ceil(2), n / 2);
            if up > k {
                return Err(Error::ParticleMismatch { expected: 2 * k, found: n });
            }
            let size = space_dimension(k, up) * space_dimension(k, down);
            if size > MAX_FCI_DIMENSION as f64 {
                return Err(Error::SpaceTooLarge(size as usize));
            }
            let spread = |det: &Determinant, offset: usize| det.indices().fold(0u64, |b, i| b | 1 << (2 * i + offset));
            let ups = all_determinants(k, up)?;
            let downs = all_determinants(k, down)?;
            let mut v: Vec<Determinant> = ups
                .iter()
                .flat_map(|u| downs.iter().map(move |w| Determinant::from_bits(spread(u, 0) | spread(w, 1))))
                .collect();
            v.sort();
            v
        }
    };
    Ok(dets)
}

/// Dense Hamiltonian matrix over `basis`.
pub fn hamiltonian_matrix(tables: &IntegralTables, basis: &[Determinant]) -> Result<DMatrix<Complex64>> {
    for k in basis {
        check_tables(k, tables)?;
    }
    let dim = basis.len();
    let rows: Vec<Vec<Complex64>> = basis
        .par_iter()
        .map(|a| basis.iter().map(|b| matrix_element(a, b, tables)).collect())
        .collect();
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

/// Ground state of `H` over the full configuration space.
#[derive(Clone, Debug)]
pub struct FciResult {
    pub energy: f64,
    pub state: Wavefunction,
    /// `||H psi - E psi||`.
    pub residual: f64,
    /// Gap to the next eigenvalue when the dense path was used.
    pub gap: Option<f64>,
    pub dimension: usize,
}

/// Lowest eigenpair of `H` among `n`-particle states in `d` spin orbitals.
pub fn full_ci_ground(tables: &IntegralTables, n: usize, d: usize) -> Result<(f64, Wavefunction)> {
    let r = full_ci(tables, n, d)?;
    Ok((r.energy, r.state))
}

pub fn full_ci(tables: &IntegralTables, n: usize, d: usize) -> Result<FciResult> {
    if d != tables.n_spin_orbitals() {
        return Err(Error::DimensionMismatch { expected: tables.n_spin_orbitals(), found: d });
    }
    let basis = fci_space(tables, n)?;
    let dim = basis.len();
    let (energy, vector, gap) = if dim < DENSE_LIMIT {
        let h = hamiltonian_matrix(tables, &basis)?;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let gap = (dim > 1).then(|| eig.eigenvalues[order[1]] - eig.eigenvalues[order[0]]);
        (eig.eigenvalues[order[0]], eig.eigenvectors.column(order[0]).into_owned(), gap)
    } else {
        let sparse = SparseHamiltonian::new(tables, &basis);
        let (e, v) = lanczos_ground(&sparse)?;
        (e, v, None)
    };
    let residual = SparseHamiltonian::new(tables, &basis).residual(&vector, energy);
    let state = Wavefunction::from_dense(d, n, &basis, &vector)?.normalized()?.phase_fixed();
    Ok(FciResult { energy, state, residual, gap, dimension: dim })
}

/// All eigenvalues of `H` over the full CI space, ascending.
pub fn full_ci_spectrum(tables: &IntegralTables, n: usize) -> Result<Vec<f64>> {
    let basis = fci_space(tables, n)?;
    if basis.len() > 2 * DENSE_LIMIT {
        return Err(Error::SpaceTooLarge(basis.len()));
    }
    let mut values: Vec<f64> = SymmetricEigen::new(hamiltonian_matrix(tables, &basis)?).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Row-compressed Hamiltonian restricted to the connected determinants of
/// each row.
struct SparseHamiltonian {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseHamiltonian {
    fn new(tables: &IntegralTables, basis: &[Determinant]) -> Self {
        let index: HashMap<u64, usize> = basis.iter().enumerate().map(|(i, k)| (k.bits, i)).collect();
        let d = tables.n_spin_orbitals();
        let rows = basis
            .par_iter()
            .map(|a| {
                let occ: Vec<usize> = a.indices().collect();
                let virt: Vec<usize> = (0..d).filter(|&i| !a.occ(i)).collect();
                let mut row = vec![(index[&a.bits], matrix_element(a, a, tables))];
                let mut push = |bits: u64| {
                    if let Some(&j) = index.get(&bits) {
                        let v = matrix_element(a, &Determinant::from_bits(bits), tables);
                        if v != ZERO {
                            row.push((j, v));
                        }
                    }
                };
                for &m in &occ {
                    for &p in &virt {
                        push(a.bits ^ (1 << m) ^ (1 << p));
                    }
                }
                for (x, &m) in occ.iter().enumerate() {
                    for &n in &occ[x + 1..] {
                        for (y, &p) in virt.iter().enumerate() {
                            for &q in &virt[y + 1..] {
                                push(a.bits ^ (1 << m) ^ (1 << n) ^ (1 << p) ^ (1 << q));
                            }
                        }
                    }
                }
                row
            })
            .collect();
        Self { rows }
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let out: Vec<Complex64> = self.rows.par_iter().map(|row| row.iter().map(|(j, h)| h * v[*j]).sum()).collect();
        DVector::from_vec(out)
    }

    fn residual(&self, v: &DVector<Complex64>, e: f64) -> f64 {
        (self.apply(v) - v * Complex64::new(e, 0.0)).norm()
    }
}

/// Explicitly restarted Lanczos with full reorthogonalization.
fn lanczos_ground(h: &SparseHamiltonian) -> Result<(f64, DVector<Complex64>)> {
    const KRYLOV: usize = 120;
    const RESTARTS: usize = 60;
    const TOL: f64 = 1e-10;
    let dim = h.dim();
    let lowest = (0..dim).min_by(|&a, &b| h.rows[a][0].1.re.total_cmp(&h.rows[b][0].1.re)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start = DVector::from_fn(dim, |_, _| Complex64::new(1e-3 * rng.random_range(-1.0..1.0), 0.0));
    start[lowest] += Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for _ in 0..RESTARTS {
        let mut basis: Vec<DVector<Complex64>> = vec![start.normalize()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..KRYLOV.min(dim) {
            let mut w = h.apply(&basis[j]);
            alpha.push(basis[j].dotc(&w).re);
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dotc(&w);
                    w -= q * c;
                }
            }
            let b = w.norm();
            if b < 1e-12 || j + 1 == KRYLOV.min(dim) {
                break;
            }
            beta.push(b);
            basis.push(w / Complex64::new(b, 0.0));
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j || j + 1 == i {
                beta[i.min(j)]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let i0 = (0..k).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
        let theta = eig.eigenvalues[i0];
        let mut x = DVector::from_element(dim, ZERO);
        for (i, q) in basis.iter().enumerate().take(k) {
            x += q * Complex64::new(eig.eigenvectors[(i, i0)], 0.0);
        }
        let x = x.normalize();
        let r = h.residual(&x, theta);
        if r <= TOL || (r <= 1e-9 && (last - theta).abs() < 1e-14) {
            return Ok((theta, x));
        }
        last = theta;
        start = x;
    }
    Err(Error::Eigen("Lanczos iteration did not converge".into()))
}
