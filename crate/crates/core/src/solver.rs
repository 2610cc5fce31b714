//! Exponent optimization of the reference determinant, Hartree-Fock
//! pre-optimization and the pinned MCSCF solver.
//!
//! Orbitals are parametrized by an antihermitian generator `eta` relative to
//! a fixed reference basis, `U = exp(eta)`. The MCSCF energy is minimized by
//! Newton steps in `eta`; at every orbital point the coefficients solve the
//! 3x3 secular problem exactly, so the coefficient step is a
//! diagonalization and the orbital gradient follows from Hellmann-Feynman.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{
    self, ansatz_space, embedded_state, exp_frechet, secular_ground, secular_matrix, AnsatzSpace, BDCoefficients,
    OrbitalRotation, SelfConsistency, SpinAssignment,
};
use crate::error::{Error, Result};
use crate::fock::{self, natural_occupations, one_rdm, orbital_rdms, Wavefunction};
use crate::gpc::{ConstraintReport, OccupationVector};
use crate::radial::{build_integral_tables, orthonormalize, BasisSpec};
use crate::tables::{IntegralTables, OrbitalKind};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest orbital step taken by a single Newton iteration.
const MAX_STEP: f64 = 0.5;
/// Floor on the magnitude of Hessian eigenvalues.
const HESSIAN_FLOOR: f64 = 1e-4;
/// Allowed energy increase of an accepted step (round-off).
const DESCENT_SLACK: f64 = 1e-12;
/// Tables with imaginary parts below this are treated as real.
const REAL_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentPolicy {
    Auto,
    A,
    B,
}

impl AssignmentPolicy {
    pub fn candidates(self) -> Vec<SpinAssignment> {
        match self {
            AssignmentPolicy::Auto => SpinAssignment::ALL.to_vec(),
            AssignmentPolicy::A => vec![SpinAssignment::A],
            AssignmentPolicy::B => vec![SpinAssignment::B],
        }
    }
}

impl fmt::Display for AssignmentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssignmentPolicy::Auto => "auto",
            AssignmentPolicy::A => "A",
            AssignmentPolicy::B => "B",
        })
    }
}

impl FromStr for AssignmentPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(AssignmentPolicy::Auto),
            "A" | "a" => Ok(AssignmentPolicy::A),
            "B" | "b" => Ok(AssignmentPolicy::B),
            _ => Err(Error::InvalidArgument(format!("unknown assignment policy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Hartree per unit parameter.
    pub gradient_tolerance: f64,
    /// Hartree.
    pub energy_tolerance: f64,
    pub finite_difference_step: f64,
    pub seed: u64,
    /// Number of starting points per spin assignment.
    pub multistart: usize,
    pub assignment: AssignmentPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            energy_tolerance: 1e-10,
            finite_difference_step: 1e-5,
            seed: 0,
            multistart: 5,
            assignment: AssignmentPolicy::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gradient_tolerance", self.gradient_tolerance),
            ("energy_tolerance", self.energy_tolerance),
            ("finite_difference_step", self.finite_difference_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if self.multistart == 0 {
            return Err(Error::InvalidArgument("multistart must be positive".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Exponents of the reference determinant

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentOptimum {
    pub a: f64,
    pub b: f64,
    pub energy: f64,
    pub iterations: usize,
}

/// Energy of `|delta_1 up>`, `|delta_1 up, delta_1 dn>` or
/// `|delta_1 up, delta_1 dn, chi_1 up>` (for 1, 2, 3 electrons) in the
/// basis `delta_1..delta_m, chi_1` orthonormalized in that order.
pub fn reference_energy(m: usize, z: f64, a: f64, b: f64, electrons: usize) -> Result<f64> {
    if !(1..=3).contains(&electrons) {
        return Err(Error::InvalidArgument(format!("reference determinant holds 1 to 3 electrons, got {electrons}")));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("exponents must be positive, got ({a}, {b})")));
    }
    let spec = BasisSpec::new(m, a, b).with_chi(if electrons == 3 { 1 } else { 0 });
    let basis = orthonormalize(&spec.raw_functions()?)?;
    let used = if electrons == 3 { vec![basis[0].clone(), basis[m].clone()] } else { vec![basis[0].clone()] };
    let tables = build_integral_tables(&used, z)?;
    let bits = match electrons {
        1 => 0b1,
        2 => 0b11,
        _ => 0b111,
    };
    let det = fock::Determinant::from_bits(bits);
    Ok(fock::slater_condon(&det, &det, &tables)?.re)
}

/// Minimizes the three-electron reference energy over `(a, b)`.
pub fn optimize_exponents(m: usize, z: f64, config: &SolverConfig) -> Result<ExponentOptimum> {
    optimize_exponents_for(m, z, 3, config)
}

/// As [`optimize_exponents`] for 1, 2 or 3 electrons. With fewer than three
/// electrons `b` does not enter and is returned as `z / 2`.
pub fn optimize_exponents_for(m: usize, z: f64, electrons: usize, config: &SolverConfig) -> Result<ExponentOptimum> {
    config.validate()?;
    if m == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let b_fixed = z / 2.0;
    let f = |x: &[f64]| {
        let a = x[0].exp();
        let b = if electrons == 3 { x[1].exp() } else { b_fixed };
        reference_energy(m, z, a, b, electrons).unwrap_or(f64::INFINITY)
    };
    let start = if electrons == 3 { vec![z.ln(), (z / 2.0).ln()] } else { vec![z.ln()] };
    let nm = nelder_mead(f, &start, 0.1, config.max_iterations, 1e-13, 1e-9);
    if !nm.converged {
        return Err(Error::NotConverged { iterations: nm.iterations, gradient_norm: nm.spread });
    }
    let a = nm.x[0].exp();
    let b = if electrons == 3 { nm.x[1].exp() } else { b_fixed };
    Ok(ExponentOptimum { a, b, energy: nm.value, iterations: nm.iterations })
}

struct NelderMead {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    spread: f64,
}

fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize, ftol: f64, xtol: f64) -> NelderMead {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    let size = |s: &[(Vec<f64>, f64)]| {
        s[1..].iter().map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)).fold(0.0, f64::max)
    };
    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread <= ftol && size(&simplex) <= xtol {
            return NelderMead { x: simplex[0].0.clone(), value: simplex[0].1, iterations, converged: true, spread };
        }
        if iterations == max_iter {
            return NelderMead { x: simplex[0].0.clone(), value: simplex[0].1, iterations, converged: false, spread };
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = toward(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = toward(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = toward(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = toward(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = item.0.iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
                    let v = f(&x);
                    *item = (x, v);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Orbital parameters

/// Independent real parameters of an antihermitian generator: for each
/// listed pair `i < j` the real part of `eta_ij` and, for complex problems,
/// its imaginary part; optionally the imaginary diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Parametrization {
    n: usize,
    pairs: Vec<(usize, usize)>,
    imaginary: bool,
    diagonal: bool,
}

impl Parametrization {
    /// Every independent entry of an `n x n` generator.
    pub fn full(n: usize, real: bool) -> Self {
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self { n, pairs, imaginary: !real, diagonal: !real }
    }

    pub fn new(n: usize, pairs: Vec<(usize, usize)>, real: bool) -> Result<Self> {
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= j || j >= n) {
            return Err(Error::InvalidArgument(format!("invalid rotation pair ({i}, {j})")));
        }
        Ok(Self { n, pairs, imaginary: !real, diagonal: false })
    }

    /// Rotations that change a determinant built from the `occupied`
    /// orbitals, given per orbital as a spin-summed occupancy.
    fn mixing(n: usize, occupancy: &[u8], real: bool) -> Self {
        let pairs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| occupancy[i] != occupancy[j])
            .collect();
        Self { n, pairs, imaginary: !real, diagonal: false }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len() * if self.imaginary { 2 } else { 1 } + if self.diagonal { self.n } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn generator(&self, x: &[f64]) -> DMatrix<Complex64> {
        let mut eta = DMatrix::from_element(self.n, self.n, ZERO);
        let mut k = 0;
        for &(i, j) in &self.pairs {
            let re = x[k];
            let im = if self.imaginary { x[k + 1] } else { 0.0 };
            k += if self.imaginary { 2 } else { 1 };
            eta[(i, j)] = Complex64::new(re, im);
            eta[(j, i)] = Complex64::new(-re, im);
        }
        if self.diagonal {
            for i in 0..self.n {
                eta[(i, i)] = Complex64::new(0.0, x[k]);
                k += 1;
            }
        }
        eta
    }

    /// Gradient components from `W`, where `dE = 2 Re sum conj(d eta_ij) W_ij`.
    fn project(&self, w: &DMatrix<Complex64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &(i, j) in &self.pairs {
            out.push(2.0 * (w[(i, j)].re - w[(j, i)].re));
            if self.imaginary {
                out.push(2.0 * (w[(i, j)].im + w[(j, i)].im));
            }
        }
        if self.diagonal {
            for i in 0..self.n {
                out.push(2.0 * w[(i, i)].im);
            }
        }
        out
    }
}

/// Gradient of `E(U) = <psi|H(U)|psi>` with respect to the generator, where
/// `rotated` holds the tables over `U = exp(eta)`.
fn orbital_gradient(
    rotated: &IntegralTables,
    u: &DMatrix<Complex64>,
    eta: &DMatrix<Complex64>,
    psi: &Wavefunction,
    param: &Parametrization,
) -> Result<Vec<f64>> {
    let n = rotated.n_orb();
    let (gamma, big) = orbital_rdms(psi, rotated)?;
    let g = rotated.g_slice();
    // M_tp = sum_q h'_tq gamma_pq + sum_qrs (tq|rs)' Gamma_pqrs
    let mut m = DMatrix::from_element(n, n, ZERO);
    let n3 = n * n * n;
    for t in 0..n {
        for p in 0..n {
            let mut acc = ZERO;
            for q in 0..n {
                acc += rotated.h(t, q) * gamma[(p, q)];
            }
            let gt = &g[t * n3..(t + 1) * n3];
            let bp = &big[p * n3..(p + 1) * n3];
            for (x, y) in gt.iter().zip(bp) {
                acc += x * y;
            }
            m[(t, p)] = acc;
        }
    }
    // dE/d conj(U) = U M; pull back through the exponential.
    let w = exp_frechet(&(-eta), &(u * m));
    Ok(param.project(&w))
}

/// `E(c, eta)` of the pinned ansatz over orbitals `exp(eta)` of fixed
/// reference tables, with `c` packed as `(Re alpha, Im alpha, Re beta, ...)`
/// (not necessarily normalized) followed by the orbital parameters.
#[derive(Clone, Debug)]
pub struct AnsatzFunctional<'a> {
    tables: &'a IntegralTables,
    space: AnsatzSpace,
    param: Parametrization,
}

impl<'a> AnsatzFunctional<'a> {
    pub fn new(tables: &'a IntegralTables, assignment: SpinAssignment, param: Parametrization) -> Result<Self> {
        if param.dimension() != tables.n_orb() {
            return Err(Error::DimensionMismatch { expected: tables.n_orb(), found: param.dimension() });
        }
        Ok(Self { tables, space: ansatz_space(assignment, tables)?, param })
    }

    /// All independent generator entries.
    pub fn full(tables: &'a IntegralTables, assignment: SpinAssignment) -> Result<Self> {
        let real = tables.is_real(REAL_TOL);
        Self::new(tables, assignment, Parametrization::full(tables.n_orb(), real))
    }

    pub fn n_params(&self) -> usize {
        6 + self.param.len()
    }

    pub fn parametrization(&self) -> &Parametrization {
        &self.param
    }

    pub fn pack(&self, c: &BDCoefficients, orbital: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n_params());
        for z in [c.alpha, c.beta, c.gamma] {
            x.extend([z.re, z.im]);
        }
        x.extend_from_slice(orbital);
        x
    }

    fn split(&self, x: &[f64]) -> Result<(Vector3<Complex64>, DMatrix<Complex64>)> {
        if x.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), found: x.len() });
        }
        let v = Vector3::new(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]), Complex64::new(x[4], x[5]));
        Ok((v, self.param.generator(&x[6..])))
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        let (v, eta) = self.split(x)?;
        let rotated = self.tables.transformed(&eta.exp())?;
        let h = secular_matrix(&self.space, &rotated);
        Ok((v.adjoint() * h * v)[(0, 0)].re / v.norm_squared())
    }

    /// Analytic gradient with respect to the packed parameters.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (v, eta) = self.split(x)?;
        let u = eta.exp();
        let rotated = self.tables.transformed(&u)?;
        let h = secular_matrix(&self.space, &rotated);
        let norm2 = v.norm_squared();
        let hv = h * v;
        let e = v.dotc(&hv).re / norm2;
        let r = (hv - v * Complex64::new(e, 0.0)) / Complex64::new(norm2, 0.0);
        let mut out = Vec::with_capacity(self.n_params());
        for k in 0..3 {
            out.extend([2.0 * r[k].re, 2.0 * r[k].im]);
        }
        let c = BDCoefficients::from_vector(&v)?;
        let psi = embedded_state(&c, &self.space)?;
        out.extend(orbital_gradient(&rotated, &u, &eta, &psi, &self.param)?);
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Newton iteration

#[derive(Clone, Debug)]
struct NewtonOutcome {
    x: Vec<f64>,
    energy: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes `f` from `x0`. The Hessian is the central difference of the
/// analytic gradient with eigenvalues replaced by `max(|lambda|, floor)`;
/// steps are capped and backtracked, falling back to steepest descent.
fn newton<F>(f: F, x0: Vec<f64>, config: &SolverConfig) -> Result<NewtonOutcome>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0;
    let (mut e, mut g) = f(&x)?;
    let mut last_change = 0.0f64;
    let h = config.finite_difference_step;
    for it in 0..config.max_iterations {
        let gn = norm(&g);
        if n == 0 || (gn <= config.gradient_tolerance && last_change.abs() <= config.energy_tolerance) {
            return Ok(NewtonOutcome { x, energy: e, gradient_norm: gn, iterations: it, converged: true });
        }
        let mut hess = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let gp = f(&xp)?.1;
            let gm = f(&xm)?.1;
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let hess = (&hess + hess.transpose()) * 0.5;
        let gv = DVector::from_column_slice(&g);
        let newton_step = SymmetricEigen::try_new(hess, 1e-14, 0).map(|eig| {
            let coeff = eig.eigenvectors.transpose() * &gv;
            let scaled = DVector::from_fn(n, |i, _| -coeff[i] / eig.eigenvalues[i].abs().max(HESSIAN_FLOOR));
            eig.eigenvectors * scaled
        });
        let mut directions = Vec::with_capacity(2);
        if let Some(p) = newton_step.filter(|p| p.iter().all(|v| v.is_finite())) {
            directions.push(p);
        }
        directions.push(-gv.clone());
        let mut accepted = None;
        for mut p in directions {
            let pn = p.norm();
            if pn > MAX_STEP {
                p *= MAX_STEP / pn;
            }
            let slope = gv.dot(&p);
            let mut t = 1.0;
            while t > 1e-10 {
                let xt: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + t * b).collect();
                let (et, gt) = f(&xt)?;
                if et <= e + 1e-4 * t * slope + DESCENT_SLACK {
                    accepted = Some((xt, et, gt));
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        match accepted {
            Some((xt, et, gt)) => {
                last_change = et - e;
                x = xt;
                e = et;
                g = gt;
            }
            None => {
                return Ok(NewtonOutcome { x, energy: e, gradient_norm: gn, iterations: it, converged: false });
            }
        }
    }
    let gn = norm(&g);
    let converged = gn <= config.gradient_tolerance && last_change.abs() <= config.energy_tolerance;
    Ok(NewtonOutcome { x, energy: e, gradient_norm: gn, iterations: config.max_iterations, converged })
}

// ---------------------------------------------------------------------------
// Hartree-Fock

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HfResult {
    /// Rotation from the input orbitals to the optimized ones.
    pub rotation: OrbitalRotation,
    pub energy: f64,
    /// Energy of the reference determinant in the input orbitals.
    pub initial_energy: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

/// Spin-summed occupancy of each orbital in the reference determinant.
fn hf_occupancy(tables: &IntegralTables) -> Vec<u8> {
    let mut occ = vec![0u8; tables.n_orb()];
    match tables.kind() {
        OrbitalKind::Spatial => {
            occ[0] = 2;
            occ[1] = 1;
        }
        OrbitalKind::SpinOrbital => occ[..3].iter_mut().for_each(|o| *o = 1),
    }
    occ
}

fn check_size(tables: &IntegralTables) -> Result<()> {
    let min = match tables.kind() {
        OrbitalKind::Spatial => 3,
        OrbitalKind::SpinOrbital => 6,
    };
    if tables.n_orb() < min {
        return Err(Error::DimensionMismatch { expected: min, found: tables.n_orb() });
    }
    Ok(())
}

fn permutation(n: usize, a: usize, b: usize) -> DMatrix<Complex64> {
    let mut p = DMatrix::identity(n, n);
    if a != b {
        p.swap_columns(a, b);
    }
    p
}

fn determinant_energy(space: &AnsatzSpace, tables: &IntegralTables) -> f64 {
    let k = &space.determinants[0];
    fock::matrix_element(k, k, tables).re
}

/// Newton minimization of the reference determinant, reporting rather than
/// rejecting non-convergence.
fn hf_run(tables: &IntegralTables, config: &SolverConfig) -> Result<(HfResult, DMatrix<Complex64>)> {
    config.validate()?;
    check_size(tables)?;
    tables.validate()?;
    let n = tables.n_orb();
    let space = ansatz_space(SpinAssignment::A, tables)?;
    let initial_energy = determinant_energy(&space, tables);

    // Start from the best single swap of a higher orbital into the singly
    // occupied slot (or the identity).
    let slot = match tables.kind() {
        OrbitalKind::Spatial => 1,
        OrbitalKind::SpinOrbital => 2,
    };
    let mut start = DMatrix::identity(n, n);
    let mut best = initial_energy;
    for k in slot + 1..n {
        let p = permutation(n, slot, k);
        let e = determinant_energy(&space, &tables.transformed(&p)?);
        if e < best - 1e-12 {
            best = e;
            start = p;
        }
    }
    let real = tables.is_real(REAL_TOL);
    let base = tables.transformed(&start)?;
    let param = Parametrization::mixing(n, &hf_occupancy(tables), real);
    let functional = AnsatzFunctional::new(&base, SpinAssignment::A, param)?;
    let c = BDCoefficients::hartree_fock();
    let f = |x: &[f64]| {
        let full = functional.pack(&c, x);
        let e = functional.energy(&full)?;
        let g = functional.gradient(&full)?;
        Ok((e, g[6..].to_vec()))
    };
    let out = newton(f, vec![0.0; functional.parametrization().len()], config)?;
    let mut u = start * functional.parametrization().generator(&out.x).exp();
    if real {
        u = u.map(|z| Complex64::new(z.re, 0.0));
    }
    let r = HfResult {
        rotation: OrbitalRotation::from_unitary(&u)?,
        energy: out.energy,
        initial_energy,
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
        converged: out.converged,
    };
    Ok((r, u))
}

/// Minimizes the energy of the reference determinant (the `alpha = 1`
/// limit of the ansatz) over orbital rotations.
pub fn hf_preoptimize(tables: &IntegralTables, config: &SolverConfig) -> Result<HfResult> {
    let (r, _) = hf_run(tables, config)?;
    if !r.converged {
        return Err(Error::NotConverged { iterations: r.iterations, gradient_norm: r.gradient_norm });
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// MCSCF

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub energy: f64,
    pub coefficients: BDCoefficients,
    /// Rotation from the input orbitals to the optimized ones.
    pub rotation: OrbitalRotation,
    pub assignment: SpinAssignment,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Energy of the Hartree-Fock pre-optimization.
    pub hf_energy: f64,
    pub hf_converged: bool,
    /// The six largest natural occupation numbers of the optimized state.
    pub occupations: OccupationVector,
    pub constraints: ConstraintReport,
    pub self_consistency: SelfConsistency,
}

/// Rotations the ansatz energy depends on: everything except the pairs of
/// orbitals outside the ansatz.
fn ansatz_parametrization(tables: &IntegralTables, real: bool) -> Parametrization {
    let active = match tables.kind() {
        OrbitalKind::Spatial => 3,
        OrbitalKind::SpinOrbital => 6,
    };
    let mut occ = vec![0u8; tables.n_orb()];
    occ[..active].iter_mut().enumerate().for_each(|(i, o)| *o = 1 + i as u8);
    Parametrization::mixing(tables.n_orb(), &occ, real)
}

#[derive(Clone, Debug)]
struct StartOutcome {
    assignment: SpinAssignment,
    start: usize,
    newton: NewtonOutcome,
}

/// Energy, coefficients, generator, unitary and rotated tables at `x`.
type SecularPoint = (f64, BDCoefficients, DMatrix<Complex64>, DMatrix<Complex64>, IntegralTables);

fn secular_energy(
    space: &AnsatzSpace,
    base: &IntegralTables,
    param: &Parametrization,
    x: &[f64],
) -> Result<SecularPoint> {
    let eta = param.generator(x);
    let u = eta.exp();
    let rotated = base.transformed(&u)?;
    let (e, c) = secular_ground(space, &rotated);
    Ok((e, c, eta, u, rotated))
}

fn solve_from(
    base: &IntegralTables,
    assignment: SpinAssignment,
    param: &Parametrization,
    x0: Vec<f64>,
    config: &SolverConfig,
) -> Result<NewtonOutcome> {
    let space = ansatz_space(assignment, base)?;
    let f = |x: &[f64]| {
        let (e, c, eta, u, rotated) = secular_energy(&space, base, param, x)?;
        let psi = embedded_state(&c, &space)?;
        Ok((e, orbital_gradient(&rotated, &u, &eta, &psi, param)?))
    };
    newton(f, x0, config)
}

/// Pinned MCSCF: Hartree-Fock pre-optimization, then Newton minimization of
/// the secular energy over orbital rotations for each spin assignment and
/// starting point. Returns the lowest result; non-convergence is reported
/// through `converged`.
pub fn mcscf_solve(tables: &IntegralTables, config: &SolverConfig) -> Result<SolveResult> {
    let (hf, hf_u) = hf_run(tables, config)?;
    let hf_tables = tables.transformed(&hf_u)?;
    let n = tables.n_orb();
    let param = ansatz_parametrization(tables, tables.is_real(REAL_TOL));

    // The third ansatz orbital is a virtual of the reference determinant;
    // seed it with the virtual giving the lowest secular energy.
    let third = match tables.kind() {
        OrbitalKind::Spatial => Some(2),
        OrbitalKind::SpinOrbital => None,
    };
    let mut jobs = Vec::new();
    for assignment in config.assignment.candidates() {
        let space = ansatz_space(assignment, &hf_tables)?;
        let mut perm = DMatrix::identity(n, n);
        if let Some(slot) = third {
            let mut best = secular_ground(&space, &hf_tables).0;
            for k in slot + 1..n {
                let p = permutation(n, slot, k);
                let e = secular_ground(&space, &hf_tables.transformed(&p)?).0;
                if e < best - 1e-12 {
                    best = e;
                    perm = p;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for start in 0..config.multistart {
            let x0: Vec<f64> = if start == 0 {
                vec![0.0; param.len()]
            } else {
                (0..param.len()).map(|_| 0.3 * rng.random_range(-1.0..1.0)).collect()
            };
            jobs.push((assignment, start, perm.clone(), x0));
        }
    }
    let outcomes: Vec<(StartOutcome, DMatrix<Complex64>)> = jobs
        .into_par_iter()
        .map(|(assignment, start, perm, x0)| {
            let base = hf_tables.transformed(&perm)?;
            let newton = solve_from(&base, assignment, &param, x0, config)?;
            Ok((StartOutcome { assignment, start, newton }, perm))
        })
        .collect::<Result<_>>()?;
    // Equivalent optima differ only in labelling; among energies within
    // round-off of the minimum keep the earliest start.
    let lowest = outcomes.iter().map(|(o, _)| o.newton.energy).fold(f64::INFINITY, f64::min);
    let (best, perm) = outcomes
        .into_iter()
        .filter(|(o, _)| o.newton.energy <= lowest + 1e-9)
        .min_by_key(|(o, _)| (o.start, o.assignment.cmp_key()))
        .expect("at least one start");

    let base = hf_tables.transformed(&perm)?;
    let space = ansatz_space(best.assignment, &base)?;
    let (energy, coefficients, _, u, rotated) = secular_energy(&space, &base, &param, &best.newton.x)?;
    let total = hf_u * perm * u;
    let psi = embedded_state(&coefficients, &space)?;
    let no = natural_occupations(&one_rdm(&psi)?)?;
    let occupations = OccupationVector::normalized_to(no.occupations.entries()[..6].to_vec(), 3)?;
    let constraints = ConstraintReport::for_vector(&occupations, 3)?;
    debug_assert!((fock::energy_expectation(&psi, &rotated)? - energy).abs() < 1e-8);
    Ok(SolveResult {
        energy,
        coefficients,
        rotation: OrbitalRotation::from_unitary(&total)?,
        assignment: best.assignment,
        iterations: best.newton.iterations,
        converged: best.newton.converged && hf.converged,
        gradient_norm: best.newton.gradient_norm,
        hf_energy: hf.energy,
        hf_converged: hf.converged,
        occupations,
        constraints,
        self_consistency: ansatz::check_selfconsistency(&coefficients),
    })
}

impl SpinAssignment {
    fn cmp_key(self) -> u8 {
        match self {
            SpinAssignment::A => 0,
            SpinAssignment::B => 1,
        }
    }
}
