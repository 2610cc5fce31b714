//! Spherically symmetric orbitals written as finite sums `c r^k exp(-zeta r)`
//! and closed-form one- and two-electron integrals between them.
//!
//! All functions are treated as s-waves: the angular factor contributes `4 pi`
//! to every one-electron integral and `(4 pi)^2` to the Coulomb integrals.
//!
//! Laguerre expansions alternate in sign with terms far larger than the
//! result, so coefficients are kept as double-double numbers and every sum is
//! accumulated in double-double arithmetic.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::tables::IntegralTables;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Largest Shull-Lowdin index accepted by [`shull_lowdin`].
pub const MAX_SHULL_LOWDIN: usize = 12;

/// Condition number of the raw overlap matrix above which [`build_basis`]
/// gives up.
pub const MAX_CONDITION: f64 = 1e12;

/// `c r^power exp(-exponent r)`. The coefficient is `coeff + coeff_lo`; the
/// low part is zero for terms built from plain floats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTerm {
    pub coeff: f64,
    #[serde(default)]
    pub coeff_lo: f64,
    pub power: u32,
    pub exponent: f64,
}

impl RadialTerm {
    pub fn new(coeff: f64, power: u32, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidArgument(format!("radial exponent must be positive, got {exponent}")));
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidArgument(format!("radial coefficient must be finite, got {coeff}")));
        }
        Ok(Self { coeff, coeff_lo: 0.0, power, exponent })
    }

    fn dd(&self) -> Dd {
        Dd { hi: self.coeff, lo: self.coeff_lo }
    }

    fn with_dd(&self, c: Dd) -> Self {
        Self { coeff: c.hi, coeff_lo: c.lo, ..*self }
    }

    /// Full-precision coefficient as a float.
    pub fn value(&self) -> f64 {
        self.coeff + self.coeff_lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub label: String,
    pub terms: Vec<RadialTerm>,
}

impl fmt::Display for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl RadialFunction {
    pub fn new(label: impl Into<String>, terms: Vec<RadialTerm>) -> Result<Self> {
        for t in &terms {
            RadialTerm::new(t.coeff, t.power, t.exponent)?;
        }
        Ok(Self { label: label.into(), terms }.merged())
    }

    /// Value at radius `r` (without the angular factor).
    pub fn eval(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.value() * r.powi(t.power as i32) * (-t.exponent * r).exp())
            .sum()
    }

    /// Radial derivative at `r`.
    pub fn derivative(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let k = t.power as i32;
                let poly = if k == 0 { 0.0 } else { k as f64 * r.powi(k - 1) };
                t.value() * (poly - t.exponent * r.powi(k)) * (-t.exponent * r).exp()
            })
            .sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.scaled_dd(Dd::from(factor))
    }

    fn scaled_dd(&self, factor: Dd) -> Self {
        let terms = self.terms.iter().map(|t| t.with_dd(t.dd() * factor)).collect();
        Self { label: self.label.clone(), terms }
    }

    /// `f(r) -> f(c r)` with coefficients renormalized to keep the norm.
    pub fn dilated(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| RadialTerm {
                exponent: t.exponent * c,
                ..t.with_dd(t.dd() * Dd::from(c).powi(t.power) * c.powf(1.5))
            })
            .collect();
        Self { label: self.label.clone(), terms }
    }

    pub fn norm(&self) -> f64 {
        overlap_dd(self, self).sqrt().to_f64()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = overlap_dd(self, self).sqrt();
        if !(n.hi > 0.0) || !n.hi.is_finite() {
            return Err(Error::InvalidArgument(format!("cannot normalize `{}`", self.label)));
        }
        Ok(self.scaled_dd(Dd::from(1.0) / n))
    }

    /// `sum_i w_i f_i`, keeping the given label.
    pub fn combination(label: impl Into<String>, parts: &[(f64, &RadialFunction)]) -> Self {
        let terms = parts
            .iter()
            .flat_map(|(w, f)| f.terms.iter().map(move |t| t.with_dd(t.dd() * *w)))
            .collect();
        Self { label: label.into(), terms }.merged()
    }

    /// Pointwise product, used for charge densities.
    pub fn product(&self, other: &RadialFunction) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let c = a.dd() * b.dd();
                terms.push(RadialTerm {
                    coeff: c.hi,
                    coeff_lo: c.lo,
                    power: a.power + b.power,
                    exponent: a.exponent + b.exponent,
                });
            }
        }
        Self { label: format!("{}*{}", self.label, other.label), terms }.merged()
    }

    /// Collapses terms sharing power and exponent.
    fn merged(mut self) -> Self {
        let mut out: Vec<RadialTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match out
                .iter_mut()
                .find(|o| o.power == t.power && o.exponent.to_bits() == t.exponent.to_bits())
            {
                Some(o) => *o = o.with_dd(o.dd() + t.dd()),
                None => out.push(t),
            }
        }
        out.retain(|t| t.coeff != 0.0);
        self.terms = out;
        self
    }
}

/// `int_0^inf r^n exp(-s r) dr = n! / s^(n+1)`.
fn moment(n: u32, s: Dd) -> Dd {
    let mut v = Dd::from(1.0) / s;
    for k in 1..=n {
        v = v * (k as f64) / s;
    }
    v
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shull-Lowdin function `delta_n(a)`: the associated Laguerre polynomial
/// `L^2_{n-1}(2 a r)` times `exp(-a r)`, normalized to one.
pub fn shull_lowdin(n: usize, a: f64) -> Result<RadialFunction> {
    if n == 0 || n > MAX_SHULL_LOWDIN {
        return Err(Error::InvalidArgument(format!(
            "Shull-Lowdin index must lie in 1..={MAX_SHULL_LOWDIN}, got {n}"
        )));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent a must be positive, got {a}")));
    }
    let m = n - 1;
    let mut terms = Vec::with_capacity(n);
    let mut fact = 1.0;
    for i in 0..=m {
        if i > 0 {
            fact *= i as f64;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let c = Dd::from(sign * binomial(m + 2, m - i)) / Dd::from(fact) * Dd::from(2.0 * a).powi(i as u32);
        terms.push(RadialTerm::new(1.0, i as u32, a)?.with_dd(c));
    }
    RadialFunction::new(format!("delta{n}"), terms)?.normalized()
}

/// Prefactors of the hydrogen-like functions as printed in the literature:
/// `chi_1 = 1/4 sqrt(b^5 / 6 pi) r exp(-b r / 2)` and
/// `chi_2 = 8/81 sqrt(b^7 / 30 pi) r^2 exp(-b r / 3)`.
pub fn hydrogenic_printed(n: usize, b: f64) -> Result<RadialFunction> {
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent b must be positive, got {b}")));
    }
    let pi = std::f64::consts::PI;
    let term = match n {
        1 => RadialTerm::new(0.25 * (b.powi(5) / (6.0 * pi)).sqrt(), 1, b / 2.0)?,
        2 => RadialTerm::new(8.0 / 81.0 * (b.powi(7) / (30.0 * pi)).sqrt(), 2, b / 3.0)?,
        _ => {
            return Err(Error::InvalidArgument(format!("hydrogen-like index must be 1 or 2, got {n}")))
        }
    };
    RadialFunction::new(format!("chi{n}"), vec![term])
}

/// Hydrogen-like function `chi_n(b)`, renormalized to one.
pub fn hydrogenic_chi(n: usize, b: f64) -> Result<RadialFunction> {
    hydrogenic_printed(n, b)?.normalized()
}

fn exponent_sum(a: &RadialTerm, b: &RadialTerm) -> Dd {
    Dd::new(a.exponent, 0.0) + Dd::from(b.exponent)
}

fn overlap_dd(f: &RadialFunction, g: &RadialFunction) -> Dd {
    let mut acc = Dd::ZERO;
    for a in &f.terms {
        for b in &g.terms {
            acc += a.dd() * b.dd() * moment(a.power + b.power + 2, exponent_sum(a, b));
        }
    }
    acc * FOUR_PI
}

/// `4 pi int f g r^2 dr`.
pub fn overlap(f: &RadialFunction, g: &RadialFunction) -> f64 {
    overlap_dd(f, g).to_f64()
}

/// Terms of `d(r f)/dr`.
fn reduced_derivative(f: &RadialFunction) -> Vec<RadialTerm> {
    let mut out = Vec::with_capacity(2 * f.terms.len());
    for t in &f.terms {
        out.push(t.with_dd(t.dd() * (t.power + 1) as f64));
        out.push(RadialTerm { power: t.power + 1, ..t.with_dd(-(t.dd() * t.exponent)) });
    }
    out
}

/// `<f| -1/2 laplacian |g>` for s-waves: `1/2 * 4 pi int (r f)' (r g)' dr`.
pub fn kinetic(f: &RadialFunction, g: &RadialFunction) -> f64 {
    let df = reduced_derivative(f);
    let dg = reduced_derivative(g);
    let mut acc = Dd::ZERO;
    for a in &df {
        for b in &dg {
            acc += a.dd() * b.dd() * moment(a.power + b.power, exponent_sum(a, b));
        }
    }
    (acc * (0.5 * FOUR_PI)).to_f64()
}

/// `<f| -Z/r |g>`.
pub fn nuclear_attraction(f: &RadialFunction, g: &RadialFunction, z: f64) -> f64 {
    let mut acc = Dd::ZERO;
    for a in &f.terms {
        for b in &g.terms {
            acc += a.dd() * b.dd() * moment(a.power + b.power + 1, exponent_sum(a, b));
        }
    }
    (acc * (-z * FOUR_PI)).to_f64()
}

/// `int_0^inf x^(m-1) e^(-s x) int_0^x y^n e^(-t y) dy dx` for `m >= 1`.
///
/// Expanding the lower incomplete gamma function as
/// `n!/t^(n+1) e^(-t x) sum_{j>n} (t x)^j / j!` leaves a series of positive
/// terms with ratio `t (m+j) / ((j+1)(s+t))`.
fn nested_moment(m: u32, s: f64, n: u32, t: f64) -> Dd {
    debug_assert!(m >= 1);
    let st = Dd::new(s, 0.0) + Dd::from(t);
    // j = n + 1: (m+n)! / ((n+1) (s+t)^(m+n+1)).
    let mut term = moment(m + n, st) / (n + 1) as f64;
    let mut sum = Dd::ZERO;
    let mut j = n + 1;
    loop {
        sum += term;
        let ratio = Dd::from(t) * (m + j) as f64 / (st * (j + 1) as f64);
        term = term * ratio;
        j += 1;
        if (term.hi <= sum.hi * 1e-33 && ratio.hi < 1.0) || j > n + 20_000 {
            break;
        }
    }
    sum
}

/// Coulomb kernel `int int rho_a(r1) rho_b(r2) r1^2 r2^2 / max(r1, r2)` for two
/// single-term densities `r^ka exp(-sa r)` and `r^kb exp(-sb r)`.
fn coulomb_kernel(ka: u32, sa: f64, kb: u32, sb: f64) -> Dd {
    // r2 < r1:  int r1^(ka+1) e^(-sa r1) int_0^r1 r2^(kb+2) e^(-sb r2)
    // r2 > r1:  int r2^(kb+1) e^(-sb r2) int_0^r2 r1^(ka+2) e^(-sa r1)
    nested_moment(ka + 2, sa, kb + 2, sb) + nested_moment(kb + 2, sb, ka + 2, sa)
}

/// Coulomb integral between two charge distributions given as radial functions.
pub fn coulomb_density(rho_a: &RadialFunction, rho_b: &RadialFunction) -> f64 {
    let mut acc = Dd::ZERO;
    for a in &rho_a.terms {
        for b in &rho_b.terms {
            acc += a.dd() * b.dd() * coulomb_kernel(a.power, a.exponent, b.power, b.exponent);
        }
    }
    (acc * (FOUR_PI * FOUR_PI)).to_f64()
}

/// Two-electron repulsion `(f1 f2 | f3 f4)` in chemists' notation.
pub fn coulomb_repulsion(
    f1: &RadialFunction,
    f2: &RadialFunction,
    f3: &RadialFunction,
    f4: &RadialFunction,
) -> f64 {
    coulomb_density(&f1.product(f2), &f3.product(f4))
}

/// Gram matrix of a set of functions.
pub fn gram_matrix(functions: &[RadialFunction]) -> DMatrix<f64> {
    let n = functions.len();
    DMatrix::from_fn(n, n, |i, j| overlap(&functions[i], &functions[j]))
}

/// Orthonormalizes `functions` by Gram-Schmidt in the given order.
///
/// Fails when the overlap matrix of the inputs has a condition number above
/// [`MAX_CONDITION`]; the error names the function with the smallest
/// Gram-Schmidt residual.
pub fn orthonormalize(functions: &[RadialFunction]) -> Result<Vec<RadialFunction>> {
    if functions.is_empty() {
        return Ok(Vec::new());
    }
    let normalized: Vec<RadialFunction> =
        functions.iter().map(RadialFunction::normalized).collect::<Result<_>>()?;
    let eig = SymmetricEigen::new(gram_matrix(&normalized));
    let (min, max) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };

    let mut out: Vec<RadialFunction> = Vec::with_capacity(functions.len());
    let mut weakest = (f64::INFINITY, String::new());
    for f in &normalized {
        let mut v = f.clone();
        // Two passes of classical Gram-Schmidt keep the result orthogonal to
        // working precision.
        for _ in 0..2 {
            let projections: Vec<f64> = out.iter().map(|o| overlap(o, &v)).collect();
            let mut parts: Vec<(f64, &RadialFunction)> = vec![(1.0, &v)];
            parts.extend(out.iter().zip(&projections).map(|(o, p)| (-p, o)));
            v = RadialFunction::combination(f.label.clone(), &parts);
        }
        let residual = v.norm();
        if residual < weakest.0 {
            weakest = (residual, f.label.clone());
        }
        if !(residual > 0.0) {
            return Err(Error::LinearDependence { label: f.label.clone(), condition });
        }
        out.push(v.scaled(1.0 / residual));
    }
    if condition > MAX_CONDITION {
        return Err(Error::LinearDependence { label: weakest.1, condition });
    }
    Ok(out)
}

/// Which functions enter the basis: `delta_1..delta_m` followed by the first
/// `n_chi` hydrogen-like functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub n_chi: usize,
}

impl BasisSpec {
    pub fn new(m: usize, a: f64, b: f64) -> Self {
        Self { m, a, b, n_chi: 2 }
    }

    pub fn with_chi(mut self, n_chi: usize) -> Self {
        self.n_chi = n_chi;
        self
    }

    pub fn size(&self) -> usize {
        self.m + self.n_chi
    }

    pub fn raw_functions(&self) -> Result<Vec<RadialFunction>> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("basis needs at least one Shull-Lowdin function".into()));
        }
        if self.n_chi > 2 {
            return Err(Error::InvalidArgument(format!("at most two hydrogen-like functions, got {}", self.n_chi)));
        }
        let mut fs = Vec::with_capacity(self.size());
        for n in 1..=self.m {
            fs.push(shull_lowdin(n, self.a)?);
        }
        for n in 1..=self.n_chi {
            fs.push(hydrogenic_chi(n, self.b)?);
        }
        Ok(fs)
    }
}

/// `delta_1..delta_M, chi_1, chi_2` orthonormalized in that order.
pub fn build_basis(m: usize, a: f64, b: f64) -> Result<Vec<RadialFunction>> {
    build_basis_from(&BasisSpec::new(m, a, b))
}

pub fn build_basis_from(spec: &BasisSpec) -> Result<Vec<RadialFunction>> {
    orthonormalize(&spec.raw_functions()?)
}

/// Kinetic plus nuclear one-electron matrix and Coulomb tensor over `basis`.
pub fn build_integral_tables(basis: &[RadialFunction], z: f64) -> Result<IntegralTables> {
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("nuclear charge must be positive, got {z}")));
    }
    let k = basis.len();
    if k == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    let mut h = vec![0.0; k * k];
    for p in 0..k {
        for q in p..k {
            let v = kinetic(&basis[p], &basis[q]) + nuclear_attraction(&basis[p], &basis[q], z);
            h[p * k + q] = v;
            h[q * k + p] = v;
        }
    }

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|p| (p..k).map(move |q| (p, q))).collect();
    let densities: Vec<RadialFunction> =
        pairs.iter().map(|&(p, q)| basis[p].product(&basis[q])).collect();
    let n_pairs = pairs.len();
    let unique: Vec<(usize, usize, f64)> = (0..n_pairs)
        .into_par_iter()
        .flat_map_iter(|i| {
            let densities = &densities;
            (i..n_pairs).map(move |j| (i, j, coulomb_density(&densities[i], &densities[j])))
        })
        .collect();

    let mut g = vec![0.0; k.pow(4)];
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * k + q) * k + r) * k + s;
    for (i, j, v) in unique {
        let (p, q) = pairs[i];
        let (r, s) = pairs[j];
        for (a, b) in [(p, q), (q, p)] {
            for (c, d) in [(r, s), (s, r)] {
                g[idx(a, b, c, d)] = v;
                g[idx(c, d, a, b)] = v;
            }
        }
    }
    IntegralTables::from_real(k, &h, &g, z)
}
