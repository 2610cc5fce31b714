//! Natural occupation numbers and the linear constraints they obey.
//!
//! A pure `N`-fermion state with a `d`-dimensional one-particle space has
//! decreasingly ordered natural occupation numbers `lambda_1 >= ... >= lambda_d`
//! in `[0, 1]`. Beyond these Pauli bounds they satisfy affine inequalities
//! `D(lambda) = kappa_0 + sum_i kappa_i lambda_i >= 0`. For three fermions in
//! six orbitals (the Borland-Dennis setting) the family consists of the three
//! equalities `lambda_1 + lambda_6 = lambda_2 + lambda_5 = lambda_3 + lambda_4 = 1`
//! and the single inequality `D = 2 - (lambda_1 + lambda_2 + lambda_4) >= 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries may exceed `[0, 1]` by this much.
pub const ENTRY_TOL: f64 = 1e-12;
/// Consecutive entries count as ordered when `lambda_i >= lambda_{i+1} - ORDER_TOL`.
pub const ORDER_TOL: f64 = 1e-10;
/// Tolerance on `sum lambda_i = N`.
pub const SUM_TOL: f64 = 1e-10;
/// Tolerance on the Borland-Dennis equalities and on `D >= 0` when deciding
/// polytope membership.
pub const POLYTOPE_TOL: f64 = 1e-10;

/// Decreasingly ordered natural occupation numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationVector {
    entries: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    particles: Option<usize>,
}

impl OccupationVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidOccupations("empty occupation vector".into()));
        }
        for (i, &x) in entries.iter().enumerate() {
            if !x.is_finite() || !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(&x) {
                return Err(Error::InvalidOccupations(format!(
                    "entry {} = {x} violates the Pauli bounds",
                    i + 1
                )));
            }
        }
        for (i, w) in entries.windows(2).enumerate() {
            if w[0] < w[1] - ORDER_TOL {
                return Err(Error::InvalidOccupations(format!(
                    "entries {} and {} are not decreasingly ordered ({} < {})",
                    i + 1,
                    i + 2,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(Self { entries, particles: None })
    }

    /// Ordered vector that must additionally sum to `n`.
    pub fn normalized_to(entries: Vec<f64>, n: usize) -> Result<Self> {
        let mut v = Self::new(entries)?;
        let sum: f64 = v.entries.iter().sum();
        if (sum - n as f64).abs() > SUM_TOL {
            return Err(Error::InvalidOccupations(format!("entries sum to {sum}, expected {n}")));
        }
        v.particles = Some(n);
        Ok(v)
    }

    /// The `k` largest entries, without renormalization.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k > self.entries.len() {
            return Err(Error::InvalidArgument(format!("cannot take {k} of {} entries", self.entries.len())));
        }
        Self::new(self.entries[..k].to_vec())
    }

    /// Sorts decreasingly, then validates. Ties keep their input order.
    pub fn from_unsorted(mut entries: Vec<f64>) -> Result<Self> {
        entries.sort_by(|a, b| b.total_cmp(a));
        Self::new(entries)
    }

    /// `(1, ..., 1, 0, ..., 0)` with `n` ones.
    pub fn hartree_fock(n: usize, d: usize) -> Result<Self> {
        if n > d {
            return Err(Error::InvalidArgument(format!("{n} particles do not fit into {d} orbitals")));
        }
        let entries = (0..d).map(|i| if i < n { 1.0 } else { 0.0 }).collect();
        Self::normalized_to(entries, n)
    }

    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn particles(&self) -> Option<usize> {
        self.particles
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().sum()
    }

    fn expect_dimension(&self, d: usize) -> Result<()> {
        if self.dimension() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.dimension() });
        }
        Ok(())
    }
}

impl FromStr for OccupationVector {
    type Err = Error;

    /// Comma-separated decimals, e.g. `"0.95,0.85,0.8,0.2,0.15,0.05"`.
    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_list(s)?)
    }
}

/// Parses a comma-separated list of decimals without validating it.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| Error::InvalidOccupations(format!("`{t}` is not a number")))
                .and_then(|x| {
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(Error::InvalidOccupations(format!("`{t}` is not finite")))
                    }
                })
        })
        .collect()
}

/// `D(lambda) = kappa_0 + sum_i kappa_i lambda_i >= 0` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    pub kappa0: i64,
    pub kappas: Vec<i64>,
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.name, self.kappa0)?;
        for (i, &k) in self.kappas.iter().enumerate() {
            match k {
                0 => {}
                1 => write!(f, " + l{}", i + 1)?,
                -1 => write!(f, " - l{}", i + 1)?,
                k if k < 0 => write!(f, " - {}*l{}", -k, i + 1)?,
                k => write!(f, " + {}*l{}", k, i + 1)?,
            }
        }
        f.write_str(" >= 0")
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl LinearConstraint {
    pub fn new(name: impl Into<String>, kappa0: i64, kappas: Vec<i64>) -> Self {
        Self { name: name.into(), kappa0, kappas }
    }

    /// `1 - lambda_i >= 0` (0-based `i`).
    pub fn pauli_upper(i: usize, d: usize) -> Self {
        let mut kappas = vec![0; d];
        kappas[i] = -1;
        Self::new(format!("pauli_upper_{}", i + 1), 1, kappas)
    }

    /// `lambda_i >= 0` (0-based `i`).
    pub fn pauli_lower(i: usize, d: usize) -> Self {
        let mut kappas = vec![0; d];
        kappas[i] = 1;
        Self::new(format!("pauli_lower_{}", i + 1), 0, kappas)
    }

    /// `2 - lambda_1 - lambda_2 - lambda_4 >= 0`.
    pub fn borland_dennis() -> Self {
        Self::new("borland_dennis", 2, vec![-1, -1, 0, -1, 0, 0])
    }

    /// `1 - lambda_1 - lambda_6`, `1 - lambda_2 - lambda_5`, `1 - lambda_3 - lambda_4`,
    /// each holding with equality.
    pub fn borland_dennis_equalities() -> [Self; 3] {
        [
            Self::new("bd_eq_16", 1, vec![-1, 0, 0, 0, 0, -1]),
            Self::new("bd_eq_25", 1, vec![0, -1, 0, 0, -1, 0]),
            Self::new("bd_eq_34", 1, vec![0, 0, -1, -1, 0, 0]),
        ]
    }

    pub fn dimension(&self) -> usize {
        self.kappas.len()
    }

    /// Whether the coefficients share no common factor.
    pub fn is_minimal(&self) -> bool {
        self.kappas.iter().fold(self.kappa0, |g, &k| gcd(g, k)) <= 1
    }

    /// Divides out the common factor of all coefficients.
    pub fn minimal(&self) -> Self {
        let g = self.kappas.iter().fold(self.kappa0, |g, &k| gcd(g, k)).max(1);
        Self {
            name: self.name.clone(),
            kappa0: self.kappa0 / g,
            kappas: self.kappas.iter().map(|k| k / g).collect(),
        }
    }

    pub fn evaluate(&self, lam: &OccupationVector) -> Result<f64> {
        lam.expect_dimension(self.dimension())?;
        Ok(self.evaluate_slice(lam.entries()))
    }

    fn evaluate_slice(&self, lam: &[f64]) -> f64 {
        self.kappa0 as f64 + self.kappas.iter().zip(lam).map(|(&k, &x)| k as f64 * x).sum::<f64>()
    }
}

/// `kappa_0 + sum_i kappa_i lambda_i`.
pub fn evaluate_constraint(c: &LinearConstraint, lam: &OccupationVector) -> Result<f64> {
    c.evaluate(lam)
}

/// Pauli bounds `0 <= lambda_i <= 1` for every orbital.
pub fn pauli_constraints(d: usize) -> Vec<LinearConstraint> {
    (0..d)
        .flat_map(|i| [LinearConstraint::pauli_upper(i, d), LinearConstraint::pauli_lower(i, d)])
        .collect()
}

fn bd_residuals_slice(l: &[f64]) -> [f64; 3] {
    [l[0] + l[5] - 1.0, l[1] + l[4] - 1.0, l[2] + l[3] - 1.0]
}

fn bd_inequality_slice(l: &[f64]) -> f64 {
    2.0 - (l[0] + l[1] + l[3])
}

/// `(lambda_1 + lambda_6 - 1, lambda_2 + lambda_5 - 1, lambda_3 + lambda_4 - 1)`.
pub fn bd_equality_residuals(lam: &OccupationVector) -> Result<[f64; 3]> {
    lam.expect_dimension(6)?;
    Ok(bd_residuals_slice(lam.entries()))
}

/// `D(lambda) = 2 - (lambda_1 + lambda_2 + lambda_4)`.
pub fn bd_inequality(lam: &OccupationVector) -> Result<f64> {
    lam.expect_dimension(6)?;
    Ok(bd_inequality_slice(lam.entries()))
}

/// l1 distance to the Hartree-Fock point,
/// `S = sum_{i <= N} (1 - lambda_i) + sum_{i > N} lambda_i`.
pub fn distance_to_hf(lam: &OccupationVector, n: usize) -> Result<f64> {
    if n > lam.dimension() {
        return Err(Error::InvalidArgument(format!(
            "{n} particles exceed dimension {}",
            lam.dimension()
        )));
    }
    Ok(distance_to_hf_slice(lam.entries(), n))
}

fn distance_to_hf_slice(l: &[f64], n: usize) -> f64 {
    l.iter().enumerate().map(|(i, &x)| if i < n { 1.0 - x } else { x }).sum()
}

/// Checks membership in the Borland-Dennis polytope and returns the first
/// violated constraint.
fn bd_polytope_violation(l: &[f64]) -> Option<(String, f64)> {
    for (c, r) in LinearConstraint::borland_dennis_equalities().iter().zip(bd_residuals_slice(l)) {
        if r.abs() > POLYTOPE_TOL {
            return Some((c.to_string().replace(">= 0", "= 0"), r));
        }
    }
    let d = bd_inequality_slice(l);
    if d < -POLYTOPE_TOL {
        return Some((LinearConstraint::borland_dennis().to_string(), d));
    }
    None
}

/// l1 distance from `lambda` to the facet `F_D = {mu in P : D(mu) = 0}` of
/// the Borland-Dennis polytope.
///
/// Inside the polytope the equalities tie `lambda_4, lambda_5, lambda_6` to
/// `lambda_3, lambda_2, lambda_1`, so lowering `D` by `delta` moves two
/// entries by `delta` each and the distance is `2 D(lambda)`.
pub fn facet_distance(lam: &OccupationVector) -> Result<f64> {
    lam.expect_dimension(6)?;
    if let Some((constraint, value)) = bd_polytope_violation(lam.entries()) {
        return Err(Error::OutsidePolytope { constraint, value });
    }
    Ok(2.0 * bd_inequality_slice(lam.entries()).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliViolation {
    /// 1-based orbital index.
    pub index: usize,
    /// Amount by which `lambda_i` leaves `[0, 1]`.
    pub excess: f64,
}

/// Summary of all constraints evaluated on one occupation vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub dimension: usize,
    pub particles: usize,
    pub pauli_violations: Vec<PauliViolation>,
    pub bd_equalities: Option<[f64; 3]>,
    pub bd_inequality: Option<f64>,
    pub hf_distance: f64,
    pub facet_distance: Option<f64>,
    /// Whether the vector is compatible with every constraint checked.
    pub representable: bool,
    pub violated: Vec<String>,
}

impl ConstraintReport {
    /// Evaluates the Pauli bounds for any `d` and, for `d = 6`, the
    /// Borland-Dennis family. The input is not required to be valid.
    pub fn analyze(entries: &[f64], n: usize) -> Result<Self> {
        let d = entries.len();
        if d == 0 || n > d {
            return Err(Error::InvalidArgument(format!("{n} particles in {d} orbitals")));
        }
        let mut violated = Vec::new();
        let mut pauli_violations = Vec::new();
        for (i, &x) in entries.iter().enumerate() {
            let excess = if x > 1.0 { x - 1.0 } else if x < 0.0 { x } else { 0.0 };
            if excess.abs() > ENTRY_TOL {
                pauli_violations.push(PauliViolation { index: i + 1, excess });
                violated.push(format!("pauli_{}", i + 1));
            }
        }
        for (i, w) in entries.windows(2).enumerate() {
            if w[0] < w[1] - ORDER_TOL {
                violated.push(format!("ordering_{}_{}", i + 1, i + 2));
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - n as f64).abs() > SUM_TOL {
            violated.push(format!("normalization (sum = {sum})"));
        }
        let (bd_equalities, bd_inequality, facet) = if d == 6 {
            let eq = bd_residuals_slice(entries);
            let ineq = bd_inequality_slice(entries);
            let facet = match bd_polytope_violation(entries) {
                Some((c, _)) => {
                    violated.push(c);
                    None
                }
                None => Some(2.0 * ineq.max(0.0)),
            };
            (Some(eq), Some(ineq), facet)
        } else {
            (None, None, None)
        };
        Ok(Self {
            dimension: d,
            particles: n,
            pauli_violations,
            bd_equalities,
            bd_inequality,
            hf_distance: distance_to_hf_slice(entries, n),
            facet_distance: if violated.is_empty() { facet } else { None },
            representable: violated.is_empty(),
            violated,
        })
    }

    pub fn for_vector(lam: &OccupationVector, n: usize) -> Result<Self> {
        Self::analyze(lam.entries(), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn occ(v: &[f64]) -> OccupationVector {
        OccupationVector::new(v.to_vec()).unwrap()
    }

    const HF: [f64; 6] = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
    const PINNED: [f64; 6] = [0.95, 0.85, 0.8, 0.2, 0.15, 0.05];

    /// l1 distance to the facet by exhaustive vertex search. On the facet the
    /// polytope is `mu = (x, y, x+y-1, 2-x-y, 1-y, 1-x)` with `y <= x <= 1`
    /// and `x + y >= 3/2`; the piecewise linear objective is minimized at an
    /// intersection of two of the lines bounding the region or bounding a
    /// linear piece of the objective.
    fn facet_distance_by_vertices(l: &[f64]) -> f64 {
        // Lines a x + b y = c.
        let lines = [
            (1.0, -1.0, 0.0),
            (1.0, 0.0, 1.0),
            (1.0, 1.0, 1.5),
            (1.0, 0.0, l[0]),
            (0.0, 1.0, l[1]),
            (1.0, 1.0, 1.0 + l[2]),
            (1.0, 1.0, 2.0 - l[3]),
            (0.0, 1.0, 1.0 - l[4]),
            (1.0, 0.0, 1.0 - l[5]),
        ];
        let objective = |x: f64, y: f64| {
            let mu = [x, y, x + y - 1.0, 2.0 - x - y, 1.0 - y, 1.0 - x];
            mu.iter().zip(l).map(|(m, v)| (m - v).abs()).sum::<f64>()
        };
        let feasible = |x: f64, y: f64| y <= x + 1e-12 && x <= 1.0 + 1e-12 && x + y >= 1.5 - 1e-12;
        let mut best = f64::INFINITY;
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a1, b1, c1) = lines[i];
                let (a2, b2, c2) = lines[j];
                let det: f64 = a1 * b2 - a2 * b1;
                if det.abs() < 1e-14 {
                    continue;
                }
                let x = (c1 * b2 - c2 * b1) / det;
                let y = (a1 * c2 - a2 * c1) / det;
                if feasible(x, y) {
                    best = best.min(objective(x, y));
                }
            }
        }
        best
    }

    #[test]
    fn occupation_vector_invariants() {
        assert!(OccupationVector::new(vec![1.0, 0.5, 0.5 + 5e-11]).is_ok());
        assert!(OccupationVector::new(vec![0.5, 0.6]).is_err());
        assert!(OccupationVector::new(vec![1.0 + 1e-9]).is_err());
        assert!(OccupationVector::new(vec![-1e-9]).is_err());
        assert!(OccupationVector::normalized_to(PINNED.to_vec(), 3).is_ok());
        assert!(OccupationVector::normalized_to(PINNED.to_vec(), 2).is_err());
        let wide = OccupationVector::new(vec![1.0, 0.9, 0.8, 0.15, 0.1, 0.04, 0.01]).unwrap();
        assert_eq!(wide.leading(6).unwrap().entries(), &wide.entries()[..6]);
        assert!(wide.leading(8).is_err());
        let v = OccupationVector::from_unsorted(vec![0.2, 0.9, 0.5]).unwrap();
        assert_eq!(v.entries(), &[0.9, 0.5, 0.2]);
        let parsed: OccupationVector = "0.95, 0.85,0.8,0.2,0.15,0.05".parse().unwrap();
        assert_eq!(parsed.entries(), &PINNED);
        assert!("0.9,x".parse::<OccupationVector>().is_err());
        assert!("".parse::<OccupationVector>().is_err());
    }

    #[test]
    fn borland_dennis_equalities() {
        assert_eq!(bd_equality_residuals(&occ(&HF)).unwrap(), [0.0; 3]);
        for r in bd_equality_residuals(&occ(&PINNED)).unwrap() {
            assert!(r.abs() < 1e-15);
        }
        for r in bd_equality_residuals(&occ(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4])).unwrap() {
            assert!((r - 0.3).abs() < 1e-15);
        }
        assert!(matches!(
            bd_equality_residuals(&occ(&[1.0, 0.0])),
            Err(Error::DimensionMismatch { expected: 6, found: 2 })
        ));
    }

    #[test]
    fn borland_dennis_inequality() {
        assert_eq!(bd_inequality(&occ(&HF)).unwrap(), 0.0);
        assert!(bd_inequality(&occ(&PINNED)).unwrap().abs() < 1e-15);
        assert!((bd_inequality(&occ(&[0.9, 0.9, 0.9, 0.1, 0.1, 0.1])).unwrap() - 0.1).abs() < 1e-15);
        assert!(bd_inequality(&occ(&[0.5; 5])).is_err());
    }

    #[test]
    fn constraint_evaluation() {
        let bd = LinearConstraint::borland_dennis();
        assert_eq!(evaluate_constraint(&bd, &occ(&HF)).unwrap(), 0.0);
        let v = evaluate_constraint(&bd, &occ(&[0.9, 0.9, 0.9, 0.1, 0.1, 0.1])).unwrap();
        assert!((v - 0.1).abs() < 1e-15);
        let pauli = LinearConstraint::pauli_upper(0, 6);
        let v = evaluate_constraint(&pauli, &occ(&PINNED)).unwrap();
        assert!((v - 0.05).abs() < 1e-15);
        assert!(evaluate_constraint(&bd, &occ(&[1.0, 0.0])).is_err());
        assert_eq!(pauli_constraints(4).len(), 8);
        assert_eq!(bd.to_string(), "borland_dennis: 2 - l1 - l2 - l4 >= 0");
    }

    #[test]
    fn minimal_integer_convention() {
        let doubled = LinearConstraint::new("2D", 4, vec![-2, -2, 0, -2, 0, 0]);
        assert!(!doubled.is_minimal());
        assert_eq!(doubled.minimal().kappas, LinearConstraint::borland_dennis().kappas);
        assert!(LinearConstraint::borland_dennis().is_minimal());
    }

    #[test]
    fn hartree_fock_distance() {
        assert_eq!(distance_to_hf(&occ(&HF), 3).unwrap(), 0.0);
        assert!((distance_to_hf(&occ(&[0.9, 0.9, 0.9, 0.1, 0.1, 0.1]), 3).unwrap() - 0.6).abs() < 1e-15);
        assert!((distance_to_hf(&occ(&PINNED), 3).unwrap() - 0.8).abs() < 1e-15);
        assert!(distance_to_hf(&occ(&HF), 7).is_err());
        assert_eq!(OccupationVector::hartree_fock(3, 6).unwrap().entries(), &HF);
    }

    #[test]
    fn facet_distance_values() {
        assert_eq!(facet_distance(&occ(&HF)).unwrap(), 0.0);
        assert!(facet_distance(&occ(&PINNED)).unwrap().abs() < 1e-15);
        let l = [0.9, 0.9, 0.9, 0.1, 0.1, 0.1];
        let d = bd_inequality(&occ(&l)).unwrap();
        let dist = facet_distance(&occ(&l)).unwrap();
        assert!((dist - 2.0 * d).abs() < 1e-15);
        assert!((facet_distance_by_vertices(&l) - dist).abs() < 1e-12);
        match facet_distance(&occ(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4])) {
            Err(Error::OutsidePolytope { constraint, value }) => {
                assert!(constraint.starts_with("bd_eq_16"));
                assert!((value - 0.3).abs() < 1e-15);
            }
            other => panic!("expected polytope violation, got {other:?}"),
        }
    }

    #[test]
    fn report_fields() {
        let r = ConstraintReport::analyze(&PINNED, 3).unwrap();
        assert!(r.representable);
        assert!(r.bd_inequality.unwrap().abs() < 1e-15);
        assert!((r.hf_distance - 0.8).abs() < 1e-15);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["pauli_violations", "bd_equalities", "bd_inequality", "hf_distance", "facet_distance"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let bad = ConstraintReport::analyze(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4], 3).unwrap();
        assert!(!bad.representable);
        assert_eq!(bad.facet_distance, None);
        let pauli = ConstraintReport::analyze(&[1.2, 0.9, 0.9, 0.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(pauli.pauli_violations.len(), 1);
        assert_eq!(pauli.pauli_violations[0].index, 1);
        assert!((pauli.pauli_violations[0].excess - 0.2).abs() < 1e-15);
        let four = ConstraintReport::analyze(&[1.0, 0.5, 0.5, 0.0], 2).unwrap();
        assert!(four.representable && four.bd_inequality.is_none());
    }

    /// Points `(x, y, z, 1-z, 1-y, 1-x)` of the polytope: `1/2 <= z <= y <= x`
    /// and `x <= 1 + z - y`, a fifth of them on the facet.
    fn polytope_point() -> impl Strategy<Value = [f64; 6]> {
        (0.5f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..1.0).prop_map(|(z, a, b, pin)| {
            let y = z + a * (0.5 * (1.0 + z) - z);
            let top = 1.0 + z - y;
            let x = if pin < 0.2 { top } else { y + b * (top - y) };
            [x, y, z, 1.0 - z, 1.0 - y, 1.0 - x]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn facet_distance_is_twice_d(l in polytope_point()) {
            let v = occ(&l);
            let analytic = facet_distance(&v).unwrap();
            let d = bd_inequality(&v).unwrap();
            prop_assert!((analytic - 2.0 * d).abs() < 1e-10);
            prop_assert!((facet_distance_by_vertices(&l) - analytic).abs() < 1e-10);
        }

        #[test]
        fn hf_distance_vanishes_only_at_hf(l in prop::collection::vec(0.0f64..1.0, 6)) {
            let v = OccupationVector::from_unsorted(l).unwrap();
            let s = distance_to_hf(&v, 3).unwrap();
            prop_assert!(s >= 0.0);
            prop_assert_eq!(s == 0.0, v.entries() == HF);
        }

        #[test]
        fn constraints_are_affine(
            a in prop::collection::vec(0.0f64..1.0, 6),
            b in prop::collection::vec(0.0f64..1.0, 6),
            t in 0.0f64..1.0,
        ) {
            let bd = LinearConstraint::borland_dennis();
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let lhs = bd.evaluate_slice(&mix);
            let rhs = t * bd.evaluate_slice(&a) + (1.0 - t) * bd.evaluate_slice(&b);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
