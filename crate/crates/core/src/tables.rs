//! One- and two-electron integral tables over an orthonormal orbital basis.
//!
//! Two layouts share one type:
//!
//! * [`OrbitalKind::Spatial`]: `n_orb` spatial orbitals of a spin-free
//!   Hamiltonian. Spin orbital `i` (0-based) is spatial orbital `i / 2` with
//!   spin up for even `i` and spin down for odd `i`, i.e. spatial orbital `p`
//!   (1-based) carries the spin orbitals `2p-1` (up) and `2p` (down).
//! * [`OrbitalKind::SpinOrbital`]: `n_orb` spin orbitals with no spin
//!   structure; the tables are taken as-is.
//!
//! The two-electron tensor is stored in chemists' notation `(pq|rs)` and the
//! Hamiltonian reads
//! `H = c + sum_pq h_pq E_pq + 1/2 sum_pqrs (pq|rs) (E_pq E_rs - delta_qr E_ps)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitalKind {
    Spatial,
    SpinOrbital,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralTables {
    kind: OrbitalKind,
    n_orb: usize,
    h: Vec<Complex64>,
    g: Vec<Complex64>,
    constant: f64,
    nuclear_charge: Option<f64>,
}

/// Tolerance used when checking the symmetry invariants of the tables.
pub const SYMMETRY_TOL: f64 = 1e-10;

impl IntegralTables {
    /// Builds tables from row-major `h` (`n*n`) and `g` (`n^4`, index
    /// `((p*n+q)*n+r)*n+s`).
    pub fn new(
        kind: OrbitalKind,
        n_orb: usize,
        h: Vec<Complex64>,
        g: Vec<Complex64>,
        constant: f64,
    ) -> Result<Self> {
        if n_orb == 0 {
            return Err(Error::InvalidArgument("empty orbital basis".into()));
        }
        if h.len() != n_orb * n_orb {
            return Err(Error::DimensionMismatch { expected: n_orb * n_orb, found: h.len() });
        }
        if g.len() != n_orb.pow(4) {
            return Err(Error::DimensionMismatch { expected: n_orb.pow(4), found: g.len() });
        }
        Ok(Self { kind, n_orb, h, g, constant, nuclear_charge: None })
    }

    /// Real spin-free tables, the output of the radial integral code.
    pub fn from_real(n_orb: usize, h: &[f64], g: &[f64], nuclear_charge: f64) -> Result<Self> {
        let h = h.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let g = g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut t = Self::new(OrbitalKind::Spatial, n_orb, h, g, 0.0)?;
        t.nuclear_charge = Some(nuclear_charge);
        Ok(t)
    }

    pub fn kind(&self) -> OrbitalKind {
        self.kind
    }

    pub fn n_orb(&self) -> usize {
        self.n_orb
    }

    /// Number of spin orbitals spanned by the tables.
    pub fn n_spin_orbitals(&self) -> usize {
        match self.kind {
            OrbitalKind::Spatial => 2 * self.n_orb,
            OrbitalKind::SpinOrbital => self.n_orb,
        }
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn nuclear_charge(&self) -> Option<f64> {
        self.nuclear_charge
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    #[inline]
    pub fn h(&self, p: usize, q: usize) -> Complex64 {
        self.h[p * self.n_orb + q]
    }

    /// Chemists' notation `(pq|rs)`.
    #[inline]
    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> Complex64 {
        let n = self.n_orb;
        self.g[((p * n + q) * n + r) * n + s]
    }

    pub fn h_slice(&self) -> &[Complex64] {
        &self.h
    }

    pub fn g_slice(&self) -> &[Complex64] {
        &self.g
    }

    pub fn h_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.n_orb, self.n_orb, &self.h)
    }

    /// Orbital and spin label of spin orbital `i`.
    #[inline]
    pub fn spin_orbital(&self, i: usize) -> (usize, u8) {
        match self.kind {
            OrbitalKind::Spatial => (i / 2, (i % 2) as u8),
            OrbitalKind::SpinOrbital => (i, 0),
        }
    }

    /// One-electron integral between spin orbitals.
    #[inline]
    pub fn one_body(&self, p: usize, q: usize) -> Complex64 {
        let (a, sa) = self.spin_orbital(p);
        let (b, sb) = self.spin_orbital(q);
        if sa == sb {
            self.h(a, b)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Physicists' notation `<pq|rs>` between spin orbitals.
    #[inline]
    pub fn two_body(&self, p: usize, q: usize, r: usize, s: usize) -> Complex64 {
        let (a, sa) = self.spin_orbital(p);
        let (b, sb) = self.spin_orbital(q);
        let (c, sc) = self.spin_orbital(r);
        let (d, sd) = self.spin_orbital(s);
        if sa == sc && sb == sd {
            self.g(a, c, b, d)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Largest absolute imaginary part over all entries.
    pub fn max_imag(&self) -> f64 {
        self.h.iter().chain(self.g.iter()).map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// Largest violation of hermiticity of `h` and of the symmetries
    /// `(pq|rs) = conj((qp|sr))` and `(pq|rs) = (rs|pq)`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_orb;
        let mut worst: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                worst = worst.max((self.h(p, q) - self.h(q, p).conj()).norm());
                for r in 0..n {
                    for s in 0..n {
                        let v = self.g(p, q, r, s);
                        worst = worst.max((v - self.g(q, p, s, r).conj()).norm());
                        worst = worst.max((v - self.g(r, s, p, q)).norm());
                    }
                }
            }
        }
        worst
    }

    /// Largest violation of the eight-fold symmetry of real orbitals.
    pub fn real_symmetry_defect(&self) -> f64 {
        let n = self.n_orb;
        let mut worst = self.symmetry_defect();
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = self.g(p, q, r, s);
                        worst = worst.max((v - self.g(q, p, r, s)).norm());
                        worst = worst.max((v - self.g(p, q, s, r)).norm());
                    }
                }
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.symmetry_defect();
        if defect > SYMMETRY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }

    /// Returns a copy with the two-electron tensor multiplied by `s`.
    pub fn scale_two_body(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.g.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Restricts the tables to the first `k` orbitals.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n_orb {
            return Err(Error::DimensionMismatch { expected: self.n_orb, found: k });
        }
        let mut h = Vec::with_capacity(k * k);
        for p in 0..k {
            for q in 0..k {
                h.push(self.h(p, q));
            }
        }
        let mut g = Vec::with_capacity(k.pow(4));
        for p in 0..k {
            for q in 0..k {
                for r in 0..k {
                    for s in 0..k {
                        g.push(self.g(p, q, r, s));
                    }
                }
            }
        }
        let mut t = Self::new(self.kind, k, h, g, self.constant)?;
        t.nuclear_charge = self.nuclear_charge;
        Ok(t)
    }

    /// Transforms the tables to the orbitals `phi'_j = sum_p U_pj phi_p`:
    /// `h' = U^dag h U` and `(pq|rs)' = sum conj(U_ap) U_bq conj(U_cr) U_ds (ab|cd)`.
    pub fn transformed(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        let n = self.n_orb;
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: u.nrows() });
        }
        let h = u.adjoint() * self.h_matrix() * u;
        let mut h_flat = Vec::with_capacity(n * n);
        for p in 0..n {
            for q in 0..n {
                h_flat.push(h[(p, q)]);
            }
        }
        let g = transform_two_body(&self.g, n, u);
        let mut out = Self::new(self.kind, n, h_flat, g, self.constant)?;
        out.nuclear_charge = self.nuclear_charge;
        Ok(out)
    }
}

/// Four successive quarter transformations of a chemists'-notation tensor.
fn transform_two_body(g: &[Complex64], n: usize, u: &DMatrix<Complex64>) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut a = g.to_vec();
    let mut b = vec![zero; a.len()];
    // Each pass contracts the leading index and rotates it to the back:
    // out[q, r, s, p'] = sum_p f(U[p, p']) in[p, q, r, s].
    // Indices 0 and 2 (bra side) take conj(U), indices 1 and 3 take U.
    for pass in 0..4 {
        let conj = pass % 2 == 0;
        b.iter_mut().for_each(|x| *x = zero);
        let n3 = n * n * n;
        for p in 0..n {
            for rest in 0..n3 {
                let v = a[p * n3 + rest];
                if v == zero {
                    continue;
                }
                let base = rest * n;
                for pp in 0..n {
                    let w = if conj { u[(p, pp)].conj() } else { u[(p, pp)] };
                    b[base + pp] += w * v;
                }
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a
}
