//! Exact-spectrum diagnostics: how far the ground state is from the pinned
//! facet and how much correlation energy the pinned ansatz misses.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, natural_occupations, one_rdm, NumberOperatorCombo};
use crate::gpc::{bd_inequality, distance_to_hf, OccupationVector};
use crate::sampling::{random_tables, random_unitary};
use crate::solver::{mcscf_solve, SolveResult, SolverConfig};
use crate::tables::{IntegralTables, OrbitalKind};

/// Ground states closer than this to the first excited state count as
/// degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Below this distance to the Hartree-Fock point the ratios are undefined.
pub const S_FLOOR: f64 = 1e-8;
/// Below this correlation energy `delta_E / E_corr` is undefined.
pub const E_CORR_FLOOR: f64 = 1e-10;

/// Nonrelativistic ground-state energy of lithium.
pub const LITHIUM_EXACT: f64 = -7.478;
/// Hartree-Fock energy of lithium in the cc-pVDZ basis.
pub const LITHIUM_HF_LITERATURE: f64 = -7.4324;
/// Energy of the optimized reference determinant `|delta_1^2 chi_1>`.
pub const LITHIUM_SINGLE_DETERMINANT: f64 = -7.4179;
/// Fraction of the correlation energy the pinned ansatz is quoted to recover.
pub const TARGET_RECOVERY_PERCENT: f64 = 87.09;
/// Agreement required to attribute that figure to a reference.
pub const RECOVERY_TOL: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub e0: f64,
    /// Lowest excitation energy level.
    pub e_ex_minus: f64,
    /// Highest level.
    pub e_ex_plus: f64,
    pub degenerate: bool,
}

/// Extremes of the full CI spectrum. For spin-free tables the spectrum is
/// that of the `S_z = N mod 2 / 2` sector.
pub fn spectrum_summary(tables: &IntegralTables, n: usize) -> Result<SpectrumSummary> {
    let values = fock::full_ci_spectrum(tables, n)?;
    if values.len() < 2 {
        return Err(Error::InvalidArgument("spectrum has a single level".into()));
    }
    Ok(SpectrumSummary {
        e0: values[0],
        e_ex_minus: values[1],
        e_ex_plus: values[values.len() - 1],
        degenerate: values[1] - values[0] <= DEGENERACY_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryVariant {
    pub reference: String,
    pub reference_energy: f64,
    /// `100 (E_ref - E_D) / (E_ref - E_exact)`.
    pub percent: f64,
    pub matches_target: bool,
}

/// Correlation recovered by `e_d` relative to three Hartree-Fock references,
/// all measured against the exact lithium energy.
pub fn recovery_variants(e_d: f64, e_hf_basis: f64) -> Vec<RecoveryVariant> {
    [
        ("basis_hf", e_hf_basis),
        ("cc_pvdz_hf", LITHIUM_HF_LITERATURE),
        ("single_determinant", LITHIUM_SINGLE_DETERMINANT),
    ]
    .into_iter()
    .map(|(name, e_ref)| {
        let percent = 100.0 * (e_ref - e_d) / (e_ref - LITHIUM_EXACT);
        RecoveryVariant {
            reference: name.to_string(),
            reference_energy: e_ref,
            percent,
            matches_target: (percent - TARGET_RECOVERY_PERCENT).abs() <= RECOVERY_TOL,
        }
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub e0: f64,
    pub e_hf: f64,
    pub e_d: f64,
    /// `E_D - E0`.
    pub delta_e: f64,
    /// `E_HF - E0`.
    pub e_corr: f64,
    /// Borland-Dennis inequality on the six largest exact occupation numbers.
    pub d_value: f64,
    /// l1 distance of the exact occupation numbers to the Hartree-Fock point.
    pub s_value: f64,
    pub ratio_energy: Option<f64>,
    pub ratio_geometry: Option<f64>,
    pub k_empirical: Option<f64>,
    pub exact_occupations: OccupationVector,
    pub mcscf_converged: bool,
    /// Percentages against the lithium references, for `Z = 3`, `N = 3`.
    pub recovery: Option<Vec<RecoveryVariant>>,
}

impl BoundReport {
    /// Reference variants matching the quoted recovery figure.
    pub fn reproducing_variants(&self) -> Vec<&str> {
        self.recovery
            .iter()
            .flatten()
            .filter(|v| v.matches_target)
            .map(|v| v.reference.as_str())
            .collect()
    }
}

/// Runs the pinned MCSCF and assembles the report.
pub fn bound_report(tables: &IntegralTables, n: usize, config: &SolverConfig) -> Result<BoundReport> {
    check_particles(n)?;
    let solve = mcscf_solve(tables, config)?;
    bound_report_from(tables, n, &solve)
}

fn check_particles(n: usize) -> Result<()> {
    if n != 3 {
        return Err(Error::ParticleMismatch { expected: 3, found: n });
    }
    Ok(())
}

/// Report for an existing MCSCF result.
pub fn bound_report_from(tables: &IntegralTables, n: usize, solve: &SolveResult) -> Result<BoundReport> {
    check_particles(n)?;
    let fci = fock::full_ci(tables, n, tables.n_spin_orbitals())?;
    if let Some(gap) = fci.gap {
        if gap <= DEGENERACY_TOL {
            return Err(Error::DegenerateGroundState(gap));
        }
    }
    let no = natural_occupations(&one_rdm(&fci.state)?)?;
    let lam = no.occupations;
    let leading = lam.leading(6)?;
    let d_value = bd_inequality(&leading)?;
    let s_value = distance_to_hf(&lam, n)?;
    let e0 = fci.energy;
    let delta_e = solve.energy - e0;
    let e_corr = solve.hf_energy - e0;
    let ratio_energy = (e_corr > E_CORR_FLOOR).then(|| delta_e / e_corr);
    let ratio_geometry = (s_value > S_FLOOR).then(|| d_value / s_value);
    let k_empirical = match (ratio_energy, ratio_geometry) {
        (Some(r), Some(g)) if g.abs() > 1e-12 => Some(r / g),
        _ => None,
    };
    let lithium = tables.nuclear_charge() == Some(3.0) && n == 3;
    Ok(BoundReport {
        e0,
        e_hf: solve.hf_energy,
        e_d: solve.energy,
        delta_e,
        e_corr,
        d_value,
        s_value,
        ratio_energy,
        ratio_geometry,
        k_empirical,
        exact_occupations: lam,
        mcscf_converged: solve.converged,
        recovery: lithium.then(|| recovery_variants(solve.energy, solve.hf_energy)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub coupling: f64,
    pub report: BoundReport,
}

/// `steps` evenly spaced couplings from 0 to 1.
pub fn coupling_grid(steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect(),
    }
}

/// Bound reports along the family with the two-electron tensor scaled by
/// each coupling.
pub fn quasipinning_scan(
    tables: &IntegralTables,
    n: usize,
    couplings: &[f64],
    config: &SolverConfig,
) -> Result<Vec<ScanPoint>> {
    couplings
        .iter()
        .map(|&s| Ok(ScanPoint { coupling: s, report: bound_report(&tables.scale_two_body(s), n, config)? }))
        .collect()
}

pub const SCAN_HEADER: [&str; 8] = ["coupling", "E0", "E_HF", "E_D", "delta_E", "E_corr", "D", "S"];

pub fn write_scan_csv<W: Write>(points: &[ScanPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCAN_HEADER)?;
    for p in points {
        let r = &p.report;
        w.write_record(
            [p.coupling, r.e0, r.e_hf, r.e_d, r.delta_e, r.e_corr, r.d_value, r.s_value].map(|x| format!("{x:.17e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Random `(3,6)` spin-orbital Hamiltonian whose ground state is exactly
/// pinned, expressed in a random orbital basis.
///
/// In the natural basis the Hamiltonian commutes with the four
/// Borland-Dennis number operators and carries the penalty
/// `mu sum_k D_k^2`, so its ground state lies in the span of
/// `|1,2,3>, |1,4,5>, |2,4,6>`. One-body energies favour `|1,2,3>`.
/// Returns `None` when the draw does not give a unique ground state with
/// ordered, pinned occupation numbers.
pub fn pinned_hamiltonian(rng: &mut impl Rng) -> Result<Option<IntegralTables>> {
    const D: usize = 6;
    const MU: f64 = 8.0;
    let ops = NumberOperatorCombo::borland_dennis();
    let base = random_tables(rng, OrbitalKind::SpinOrbital, D, false);
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * D + q) * D + r) * D + s;
    let zero = Complex64::new(0.0, 0.0);
    let conserves = |p: usize, q: usize, r: usize, s: usize| {
        ops.iter().all(|op| {
            let w = &op.weights;
            w[p] + w[r] == w[q] + w[s]
        })
    };
    let mut g: Vec<Complex64> = base.g_slice().to_vec();
    for p in 0..D {
        for q in 0..D {
            for r in 0..D {
                for s in 0..D {
                    if !conserves(p, q, r, s) {
                        g[idx(p, q, r, s)] = zero;
                    }
                }
            }
        }
    }
    // The six labels have pairwise distinct signatures under the four
    // operators, so only diagonal one-body terms survive.
    let levels = [-1.0, -0.8, -0.6, 0.0, 0.2, 0.4];
    let mut h = vec![zero; D * D];
    for (i, e) in levels.iter().enumerate() {
        h[i * D + i] = Complex64::new(e + 0.2 * rng.random_range(-1.0..1.0), 0.0);
    }
    let mut constant = 0.0;
    for op in &ops {
        let (c, w) = (op.constant, &op.weights);
        constant += MU * c * c;
        for i in 0..D {
            h[i * D + i] += MU * (2.0 * c * w[i] + w[i] * w[i]);
            for j in 0..D {
                if i != j {
                    g[idx(i, i, j, j)] += MU * 2.0 * w[i] * w[j];
                }
            }
        }
    }
    let natural = IntegralTables::new(OrbitalKind::SpinOrbital, D, h, g, constant)?;
    let fci = fock::full_ci(&natural, 3, D)?;
    if fci.gap.is_none_or(|gap| gap <= 1e-6) {
        return Ok(None);
    }
    let lam = natural_occupations(&one_rdm(&fci.state)?)?.occupations;
    if bd_inequality(&lam)?.abs() > 1e-10 {
        return Ok(None);
    }
    let u: DMatrix<Complex64> = random_unitary(rng, D, false);
    Ok(Some(natural.transformed(&u)?))
}

/// Draws until [`pinned_hamiltonian`] succeeds.
pub fn sample_pinned_hamiltonian(rng: &mut impl Rng) -> Result<IntegralTables> {
    for _ in 0..1000 {
        if let Some(t) = pinned_hamiltonian(rng)? {
            return Ok(t);
        }
    }
    Err(Error::InvalidArgument("no pinned Hamiltonian in 1000 draws".into()))
}
