//! The lithium pipeline: basis, integrals, exponents, Hartree-Fock, pinned
//! MCSCF and the exact-spectrum report.

use std::fs;
use std::path::Path;

use anyhow::Context;
use pinning_core::bounds::{bound_report_from, BoundReport};
use pinning_core::radial::{build_basis, build_integral_tables};
use pinning_core::solver::{mcscf_solve, optimize_exponents, reference_energy, ExponentOptimum, SolveResult};
use serde::{Deserialize, Serialize};

use crate::{significant, Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    /// `|delta_1 up, delta_1 dn, chi_1 up>` built from `delta_1` and `chi_1`
    /// alone, as in the exponent optimization.
    pub single_determinant: f64,
    pub hartree_fock: f64,
    pub mcscf: f64,
    pub fci: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LithiumReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub a: f64,
    pub b: f64,
    /// Present when the exponents were optimized.
    pub exponent_optimum: Option<ExponentOptimum>,
    pub basis_size: usize,
    pub energies: Energies,
    pub mcscf: SolveResult,
    pub bounds: BoundReport,
    pub converged: bool,
}

/// Runs the pipeline, or returns the cached report when its configuration
/// matches.
pub fn cmd_lithium(cfg: &RunConfig) -> anyhow::Result<LithiumReport> {
    cfg.validate()?;
    if let Some(path) = &cfg.cache {
        if let Some(cached) = read_cache(path, cfg) {
            return Ok(cached);
        }
    }
    let report = compute(cfg)?;
    if let Some(path) = &cfg.cache {
        write_report(path, &report)?;
    }
    Ok(report)
}

fn compute(cfg: &RunConfig) -> anyhow::Result<LithiumReport> {
    let (a, b, exponent_optimum) = if cfg.optimize_exponents {
        let opt = optimize_exponents(1, cfg.z, &cfg.solver).context("optimizing exponents")?;
        (opt.a, opt.b, Some(opt))
    } else {
        (cfg.a, cfg.b, None)
    };
    let basis = build_basis(cfg.m, a, b)?;
    let tables = build_integral_tables(&basis, cfg.z)?;
    let single_determinant = reference_energy(1, cfg.z, a, b, 3)?;
    let mcscf = mcscf_solve(&tables, &cfg.solver)?;
    let bounds = bound_report_from(&tables, 3, &mcscf)?;
    Ok(LithiumReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        a,
        b,
        exponent_optimum,
        basis_size: basis.len(),
        energies: Energies {
            single_determinant,
            hartree_fock: mcscf.hf_energy,
            mcscf: mcscf.energy,
            fci: bounds.e0,
        },
        converged: mcscf.converged,
        mcscf,
        bounds,
    })
}

fn read_cache(path: &Path, cfg: &RunConfig) -> Option<LithiumReport> {
    let text = fs::read_to_string(path).ok()?;
    let report: LithiumReport = serde_json::from_str(&text).ok()?;
    (report.schema_version == SCHEMA_VERSION && report.config == *cfg).then_some(report)
}

pub fn write_report(path: &Path, report: &LithiumReport) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn rows(r: &LithiumReport) -> Vec<(String, String)> {
    let e = |x: f64| significant(x, 6);
    let mut rows = vec![
        ("single determinant".to_string(), e(r.energies.single_determinant)),
        ("Hartree-Fock (basis)".to_string(), e(r.energies.hartree_fock)),
        ("pinned MCSCF".to_string(), e(r.energies.mcscf)),
        ("full CI".to_string(), e(r.energies.fci)),
        ("assignment".to_string(), r.mcscf.assignment.to_string()),
        (
            "NON".to_string(),
            r.mcscf.occupations.entries().iter().map(|x| significant(*x, 6)).collect::<Vec<_>>().join(" "),
        ),
        ("D (exact)".to_string(), e(r.bounds.d_value)),
        ("S (exact)".to_string(), e(r.bounds.s_value)),
        ("delta_E".to_string(), e(r.bounds.delta_e)),
        ("E_corr".to_string(), e(r.bounds.e_corr)),
    ];
    for v in r.bounds.recovery.iter().flatten() {
        rows.push((format!("recovered % ({})", v.reference), significant(v.percent, 6)));
    }
    rows.push(("converged".to_string(), r.converged.to_string()));
    rows
}

pub fn render(r: &LithiumReport, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(r)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["quantity", "value"])?;
            for (k, v) in rows(r) {
                w.write_record([k, v])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => {
            let mut s = format!("lithium, M = {}, Z = {}, (a, b) = ({}, {})\n", r.config.m, r.config.z, r.a, r.b);
            for (k, v) in rows(r) {
                s += &format!("  {k:<34} {v}\n");
            }
            s
        }
    })
}
