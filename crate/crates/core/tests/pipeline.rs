use std::fs;

use pinning_core::bounds::{bound_report, coupling_grid, quasipinning_scan, write_scan_csv, SCAN_HEADER};
use pinning_core::radial::{build_basis, build_integral_tables};
use pinning_core::solver::{mcscf_solve, optimize_exponents};
use pinning_core::{SolverConfig, SpinAssignment};

#[test]
fn lithium_small_basis_chain() {
    let config = SolverConfig::default();
    let opt = optimize_exponents(1, 3.0, &config).unwrap();
    let basis = build_basis(2, opt.a, opt.b).unwrap();
    let tables = build_integral_tables(&basis, 3.0).unwrap();
    let solve = mcscf_solve(&tables, &config).unwrap();
    assert!(solve.converged);
    assert!(solve.energy <= solve.hf_energy + 1e-10);
    assert!(solve.hf_energy < opt.energy);
    assert!(SpinAssignment::ALL.contains(&solve.assignment));
    assert!(solve.constraints.representable);

    let report = bound_report(&tables, 3, &config).unwrap();
    assert!(report.e0 <= report.e_d + 1e-10);
    assert!(report.delta_e >= -1e-10 && report.delta_e <= report.e_corr + 1e-10);
    assert!(report.d_value >= -1e-10 && report.s_value > 0.0);
    let variants = report.recovery.as_ref().unwrap();
    assert_eq!(variants.len(), 3);
}

#[test]
fn scan_csv_roundtrip() {
    let basis = build_basis(1, 2.6864, 1.2751).unwrap();
    let tables = build_integral_tables(&basis, 3.0).unwrap();
    let points = quasipinning_scan(&tables, 3, &coupling_grid(3), &SolverConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    write_scan_csv(&points, fs::File::create(&path).unwrap()).unwrap();

    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), SCAN_HEADER);
    let rows: Vec<Vec<f64>> =
        reader.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for (row, p) in rows.iter().zip(&points) {
        assert_eq!(row[0], p.coupling);
        assert_eq!(row[4], p.report.delta_e);
        assert_eq!(row[6], p.report.d_value);
    }
    assert!(rows[0][4].abs() < 1e-8);
}
