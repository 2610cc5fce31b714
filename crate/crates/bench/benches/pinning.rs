use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pinning_bench::{lithium_tables, random, A};
use pinning_core::ansatz::SpinAssignment;
use pinning_core::fock::{full_ci_ground, slater_condon, Determinant};
use pinning_core::radial::{self, shull_lowdin};
use pinning_core::solver::{mcscf_solve, AnsatzFunctional, SolverConfig};
use pinning_core::OrbitalKind;

fn integrals(c: &mut Criterion) {
    let f = shull_lowdin(3, A).unwrap();
    let g = shull_lowdin(5, A).unwrap();
    c.bench_function("coulomb_repulsion (3,5|5,3)", |b| {
        b.iter(|| radial::coulomb_repulsion(black_box(&f), &g, &g, &f))
    });
    c.bench_function("lithium tables M = 3", |b| b.iter(|| lithium_tables(black_box(3))));
}

fn determinants(c: &mut Criterion) {
    let t = lithium_tables(3);
    let k = Determinant::from_bits(0b1011);
    let l = Determinant::from_bits(0b1_0011);
    c.bench_function("slater_condon single excitation", |b| b.iter(|| slater_condon(black_box(&k), &l, &t)));
    c.bench_function("full CI lithium M = 3", |b| b.iter(|| full_ci_ground(black_box(&t), 3, 10)));
}

fn ansatz(c: &mut Criterion) {
    let t = random(OrbitalKind::SpinOrbital, 6, false, 1);
    let f = AnsatzFunctional::full(&t, SpinAssignment::A).unwrap();
    let x = vec![0.1; f.n_params()];
    c.bench_function("ansatz gradient d = 6", |b| b.iter(|| f.gradient(black_box(&x))));
}

fn solver(c: &mut Criterion) {
    let t = lithium_tables(3);
    let config = SolverConfig { multistart: 1, ..SolverConfig::default() };
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("pinned MCSCF lithium M = 3", |b| b.iter(|| mcscf_solve(black_box(&t), &config)));
    group.finish();
}

criterion_group!(benches, integrals, determinants, ansatz, solver);
criterion_main!(benches);
