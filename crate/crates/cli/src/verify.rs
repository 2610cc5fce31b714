//! Oracle cross-checks run by `pinning verify`.

use num_complex::Complex64;
use pinning_core::ansatz::{bd_state, BDCoefficients};
use pinning_core::bounds::{bound_report, sample_pinned_hamiltonian};
use pinning_core::fock::{apply_number_combo, full_ci_ground, NumberOperatorCombo};
use pinning_core::oracle::quadrature;
use pinning_core::radial::{self, hydrogenic_chi, shull_lowdin, RadialFunction};
use pinning_core::sampling::random_tables;
use pinning_core::solver::{mcscf_solve, SolverConfig};
use pinning_core::OrbitalKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Suite;

/// Largest observed error of one family of checks against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub tolerance: f64,
    pub observed: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.observed <= self.tolerance
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<4} {:<44} n={:<5} tol={:.1e} observed={:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.tolerance,
            self.observed
        )
    }
}

pub fn run(suite: Suite, seed: u64) -> anyhow::Result<Vec<Check>> {
    Ok(match suite {
        Suite::Integrals => integrals(seed)?,
        Suite::Pinning => pinning(seed)?,
        Suite::Bounds => bounds(seed)?,
        Suite::All => {
            let mut all = integrals(seed)?;
            all.extend(pinning(seed)?);
            all.extend(bounds(seed)?);
            all
        }
    })
}

fn random_function(rng: &mut ChaCha8Rng) -> anyhow::Result<RadialFunction> {
    Ok(if rng.random_bool(0.7) {
        shull_lowdin(rng.random_range(1..=6), rng.random_range(1.0..4.0))?
    } else {
        hydrogenic_chi(rng.random_range(1..=2), rng.random_range(0.6..2.0))?
    })
}

fn relative(closed: f64, oracle: f64) -> f64 {
    (closed - oracle).abs() / oracle.abs().max(1e-3)
}

/// Closed-form one- and two-electron integrals against adaptive quadrature.
pub fn integrals(seed: u64) -> anyhow::Result<Vec<Check>> {
    const SAMPLES: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut one = (0, 0.0f64);
    let mut two = (0, 0.0f64);
    for i in 0..SAMPLES {
        let f = random_function(&mut rng)?;
        let g = random_function(&mut rng)?;
        match i % 4 {
            0 => {
                let e = relative(radial::overlap(&f, &g), quadrature::overlap(&f, &g));
                one = (one.0 + 1, one.1.max(e));
            }
            1 => {
                let e = relative(radial::kinetic(&f, &g), quadrature::kinetic(&f, &g));
                one = (one.0 + 1, one.1.max(e));
            }
            2 => {
                let z = rng.random_range(1.0..4.0);
                let e = relative(radial::nuclear_attraction(&f, &g, z), quadrature::nuclear_attraction(&f, &g, z));
                one = (one.0 + 1, one.1.max(e));
            }
            _ => {
                let h = random_function(&mut rng)?;
                let k = random_function(&mut rng)?;
                let e = relative(
                    radial::coulomb_repulsion(&f, &g, &h, &k),
                    quadrature::coulomb_repulsion(&f, &g, &h, &k),
                );
                two = (two.0 + 1, two.1.max(e));
            }
        }
    }
    let mut self_repulsion = 0.0f64;
    for a in [1.0, 2.0, 2.6864] {
        let s = shull_lowdin(1, a)?;
        let v = radial::coulomb_repulsion(&s, &s, &s, &s);
        self_repulsion = self_repulsion.max((v - 5.0 * a / 8.0).abs() / (5.0 * a / 8.0));
    }
    Ok(vec![
        Check { name: "one-electron integrals vs quadrature".into(), samples: one.0, tolerance: 1e-8, observed: one.1 },
        Check { name: "two-electron integrals vs quadrature".into(), samples: two.0, tolerance: 1e-8, observed: two.1 },
        Check { name: "(1s1s|1s1s) = 5a/8".into(), samples: 3, tolerance: 1e-12, observed: self_repulsion },
    ])
}

fn random_coefficients(rng: &mut ChaCha8Rng) -> anyhow::Result<BDCoefficients> {
    let mut z = [Complex64::new(0.0, 0.0); 3];
    for c in z.iter_mut() {
        *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Ok(BDCoefficients::new(z[0] / norm, z[1] / norm, z[2] / norm)?)
}

/// Random pinned states against the Borland-Dennis number operators.
pub fn pinning(seed: u64) -> anyhow::Result<Vec<Check>> {
    const SAMPLES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = NumberOperatorCombo::borland_dennis();
    let mut worst = [0.0f64; 4];
    for _ in 0..SAMPLES {
        let psi = bd_state(&random_coefficients(&mut rng)?)?;
        for (w, op) in worst.iter_mut().zip(&ops) {
            *w = w.max(apply_number_combo(op, &psi)?.norm());
        }
    }
    let names = ["2 - n1 - n2 - n4", "1 - n1 - n6", "1 - n2 - n5", "1 - n3 - n4"];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(n, w)| Check { name: format!("{n} annihilates pinned states"), samples: SAMPLES, tolerance: 1e-10, observed: w })
        .collect())
}

/// Variational ordering on random Hamiltonians and exactness on pinned ones.
pub fn bounds(seed: u64) -> anyhow::Result<Vec<Check>> {
    const SAMPLES: usize = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = SolverConfig::default();
    let mut chain = 0.0f64;
    for _ in 0..SAMPLES {
        let t = random_tables(&mut rng, OrbitalKind::SpinOrbital, 6, false);
        let r = mcscf_solve(&t, &config)?;
        let e_fci = full_ci_ground(&t, 3, 6)?.0;
        chain = chain.max(e_fci - r.energy).max(r.energy - r.hf_energy);
    }
    let mut pinned = 0.0f64;
    for _ in 0..SAMPLES {
        let t = sample_pinned_hamiltonian(&mut rng)?;
        pinned = pinned.max(bound_report(&t, 3, &config)?.delta_e);
    }
    Ok(vec![
        Check { name: "E_FCI <= E_MCSCF <= E_HF violation".into(), samples: SAMPLES, tolerance: 1e-10, observed: chain },
        Check { name: "delta_E on pinned ground states".into(), samples: SAMPLES, tolerance: 1e-8, observed: pinned },
    ])
}
