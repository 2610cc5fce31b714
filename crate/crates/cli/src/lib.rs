//! Command-line driver: the lithium pipeline, occupation-vector analysis
//! and the oracle verification suites.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pinning_core::gpc::{self, ConstraintReport};
use pinning_core::solver::{AssignmentPolicy, SolverConfig};
use serde::{Deserialize, Serialize};

pub mod lithium;
pub mod verify;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Exponents of the optimized reference determinant.
pub const DEFAULT_A: f64 = 2.6864;
pub const DEFAULT_B: f64 = 1.2751;

#[derive(Debug, Parser)]
#[command(name = "pinning", version, about = "Pinned three-determinant MCSCF for the lithium atom")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the radial basis, optimize and report the lithium ground state.
    Lithium(LithiumArgs),
    /// Evaluate Pauli and Borland-Dennis constraints on an occupation vector.
    Analyze(AnalyzeArgs),
    /// Run oracle cross-checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct LithiumArgs {
    /// Number of Shull-Lowdin functions.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Nuclear charge.
    #[arg(long, default_value_t = 3.0)]
    pub z: f64,
    /// Shull-Lowdin exponent (requires --no-exponent-opt).
    #[arg(long)]
    pub a: Option<f64>,
    /// Hydrogen-like exponent (requires --no-exponent-opt).
    #[arg(long)]
    pub b: Option<f64>,
    /// Use --a/--b (default 2.6864, 1.2751) instead of optimizing them.
    #[arg(long)]
    pub no_exponent_opt: bool,
    /// Spin assignment: auto, A or B.
    #[arg(long, default_value = "auto", value_parser = parse_policy)]
    pub assignment: AssignmentPolicy,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_grad: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_energy: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// JSON report reused when its configuration matches, rewritten otherwise.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<AssignmentPolicy, String> {
    s.parse().map_err(|e: pinning_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Comma-separated occupation numbers.
    #[arg(allow_hyphen_values = true)]
    pub lambda: String,
    #[arg(long, default_value_t = 3)]
    pub particles: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Integrals,
    Pinning,
    Bounds,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Validated settings of the lithium command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub m: usize,
    pub z: f64,
    pub a: f64,
    pub b: f64,
    pub optimize_exponents: bool,
    pub solver: SolverConfig,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub cache: Option<PathBuf>,
}

/// Invalid command-line configuration (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl RunConfig {
    /// Frozen exponents with default solver settings.
    pub fn frozen(m: usize) -> Self {
        Self {
            m,
            z: 3.0,
            a: DEFAULT_A,
            b: DEFAULT_B,
            optimize_exponents: false,
            solver: SolverConfig::default(),
            format: Format::Text,
            cache: None,
        }
    }

    pub fn from_args(args: &LithiumArgs) -> Result<Self, UsageError> {
        if !args.no_exponent_opt && (args.a.is_some() || args.b.is_some()) {
            return Err(UsageError("--a/--b require --no-exponent-opt".into()));
        }
        let cfg = Self {
            m: args.m,
            z: args.z,
            a: args.a.unwrap_or(DEFAULT_A),
            b: args.b.unwrap_or(DEFAULT_B),
            optimize_exponents: !args.no_exponent_opt,
            solver: SolverConfig {
                max_iterations: args.max_iter,
                gradient_tolerance: args.tol_grad,
                energy_tolerance: args.tol_energy,
                seed: args.seed,
                assignment: args.assignment,
                ..SolverConfig::default()
            },
            format: args.format,
            cache: args.cache.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        if self.m == 0 {
            return Err(UsageError("--m must be at least 1".into()));
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(UsageError(format!("--z must be positive, got {}", self.z)));
        }
        if !(self.a > 0.0 && self.b > 0.0) {
            return Err(UsageError(format!("exponents must be positive, got ({}, {})", self.a, self.b)));
        }
        self.solver.validate().map_err(|e| UsageError(e.to_string()))
    }
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<ConstraintReport, UsageError> {
    let values = gpc::parse_list(&args.lambda).map_err(|e| UsageError(e.to_string()))?;
    ConstraintReport::analyze(&values, args.particles).map_err(|e| UsageError(e.to_string()))
}

pub fn render_constraints(r: &ConstraintReport, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(r)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["quantity", "value"])?;
            for (k, v) in constraint_rows(r) {
                w.write_record([k, v])?;
            }
            String::from_utf8(w.into_inner()?)?
        }
        Format::Text => {
            let mut s = String::new();
            for (k, v) in constraint_rows(r) {
                s += &format!("{k:<22} {v}\n");
            }
            s
        }
    })
}

fn constraint_rows(r: &ConstraintReport) -> Vec<(String, String)> {
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.12}"));
    let mut rows = vec![
        ("dimension".into(), r.dimension.to_string()),
        ("particles".into(), r.particles.to_string()),
        ("hf_distance".into(), format!("{:.12}", r.hf_distance)),
        ("bd_inequality".into(), opt(r.bd_inequality)),
        ("facet_distance".into(), opt(r.facet_distance)),
    ];
    if let Some(eq) = r.bd_equalities {
        for (name, v) in ["bd_eq_16", "bd_eq_25", "bd_eq_34"].iter().zip(eq) {
            rows.push((name.to_string(), format!("{v:.12}")));
        }
    }
    rows.push(("representable".into(), r.representable.to_string()));
    rows.push(("violated".into(), if r.violated.is_empty() { "none".into() } else { r.violated.join("; ") }));
    rows
}

/// `x` with `digits` significant digits.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lithium_args(args: &[&str]) -> LithiumArgs {
        let argv = ["pinning", "lithium"].iter().chain(args).copied();
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Lithium(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn run_config_defaults() {
        let cfg = RunConfig::from_args(&lithium_args(&[])).unwrap();
        assert_eq!(cfg.m, 8);
        assert!(cfg.optimize_exponents);
        assert_eq!(cfg.solver, SolverConfig::default());
        let frozen = RunConfig::from_args(&lithium_args(&["--no-exponent-opt", "--a", "2.5"])).unwrap();
        assert!(!frozen.optimize_exponents);
        assert_eq!((frozen.a, frozen.b), (2.5, DEFAULT_B));
        assert_eq!(RunConfig::frozen(8).solver, cfg.solver);
    }

    #[test]
    fn run_config_rejects_bad_input() {
        assert!(RunConfig::from_args(&lithium_args(&["--b", "1.0"])).is_err());
        assert!(RunConfig::from_args(&lithium_args(&["--z=-1"])).is_err());
        assert!(RunConfig::from_args(&lithium_args(&["--tol-grad", "0"])).is_err());
        assert!(Cli::try_parse_from(["pinning", "lithium", "--assignment", "Q"]).is_err());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = RunConfig::frozen(3);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(significant(-7.4337661, 6), "-7.43377");
        assert_eq!(significant(0.000123456, 3), "0.000123");
        assert_eq!(significant(87.0912, 4), "87.09");
        assert_eq!(significant(0.0, 6), "0");
    }

    #[test]
    fn analyze_formats() {
        let args = AnalyzeArgs { lambda: "0.9,0.85,0.8,0.2,0.15,0.1".into(), particles: 3, format: Format::Text };
        let r = cmd_analyze(&args).unwrap();
        assert!(r.representable);
        let csv = render_constraints(&r, Format::Csv).unwrap();
        assert!(csv.lines().any(|l| l == "bd_inequality,0.050000000000"));
        let bad = AnalyzeArgs { lambda: "0.9,,0.1".into(), ..args };
        assert!(cmd_analyze(&bad).is_err());
    }
}
