//! Adaptive Gauss-Legendre quadrature of radial integrals, evaluated pointwise
//! from the function values. Independent of the closed forms in
//! [`crate::radial`].

use std::sync::OnceLock;

use crate::radial::RadialFunction;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;
const REL_TOL: f64 = 1e-13;
const MAX_DEPTH: u32 = 40;

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Gauss-Legendre nodes on [-1, 1] via Newton iteration on `P_n`.
fn legendre_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Rule { nodes, weights }
}

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (legendre_rule(10), legendre_rule(21)))
}

fn apply(rule: &Rule, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, scale: f64, depth: u32) -> f64 {
    let fine = &rules().1;
    let m = 0.5 * (a + b);
    let left = apply(fine, f, a, m);
    let right = apply(fine, f, m, b);
    let refined = left + right;
    if depth >= MAX_DEPTH || (refined - whole).abs() <= REL_TOL * scale.max(refined.abs()) {
        return refined;
    }
    adaptive(f, a, m, left, scale, depth + 1) + adaptive(f, m, b, right, scale, depth + 1)
}

/// `int_a^b f`, subdividing until two Gauss-Legendre estimates agree.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let whole = apply(&rules().1, f, a, b);
    // Coarse magnitude used as the tolerance floor on cancelling integrands.
    let scale = apply(&rules().0, &|x| f(x).abs(), a, b);
    adaptive(f, a, b, whole, scale, 0)
}

/// Integration window `[0, r_max]` and the width of the first panel.
fn window(functions: &[&RadialFunction]) -> (f64, f64) {
    let exps = |f: &RadialFunction| f.terms.iter().map(|t| t.exponent).collect::<Vec<_>>();
    let min_exp: f64 = functions.iter().map(|f| exps(f).into_iter().fold(f64::INFINITY, f64::min)).sum();
    let max_exp: f64 = functions.iter().map(|f| exps(f).into_iter().fold(0.0, f64::max)).sum();
    let max_pow: u32 = functions
        .iter()
        .map(|f| f.terms.iter().map(|t| t.power).max().unwrap_or(0))
        .sum();
    ((80.0 + 2.0 * max_pow as f64) / min_exp, 1.0 / max_exp)
}

/// Panel edges `0, w, 2w, 4w, ...` up to `r_max`.
fn panel_edges(first: f64, r_max: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut x = first;
    while x < r_max {
        edges.push(x);
        x *= 2.0;
    }
    edges.push(r_max);
    edges
}

fn integrate_panels(f: &dyn Fn(f64) -> f64, edges: &[f64]) -> f64 {
    edges.windows(2).map(|w| integrate(f, w[0], w[1])).sum()
}

/// Running integrals of one integrand over fixed panels, so that
/// `int_0^x` and `int_x^R` only need quadrature on one partial panel.
struct Cumulative<'a> {
    f: &'a dyn Fn(f64) -> f64,
    edges: Vec<f64>,
    below: Vec<f64>,
    above: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    fn new(f: &'a dyn Fn(f64) -> f64, edges: Vec<f64>) -> Self {
        let panels: Vec<f64> = edges.windows(2).map(|w| integrate(f, w[0], w[1])).collect();
        let mut below = vec![0.0; edges.len()];
        for k in 0..panels.len() {
            below[k + 1] = below[k] + panels[k];
        }
        let mut above = vec![0.0; edges.len()];
        for k in (0..panels.len()).rev() {
            above[k] = above[k + 1] + panels[k];
        }
        Self { f, edges, below, above }
    }

    fn panel_of(&self, x: f64) -> Option<usize> {
        if x >= *self.edges.last().unwrap() {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= x) - 1)
    }

    fn upto(&self, x: f64) -> f64 {
        match self.panel_of(x) {
            Some(k) => self.below[k] + integrate(self.f, self.edges[k], x),
            None => *self.below.last().unwrap(),
        }
    }

    fn from(&self, x: f64) -> f64 {
        match self.panel_of(x) {
            Some(k) => integrate(self.f, x, self.edges[k + 1]) + self.above[k + 1],
            None => 0.0,
        }
    }
}

pub fn overlap(f: &RadialFunction, g: &RadialFunction) -> f64 {
    let (r_max, first) = window(&[f, g]);
    FOUR_PI * integrate_panels(&|r| f.eval(r) * g.eval(r) * r * r, &panel_edges(first, r_max))
}

/// Kinetic energy from the gradient form `1/2 int f'(r) g'(r) r^2 dr`.
pub fn kinetic(f: &RadialFunction, g: &RadialFunction) -> f64 {
    let (r_max, first) = window(&[f, g]);
    0.5 * FOUR_PI
        * integrate_panels(&|r| f.derivative(r) * g.derivative(r) * r * r, &panel_edges(first, r_max))
}

pub fn nuclear_attraction(f: &RadialFunction, g: &RadialFunction, z: f64) -> f64 {
    let (r_max, first) = window(&[f, g]);
    -z * FOUR_PI * integrate_panels(&|r| f.eval(r) * g.eval(r) * r, &panel_edges(first, r_max))
}

/// `(f1 f2 | f3 f4)` by nested quadrature: the potential of `f3 f4` is
/// integrated at every outer node.
pub fn coulomb_repulsion(
    f1: &RadialFunction,
    f2: &RadialFunction,
    f3: &RadialFunction,
    f4: &RadialFunction,
) -> f64 {
    let (r_outer, first_outer) = window(&[f1, f2]);
    let (r_inner, first_inner) = window(&[f3, f4]);
    let charge = |r: f64| f3.eval(r) * f4.eval(r) * r * r;
    let field = |r: f64| f3.eval(r) * f4.eval(r) * r;
    let enclosed = Cumulative::new(&charge, panel_edges(first_inner, r_inner));
    let shell = Cumulative::new(&field, panel_edges(first_inner, r_inner));
    let potential = |r1: f64| {
        if r1 <= 0.0 {
            return shell.from(0.0);
        }
        enclosed.upto(r1) / r1 + shell.from(r1)
    };
    FOUR_PI
        * FOUR_PI
        * integrate_panels(
            &|r1| f1.eval(r1) * f2.eval(r1) * r1 * r1 * potential(r1),
            &panel_edges(first_outer, r_outer),
        )
}
