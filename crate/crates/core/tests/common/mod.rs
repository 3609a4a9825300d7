//! Seeded generators shared by the integration tests.

#![allow(dead_code)]

use kfield::{DarbouxChart, Expr, GaugeSpec, KContactSystem, KSymplecticSystem, PointBinding};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coefficient(rng: &mut TestRng) -> f64 {
    // Two decimals keep printed systems readable.
    (rng.random_range(-2.0..=2.0_f64) * 100.0).round() / 100.0
}

/// A polynomial of total degree ≤ `degree` (at most 2) in `vars` with a few
/// random terms.
pub fn random_polynomial(rng: &mut TestRng, vars: &[String], degree: usize) -> Expr {
    let terms = rng.random_range(1..=4);
    let mut sum = Expr::Const(coefficient(rng));
    for _ in 0..terms {
        let d = rng.random_range(1..=degree.max(1));
        let mut term = Expr::Const(coefficient(rng));
        for _ in 0..d {
            term = term * Expr::var(vars[rng.random_range(0..vars.len())].clone());
        }
        sum = sum + term;
    }
    sum.simplify()
}

/// Random exact k-symplectic system with n ≤ 2, k ≤ 3, deg h ≤ 2.
pub fn random_symplectic(rng: &mut TestRng) -> KSymplecticSystem {
    let n = rng.random_range(1..=2);
    let k = rng.random_range(1..=3);
    let chart = DarbouxChart::new(n, k, false).unwrap();
    let h = random_polynomial(rng, chart.names(), 2);
    KSymplecticSystem::new(chart, h, PointBinding::new()).unwrap()
}

/// Random k-contact system with n ≤ 2, k ≤ 3 and a Hamiltonian of degree ≤ 2
/// that may depend on z.
pub fn random_contact(rng: &mut TestRng) -> KContactSystem {
    let n = rng.random_range(1..=2);
    let k = rng.random_range(1..=3);
    let chart = DarbouxChart::new(n, k, true).unwrap();
    let h = random_polynomial(rng, chart.names(), 2);
    KContactSystem::new(chart, h, PointBinding::new()).unwrap()
}

fn momentum_table(rng: &mut TestRng, vars: &[String], n: usize, k: usize) -> Vec<Vec<Vec<Expr>>> {
    (0..k)
        .map(|_| {
            (0..k)
                .map(|_| (0..n).map(|_| random_polynomial(rng, vars, 2)).collect())
                .collect()
        })
        .collect()
}

/// A random explicit gauge completed to satisfy the trace condition.
pub fn random_symplectic_gauge(rng: &mut TestRng, sys: &KSymplecticSystem) -> GaugeSpec {
    let c = sys.chart();
    let table = momentum_table(rng, c.names(), c.n(), c.k());
    sys.complete_gauge(&GaugeSpec::explicit(table)).unwrap()
}

/// A random explicit momentum and z gauge completed to satisfy both traces.
pub fn random_contact_gauge(rng: &mut TestRng, sys: &KContactSystem) -> GaugeSpec {
    let c = sys.chart();
    let table = momentum_table(rng, c.names(), c.n(), c.k());
    let z = (0..c.k())
        .map(|_| (0..c.k()).map(|_| random_polynomial(rng, c.names(), 2)).collect())
        .collect();
    sys.complete_gauge(&GaugeSpec::explicit(table).with_z(z)).unwrap()
}

/// Height of the expression tree; leaves have depth 0.
pub fn tree_depth(e: &Expr) -> usize {
    match e {
        Expr::Const(_) | Expr::Var(_) => 0,
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => 1 + tree_depth(a),
        Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => 1 + tree_depth(a).max(tree_depth(b)),
    }
}

/// A random expression tree of depth ≤ `depth` over `vars` that is smooth on
/// all of ℝ^n: denominators and negative-power bases have the form `1 + e²`.
pub fn random_expression(rng: &mut TestRng, vars: &[String], depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.7) {
            Expr::var(vars[rng.random_range(0..vars.len())].clone())
        } else {
            Expr::Const(coefficient(rng))
        };
    }
    let d = depth - 1;
    // `1 + e²` costs two levels above `e`.
    let positive = |rng: &mut TestRng| Expr::one() + random_expression(rng, vars, d.saturating_sub(2)).powi(2);
    match rng.random_range(0..10) {
        0 | 1 => random_expression(rng, vars, d) + random_expression(rng, vars, d),
        2 if d >= 1 => random_expression(rng, vars, d) - random_expression(rng, vars, d - 1),
        3 | 4 => random_expression(rng, vars, d) * random_expression(rng, vars, d),
        5 if d >= 2 => random_expression(rng, vars, d) / positive(rng),
        6 => {
            let e = rng.random_range(-2..=3);
            if e < 0 && d >= 2 {
                positive(rng).powi(e)
            } else {
                random_expression(rng, vars, d).powi(e.abs().max(2))
            }
        }
        7 => random_expression(rng, vars, d).sin(),
        8 => random_expression(rng, vars, d).cos(),
        _ if d >= 1 => random_expression(rng, vars, d - 1).sin().exp(),
        _ => random_expression(rng, vars, d).cos(),
    }
}
