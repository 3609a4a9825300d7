mod common;

use common::{random_contact, random_contact_gauge, random_expression, random_polynomial, random_symplectic, random_symplectic_gauge, rng};
use kfield::expr::finite_difference;
use kfield::geometry::lie_bracket;
use kfield::kcontact::{contact_hdw_residual, hamiltonian_kvf_contact};
use kfield::ksymplectic::{hamiltonian_kvf, hdw_residual};
use kfield::probe::probe_points;
use kfield::{Expr, GaugeSpec, PointBinding, VectorField};
use proptest::prelude::*;
use rand::Rng;

fn vars() -> Vec<String> {
    ["x", "y", "z"].iter().map(|s| s.to_string()).collect()
}

fn binding(point: &[f64]) -> PointBinding {
    vars().into_iter().zip(point.iter().copied()).collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..=1.0_f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_central_difference(seed in any::<u64>(), p in point(), v in 0..3usize) {
        let e = random_expression(&mut rng(seed), &vars(), 4);
        let b = binding(&p);
        let var = &vars()[v];
        let symbolic = e.differentiate(var).evaluate(&b).unwrap();
        let numeric = finite_difference(&e, &b, var, 1e-5).unwrap();
        prop_assert!(close(symbolic, numeric, 1e-6), "{e}: {symbolic} vs {numeric}");
    }

    #[test]
    fn simplify_preserves_value(seed in any::<u64>(), p in point()) {
        let e = random_expression(&mut rng(seed), &vars(), 4);
        let b = binding(&p);
        let before = e.evaluate(&b).unwrap();
        let after = e.simplify().evaluate(&b).unwrap();
        prop_assert!(close(before, after, 1e-12), "{e}: {before} vs {after}");
    }

    #[test]
    fn derivative_is_linear(seed in any::<u64>(), a in -3.0..3.0_f64, c in -3.0..3.0_f64, p in point()) {
        let mut r = rng(seed);
        let f = random_expression(&mut r, &vars(), 3);
        let g = random_expression(&mut r, &vars(), 3);
        let b = binding(&p);
        let lhs = (Expr::Const(a) * f.clone() + Expr::Const(c) * g.clone()).differentiate("y");
        let rhs = Expr::Const(a) * f.differentiate("y") + Expr::Const(c) * g.differentiate("y");
        let (l, r) = (lhs.evaluate(&b).unwrap(), rhs.evaluate(&b).unwrap());
        prop_assert!(close(l, r, 1e-10), "{l} vs {r}");
    }

    #[test]
    fn display_parses_back(seed in any::<u64>(), p in point()) {
        let e = random_expression(&mut rng(seed), &vars(), 4);
        let text = e.to_string();
        let back = Expr::parse(&text).unwrap();
        let b = binding(&p);
        let (x, y) = (e.evaluate(&b).unwrap(), back.evaluate(&b).unwrap());
        prop_assert!(close(x, y, 1e-12), "{text}: {x} vs {y}");
        prop_assert_eq!(back.to_string(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lie_bracket_is_antisymmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = random_symplectic(&mut r);
        let chart = sys.chart().clone();
        let field = |r: &mut _| {
            let comps = (0..chart.dim()).map(|_| random_polynomial(r, chart.names(), 2)).collect();
            VectorField::new(chart.clone(), PointBinding::new(), comps).unwrap()
        };
        let x = field(&mut r);
        let y = field(&mut r);
        let xy = lie_bracket(&x, &y).unwrap();
        let yx = lie_bracket(&y, &x).unwrap();
        for p in probe_points(chart.dim(), 10, r.random(), (-1.0, 1.0)) {
            let a = xy.evaluate(&p).unwrap();
            let b = yx.evaluate(&p).unwrap();
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((u + v).abs() <= 1e-12 * u.abs().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn symplectic_equations_hold_in_every_gauge(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = random_symplectic(&mut r);
        let gauge = random_symplectic_gauge(&mut r, &sys);
        let canonical = hamiltonian_kvf(&sys, &GaugeSpec::canonical()).unwrap();
        let x = hamiltonian_kvf(&sys, &gauge).unwrap();
        for p in probe_points(sys.chart().dim(), 20, r.random(), (-1.0, 1.0)) {
            prop_assert!(hdw_residual(&sys, &x, &p).unwrap().max_norm <= 1e-10);
            // Gauges only move momentum components.
            let a = canonical.evaluate_all(&p).unwrap();
            let b = x.evaluate_all(&p).unwrap();
            for alpha in 0..sys.chart().k() {
                for i in 0..sys.chart().n() {
                    let q = sys.chart().q(i);
                    prop_assert!((a[alpha][q] - b[alpha][q]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn contact_equations_hold_in_every_gauge(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sys = random_contact(&mut r);
        let gauge = random_contact_gauge(&mut r, &sys);
        let x = hamiltonian_kvf_contact(&sys, &gauge).unwrap();
        for p in probe_points(sys.chart().dim(), 20, r.random(), (-1.0, 1.0)) {
            let res = contact_hdw_residual(&sys, &x, &p).unwrap();
            prop_assert!(res.max_norm() <= 1e-10, "{}", res.max_norm());
        }
    }
}
