//! Bottom-up constant folding.
//!
//! Products are normalized to `coefficient * rest` so that numeric factors
//! cancel across quotients (`(2*p)/(2*m)` becomes `p/m`). Like terms with
//! structurally equal rests are merged in sums and products. This is not a
//! canonical form.

use super::Expr;

pub(super) fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(a) => scale(-1.0, simplify(a)),
        Expr::Add(a, b) => add(simplify(a), simplify(b)),
        Expr::Mul(a, b) => mul(simplify(a), simplify(b)),
        Expr::Div(a, b) => div(simplify(a), simplify(b)),
        Expr::Pow(a, n) => pow(simplify(a), *n),
        Expr::Sin(a) => unary(simplify(a), f64::sin, Expr::sin),
        Expr::Cos(a) => unary(simplify(a), f64::cos, Expr::cos),
        Expr::Exp(a) => unary(simplify(a), f64::exp, Expr::exp),
    }
}

fn unary(a: Expr, fold: fn(f64) -> f64, build: fn(Expr) -> Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(fold(c)),
        other => build(other),
    }
}

/// Splits an already simplified expression into a numeric coefficient and a
/// non-numeric remainder.
fn split(e: Expr) -> (f64, Option<Expr>) {
    match e {
        Expr::Const(c) => (c, None),
        Expr::Neg(a) => {
            let (c, rest) = split(*a);
            (-c, rest)
        }
        Expr::Mul(a, b) => {
            let (ca, ra) = split(*a);
            let (cb, rb) = split(*b);
            (ca * cb, join_mul(ra, rb))
        }
        other => (1.0, Some(other)),
    }
}

fn build(c: f64, rest: Option<Expr>) -> Expr {
    match rest {
        None => Expr::Const(c),
        Some(_) if c == 0.0 => Expr::Const(0.0),
        Some(r) if c == 1.0 => r,
        Some(r) if c == -1.0 => Expr::Neg(Box::new(r)),
        Some(r) => Expr::Mul(Box::new(Expr::Const(c)), Box::new(r)),
    }
}

fn scale(c: f64, e: Expr) -> Expr {
    let (ce, rest) = split(e);
    build(c * ce, rest)
}

/// `(base, exponent)` view used to merge repeated factors.
fn as_power(e: &Expr) -> (&Expr, i32) {
    match e {
        Expr::Pow(base, n) => (base, *n),
        other => (other, 1),
    }
}

fn join_mul(a: Option<Expr>, b: Option<Expr>) -> Option<Expr> {
    match (a, b) {
        (None, r) | (r, None) => r,
        (Some(x), Some(y)) => {
            let (bx, nx) = as_power(&x);
            let (by, ny) = as_power(&y);
            if bx == by && nx + ny != 0 {
                Some(pow(bx.clone(), nx + ny))
            } else {
                Some(Expr::Mul(Box::new(x), Box::new(y)))
            }
        }
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    let (ca, ra) = split(a);
    let (cb, rb) = split(b);
    build(ca * cb, join_mul(ra, rb))
}

fn div(a: Expr, b: Expr) -> Expr {
    let (ca, ra) = split(a.clone());
    let (cb, rb) = split(b.clone());
    if cb == 0.0 {
        // keep the division so evaluation still reports it
        return Expr::Div(Box::new(a), Box::new(b));
    }
    let rest = match (ra, rb) {
        (r, None) => r,
        (None, Some(d)) => Some(Expr::Div(Box::new(Expr::one()), Box::new(d))),
        (Some(n), Some(d)) if n == d => None,
        (Some(n), Some(d)) => Some(Expr::Div(Box::new(n), Box::new(d))),
    };
    build(ca / cb, rest)
}

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        return Expr::Const(x + y);
    }
    let (ca, ra) = split(a.clone());
    let (cb, rb) = split(b.clone());
    if ra.is_some() && ra == rb {
        return build(ca + cb, ra);
    }
    if cb < 0.0 {
        return Expr::Add(Box::new(a), Box::new(Expr::Neg(Box::new(build(-cb, rb)))));
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn pow(a: Expr, n: i32) -> Expr {
    match n {
        0 => return Expr::one(),
        1 => return a,
        _ => {}
    }
    match a {
        Expr::Const(c) if !(c == 0.0 && n < 0) => Expr::Const(c.powi(n)),
        Expr::Pow(base, m) => pow(*base, m * n),
        other => {
            let (c, rest) = split(other.clone());
            match rest {
                Some(r) if c != 1.0 && c != 0.0 => build(c.powi(n), Some(Expr::Pow(Box::new(r), n))),
                _ => Expr::Pow(Box::new(other), n),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::PointBinding;

    #[test]
    fn annihilation_and_folding() {
        let e = Expr::parse("0*sin(q) + p").unwrap();
        assert_eq!(e.simplify(), Expr::var("p"));
        assert_eq!(Expr::parse("2*3").unwrap().simplify(), Expr::Const(6.0));
        assert_eq!(Expr::parse("q^1").unwrap().simplify(), Expr::var("q"));
        assert_eq!(Expr::parse("q + 0").unwrap().simplify(), Expr::var("q"));
        assert_eq!(Expr::parse("q - q").unwrap().simplify(), Expr::zero());
        assert_eq!(Expr::parse("q*q*q").unwrap().simplify(), Expr::var("q").powi(3));
    }

    #[test]
    fn half_p_squared_derivative_is_p() {
        let d = Expr::parse("(1/2)*p^2").unwrap().differentiate("p");
        assert_eq!(d, Expr::var("p"));
    }

    #[test]
    fn keeps_division_by_zero_visible() {
        let e = Expr::parse("q/(0*p)").unwrap().simplify();
        let b = PointBinding::new().with("q", 1.0).with("p", 2.0);
        assert!(e.evaluate(&b).is_err());
    }

    #[test]
    fn negative_coefficients_print_as_subtraction() {
        let e = Expr::parse("a + (-2)*b").unwrap().simplify();
        assert_eq!(e.to_string(), "a - 2*b");
    }
}
