//! First-order symbolic differentiation with light algebraic cleanup.

use num_traits::{One, Zero};

use super::parser::fold;
use super::{Constant, Expr, Func, Rational};

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if c.is_zero())
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if c.is_one())
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        fold::add(a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        neg(b)
    } else {
        fold::sub(a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::int(0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        fold::mul(a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_one(&b) {
        a
    } else {
        fold::div(a, b)
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Neg(inner) => *inner,
        other => fold::neg(other),
    }
}

fn pow(base: Expr, k: Rational) -> Expr {
    if k.is_zero() {
        Expr::int(1)
    } else if k.is_one() {
        base
    } else {
        fold::pow(base, k)
    }
}

pub(super) fn derivative(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) => Expr::int(0),
        Expr::Var => Expr::int(1),
        Expr::Add(a, b) => add(derivative(a), derivative(b)),
        Expr::Sub(a, b) => sub(derivative(a), derivative(b)),
        Expr::Mul(a, b) => add(
            mul(derivative(a), (**b).clone()),
            mul((**a).clone(), derivative(b)),
        ),
        Expr::Div(a, b) => {
            let num = sub(
                mul(derivative(a), (**b).clone()),
                mul((**a).clone(), derivative(b)),
            );
            div(num, pow((**b).clone(), Rational::from_integer(2)))
        }
        Expr::Neg(a) => neg(derivative(a)),
        Expr::Pow(a, k) => {
            let outer = mul(
                Expr::Const(Constant::Rational(*k)),
                pow((**a).clone(), k - Rational::one()),
            );
            mul(outer, derivative(a))
        }
        Expr::Func(func, a) => {
            let inner = (**a).clone();
            let outer = match func {
                Func::Sin => Expr::Func(Func::Cos, Box::new(inner)),
                Func::Cos => neg(Expr::Func(Func::Sin, Box::new(inner))),
                Func::Exp => Expr::Func(Func::Exp, Box::new(inner)),
                Func::Sqrt => div(
                    Expr::int(1),
                    mul(Expr::int(2), Expr::Func(Func::Sqrt, Box::new(inner))),
                ),
            };
            mul(outer, derivative(a))
        }
    }
}
