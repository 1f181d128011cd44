//! Expressions in the single variable `r`.
//!
//! Profile functions such as `r*(1+r^2)^(-1/4)` are parsed into an [`Expr`]
//! tree, differentiated symbolically and evaluated in `f64`. Powers carry an
//! exact rational exponent so that derivatives of `(1+r^2)^(-1/4)` never pick
//! up floating-point drift in the exponent.

mod diff;
mod display;
mod parser;

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

pub use parser::ParseError;

/// Exact rational used for literal constants and exponents.
pub type Rational = Ratio<i64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constant {
    Rational(Rational),
    Float(f64),
}

impl Constant {
    pub fn value(&self) -> f64 {
        match *self {
            Constant::Rational(q) => rational_to_f64(q),
            Constant::Float(x) => x,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value() == 0.0
    }

    pub fn is_one(&self) -> bool {
        match *self {
            Constant::Rational(q) => q == Rational::from_integer(1),
            Constant::Float(x) => x == 1.0,
        }
    }

    pub(crate) fn is_negative(&self) -> bool {
        match *self {
            Constant::Rational(q) => q.is_negative(),
            Constant::Float(x) => x.is_sign_negative() && x != 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sqrt,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

/// Expression tree over the variable `r`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Constant),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, Rational),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("domain error in `{node}` at r = {r}: {reason}")]
    Domain {
        node: String,
        r: f64,
        reason: &'static str,
    },
}

pub(crate) fn rational_to_f64(q: Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parser::parse(text)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Constant::Rational(Rational::from_integer(n)))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Const(Constant::Rational(Rational::new(num, den)))
    }

    pub fn float(x: f64) -> Expr {
        Expr::Const(Constant::Float(x))
    }

    pub fn as_constant(&self) -> Option<Constant> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.depth().max(b.depth())
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.depth(),
        }
    }

    /// Evaluates the tree at `r`.
    pub fn eval(&self, r: f64) -> Result<f64, EvalError> {
        let domain = |node: &Expr, reason: &'static str| EvalError::Domain {
            node: node.to_string(),
            r,
            reason,
        };
        Ok(match self {
            Expr::Const(c) => c.value(),
            Expr::Var => r,
            Expr::Add(a, b) => a.eval(r)? + b.eval(r)?,
            Expr::Sub(a, b) => a.eval(r)? - b.eval(r)?,
            Expr::Mul(a, b) => a.eval(r)? * b.eval(r)?,
            Expr::Div(a, b) => {
                let num = a.eval(r)?;
                let den = b.eval(r)?;
                if den == 0.0 {
                    return Err(domain(self, "division by zero"));
                }
                num / den
            }
            Expr::Neg(a) => -a.eval(r)?,
            Expr::Pow(a, k) => {
                let base = a.eval(r)?;
                rational_pow(base, *k).map_err(|reason| domain(self, reason))?
            }
            Expr::Func(func, a) => {
                let x = a.eval(r)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(domain(self, "square root of a negative number"));
                        }
                        x.sqrt()
                    }
                }
            }
        })
    }

    /// Symbolic derivative of the given order (0 returns a clone).
    pub fn diff(&self, order: u32) -> Expr {
        let mut out = self.clone();
        for _ in 0..order {
            out = diff::derivative(&out);
        }
        out
    }

    /// Folds every subtree whose operands are literals, exactly as the parser does.
    pub fn fold_literals(&self) -> Expr {
        use parser::fold;
        match self {
            Expr::Const(_) | Expr::Var => self.clone(),
            Expr::Add(a, b) => fold::add(a.fold_literals(), b.fold_literals()),
            Expr::Sub(a, b) => fold::sub(a.fold_literals(), b.fold_literals()),
            Expr::Mul(a, b) => fold::mul(a.fold_literals(), b.fold_literals()),
            Expr::Div(a, b) => fold::div(a.fold_literals(), b.fold_literals()),
            Expr::Neg(a) => fold::neg(a.fold_literals()),
            Expr::Pow(a, k) => fold::pow(a.fold_literals(), *k),
            Expr::Func(f, a) => Expr::Func(*f, Box::new(a.fold_literals())),
        }
    }
}

/// `base^(n/d)` with real-valued odd roots of negative numbers.
fn rational_pow(base: f64, k: Rational) -> Result<f64, &'static str> {
    let num = *k.numer();
    let den = *k.denom();
    if base == 0.0 && num < 0 {
        return Err("zero raised to a negative power");
    }
    if base < 0.0 && den % 2 == 0 {
        return Err("even root of a negative number");
    }
    let magnitude = base.abs();
    let root = match den {
        1 => magnitude,
        2 => magnitude.sqrt(),
        3 => magnitude.cbrt(),
        4 => magnitude.sqrt().sqrt(),
        _ => magnitude.powf(1.0 / den as f64),
    };
    let value = match i32::try_from(num) {
        Ok(n) => root.powi(n),
        Err(_) => root.powf(num as f64),
    };
    if base < 0.0 && num % 2 != 0 {
        Ok(-value)
    } else {
        Ok(value)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&display::render(self))
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn variable_parses_to_var() {
        assert_eq!(p("r"), Expr::Var);
    }

    #[test]
    fn reference_profiles_evaluate() {
        let h = p("(1+r^2)^(-1)");
        assert_eq!(h.eval(1.0).unwrap(), 0.5);
        assert!((h.eval(2.0).unwrap() - 0.2).abs() < 1e-15);
        let f = p("r*(1+r^2)^(-1/4)");
        let expected = 2f64.powf(-0.25);
        assert!((f.eval(1.0).unwrap() - expected).abs() < 1e-15);
        assert!((f.eval(1.0).unwrap() - 0.840896).abs() < 1e-6);
    }

    #[test]
    fn division_by_zero_is_a_domain_error() {
        let e = p("1/r");
        match e.eval(0.0) {
            Err(EvalError::Domain { node, reason, .. }) => {
                assert_eq!(node, "1/r");
                assert_eq!(reason, "division by zero");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn literal_division_by_zero_is_not_folded() {
        let e = p("1/0");
        assert!(matches!(e, Expr::Div(_, _)));
        assert!(e.eval(3.0).is_err());
    }

    #[test]
    fn even_roots_of_negatives_are_rejected() {
        assert!(p("(r-2)^(1/2)").eval(1.0).is_err());
        assert!(p("sqrt(r-2)").eval(1.0).is_err());
        let odd = p("(r-2)^(1/3)").eval(1.0).unwrap();
        assert!((odd + 1.0).abs() < 1e-15);
    }

    #[test]
    fn evaluation_is_bitwise_deterministic() {
        let e = p("sin(r)*exp(-r^2/3)+(1+r)^(-3/4)");
        let a = e.eval(0.731).unwrap();
        let b = e.clone().eval(0.731).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
