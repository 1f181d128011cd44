//! Precedence-aware printer whose output re-parses to the same tree.

use num_traits::Signed;

use super::{Constant, Expr, Rational};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => ADD,
        Expr::Mul(..) | Expr::Div(..) => MUL,
        Expr::Neg(..) => NEG,
        Expr::Pow(..) => POW,
        Expr::Const(_) | Expr::Var | Expr::Func(..) => ATOM,
    }
}

pub(super) fn render(e: &Expr) -> String {
    let mut out = String::new();
    write(e, &mut out);
    out
}

fn wrapped(e: &Expr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write(e, out);
        out.push(')');
    } else {
        write(e, out);
    }
}

fn write(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => write_constant(*c, out),
        Expr::Var => out.push('r'),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let (op, level) = match e {
                Expr::Add(..) => ('+', ADD),
                Expr::Sub(..) => ('-', ADD),
                Expr::Mul(..) => ('*', MUL),
                _ => ('/', MUL),
            };
            wrapped(a, precedence(a) < level, out);
            out.push(op);
            wrapped(b, precedence(b) <= level, out);
        }
        Expr::Neg(a) => {
            out.push('-');
            wrapped(a, precedence(a) < NEG, out);
        }
        Expr::Pow(a, k) => {
            wrapped(a, precedence(a) <= POW, out);
            out.push('^');
            if k.is_integer() && !k.is_negative() {
                out.push_str(&k.numer().to_string());
            } else {
                out.push('(');
                out.push_str(&rational_text(*k));
                out.push(')');
            }
        }
        Expr::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write(a, out);
            out.push(')');
        }
    }
}

fn rational_text(q: Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn write_constant(c: Constant, out: &mut String) {
    let (text, plain) = match c {
        Constant::Rational(q) => (rational_text(q), q.is_integer() && !q.is_negative()),
        Constant::Float(x) => (format!("{x:?}"), !c.is_negative()),
    };
    if plain {
        out.push_str(&text);
    } else {
        out.push('(');
        out.push_str(&text);
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::super::Expr;

    #[test]
    fn prints_minimal_parentheses() {
        for src in [
            "r*(1+r^2)^(-1/4)",
            "(1+r^2)^(-1)",
            "-sin(r)",
            "2*r",
            "r-(r-1)",
            "(r^2)^3",
            "(-r)^2",
            "-(2*r)",
            "r/(r*r)",
            "sqrt(r)^(1/3)",
        ] {
            let e = Expr::parse(src).unwrap();
            assert_eq!(e.to_string(), src, "printing {src}");
        }
    }

    #[test]
    fn constants_are_parenthesised_when_needed() {
        assert_eq!(Expr::rational(-1, 4).to_string(), "(-1/4)");
        assert_eq!(Expr::rational(3, 2).to_string(), "(3/2)");
        assert_eq!(Expr::float(-0.5).to_string(), "(-0.5)");
        assert_eq!(Expr::float(1e-5).to_string(), "1e-5");
    }
}
