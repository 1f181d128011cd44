//! Recursive-descent parser.
//!
//! Precedence from loosest to tightest: `+ -`, `* /`, unary minus, `^`
//! (right-associative). Literal subtrees are folded as they are built, except
//! for divisions by a zero literal which are kept for `eval` to report.

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Zero};
use thiserror::Error;

use super::{Constant, Expr, Func, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(Constant),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Token, usize)>, ParseError> {
        let mut lexer = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some(tok) = lexer.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next_token(&mut self) -> Result<Option<(Token, usize)>, ParseError> {
        while matches!(self.peek_byte(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(b) = self.peek_byte() else {
            return Ok(None);
        };
        let single = match b {
            b'+' => Some(Token::Plus),
            b'-' => Some(Token::Minus),
            b'*' => Some(Token::Star),
            b'/' => Some(Token::Slash),
            b'^' => Some(Token::Caret),
            b'(' => Some(Token::LParen),
            b')' => Some(Token::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok(Some((tok, start)));
        }
        if b.is_ascii_digit() || b == b'.' {
            return self.number(start).map(Some);
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            while matches!(self.peek_byte(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += 1;
            }
            let name = self.src[start..self.pos].to_string();
            return Ok(Some((Token::Ident(name), start)));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Token, usize), ParseError> {
        let bytes = self.src.as_bytes();
        let mut is_float = false;
        while matches!(self.peek_byte(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek_byte() == Some(b'.') {
            is_float = true;
            self.pos += 1;
            while matches!(self.peek_byte(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        // Exponent only when digits follow, so `2e` is not swallowed.
        if matches!(self.peek_byte(), Some(b'e' | b'E')) {
            let mut look = self.pos + 1;
            if matches!(bytes.get(look), Some(b'+' | b'-')) {
                look += 1;
            }
            if matches!(bytes.get(look), Some(c) if c.is_ascii_digit()) {
                is_float = true;
                self.pos = look;
                while matches!(self.peek_byte(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let text = &self.src[start..self.pos];
        let bad = |message: String| ParseError::Syntax {
            offset: start,
            message,
        };
        let constant = if is_float {
            let x: f64 = text
                .parse()
                .map_err(|_| bad(format!("malformed number `{text}`")))?;
            Constant::Float(x)
        } else {
            let n: i64 = text
                .parse()
                .map_err(|_| bad(format!("integer literal `{text}` out of range")))?;
            Constant::Rational(Rational::from_integer(n))
        };
        Ok((Token::Number(constant), start))
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    idx: usize,
    end: usize,
}

pub(crate) fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = Lexer::tokens(text)?;
    let mut parser = Parser {
        tokens,
        idx: 0,
        end: text.len(),
    };
    let expr = parser.expression()?;
    if let Some((tok, offset)) = parser.tokens.get(parser.idx) {
        return Err(ParseError::Syntax {
            offset: *offset,
            message: format!("unexpected trailing token {tok:?}"),
        });
    }
    Ok(expr)
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.idx).map_or(self.end, |(_, o)| *o)
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.idx += 1;
                    lhs = fold::add(lhs, self.term()?);
                }
                Some(Token::Minus) => {
                    self.idx += 1;
                    lhs = fold::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.idx += 1;
                    lhs = fold::mul(lhs, self.unary()?);
                }
                Some(Token::Slash) => {
                    self.idx += 1;
                    lhs = fold::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Token::Minus) {
            self.idx += 1;
            let inner = self.unary()?;
            return Ok(fold::neg(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() != Some(&Token::Caret) {
            return Ok(base);
        }
        self.idx += 1;
        let exp_offset = self.offset();
        // Right operand at unary level gives right associativity and allows `r^-1`.
        let exponent = self.unary()?;
        match exponent {
            Expr::Const(Constant::Rational(k)) => Ok(fold::pow(base, k)),
            Expr::Const(Constant::Float(_)) => Err(ParseError::Syntax {
                offset: exp_offset,
                message: "exponent must be an exact rational such as 1/2, not a decimal".into(),
            }),
            _ => Err(ParseError::Syntax {
                offset: exp_offset,
                message: "exponent must be a constant rational".into(),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let Some((tok, _)) = self.tokens.get(self.idx).cloned() else {
            return Err(self.syntax("unexpected end of input"));
        };
        self.idx += 1;
        match tok {
            Token::Number(c) => Ok(Expr::Const(c)),
            Token::LParen => {
                let inner = self.expression()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if name == "r" {
                    return Ok(Expr::Var);
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { name, offset });
                };
                if self.peek() != Some(&Token::LParen) {
                    return Err(self.syntax(format!("expected `(` after `{name}`")));
                }
                self.idx += 1;
                let arg = self.expression()?;
                self.expect_rparen()?;
                Ok(Expr::Func(func, Box::new(arg)))
            }
            other => {
                self.idx -= 1;
                Err(self.syntax(format!("unexpected token {other:?}")))
            }
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(&Token::RParen) {
            self.idx += 1;
            Ok(())
        } else {
            Err(self.syntax("expected `)`"))
        }
    }
}

/// Literal folding shared by the parser and [`Expr::fold_literals`].
pub(crate) mod fold {
    use super::*;

    fn lit(e: &Expr) -> Option<Constant> {
        e.as_constant()
    }

    fn combine(
        a: Constant,
        b: Constant,
        exact: impl Fn(Rational, Rational) -> Option<Rational>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Constant {
        match (a, b) {
            (Constant::Rational(x), Constant::Rational(y)) => match exact(x, y) {
                Some(q) => Constant::Rational(q),
                None => Constant::Float(float(a.value(), b.value())),
            },
            _ => Constant::Float(float(a.value(), b.value())),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (lit(&a), lit(&b)) {
            (Some(x), Some(y)) => Expr::Const(combine(x, y, |p, q| p.checked_add(&q), |p, q| p + q)),
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (lit(&a), lit(&b)) {
            (Some(x), Some(y)) => Expr::Const(combine(x, y, |p, q| p.checked_sub(&q), |p, q| p - q)),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (lit(&a), lit(&b)) {
            (Some(x), Some(y)) => Expr::Const(combine(x, y, |p, q| p.checked_mul(&q), |p, q| p * q)),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (lit(&a), lit(&b)) {
            (Some(x), Some(y)) if !y.is_zero() => {
                Expr::Const(combine(x, y, |p, q| p.checked_div(&q), |p, q| p / q))
            }
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match lit(&a) {
            Some(Constant::Rational(q)) => Expr::Const(Constant::Rational(-q)),
            Some(Constant::Float(x)) => Expr::Const(Constant::Float(-x)),
            None => Expr::Neg(Box::new(a)),
        }
    }

    /// Folds only when the result is exact: rational base, integer exponent.
    pub fn pow(base: Expr, k: Rational) -> Expr {
        if let Some(Constant::Rational(b)) = lit(&base) {
            if k.is_integer() && !(b.is_zero() && *k.numer() < 0) {
                if let Some(v) = checked_int_pow(b, *k.numer()) {
                    return Expr::Const(Constant::Rational(v));
                }
            }
        }
        Expr::Pow(Box::new(base), k)
    }

    fn checked_int_pow(b: Rational, n: i64) -> Option<Rational> {
        let (base, count) = if n < 0 {
            (Rational::one().checked_div(&b)?, n.checked_neg()?)
        } else {
            (b, n)
        };
        if count > 64 {
            return None;
        }
        let mut acc = Rational::one();
        for _ in 0..count {
            acc = acc.checked_mul(&base)?;
        }
        Some(acc)
    }
}
