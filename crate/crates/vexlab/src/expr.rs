//! A small closed arithmetic expression language for configuration files.
//!
//! Expressions define the exponent p(x), the weight w(x) and test functions
//! f(x) of one real variable `x` on the torus. The grammar is fixed: no
//! user-defined functions, no complex arithmetic. Evaluation is pure and
//! deterministic; domain violations surface as [`Error::Domain`] instead of
//! silently propagating NaN.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Binary operators, in increasing precedence order: `+ - * / ^`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Built-in functions of the closed grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
    Min,
    Max,
    Pow,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }
}

/// Expression tree. Arity is enforced by construction: unary/binary nodes
/// hold exactly the children they need.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Var,
    Pi,
    Neg(Arc<Expr>),
    Bin(BinOp, Arc<Expr>, Arc<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Parse an expression from text. Standard precedence:
    /// `^` binds tighter than unary minus, which binds tighter than `* /`,
    /// which bind tighter than `+ -`. `^` is right-associative, everything
    /// else is left-associative.
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser::new(text);
        let e = p.parse_expr()?;
        p.skip_ws();
        if p.pos < p.bytes.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Evaluate at a point. IEEE double precision; returns a domain error
    /// instead of NaN for out-of-domain arguments.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Var => Ok(x),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Neg(e) => Ok(-e.eval(x)?),
            Expr::Bin(op, a, b) => {
                let va = a.eval(x)?;
                let vb = b.eval(x)?;
                match op {
                    BinOp::Add => Ok(va + vb),
                    BinOp::Sub => Ok(va - vb),
                    BinOp::Mul => Ok(va * vb),
                    BinOp::Div => {
                        if vb == 0.0 {
                            Err(self.domain_err(x, "division by zero"))
                        } else {
                            Ok(va / vb)
                        }
                    }
                    BinOp::Pow => self.eval_pow(va, vb, x),
                }
            }
            Expr::Call(f, args) => {
                let v0 = args[0].eval(x)?;
                match f {
                    Func::Sin => Ok(v0.sin()),
                    Func::Cos => Ok(v0.cos()),
                    Func::Exp => Ok(v0.exp()),
                    Func::Abs => Ok(v0.abs()),
                    Func::Log => {
                        if v0 <= 0.0 {
                            Err(self.domain_err(x, "log of a non-positive number"))
                        } else {
                            Ok(v0.ln())
                        }
                    }
                    Func::Sqrt => {
                        if v0 < 0.0 {
                            Err(self.domain_err(x, "sqrt of a negative number"))
                        } else {
                            Ok(v0.sqrt())
                        }
                    }
                    Func::Min => Ok(v0.min(args[1].eval(x)?)),
                    Func::Max => Ok(v0.max(args[1].eval(x)?)),
                    Func::Pow => {
                        let v1 = args[1].eval(x)?;
                        self.eval_pow(v0, v1, x)
                    }
                }
            }
        }
    }

    fn eval_pow(&self, base: f64, exp: f64, x: f64) -> Result<f64> {
        if base == 0.0 && exp < 0.0 {
            return Err(self.domain_err(x, "zero raised to a negative power"));
        }
        if base < 0.0 && exp.fract() != 0.0 {
            return Err(self.domain_err(x, "fractional power of a negative base"));
        }
        Ok(base.powf(exp))
    }

    fn domain_err(&self, x: f64, message: &str) -> Error {
        Error::Domain {
            subexpr: self.to_string(),
            x,
            message: message.to_string(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parent_prec: u8, tie: bool) -> fmt::Result {
            let needs = e.precedence() < parent_prec || (tie && e.precedence() == parent_prec);
            if needs {
                write!(f, "(")?;
                write!(f, "{e}")?;
                write!(f, ")")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Number(v) => {
                if *v == v.trunc() && v.abs() < 1e15 {
                    write!(f, "{v:.0}")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var => write!(f, "x"),
            Expr::Pi => write!(f, "pi"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                child(f, e, self.precedence(), true)
            }
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                let p = self.precedence();
                if *op == BinOp::Pow {
                    // right-assoc: parenthesize a left child of equal precedence
                    child(f, a, p, true)?;
                    write!(f, "{sym}")?;
                    child(f, b, p, false)
                } else {
                    child(f, a, p, false)?;
                    write!(f, "{sym}")?;
                    child(f, b, p, true)
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Bin(BinOp::Add, Arc::new(lhs), Arc::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Bin(BinOp::Sub, Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Bin(BinOp::Mul, Arc::new(lhs), Arc::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Bin(BinOp::Div, Arc::new(lhs), Arc::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let inner = self.parse_unary()?;
            Ok(Expr::Neg(Arc::new(inner)))
        } else {
            self.parse_power()
        }
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_atom()?;
        if self.eat(b'^') {
            // right-associative; the exponent may carry a unary minus
            let exp = self.parse_unary()?;
            Ok(Expr::Bin(BinOp::Pow, Arc::new(base), Arc::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn parse_atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(_) => Err(self.err("dangling operator or unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn parse_number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // exponent suffix like 1e-3
        if self.pos < self.bytes.len() && (self.bytes[self.pos] | 0x20) == b'e' {
            let mut j = self.pos + 1;
            if j < self.bytes.len() && (self.bytes[j] == b'+' || self.bytes[j] == b'-') {
                j += 1;
            }
            if j < self.bytes.len() && self.bytes[j].is_ascii_digit() {
                self.pos = j;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        s.parse::<f64>().map(Expr::Number).map_err(|_| Error::Syntax {
            offset: start,
            message: format!("invalid number `{s}`"),
        })
    }

    fn parse_ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match name {
            "x" => Ok(Expr::Var),
            "pi" => Ok(Expr::Pi),
            _ => {
                if let Some(func) = Func::from_name(name) {
                    if !self.eat(b'(') {
                        return Err(self.err("expected `(` after function name"));
                    }
                    let mut args = vec![self.parse_expr()?];
                    while self.eat(b',') {
                        args.push(self.parse_expr()?);
                    }
                    if !self.eat(b')') {
                        return Err(self.err("expected `)`"));
                    }
                    if args.len() != func.arity() {
                        return Err(Error::Syntax {
                            offset: start,
                            message: format!(
                                "{} takes {} argument(s), got {}",
                                func.name(),
                                func.arity(),
                                args.len()
                            ),
                        });
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    Err(Error::Syntax {
                        offset: start,
                        message: format!("unknown identifier `{name}`"),
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(text: &str, x: f64) -> f64 {
        Expr::parse(text).unwrap().eval(x).unwrap()
    }

    #[test]
    fn literal_examples() {
        assert_eq!(ev("2+cos(x)", 0.0), 3.0);
        assert_eq!(ev("2+3*x", 1.0), 5.0);
        assert!((ev("pi", 17.0) - PI).abs() < f64::EPSILON);
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        match Expr::parse("2*(") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            Expr::parse("2+foo(x)"),
            Err(Error::Syntax { offset: 2, .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tighter than unary minus
        assert_eq!(ev("-2^2", 0.0), -4.0);
        // ^ right-assoc
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        // left-assoc subtraction
        assert_eq!(ev("10-3-2", 0.0), 5.0);
        // exponent may be negative
        assert_eq!(ev("2^-2", 0.0), 0.25);
    }

    #[test]
    fn domain_errors() {
        let e = Expr::parse("log(x)").unwrap();
        assert!(matches!(e.eval(0.0), Err(Error::Domain { .. })));
        assert!(matches!(e.eval(-1.0), Err(Error::Domain { .. })));
        let e = Expr::parse("x^0.5").unwrap();
        assert!(matches!(e.eval(-1.0), Err(Error::Domain { .. })));
        let e = Expr::parse("1/x").unwrap();
        assert!(matches!(e.eval(0.0), Err(Error::Domain { .. })));
        let e = Expr::parse("(0*x)^-1").unwrap();
        assert!(matches!(e.eval(1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn integer_powers_of_negative_bases_are_fine() {
        assert_eq!(ev("(0-2)^3", 0.0), -8.0);
        assert_eq!(ev("pow(0-2,2)", 0.0), 4.0);
    }

    #[test]
    fn half_power_example() {
        let v = ev("abs(sin(x/2))^0.5", PI);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eval_is_pure() {
        let e = Expr::parse("sin(x)*exp(cos(x))+x^3").unwrap();
        let a = e.eval(1.2345).unwrap();
        let b = e.eval(1.2345).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Expr::Number(n as f64 / 8.0)),
            Just(Expr::Var),
            Just(Expr::Pi),
        ];
        leaf.prop_recursive(5, 64, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Arc::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Arc::new(a), Arc::new(b))),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Abs),
                        Just(Func::Sqrt),
                        Just(Func::Log)
                    ],
                    inner.clone()
                )
                    .prop_map(|(f, a)| Expr::Call(f, vec![a])),
                (
                    prop_oneof![Just(Func::Min), Just(Func::Max), Just(Func::Pow)],
                    inner.clone(),
                    inner
                )
                    .prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
            ]
        })
    }

    proptest! {
        // print/parse round trip yields a structurally equal tree
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            let back = Expr::parse(&text).unwrap();
            prop_assert_eq!(&back, &e, "text was `{}`", text);
        }
    }
}
