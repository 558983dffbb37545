//! Scalar expressions in the plane coordinates `x`, `y`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" integer)?
//! atom   := number | "x" | "y" | "pi" | ident "(" expr ("," expr)? ")" | "(" expr ")"
//! ```
//!
//! Exponentiation binds tighter than unary minus, so `-x^2` is `-(x^2)`.
//! Exponents after `^` are non-negative integer literals; fractional powers
//! go through `pow` or `sqrt` so that domain errors surface explicitly.

use std::fmt;

use crate::error::{Error, Result, Span};
use crate::jet::Jet;

mod parser;

pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub fn axis(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Pow,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Var(Var),
    Pi,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Integer power; the parser only produces non-negative exponents.
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
}

/// Expression tree node. Equality compares structure only, not source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Option<Span>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl From<ExprKind> for Expr {
    fn from(kind: ExprKind) -> Self {
        Expr { kind, span: None }
    }
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(v: f64) -> Expr {
        ExprKind::Num(v).into()
    }

    pub fn var(v: Var) -> Expr {
        ExprKind::Var(v).into()
    }

    pub fn x() -> Expr {
        Expr::var(Var::X)
    }

    pub fn y() -> Expr {
        Expr::var(Var::Y)
    }

    fn as_num(&self) -> Option<f64> {
        match self.kind {
            ExprKind::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    // Smart constructors fold literal zeros and ones so that derivatives and
    // rescaled structures stay readable.

    pub fn neg(a: Expr) -> Expr {
        if a.is_zero() {
            return a;
        }
        match a.kind {
            ExprKind::Neg(inner) => *inner,
            _ => ExprKind::Neg(Box::new(a)).into(),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if let (Some(p), Some(q)) = (a.as_num(), b.as_num()) {
            return Expr::num(p + q);
        }
        if let ExprKind::Neg(inner) = b.kind {
            return ExprKind::Binary(BinOp::Sub, Box::new(a), inner).into();
        }
        ExprKind::Binary(BinOp::Add, Box::new(a), Box::new(b)).into()
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::neg(b);
        }
        if let (Some(p), Some(q)) = (a.as_num(), b.as_num()) {
            return Expr::num(p - q);
        }
        ExprKind::Binary(BinOp::Sub, Box::new(a), Box::new(b)).into()
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::num(0.0);
        }
        if a.as_num() == Some(1.0) {
            return b;
        }
        if b.as_num() == Some(1.0) {
            return a;
        }
        if let (Some(p), Some(q)) = (a.as_num(), b.as_num()) {
            return Expr::num(p * q);
        }
        ExprKind::Binary(BinOp::Mul, Box::new(a), Box::new(b)).into()
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return a;
        }
        if b.as_num() == Some(1.0) {
            return a;
        }
        ExprKind::Binary(BinOp::Div, Box::new(a), Box::new(b)).into()
    }

    pub fn powi(a: Expr, n: i32) -> Expr {
        match n {
            0 => Expr::num(1.0),
            1 => a,
            _ => ExprKind::Pow(Box::new(a), n).into(),
        }
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Expr {
        ExprKind::Call(f, args).into()
    }

    /// Evaluates the expression as a jet at `base`, truncated at `order`.
    pub fn eval_jet(&self, base: [f64; 2], order: usize) -> Result<Jet> {
        let res = match &self.kind {
            ExprKind::Num(v) => Ok(Jet::constant(*v, base, order)),
            ExprKind::Pi => Ok(Jet::constant(std::f64::consts::PI, base, order)),
            ExprKind::Var(v) => Ok(Jet::variable(v.axis(), base, order)),
            ExprKind::Neg(a) => Ok(-a.eval_jet(base, order)?),
            ExprKind::Binary(op, a, b) => {
                let a = a.eval_jet(base, order)?;
                let b = b.eval_jet(base, order)?;
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div => a.try_div(&b),
                }
            }
            ExprKind::Pow(a, n) => a.eval_jet(base, order)?.powi(*n),
            ExprKind::Call(f, args) => {
                let a = args[0].eval_jet(base, order)?;
                match f {
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                    Func::Exp => Ok(a.exp()),
                    Func::Ln => a.ln(),
                    Func::Sqrt => a.sqrt(),
                    Func::Pow => {
                        let b = args[1].eval_jet(base, order)?;
                        a.pow(&b)
                    }
                }
            }
        };
        match (res, self.span) {
            (Err(e), Some(s)) => Err(e.with_span(s)),
            (r, _) => r,
        }
    }

    /// Plain pointwise value.
    pub fn eval(&self, p: [f64; 2]) -> Result<f64> {
        Ok(self.eval_jet(p, 0)?.value())
    }

    /// Symbolic partial derivative with respect to `v`.
    pub fn derivative(&self, v: Var) -> Expr {
        match &self.kind {
            ExprKind::Num(_) | ExprKind::Pi => Expr::num(0.0),
            ExprKind::Var(w) => Expr::num(if *w == v { 1.0 } else { 0.0 }),
            ExprKind::Neg(a) => Expr::neg(a.derivative(v)),
            ExprKind::Binary(op, a, b) => {
                let (da, db) = (a.derivative(v), b.derivative(v));
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                    BinOp::Div => Expr::sub(
                        Expr::div(da, b.clone()),
                        Expr::div(Expr::mul(a, db), Expr::powi(b, 2)),
                    ),
                }
            }
            ExprKind::Pow(a, n) => {
                let da = a.derivative(v);
                Expr::mul(
                    Expr::mul(Expr::num(*n as f64), Expr::powi((**a).clone(), n - 1)),
                    da,
                )
            }
            ExprKind::Call(f, args) => {
                let a = args[0].clone();
                let da = a.derivative(v);
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, vec![a]),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, vec![a])),
                    Func::Exp => self.clone(),
                    Func::Ln => Expr::div(Expr::num(1.0), a),
                    Func::Sqrt => Expr::div(Expr::num(0.5), self.clone()),
                    Func::Pow => {
                        // d(a^b) = a^b (b' ln a + b a' / a)
                        let b = args[1].clone();
                        let db = b.derivative(v);
                        let inner = Expr::add(
                            Expr::mul(db, Expr::call(Func::Ln, vec![a.clone()])),
                            Expr::div(Expr::mul(b, da), a),
                        );
                        return Expr::mul(self.clone(), inner);
                    }
                };
                Expr::mul(outer, da)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            ExprKind::Neg(_) => 3,
            ExprKind::Pow(_, n) if *n < 0 => 2,
            ExprKind::Pow(..) => 4,
            ExprKind::Num(v) if *v < 0.0 || v.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

fn fmt_num(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v.is_sign_negative() {
        write!(f, "-")?;
    }
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        // exponent form; the parser accepts it and it avoids long digit strings
        write!(f, "{a:e}")
    } else {
        write!(f, "{a}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |e: &Expr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match &self.kind {
            ExprKind::Num(v) => fmt_num(*v, f),
            ExprKind::Pi => write!(f, "pi"),
            ExprKind::Var(Var::X) => write!(f, "x"),
            ExprKind::Var(Var::Y) => write!(f, "y"),
            ExprKind::Neg(a) => {
                write!(f, "-")?;
                wrap(a, 3, f)
            }
            ExprKind::Binary(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                };
                wrap(a, p, f)?;
                write!(f, " {sym} ")?;
                // left associative: the right operand needs strictly higher precedence
                wrap(b, p + 1, f)
            }
            ExprKind::Pow(a, n) => {
                if *n < 0 {
                    write!(f, "1 / ")?;
                    wrap(a, 5, f)?;
                    return write!(f, "^{}", -n);
                }
                wrap(a, 5, f)?;
                write!(f, "^{n}")
            }
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn sum_of_squares_tree() {
        let expect = Expr::add(
            Expr::mul(Expr::x(), Expr::x()),
            Expr::mul(Expr::y(), Expr::y()),
        );
        assert_eq!(p("x*x + y*y"), expect);
    }

    #[test]
    fn power_binds_tighter_than_negation() {
        let expect: Expr = ExprKind::Neg(Box::new(Expr::powi(Expr::x(), 2))).into();
        assert_eq!(p("-x^2"), expect);
    }

    #[test]
    fn incomplete_input_reports_offset() {
        match parse("x + ") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse("2*z"),
            Err(Error::UnknownIdentifier {
                name: "z".into(),
                offset: 2
            })
        );
        assert!(matches!(
            parse("foo(x)"),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(parse("pow(x)"), Err(Error::Arity { .. })));
        assert!(matches!(parse("sin(x, y)"), Err(Error::Arity { .. })));
    }

    #[test]
    fn left_associative_subtraction() {
        let e = p("x - y - 1");
        assert_eq!(e.eval([5.0, 2.0]).unwrap(), 2.0);
        let d = p("x / y / 2");
        assert_eq!(d.eval([8.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn eval_sum_of_squares_jet() {
        let j = p("x*x+y*y").eval_jet([1.0, 2.0], 2).unwrap();
        assert_eq!(j.value(), 5.0);
        assert_eq!(j.partial(1, 0).unwrap(), 2.0);
        assert_eq!(j.partial(0, 1).unwrap(), 4.0);
        assert_eq!(j.partial(2, 0).unwrap(), 2.0);
        assert_eq!(j.partial(1, 1).unwrap(), 0.0);
    }

    #[test]
    fn constant_expression_gives_constant_jet() {
        let j = p("1").eval_jet([0.3, -7.0], 4).unwrap();
        assert_eq!(j, Jet::constant(1.0, [0.3, -7.0], 4));
    }

    #[test]
    fn domain_error_carries_span() {
        let err = p("1 + ln(x - 3)").eval([1.0, 0.0]).unwrap_err();
        match err {
            Error::Domain { func, span, .. } => {
                assert_eq!(func, "ln");
                assert_eq!(span, Some(Span::new(4, 13)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "x*x + y*y",
            "-x^2",
            "(x - y) - (1 - x)",
            "x / (y * 2)",
            "pow(x, y + 1) - sqrt(exp(-x))",
            "-(-x)",
            "(-x)^3",
            "2.5e-7 * pi",
            "--x",
            "sin(x) ^ 2",
        ] {
            let e = p(s);
            let printed = e.to_string();
            assert_eq!(p(&printed), e, "{s} -> {printed}");
        }
    }

    #[test]
    fn symbolic_derivative_matches_jet() {
        let e = p("pow(x, y) * sin(x*y) / (1 + x^2) - sqrt(exp(y) + x) + ln(2 + cos(x))");
        let base = [0.7, 0.4];
        let j = e.eval_jet(base, 2).unwrap();
        let dx = e.derivative(Var::X).eval(base).unwrap();
        let dy = e.derivative(Var::Y).eval(base).unwrap();
        assert!((dx - j.partial(1, 0).unwrap()).abs() < 1e-13);
        assert!((dy - j.partial(0, 1).unwrap()).abs() < 1e-13);
    }
}
