use super::{BinOp, Expr, ExprKind, Func, Var};
use crate::error::{Error, Result, Span};

/// Largest exponent accepted after `^`.
const MAX_EXPONENT: i32 = 4096;
/// Nesting limit; deeper input is rejected instead of exhausting the stack.
const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Tok, Span)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, span) = lx.next()?;
            let done = tok == Tok::Eof;
            out.push((tok, span));
            if done {
                return Ok(out);
            }
        }
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next(&mut self) -> Result<(Tok, Span)> {
        while let Some(b) = self.peek_byte() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(b) = self.peek_byte() else {
            return Ok((Tok::Eof, Span::new(start, start)));
        };
        let single = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, Span::new(start, self.pos)));
        }
        if b.is_ascii_digit() || b == b'.' {
            return self.number(start);
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            while let Some(c) = self.peek_byte() {
                if c.is_ascii_alphanumeric() || c == b'_' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let name = self.src[start..self.pos].to_string();
            return Ok((Tok::Ident(name), Span::new(start, self.pos)));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(Error::Syntax {
            offset: start,
            expected: vec!["number", "identifier", "operator", "`(`", "`)`"],
            found: format!("character {ch:?}"),
        })
    }

    fn digits(&mut self) -> usize {
        let s = self.pos;
        while matches!(self.peek_byte(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - s
    }

    fn number(&mut self, start: usize) -> Result<(Tok, Span)> {
        let int_digits = self.digits();
        let mut is_int = true;
        if self.peek_byte() == Some(b'.') {
            is_int = false;
            self.pos += 1;
            let frac = self.digits();
            if int_digits + frac == 0 {
                return Err(Error::Syntax {
                    offset: start,
                    expected: vec!["digit"],
                    found: "`.`".into(),
                });
            }
        }
        if matches!(self.peek_byte(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek_byte(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                // not an exponent after all; leave `e` for the identifier lexer
                self.pos = save;
            } else {
                is_int = false;
            }
        }
        let text = &self.src[start..self.pos];
        let span = Span::new(start, self.pos);
        if is_int {
            if let Ok(v) = text.parse::<i64>() {
                return Ok((Tok::Int(v), span));
            }
        }
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((Tok::Num(v), span)),
            _ => Err(Error::Syntax {
                offset: start,
                expected: vec!["finite number"],
                found: format!("`{text}`"),
            }),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    depth: usize,
}

/// Parses an expression in `x` and `y`.
pub fn parse(source: &str) -> Result<Expr> {
    let toks = Lexer::tokenize(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        _ => Err(p.unexpected(vec!["`+`", "`-`", "`*`", "`/`", "`^`", "end of input"])),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: Vec<&'static str>) -> Error {
        Error::Syntax {
            offset: self.span().start,
            expected,
            found: self.peek().describe(),
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(Error::Syntax {
                offset: self.span().start,
                expected: vec!["shallower nesting"],
                found: format!("nesting deeper than {MAX_DEPTH}"),
            });
        }
        Ok(())
    }

    fn node(kind: ExprKind, start: usize, end: usize) -> Expr {
        Expr {
            kind,
            span: Some(Span::new(start, end)),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            let (s, e) = (lhs.span.unwrap().start, rhs.span.unwrap().end);
            lhs = Self::node(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), s, e);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            let (s, e) = (lhs.span.unwrap().start, rhs.span.unwrap().end);
            lhs = Self::node(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), s, e);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.enter()?;
            let (_, sp) = self.bump();
            let inner = self.factor()?;
            let end = inner.span.unwrap().end;
            self.depth -= 1;
            return Ok(Self::node(ExprKind::Neg(Box::new(inner)), sp.start, end));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let (tok, sp) = self.bump();
        match tok {
            Tok::Int(n) if n <= MAX_EXPONENT as i64 => {
                let start = base.span.unwrap().start;
                Ok(Self::node(
                    ExprKind::Pow(Box::new(base), n as i32),
                    start,
                    sp.end,
                ))
            }
            other => Err(Error::Syntax {
                offset: sp.start,
                expected: vec!["non-negative integer exponent"],
                found: other.describe(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let (tok, sp) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Self::node(ExprKind::Num(v), sp.start, sp.end)),
            Tok::Int(v) => Ok(Self::node(ExprKind::Num(v as f64), sp.start, sp.end)),
            Tok::LParen => {
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected(vec!["`)`", "operator"]));
                }
                let (_, close) = self.bump();
                // parentheses are not part of the tree; widen the span only
                Ok(Expr {
                    kind: inner.kind,
                    span: Some(Span::new(sp.start, close.end)),
                })
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Self::node(ExprKind::Var(Var::X), sp.start, sp.end)),
                "y" => Ok(Self::node(ExprKind::Var(Var::Y), sp.start, sp.end)),
                "pi" => Ok(Self::node(ExprKind::Pi, sp.start, sp.end)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(Error::UnknownIdentifier {
                            name,
                            offset: sp.start,
                        });
                    };
                    self.call(func, sp)
                }
            },
            Tok::Eof => {
                self.pos = self.pos.min(self.toks.len() - 1);
                Err(Error::Syntax {
                    offset: sp.start,
                    expected: vec!["number", "`x`", "`y`", "`pi`", "function", "`(`", "`-`"],
                    found: Tok::Eof.describe(),
                })
            }
            other => Err(Error::Syntax {
                offset: sp.start,
                expected: vec!["number", "`x`", "`y`", "`pi`", "function", "`(`", "`-`"],
                found: other.describe(),
            }),
        }
    }

    fn call(&mut self, func: Func, name_span: Span) -> Result<Expr> {
        if *self.peek() != Tok::LParen {
            return Err(self.unexpected(vec!["`(`"]));
        }
        self.bump();
        let mut args = vec![self.expr()?];
        // grammar allows at most two arguments
        if *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        if *self.peek() != Tok::RParen {
            let mut expected = vec!["`)`", "operator"];
            if args.len() == 1 {
                expected.insert(1, "`,`");
            }
            return Err(self.unexpected(expected));
        }
        let (_, close) = self.bump();
        if args.len() != func.arity() {
            return Err(Error::Arity {
                func: func.name(),
                expected: func.arity(),
                found: args.len(),
                offset: name_span.start,
            });
        }
        Ok(Self::node(
            ExprKind::Call(func, args),
            name_span.start,
            close.end,
        ))
    }
}
