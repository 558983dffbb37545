use std::fmt;

use thiserror::Error;

/// Byte range of an expression node in its source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

fn at(span: &Option<Span>) -> String {
    match span {
        Some(s) => format!(" (source bytes {s})"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by a jet with vanishing constant term at ({}, {}){}", point[0], point[1], at(span))]
    DegenerateDivision { point: [f64; 2], span: Option<Span> },

    #[error("{func} is undefined for argument {arg} at ({}, {}){}", point[0], point[1], at(span))]
    Domain {
        func: &'static str,
        arg: f64,
        point: [f64; 2],
        span: Option<Span>,
    },

    #[error("derivative of total order {requested} requested from a jet truncated at order {available}; raise the jet order")]
    OrderExceeded { requested: usize, available: usize },

    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("function `{func}` takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
        offset: usize,
    },

    #[error("Cotton-York form vanishes at ({}, {}): point is flat", point[0], point[1])]
    FlatPoint { point: [f64; 2] },

    #[error("sigma vanishes at ({}, {}): the P0 = 0 branch is undefined", point[0], point[1])]
    SigmaZero { point: [f64; 2] },

    #[error("rho vanishes at ({}, {})", point[0], point[1])]
    DivisionByRho { point: [f64; 2] },

    #[error("operation requires a nonzero polynomial")]
    ZeroPolynomial,

    #[error("P0(F) = {p0} vanishes at F = {f}")]
    P0Vanishes { f: f64, p0: f64 },

    #[error("root branch could not be continued near ({}, {}): {reason}", point[0], point[1])]
    GridTrackingFailed { point: [f64; 2], reason: String },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Attaches a source span to evaluation errors that do not carry one yet.
    pub(crate) fn with_span(self, s: Span) -> Self {
        match self {
            Error::DegenerateDivision { point, span: None } => Error::DegenerateDivision {
                point,
                span: Some(s),
            },
            Error::Domain {
                func,
                arg,
                point,
                span: None,
            } => Error::Domain {
                func,
                arg,
                point,
                span: Some(s),
            },
            other => other,
        }
    }

    /// True for errors caused by the user's expressions (parse or evaluation).
    pub fn is_expression_error(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDivision { .. }
                | Error::Domain { .. }
                | Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::Arity { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
