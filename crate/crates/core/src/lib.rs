//! Local obstructions to the scalar-flat Moebius Einstein-Weyl equation.
//!
//! Given a Moebius structure on a planar domain (a conformal factor and a
//! Rho tensor), this crate computes the conformal invariants built from the
//! Cotton-York form, assembles the polynomial constraints on the curvature
//! scalar `F` of a candidate Weyl connection, evaluates resultant
//! obstructions, and verifies candidate solutions.
//!
//! All derivatives are taken exactly on truncated Taylor jets ([`jet`]).

// tensor code reads best with explicit index loops; negated comparisons
// reject NaN on purpose
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analyzer;
pub mod config;
pub mod constraints;
pub mod error;
pub mod expr;
pub mod geom;
pub mod invariants;
pub mod jet;
pub mod polyalg;
pub mod tolerance;

pub use analyzer::{
    classify_point, scan_points, scan_region, verify_closed_form, AlphaExprs, GridSpec, Mode,
    RegionReport, Verdict, VerdictTag,
};
pub use config::RunConfig;
pub use constraints::{assemble, Constraints};
pub use error::{Error, Result, Span};
pub use expr::{parse, Expr};
pub use geom::{MoebiusStructure, Orientation, PointGeometry, Tensor};
pub use invariants::{compute_invariants, compute_m, cotton_york, MBranch, PointInvariants};
pub use jet::Jet;
pub use polyalg::{Poly, RootSet};
pub use tolerance::Tolerances;
