//! Pointwise decision procedure, candidate reconstruction and verification,
//! and region scans.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{assemble, Constraints};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geom::{MoebiusStructure, PointGeometry};
use crate::invariants::{
    compute_m_from, cotton_york, sigma_is_zero, InvariantJets, PointInvariants,
};
use crate::polyalg::{common_real_roots, complex_roots, separation, sylvester_resultant, Poly};
use crate::tolerance::Tolerances;

/// Powers of two tried around the natural scale of `F` when measuring
/// resultant separations.
const SCALE_EXPONENTS: std::ops::RangeInclusive<i32> = -6..=2;
/// Step of the root tracking grid.
const TRACK_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictTag {
    Flat,
    MZeroAdmits,
    Obstructed,
    AdmitsRealCandidate,
    VanishingObstructionsNoRealSolution,
    Inconclusive,
}

impl VerdictTag {
    pub const ALL: [VerdictTag; 6] = [
        VerdictTag::Flat,
        VerdictTag::MZeroAdmits,
        VerdictTag::Obstructed,
        VerdictTag::AdmitsRealCandidate,
        VerdictTag::VanishingObstructionsNoRealSolution,
        VerdictTag::Inconclusive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictTag::Flat => "Flat",
            VerdictTag::MZeroAdmits => "MZeroAdmits",
            VerdictTag::Obstructed => "Obstructed",
            VerdictTag::AdmitsRealCandidate => "AdmitsRealCandidate",
            VerdictTag::VanishingObstructionsNoRealSolution => {
                "VanishingObstructionsNoRealSolution"
            }
            VerdictTag::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResultantClass {
    Vanishing,
    Nonzero,
    Ambiguous,
}

/// One pairwise resultant obstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Obstruction {
    /// Sylvester resultant of the raw polynomials.
    pub resultant: f64,
    pub log10_abs: f64,
    /// Resultant of the max-coefficient-normalized polynomials.
    pub normalized: f64,
    /// Conditioning of the Sylvester matrix after rescaling `t` to the
    /// natural scale of `F`; this decides the class.
    pub separation: f64,
    pub class: ResultantClass,
}

impl Obstruction {
    fn new(p: &Poly, q: &Poly, f_scale: f64, tol: &Tolerances) -> Self {
        let (resultant, log10_abs, normalized) = match sylvester_resultant(p, q) {
            Ok(r) => (r.value(), r.log10_abs(), r.normalized),
            Err(_) => (0.0, f64::NEG_INFINITY, 0.0),
        };
        let sep = scaled_separation(p, q, f_scale);
        let class = if sep > tol.res_high {
            ResultantClass::Nonzero
        } else if sep < tol.res_low {
            ResultantClass::Vanishing
        } else {
            ResultantClass::Ambiguous
        };
        Obstruction {
            resultant,
            log10_abs,
            normalized,
            separation: sep,
            class,
        }
    }
}

/// Largest separation over argument scalings `t = 2^k s tau`.
pub fn scaled_separation(p: &Poly, q: &Poly, s: f64) -> f64 {
    SCALE_EXPONENTS
        .map(|k| {
            let c = s * 2f64.powi(k);
            separation(&p.rescale_argument(c), &q.rescale_argument(c)).unwrap_or(0.0)
        })
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Obstructions {
    pub res12: Obstruction,
    pub res13: Obstruction,
    pub res23: Obstruction,
}

impl Obstructions {
    pub fn compute(c: &Constraints, rho: f64, tol: &Tolerances) -> Self {
        let s = f_scale(rho);
        Obstructions {
            res12: Obstruction::new(&c.p1, &c.p2, s, tol),
            res13: Obstruction::new(&c.p1, &c.p3, s, tol),
            res23: Obstruction::new(&c.p2, &c.p3, s, tol),
        }
    }

    pub fn all(&self) -> [&Obstruction; 3] {
        [&self.res12, &self.res13, &self.res23]
    }
}

/// `rho^(1/3)`, which has the conformal weight of `F`.
pub fn f_scale(rho: f64) -> f64 {
    rho.cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CandidateSource {
    Alpha1Formula,
    MZeroFormula,
    UserSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionCandidate {
    #[serde(rename = "F")]
    pub f: f64,
    pub alpha: [f64; 2],
    pub source: CandidateSource,
}

/// Relative residuals of a candidate; each is divided by `max(1, scale)`
/// where `scale` sums the magnitudes of the terms involved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `alpha_a U^a + F^2 + phi`.
    pub algebraic_first: Option<f64>,
    /// `alpha_a W^a - ell - 5/2 rho F - (3 mu + 3 alpha_c Y^c) F^2`.
    pub algebraic_second: Option<f64>,
    /// `|nabla_a alpha_b + alpha_a alpha_b + P_ab - ½ alpha^2 g_ab - ½ eps_ab F|_g`.
    pub differential: f64,
    /// `nabla_a alpha^a + K`.
    pub trace: f64,
    /// Cross-check `nabla_a F + 2 alpha_a F + Y_a`.
    pub prolonged: Option<f64>,
    /// Largest of the algebraic, differential and trace residuals.
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifiedCandidate {
    #[serde(flatten)]
    pub candidate: SolutionCandidate,
    pub residuals: Option<Residuals>,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub point: [f64; 2],
    pub tag: VerdictTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstructions: Option<Obstructions>,
    pub candidates: Vec<VerifiedCandidate>,
    /// Complex common roots `[re, im]`, reported in complex mode.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub complex_roots: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    fn new(point: [f64; 2], tag: VerdictTag) -> Self {
        Verdict {
            point,
            tag,
            obstructions: None,
            candidates: Vec::new(),
            complex_roots: Vec::new(),
            m_norm: None,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// F values of verified candidates.
    pub fn f_values(&self) -> Vec<f64> {
        self.candidates
            .iter()
            .filter(|c| c.verified)
            .map(|c| c.candidate.f)
            .collect()
    }

    /// Largest residual among verified candidates.
    pub fn best_residual(&self) -> Option<f64> {
        self.candidates
            .iter()
            .filter_map(|c| c.residuals.map(|r| r.max))
            .reduce(f64::max)
    }
}

/// `alpha_a` from the first-order constraint at a given `F`:
/// `(sigma - 3 rho F^2) alpha_a = L_a + 5/2 rho F Y_a + F^2/2 nabla_a rho + 3 F^4 U_a`.
pub fn alpha_from_f(inv: &PointInvariants, f: f64, tol: &Tolerances) -> Result<SolutionCandidate> {
    let p0 = inv.sigma - 3.0 * inv.rho * f * f;
    if p0.abs() <= tol.root * (inv.sigma.abs() + 3.0 * inv.rho * f * f) || p0 == 0.0 {
        return Err(Error::P0Vanishes { f, p0 });
    }
    let alpha = std::array::from_fn(|a| {
        (inv.l[a]
            + 2.5 * inv.rho * f * inv.y[a]
            + 0.5 * f * f * inv.grad_rho[a]
            + 3.0 * f.powi(4) * inv.u[a])
            / p0
    });
    Ok(SolutionCandidate {
        f,
        alpha,
        source: CandidateSource::Alpha1Formula,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Branch {
    #[serde(rename = "F")]
    pub f: f64,
    /// Whether `F^2 = sigma / (3 rho)` holds, as `P0(F) = 0` requires.
    pub consistent: bool,
}

/// The value of `F` forced on the `P0(F) = 0` branch:
/// `F = -2/5 (rho ell + mu sigma + tau sigma / (3 rho) + tau phi) / rho^2`.
pub fn f_from_p0_branch(inv: &PointInvariants, tol: &Tolerances) -> P0Branch {
    let (rho, sigma) = (inv.rho, inv.sigma);
    let f = -0.4
        * (rho * inv.ell + inv.mu * sigma + inv.tau * sigma / (3.0 * rho) + inv.tau * inv.phi)
        / (rho * rho);
    let target = sigma / (3.0 * rho);
    let consistent =
        sigma > 0.0 && (f * f - target).abs() <= tol.tracked_residual * (f * f + target);
    P0Branch { f, consistent }
}

/// Pointwise data of a (possibly complex) solution candidate.
struct LocalSolution {
    f: Complex64,
    alpha: [Complex64; 2],
    /// `nabla_a alpha_b` as `[a][b]`.
    grad_alpha: [[Complex64; 2]; 2],
    grad_f: Option<[Complex64; 2]>,
}

fn residuals(
    geo: &PointGeometry,
    inv: Option<&PointInvariants>,
    sol: &LocalSolution,
) -> Result<Residuals> {
    let e2u = geo.e2u.value();
    let sign = geo.sign;
    let k = geo.gauss_curvature()?.value();
    let p = |a: usize, b: usize| geo.rho.get(&[a, b]).value();
    let eps = |a: usize, b: usize| match (a, b) {
        (0, 1) => sign * e2u,
        (1, 0) => -sign * e2u,
        _ => 0.0,
    };
    let (f, al, ga) = (sol.f, sol.alpha, sol.grad_alpha);
    let al_sq = (al[0] * al[0] + al[1] * al[1]) / e2u;
    let mut e_sq = 0.0;
    let (mut ga_sq, mut aa_sq, mut p_sq) = (0.0, 0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            let g = if a == b { e2u } else { 0.0 };
            let e = ga[a][b] + al[a] * al[b] + p(a, b) - al_sq * (0.5 * g) - f * (0.5 * eps(a, b));
            e_sq += e.norm_sqr();
            ga_sq += ga[a][b].norm_sqr();
            aa_sq += (al[a] * al[b]).norm_sqr();
            p_sq += p(a, b).powi(2);
        }
    }
    let norm_g = |v: f64| v.sqrt() / e2u;
    let diff_scale =
        norm_g(ga_sq) + norm_g(aa_sq) + norm_g(p_sq) + al_sq.norm() * 2f64.sqrt() + f.norm();
    let differential = norm_g(e_sq) / diff_scale.max(1.0);

    let div = (ga[0][0] + ga[1][1]) / e2u;
    let trace = (div + k).norm() / (div.norm() + k.abs()).max(1.0);

    let (mut first, mut second, mut prolonged) = (None, None, None);
    if let Some(inv) = inv {
        let dot = |v: [Complex64; 2], w: [f64; 2]| (v[0] * w[0] + v[1] * w[1]) / e2u;
        let a_u = dot(al, inv.u);
        let f2 = f * f;
        first =
            Some((a_u + f2 + inv.phi).norm() / (a_u.norm() + f2.norm() + inv.phi.abs()).max(1.0));
        let a_w = dot(al, inv.w);
        let a_y = dot(al, inv.y);
        let terms = [
            a_w,
            Complex64::new(-inv.ell, 0.0),
            -f * (2.5 * inv.rho),
            -(a_y * 3.0 + 3.0 * inv.mu) * f2,
        ];
        let sum: Complex64 = terms.iter().sum();
        let scale: f64 = terms.iter().map(|t| t.norm()).sum();
        second = Some(sum.norm() / scale.max(1.0));
        if let Some(gf) = sol.grad_f {
            let mut r_sq = 0.0;
            let mut s_sq = 0.0;
            for a in 0..2 {
                let r = gf[a] + al[a] * f * 2.0 + inv.y[a];
                r_sq += r.norm_sqr();
                s_sq += gf[a].norm_sqr() + (al[a] * f * 2.0).norm_sqr() + inv.y[a].powi(2);
            }
            prolonged = Some(r_sq.sqrt() / s_sq.sqrt().max(1.0));
        }
    }
    let max = [first, second]
        .into_iter()
        .flatten()
        .fold(differential.max(trace), f64::max);
    Ok(Residuals {
        algebraic_first: first,
        algebraic_second: second,
        differential,
        trace,
        prolonged,
        max,
    })
}

/// A candidate `alpha_a` given in closed form: real parts and, in complex
/// mode, imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaExprs {
    pub re: [Expr; 2],
    pub im: Option<[Expr; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub point: [f64; 2],
    /// `[re, im]`.
    #[serde(rename = "F")]
    pub f: [f64; 2],
    pub alpha: [[f64; 2]; 2],
    pub residuals: Residuals,
    pub passed: bool,
}

/// Verifies a closed-form candidate at `p`; derivatives come from jets.
pub fn verify_closed_form(
    s: &MoebiusStructure,
    alpha: &AlphaExprs,
    p: [f64; 2],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let geo = s.geometry_at(p, tol.jet_order)?;
    // value, gradient and d(eps^ab nabla_a alpha_b) of one part
    type Part = ([f64; 2], [[f64; 2]; 2], [f64; 2]);
    let part = |e: &[Expr; 2]| -> Result<Part> {
        let jets = [
            e[0].eval_jet(p, tol.jet_order)?,
            e[1].eval_jet(p, tol.jet_order)?,
        ];
        let grad = geo.covector_gradient(&jets)?;
        let mut f = crate::jet::Jet::zero(p, tol.jet_order);
        for a in 0..2 {
            for b in 0..2 {
                f += &geo.eps_upper(a, b) * &grad[a][b];
            }
        }
        let df = f.gradient()?;
        Ok((
            [jets[0].value(), jets[1].value()],
            std::array::from_fn(|a| std::array::from_fn(|b| grad[a][b].value())),
            [df[0].value(), df[1].value()],
        ))
    };
    let (re_v, re_g, re_df) = part(&alpha.re)?;
    let (im_v, im_g, im_df) = match &alpha.im {
        Some(im) => part(im)?,
        None => ([0.0; 2], [[0.0; 2]; 2], [0.0; 2]),
    };
    let c = Complex64::new;
    let alpha_c = [c(re_v[0], im_v[0]), c(re_v[1], im_v[1])];
    let grad_alpha = std::array::from_fn(|a| std::array::from_fn(|b| c(re_g[a][b], im_g[a][b])));
    let mut f = c(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            f += geo.eps_upper(a, b).value() * c(re_g[a][b], im_g[a][b]);
        }
    }
    let grad_f = [c(re_df[0], im_df[0]), c(re_df[1], im_df[1])];
    let inv = match InvariantJets::new(s, p, tol) {
        Ok(j) => Some(j.point_values()),
        Err(Error::FlatPoint { .. }) => None,
        Err(e) => return Err(e),
    };
    let sol = LocalSolution {
        f,
        alpha: alpha_c,
        grad_alpha,
        grad_f: Some(grad_f),
    };
    let residuals = residuals(&geo, inv.as_ref(), &sol)?;
    Ok(VerificationReport {
        point: p,
        f: [f.re, f.im],
        alpha: [
            [alpha_c[0].re, alpha_c[0].im],
            [alpha_c[1].re, alpha_c[1].im],
        ],
        passed: residuals.max < tol.residual,
        residuals,
    })
}

/// Common real roots of the constraints at a point, excluding roots of P0.
fn constraint_roots(c: &Constraints, rho: f64, tol: &Tolerances) -> Result<Vec<f64>> {
    let s = f_scale(rho);
    let [p0, p1, p2, p3] = [&c.p0, &c.p1, &c.p2, &c.p3].map(|p| p.rescale_argument(s));
    let roots = common_real_roots(&[&p1, &p2, &p3], &p0, tol.root)?;
    Ok(roots.values().into_iter().map(|t| t * s).collect())
}

fn constraint_complex_roots(c: &Constraints, rho: f64, tol: &Tolerances) -> Vec<[f64; 2]> {
    let s = f_scale(rho);
    let [p0, p1, p2, p3] = [&c.p0, &c.p1, &c.p2, &c.p3].map(|p| p.rescale_argument(s));
    let base = [&p1, &p2, &p3]
        .into_iter()
        .min_by_key(|p| p.trim_relative(1e-13).degree().unwrap_or(0))
        .expect("three polynomials");
    let residual = |p: &Poly, z: Complex64| {
        let scale = p
            .coeffs()
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * z.norm() + c.abs());
        if scale == 0.0 {
            0.0
        } else {
            p.eval_complex(z).norm() / scale
        }
    };
    let mut out: Vec<[f64; 2]> = Vec::new();
    for z in complex_roots(&base.trim_relative(1e-13)) {
        if z.im.abs() <= 1e-3 * z.norm().max(1.0) {
            continue;
        }
        let shared = [&p1, &p2, &p3].iter().all(|p| residual(p, z) < tol.root);
        if shared && residual(&p0, z) >= tol.root {
            let v = [z.re * s, z.im * s];
            if !out
                .iter()
                .any(|w| (w[0] - v[0]).hypot(w[1] - v[1]) <= 1e-6 * v[0].hypot(v[1]).max(1.0))
            {
                out.push(v);
            }
        }
    }
    out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    out
}

/// Tracks the root branch through `f` over a 5x5 grid around `p` and checks
/// the reconstructed `alpha` with fourth-order central differences.
pub fn verify_tracked(
    s: &MoebiusStructure,
    p: [f64; 2],
    f: f64,
    tol: &Tolerances,
) -> Result<(SolutionCandidate, Residuals)> {
    let h = TRACK_STEP;
    let fail = |reason: String| Error::GridTrackingFailed { point: p, reason };
    let center = InvariantJets::new(s, p, tol)?;
    let center_inv = center.point_values();
    let cand = alpha_from_f(&center_inv, f, tol)?;

    let idx = |i: i32, j: i32| ((i + 2) * 5 + (j + 2)) as usize;
    let mut fs = [f64::NAN; 25];
    let mut alphas = [[f64::NAN; 2]; 25];
    fs[idx(0, 0)] = f;
    alphas[idx(0, 0)] = cand.alpha;
    // inner ring first so that every outer node has a tracked neighbour
    let mut order: Vec<(i32, i32)> = Vec::new();
    for ring in 1..=2 {
        for i in -2..=2i32 {
            for j in -2..=2i32 {
                if i.abs().max(j.abs()) == ring {
                    order.push((i, j));
                }
            }
        }
    }
    for (i, j) in order {
        let q = [p[0] + i as f64 * h, p[1] + j as f64 * h];
        let reference = fs[idx(i - i.signum(), j - j.signum())];
        let inv = InvariantJets::new(s, q, tol)
            .map_err(|e| fail(format!("invariants at ({}, {}): {e}", q[0], q[1])))?
            .point_values();
        let c = assemble(&inv)?;
        let roots = constraint_roots(&c, inv.rho, tol)?;
        let mut by_dist: Vec<f64> = roots.clone();
        by_dist.sort_by(|a, b| (a - reference).abs().total_cmp(&(b - reference).abs()));
        let Some(&nearest) = by_dist.first() else {
            return Err(fail(format!("root disappeared at ({}, {})", q[0], q[1])));
        };
        let jump = (nearest - reference).abs();
        let reach = 0.05 * reference.abs().max(f_scale(inv.rho));
        if jump > reach {
            return Err(fail(format!(
                "nearest root {nearest} is {jump:.3e} away from {reference} at ({}, {})",
                q[0], q[1]
            )));
        }
        if let Some(&second) = by_dist.get(1) {
            if (second - reference).abs() <= 10.0 * jump.max(1e-12 * reach) {
                return Err(fail(format!("roots collide near {reference}")));
            }
        }
        fs[idx(i, j)] = nearest;
        alphas[idx(i, j)] = alpha_from_f(&inv, nearest, tol)
            .map_err(|e| fail(e.to_string()))?
            .alpha;
    }

    let d = |v: &dyn Fn(i32) -> f64| (v(-2) - 8.0 * v(-1) + 8.0 * v(1) - v(2)) / (12.0 * h);
    let dalpha: [[f64; 2]; 2] = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            if a == 0 {
                d(&|k| alphas[idx(k, 0)][b])
            } else {
                d(&|k| alphas[idx(0, k)][b])
            }
        })
    });
    let df = [d(&|k| fs[idx(k, 0)]), d(&|k| fs[idx(0, k)])];
    let geo = &center.geo;
    let gamma = |c: usize, a: usize, b: usize| geo.gamma[c][a][b].value();
    let c = |v: f64| Complex64::new(v, 0.0);
    let grad_alpha = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            c(dalpha[a][b] - (0..2).map(|e| gamma(e, a, b) * cand.alpha[e]).sum::<f64>())
        })
    });
    let sol = LocalSolution {
        f: c(f),
        alpha: cand.alpha.map(c),
        grad_alpha,
        grad_f: Some(df.map(c)),
    };
    let res = residuals(geo, Some(&center_inv), &sol)?;
    Ok((cand, res))
}

fn propagate(e: Error) -> Result<()> {
    if e.is_expression_error() || matches!(e, Error::OrderExceeded { .. }) {
        Err(e)
    } else {
        Ok(())
    }
}

/// Runs the decision procedure at one point.
///
/// Numerical trouble yields an `Inconclusive` verdict; only errors caused by
/// the input expressions (or an insufficient jet order) are returned.
pub fn classify_point(
    s: &MoebiusStructure,
    p: [f64; 2],
    tol: &Tolerances,
    mode: Mode,
) -> Result<Verdict> {
    match classify_inner(s, p, tol, mode) {
        Ok(v) => Ok(v),
        Err(e) => {
            propagate(e.clone())?;
            Ok(Verdict::new(p, VerdictTag::Inconclusive).with_note(e.to_string()))
        }
    }
}

fn classify_inner(
    s: &MoebiusStructure,
    p: [f64; 2],
    tol: &Tolerances,
    mode: Mode,
) -> Result<Verdict> {
    let cy = cotton_york(s, p, tol)?;
    if cy.flat {
        return Ok(Verdict::new(p, VerdictTag::Flat).with_note(
            "Cotton-York form vanishes; the equation reduces to the conformally Einstein equation",
        ));
    }
    let jets = InvariantJets::new(s, p, tol)?;
    let inv = jets.point_values();
    let mut m_norm = None;
    if !sigma_is_zero(inv.sigma, inv.rho, tol) {
        match compute_m_from(&jets, tol) {
            Ok(m) => {
                m_norm = Some(m.relative_norm);
                if m.relative_norm < tol.m_zero {
                    let branch = f_from_p0_branch(&inv, tol);
                    let mut v = Verdict::new(p, VerdictTag::MZeroAdmits);
                    v.m_norm = m_norm;
                    v.candidates.push(VerifiedCandidate {
                        candidate: SolutionCandidate {
                            f: branch.f,
                            alpha: m.alpha,
                            source: CandidateSource::MZeroFormula,
                        },
                        residuals: None,
                        verified: branch.consistent,
                        failure: (!branch.consistent)
                            .then(|| "F^2 differs from sigma/(3 rho)".to_string()),
                    });
                    return Ok(v);
                }
            }
            Err(e) => propagate(e)?,
        }
    }

    let c = assemble(&inv)?;
    let obs = Obstructions::compute(&c, inv.rho, tol);
    let mut v = Verdict::new(p, VerdictTag::Inconclusive);
    v.obstructions = Some(obs);
    v.m_norm = m_norm;
    let classes = obs.all().map(|o| o.class);
    if classes.contains(&ResultantClass::Nonzero) {
        v.tag = VerdictTag::Obstructed;
        return Ok(v);
    }
    if classes.contains(&ResultantClass::Ambiguous) {
        return Ok(v.with_note(
            "a resultant separation lies between the vanishing and nonzero thresholds",
        ));
    }

    let roots = constraint_roots(&c, inv.rho, tol)?;
    let mut tracking_failed = false;
    for f in roots {
        let entry = match verify_tracked(s, p, f, tol) {
            Ok((candidate, r)) => VerifiedCandidate {
                candidate,
                residuals: Some(r),
                verified: r.max < tol.tracked_residual,
                failure: None,
            },
            Err(e) => {
                propagate(e.clone())?;
                tracking_failed = true;
                let alpha = alpha_from_f(&inv, f, tol)
                    .map(|c| c.alpha)
                    .unwrap_or([f64::NAN; 2]);
                VerifiedCandidate {
                    candidate: SolutionCandidate {
                        f,
                        alpha,
                        source: CandidateSource::Alpha1Formula,
                    },
                    residuals: None,
                    verified: false,
                    failure: Some(e.to_string()),
                }
            }
        };
        v.candidates.push(entry);
    }
    if mode == Mode::Complex {
        v.complex_roots = constraint_complex_roots(&c, inv.rho, tol);
    }
    v.tag = if v.candidates.iter().any(|c| c.verified) {
        VerdictTag::AdmitsRealCandidate
    } else if tracking_failed {
        v.note = Some("a common root could not be tracked over a neighbourhood".into());
        VerdictTag::Inconclusive
    } else {
        VerdictTag::VanishingObstructionsNoRealSolution
    };
    Ok(v)
}

/// Rectangular grid of `nx * ny` nodes, `x` varying slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(half: f64, n: usize) -> Self {
        GridSpec {
            xmin: -half,
            xmax: half,
            ymin: -half,
            ymax: half,
            nx: n,
            ny: n,
        }
    }

    pub fn nodes(&self) -> Vec<[f64; 2]> {
        let axis = |lo: f64, hi: f64, n: usize, k: usize| {
            if n <= 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for i in 0..self.nx {
            for j in 0..self.ny {
                out.push([
                    axis(self.xmin, self.xmax, self.nx, i),
                    axis(self.ymin, self.ymax, self.ny, j),
                ]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub verdicts: Vec<Verdict>,
    pub histogram: BTreeMap<VerdictTag, usize>,
    pub summary: String,
    pub conclusion: String,
}

pub fn scan_points(
    s: &MoebiusStructure,
    points: &[[f64; 2]],
    tol: &Tolerances,
    mode: Mode,
) -> Result<RegionReport> {
    let verdicts = points
        .par_iter()
        .map(|&p| classify_point(s, p, tol, mode))
        .collect::<Result<Vec<_>>>()?;
    let mut histogram = BTreeMap::new();
    for v in &verdicts {
        *histogram.entry(v.tag).or_insert(0) += 1;
    }
    let summary = summarize(&verdicts);
    let conclusion = conclude(&histogram);
    Ok(RegionReport {
        verdicts,
        histogram,
        summary,
        conclusion,
    })
}

pub fn scan_region(
    s: &MoebiusStructure,
    grid: &GridSpec,
    tol: &Tolerances,
    mode: Mode,
) -> Result<RegionReport> {
    scan_points(s, &grid.nodes(), tol, mode)
}

fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (v * factor).round() / factor
}

fn format_f_values(values: &[f64]) -> String {
    let mut distinct: Vec<f64> = Vec::new();
    for &v in values {
        let r = round_sig(v, 6);
        if !distinct.contains(&r) {
            distinct.push(r);
        }
    }
    distinct.sort_by(f64::total_cmp);
    if distinct.len() > 4 {
        return "F varies".into();
    }
    let parts: Vec<String> = distinct
        .iter()
        .filter(|v| !(**v < 0.0 && distinct.contains(&-**v)))
        .map(|v| {
            if *v > 0.0 && distinct.contains(&-v) {
                format!("±{v}")
            } else {
                format!("{v}")
            }
        })
        .collect();
    format!("F = {}", parts.join(", "))
}

/// One-line verdict for a set of nodes.
pub fn summarize(verdicts: &[Verdict]) -> String {
    let count = |t: VerdictTag| verdicts.iter().filter(|v| v.tag == t).count();
    let admits = count(VerdictTag::AdmitsRealCandidate);
    let obstructed = count(VerdictTag::Obstructed);
    let mzero = count(VerdictTag::MZeroAdmits);
    let no_real = count(VerdictTag::VanishingObstructionsNoRealSolution);
    if verdicts.is_empty() {
        return "EMPTY".into();
    }
    if count(VerdictTag::Flat) == verdicts.len() {
        return "FLAT".into();
    }
    if obstructed > 0 && admits + mzero > 0 {
        return "MIXED".into();
    }
    if obstructed > 0 {
        return "OBSTRUCTED".into();
    }
    if admits > 0 {
        let fs: Vec<f64> = verdicts.iter().flat_map(|v| v.f_values()).collect();
        return format!("ADMITS ({})", format_f_values(&fs));
    }
    if mzero > 0 {
        return "ADMITS (M = 0)".into();
    }
    if no_real > 0 {
        return "NO REAL SOLUTION".into();
    }
    "INCONCLUSIVE".into()
}

fn conclude(h: &BTreeMap<VerdictTag, usize>) -> String {
    let total: usize = h.values().sum();
    let flat = h.get(&VerdictTag::Flat).copied().unwrap_or(0);
    let non_flat = total - flat;
    if non_flat == 0 {
        return format!("Flat on all {total} nodes");
    }
    let (tag, n) = h
        .iter()
        .filter(|(t, _)| **t != VerdictTag::Flat)
        .max_by_key(|(_, n)| **n)
        .map(|(t, n)| (*t, *n))
        .unwrap_or((VerdictTag::Inconclusive, 0));
    format!(
        "{tag} on {:.1}% of non-flat nodes ({n} of {non_flat}; {flat} flat)",
        100.0 * n as f64 / non_flat as f64
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::compute_invariants;
    use crate::parse;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn radial() -> MoebiusStructure {
        MoebiusStructure::parse("0", "(x*x - y*y)/2", "x*y", "(y*y - x*x)/2").unwrap()
    }

    #[test]
    fn alpha_from_f_radial() {
        let s = radial();
        let inv = compute_invariants(&s, [1.0, 0.0], &tol()).unwrap();
        let c = alpha_from_f(&inv, -2.0, &tol()).unwrap();
        assert!(
            c.alpha[0].abs() < 1e-12 && (c.alpha[1] + 1.0).abs() < 1e-12,
            "{c:?}"
        );
        let inv = compute_invariants(&s, [0.0, 1.0], &tol()).unwrap();
        let c = alpha_from_f(&inv, 2.0, &tol()).unwrap();
        assert!(
            (c.alpha[0] + 1.0).abs() < 1e-12 && c.alpha[1].abs() < 1e-12,
            "{c:?}"
        );
    }

    #[test]
    fn alpha_from_f_rejects_p0_root() {
        let s = MoebiusStructure::parse("0", "(y*y - x*x)/2", "-x*y", "(x*x - y*y)/2").unwrap();
        let inv = compute_invariants(&s, [1.0, 0.0], &tol()).unwrap();
        let f = (inv.sigma / (3.0 * inv.rho)).sqrt();
        assert!(matches!(
            alpha_from_f(&inv, f, &tol()),
            Err(Error::P0Vanishes { .. })
        ));
    }

    #[test]
    fn p0_branch_on_antiradial_is_inconsistent() {
        let s = MoebiusStructure::parse("0", "(y*y - x*x)/2", "-x*y", "(x*x - y*y)/2").unwrap();
        let inv = compute_invariants(&s, [1.0, 0.0], &tol()).unwrap();
        let b = f_from_p0_branch(&inv, &tol());
        assert!(b.f.abs() < 1e-12);
        assert!(!b.consistent);
    }

    #[test]
    fn p0_branch_consistency_with_constructed_ell() {
        let s = radial();
        let mut inv = compute_invariants(&s, [1.0, 0.0], &tol()).unwrap();
        inv.sigma = 96.0;
        let target = (inv.sigma / (3.0 * inv.rho)).sqrt();
        // solve the branch formula for ell
        let r = inv.rho;
        inv.ell = (-2.5 * target * r * r
            - inv.mu * inv.sigma
            - inv.tau * inv.sigma / (3.0 * r)
            - inv.tau * inv.phi)
            / r;
        let b = f_from_p0_branch(&inv, &tol());
        assert!((b.f - target).abs() < 1e-12);
        assert!(b.consistent);
        inv.sigma = -96.0;
        assert!(!f_from_p0_branch(&inv, &tol()).consistent);
    }

    #[test]
    fn closed_form_radial_solution() {
        let s = radial();
        let alpha = AlphaExprs {
            re: [parse("y").unwrap(), parse("-x").unwrap()],
            im: None,
        };
        for p in [[1.0, 0.0], [0.3, -1.7], [-1.2, 0.4]] {
            let r = verify_closed_form(&s, &alpha, p, &tol()).unwrap();
            assert!(r.passed, "{r:?}");
            assert!((r.f[0] + 2.0).abs() < 1e-14);
            assert!(r.residuals.prolonged.unwrap() < 1e-12);
        }
        let wrong = AlphaExprs {
            re: [parse("x").unwrap(), parse("y").unwrap()],
            im: None,
        };
        assert!(
            !verify_closed_form(&s, &wrong, [0.5, 0.5], &tol())
                .unwrap()
                .passed
        );
    }

    #[test]
    fn flat_structure_residuals() {
        let s = MoebiusStructure::parse("0", "0", "0", "0").unwrap();
        let zero = AlphaExprs {
            re: [parse("0").unwrap(), parse("0").unwrap()],
            im: None,
        };
        let r = verify_closed_form(&s, &zero, [0.2, 0.3], &tol()).unwrap();
        assert_eq!(r.residuals.max, 0.0);
        assert!(r.residuals.algebraic_first.is_none());
        let one = AlphaExprs {
            re: [parse("1").unwrap(), parse("0").unwrap()],
            im: None,
        };
        let r = verify_closed_form(&s, &one, [0.2, 0.3], &tol()).unwrap();
        // |alpha alpha - ½ delta| = |diag(½, -½)| = 1/sqrt 2, over |alpha alpha| + sqrt 2 |alpha|^2
        let expect = 0.5f64.sqrt() / (1.0 + 2f64.sqrt());
        assert!((r.residuals.differential - expect).abs() < 1e-14, "{r:?}");
    }

    #[test]
    fn classify_examples_at_unit_point() {
        let t = tol();
        let s1 = MoebiusStructure::parse("0", "x*y", "(y*y - x*x)/2", "-x*y").unwrap();
        assert_eq!(
            classify_point(&s1, [1.0, 0.0], &t, Mode::Real).unwrap().tag,
            VerdictTag::Obstructed
        );
        let v = classify_point(&radial(), [1.0, 0.0], &t, Mode::Real).unwrap();
        assert_eq!(v.tag, VerdictTag::AdmitsRealCandidate, "{v:?}");
        let mut fs = v.f_values();
        fs.sort_by(f64::total_cmp);
        assert_eq!(fs.len(), 2);
        assert!((fs[0] + 2.0).abs() < 1e-9 && (fs[1] - 2.0).abs() < 1e-9);
        let s3 = MoebiusStructure::parse("0", "(y*y - x*x)/2", "-x*y", "(x*x - y*y)/2").unwrap();
        let v = classify_point(&s3, [1.0, 0.0], &t, Mode::Complex).unwrap();
        assert_eq!(
            v.tag,
            VerdictTag::VanishingObstructionsNoRealSolution,
            "{v:?}"
        );
        assert_eq!(v.complex_roots.len(), 2, "{v:?}");
        assert!((v.complex_roots[0][1].abs() - 2.0).abs() < 1e-9);
        let flat = MoebiusStructure::parse("x*y", "0", "0", "0").unwrap();
        assert_eq!(
            classify_point(&flat, [0.3, 0.1], &t, Mode::Real)
                .unwrap()
                .tag,
            VerdictTag::Flat
        );
    }

    #[test]
    fn summary_strings() {
        let mk = |tag, fs: &[f64]| {
            let mut v = Verdict::new([0.0, 0.0], tag);
            for &f in fs {
                v.candidates.push(VerifiedCandidate {
                    candidate: SolutionCandidate {
                        f,
                        alpha: [0.0, 0.0],
                        source: CandidateSource::Alpha1Formula,
                    },
                    residuals: None,
                    verified: true,
                    failure: None,
                });
            }
            v
        };
        let admits = vec![
            mk(VerdictTag::AdmitsRealCandidate, &[-2.0000000001, 2.0]),
            mk(VerdictTag::Flat, &[]),
        ];
        assert_eq!(summarize(&admits), "ADMITS (F = ±2)");
        let one = vec![mk(VerdictTag::AdmitsRealCandidate, &[-1.5])];
        assert_eq!(summarize(&one), "ADMITS (F = -1.5)");
        assert_eq!(summarize(&[mk(VerdictTag::Obstructed, &[])]), "OBSTRUCTED");
        assert_eq!(summarize(&[mk(VerdictTag::Flat, &[])]), "FLAT");
    }

    #[test]
    fn grid_nodes() {
        let g = GridSpec::square(2.0, 21);
        let n = g.nodes();
        assert_eq!(n.len(), 441);
        assert_eq!(n[0], [-2.0, -2.0]);
        assert_eq!(n[440], [2.0, 2.0]);
        assert!((n[220][0]).abs() < 1e-15 && n[220][1].abs() < 1e-15);
    }
}
