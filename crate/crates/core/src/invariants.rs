//! The chain of conformal invariants built from the Cotton-York form.
//!
//! Everything is computed on jets at a single point, so the quantities that
//! are later differentiated (`rho`, `sigma`, `phi`, `L_a`, ...) keep enough
//! Taylor data for their covariant derivatives. Contractions are written out
//! index by index.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{MoebiusStructure, PointGeometry, Tensor};
use crate::jet::Jet;
use crate::tolerance::Tolerances;

type Pair = [Jet; 2];
type Mat = [[Jet; 2]; 2];

fn contract(v: &Pair, w: &Pair) -> Jet {
    &v[0] * &w[0] + &v[1] * &w[1]
}

/// `v^a w^b m[a][b]`.
fn quad(m: &Mat, v: &Pair, w: &Pair) -> Jet {
    let mut out = Jet::zero(m[0][0].base(), m[0][0].order());
    for a in 0..2 {
        for b in 0..2 {
            out += &(&v[a] * &w[b]) * &m[a][b];
        }
    }
    out
}

fn values(p: &Pair) -> [f64; 2] {
    [p[0].value(), p[1].value()]
}

fn mat_values(m: &Mat) -> [[f64; 2]; 2] {
    [
        [m[0][0].value(), m[0][1].value()],
        [m[1][0].value(), m[1][1].value()],
    ]
}

/// Cotton-York data at a point.
#[derive(Debug, Clone)]
pub struct CottonYork {
    pub geometry: PointGeometry,
    /// `Y_abc = nabla_a P_bc - nabla_b P_ac`.
    pub y_abc: Tensor,
    /// `Y_c = eps^ab Y_abc`.
    pub y: [Jet; 2],
    /// `|Y|_g` at the point.
    pub norm: f64,
    /// `|nabla P|_g` at the point, the reference scale of the flatness test.
    pub scale: f64,
    pub flat: bool,
}

pub fn cotton_york(s: &MoebiusStructure, p: [f64; 2], tol: &Tolerances) -> Result<CottonYork> {
    let geo = s.geometry_at(p, tol.jet_order)?;
    let dp = geo.covariant_derivative(&geo.rho)?;
    let mut comps = Vec::with_capacity(8);
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                comps.push(dp.get(&[a, b, c]) - dp.get(&[b, a, c]));
            }
        }
    }
    let y_abc = Tensor::new(3, 0, 0, comps);
    let y: [Jet; 2] = std::array::from_fn(|c| {
        let mut out = Jet::zero(p, tol.jet_order);
        for a in 0..2 {
            for b in 0..2 {
                out += &geo.eps_upper(a, b) * y_abc.get(&[a, b, c]);
            }
        }
        out
    });
    let em2u = geo.em2u.value();
    let norm = (em2u * (y[0].value().powi(2) + y[1].value().powi(2))).sqrt();
    let dp_sq: f64 = dp.values().iter().map(|v| v * v).sum();
    let scale = (em2u.powi(3) * dp_sq).sqrt();
    let flat = norm <= tol.flat * scale;
    Ok(CottonYork {
        geometry: geo,
        y_abc,
        y,
        norm,
        scale,
        flat,
    })
}

/// All invariants at a point, as jets. Used internally wherever further
/// derivatives are needed.
#[derive(Debug, Clone)]
pub(crate) struct InvariantJets {
    pub geo: PointGeometry,
    pub y: Pair,
    pub y_up: Pair,
    pub u: Pair,
    pub u_up: Pair,
    pub rho: Jet,
    pub mu: Jet,
    pub phi: Jet,
    pub w: Pair,
    pub sigma: Jet,
    pub tau: Jet,
    pub ell: Jet,
    pub l: Pair,
    pub p: Mat,
    pub grad_rho: Pair,
    pub hess_rho: Mat,
    pub grad_sigma: Pair,
    pub grad_y: Mat,
    pub grad_u: Mat,
    pub grad_l: Mat,
}

impl InvariantJets {
    pub fn new(s: &MoebiusStructure, p: [f64; 2], tol: &Tolerances) -> Result<Self> {
        let cy = cotton_york(s, p, tol)?;
        if cy.flat {
            return Err(Error::FlatPoint { point: p });
        }
        let geo = cy.geometry;
        let y = cy.y;
        let y_up = geo.raise(&y);
        let u_up = geo.rotate(&y);
        let u = geo.lower(&u_up);
        let rho = contract(&y_up, &y);

        let grad_y = geo.covector_gradient(&y)?;
        let grad_u = geo.covector_gradient(&u)?;
        let trace = |m: &Mat| (&m[0][0] + &m[1][1]) * &geo.em2u;
        let mu = trace(&grad_y).scale(0.5);
        let phi = trace(&grad_u).scale(0.5);

        let w: Pair = std::array::from_fn(|a| {
            &y_up[0] * &grad_u[0][a] + &y_up[1] * &grad_u[1][a] + &phi * &y[a]
                - (&mu * &u[a]).scale(3.0)
        });
        let sigma = contract(&w, &y_up);
        let tau = contract(&w, &u_up);

        let p_mat: Mat =
            std::array::from_fn(|a| std::array::from_fn(|b| geo.rho.get(&[a, b]).clone()));
        let grad_phi = phi.gradient()?;
        let ell = (&mu * &phi).scale(3.0) + quad(&p_mat, &u_up, &y_up) - contract(&y_up, &grad_phi);
        let w_up = geo.raise(&w);
        let eps_w = geo.eps_contract_vector(&w_up);
        let l: Pair = std::array::from_fn(|a| &y[a] * &ell - &eps_w[a] * &phi);

        let grad_rho = rho.gradient()?;
        let hess_rho = geo.covector_gradient(&grad_rho)?;
        let grad_sigma = sigma.gradient()?;
        let grad_l = geo.covector_gradient(&l)?;

        Ok(InvariantJets {
            geo,
            y,
            y_up,
            u,
            u_up,
            rho,
            mu,
            phi,
            w,
            sigma,
            tau,
            ell,
            l,
            p: p_mat,
            grad_rho,
            hess_rho,
            grad_sigma,
            grad_y,
            grad_u,
            grad_l,
        })
    }

    pub fn point_values(&self) -> PointInvariants {
        let (uu, yy) = (&self.u_up, &self.y_up);
        let vv_grad = |m: &Mat, v: &Pair| quad(m, v, v).value();
        let mut eps_grad_l = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                eps_grad_l += self.geo.eps_upper(a, b).value() * self.grad_l[b][a].value();
            }
        }
        PointInvariants {
            point: self.geo.point,
            conformal_factor: self.geo.e2u.value(),
            gauss_curvature: self
                .geo
                .gauss_curvature()
                .map(|k| k.value())
                .unwrap_or(f64::NAN),
            p: mat_values(&self.p),
            y: values(&self.y),
            u: values(&self.u),
            rho: self.rho.value(),
            mu: self.mu.value(),
            phi: self.phi.value(),
            w: values(&self.w),
            sigma: self.sigma.value(),
            tau: self.tau.value(),
            ell: self.ell.value(),
            l: values(&self.l),
            grad_rho: values(&self.grad_rho),
            u_grad_sigma: contract(uu, &self.grad_sigma).value(),
            y_grad_sigma: contract(yy, &self.grad_sigma).value(),
            uu_hess_rho: quad(&self.hess_rho, uu, uu).value(),
            yy_hess_rho: quad(&self.hess_rho, yy, yy).value(),
            uu_grad_y: vv_grad(&self.grad_y, uu),
            yy_grad_u: vv_grad(&self.grad_u, yy),
            uu_grad_l: vv_grad(&self.grad_l, uu),
            yy_grad_l: vv_grad(&self.grad_l, yy),
            eps_grad_l,
            p_uu: quad(&self.p, uu, uu).value(),
            p_yy: quad(&self.p, yy, yy).value(),
            p_uy: quad(&self.p, uu, yy).value(),
        }
    }
}

/// Invariants and auxiliary contractions at one point.
///
/// Index placement: `y`, `u`, `w`, `l`, `grad_rho` are covectors; scalar
/// contractions use the metric. `uu_grad_y` is `U^a U^b nabla_b Y_a`, and
/// likewise for the other `*_grad_*` fields; `eps_grad_l` is
/// `eps^ab nabla_b L_a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointInvariants {
    pub point: [f64; 2],
    /// `e^{2u}`.
    pub conformal_factor: f64,
    pub gauss_curvature: f64,
    pub p: [[f64; 2]; 2],
    pub y: [f64; 2],
    pub u: [f64; 2],
    pub rho: f64,
    pub mu: f64,
    pub phi: f64,
    pub w: [f64; 2],
    pub sigma: f64,
    pub tau: f64,
    pub ell: f64,
    pub l: [f64; 2],
    pub grad_rho: [f64; 2],
    pub u_grad_sigma: f64,
    pub y_grad_sigma: f64,
    pub uu_hess_rho: f64,
    pub yy_hess_rho: f64,
    pub uu_grad_y: f64,
    pub yy_grad_u: f64,
    pub uu_grad_l: f64,
    pub yy_grad_l: f64,
    pub eps_grad_l: f64,
    pub p_uu: f64,
    pub p_yy: f64,
    pub p_uy: f64,
}

impl PointInvariants {
    /// `g^ab v_a w_b` for covectors.
    pub fn dot(&self, v: [f64; 2], w: [f64; 2]) -> f64 {
        (v[0] * w[0] + v[1] * w[1]) / self.conformal_factor
    }
}

pub fn compute_invariants(
    s: &MoebiusStructure,
    p: [f64; 2],
    tol: &Tolerances,
) -> Result<PointInvariants> {
    Ok(InvariantJets::new(s, p, tol)?.point_values())
}

/// True when `|sigma|` is negligible against `rho^(5/3)` (both sides have
/// conformal weight -10).
pub fn sigma_is_zero(sigma: f64, rho: f64, tol: &Tolerances) -> bool {
    sigma.abs() <= tol.sigma_zero * rho.powf(5.0 / 3.0)
}

/// Data of the `P0(F) = 0` branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MBranch {
    pub m: f64,
    pub psi: f64,
    pub k: f64,
    /// Candidate `alpha_a = (k Y_a - m U_a) / rho`.
    pub alpha: [f64; 2],
    /// `M_ab`.
    pub m_ab: [[f64; 2]; 2],
    /// `|M|_g`.
    pub norm: f64,
    /// `|M|_g` divided by the sum of the norms of its terms.
    pub relative_norm: f64,
}

pub fn compute_m(s: &MoebiusStructure, p: [f64; 2], tol: &Tolerances) -> Result<MBranch> {
    let inv = InvariantJets::new(s, p, tol)?;
    compute_m_from(&inv, tol)
}

pub(crate) fn compute_m_from(inv: &InvariantJets, tol: &Tolerances) -> Result<MBranch> {
    let p = inv.geo.point;
    if sigma_is_zero(inv.sigma.value(), inv.rho.value(), tol) {
        return Err(Error::SigmaZero { point: p });
    }
    let rho = &inv.rho;
    let sigma = &inv.sigma;
    let (mu, phi, tau, ell) = (&inv.mu, &inv.phi, &inv.tau, &inv.ell);
    let m = sigma.try_div(&rho.scale(3.0))? + phi;
    let grad_m = m.gradient()?;
    let psi =
        (mu * &m).scale(3.0) + quad(&inv.p, &inv.u_up, &inv.y_up) - contract(&inv.y_up, &grad_m);
    let rho_sigma = rho * sigma;
    let bracket = ell.try_div(sigma)?
        + mu.try_div(rho)?
        + tau.try_div(&(rho * rho).scale(3.0))?
        + (tau * phi).try_div(&rho_sigma)?;
    let k =
        -(rho * &bracket).scale(3.0 / 20.0) + ((&psi * rho + tau * &m).try_div(sigma)?).scale(0.75);
    let alpha: Pair = std::array::from_fn(|a| &k * &inv.y[a] - &m * &inv.u[a]);
    let alpha: Pair = [alpha[0].try_div(rho)?, alpha[1].try_div(rho)?];

    let geo = &inv.geo;
    let grad_alpha = geo.covector_gradient(&alpha)?;
    let alpha_sq = geo.dot(&alpha, &alpha);
    let m_ab: Mat = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut v = (&grad_alpha[a][b] + &grad_alpha[b][a]).scale(0.5)
                + &alpha[a] * &alpha[b]
                + &inv.p[a][b];
            if a == b {
                v -= &(&alpha_sq * &geo.e2u).scale(0.5);
            }
            v
        })
    });
    let m_vals = mat_values(&m_ab);
    let em2u = geo.em2u.value();
    let frob = |m: &[[f64; 2]; 2]| {
        em2u * (m[0][0].powi(2) + m[0][1].powi(2) + m[1][0].powi(2) + m[1][1].powi(2)).sqrt()
    };
    let norm = frob(&m_vals);
    let ga = mat_values(&grad_alpha);
    let reference = frob(&ga) + alpha_sq.value().abs() * 2f64.sqrt() + frob(&mat_values(&inv.p));
    let relative_norm = if reference > 0.0 {
        norm / reference
    } else {
        norm
    };
    Ok(MBranch {
        m: m.value(),
        psi: psi.value(),
        k: k.value(),
        alpha: values(&alpha),
        m_ab: m_vals,
        norm,
        relative_norm,
    })
}
