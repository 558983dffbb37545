//! Moebius structures on planar domains.
//!
//! The representative metric is conformally flat, `g = e^{2u} (dx^2 + dy^2)`,
//! and the structure is given by the Rho tensor `P_ab` in the same
//! coordinates. Everything is evaluated pointwise on jets so that covariant
//! derivatives of any order are available without finite differencing.

use serde::Serialize;

use crate::error::Result;
use crate::expr::{parse, Expr, Var};
use crate::jet::Jet;

/// Sign of the volume form: `eps_12 = sign * e^{2u}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    pub fn from_sign(s: i64) -> Option<Self> {
        match s {
            1 => Some(Orientation::Positive),
            -1 => Some(Orientation::Negative),
            _ => None,
        }
    }
}

/// A Moebius structure: log conformal factor `u` and Rho components
/// `P11`, `P12 = P21`, `P22`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusStructure {
    pub u: Expr,
    pub rho: [Expr; 3],
    pub orientation: Orientation,
}

impl MoebiusStructure {
    pub fn new(u: Expr, p11: Expr, p12: Expr, p22: Expr) -> Self {
        MoebiusStructure {
            u,
            rho: [p11, p12, p22],
            orientation: Orientation::Positive,
        }
    }

    pub fn parse(u: &str, p11: &str, p12: &str, p22: &str) -> Result<Self> {
        Ok(Self::new(parse(u)?, parse(p11)?, parse(p12)?, parse(p22)?))
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    fn rho_expr(&self, a: usize, b: usize) -> &Expr {
        match (a, b) {
            (0, 0) => &self.rho[0],
            (1, 1) => &self.rho[2],
            _ => &self.rho[1],
        }
    }

    /// Evaluates metric data and the Rho tensor as jets at `p`.
    pub fn geometry_at(&self, p: [f64; 2], order: usize) -> Result<PointGeometry> {
        let u = self.u.eval_jet(p, order)?;
        let p11 = self.rho[0].eval_jet(p, order)?;
        let p12 = self.rho[1].eval_jet(p, order)?;
        let p22 = self.rho[2].eval_jet(p, order)?;
        let du = u.gradient()?;
        let gamma = christoffel_from_gradient(&du);
        let e2u = u.scale(2.0).exp();
        let em2u = u.scale(-2.0).exp();
        let rho = Tensor::new(2, 0, 0, vec![p11, p12.clone(), p12, p22]);
        Ok(PointGeometry {
            point: p,
            order,
            u,
            du,
            gamma,
            e2u,
            em2u,
            sign: self.orientation.sign(),
            rho,
        })
    }

    /// Levi-Civita symbols `Gamma^a_bc`, indexed `[a][b][c]`, as jets of order `order - 1`.
    pub fn christoffel(&self, p: [f64; 2], order: usize) -> Result<[[[Jet; 2]; 2]; 2]> {
        Ok(self.geometry_at(p, order)?.gamma)
    }

    pub fn gauss_curvature(&self, p: [f64; 2], order: usize) -> Result<Jet> {
        self.geometry_at(p, order)?.gauss_curvature()
    }

    /// The same Moebius structure in the rescaled metric `e^{2 omega} g`.
    ///
    /// The new Rho tensor is built symbolically:
    /// `P' = P - nabla dω + dω ⊗ dω - ½ g |dω|^2`, with `nabla` the
    /// Levi-Civita connection of the current metric.
    pub fn conformal_rescale(&self, omega: &Expr) -> MoebiusStructure {
        let vars = [Var::X, Var::Y];
        let du: Vec<Expr> = vars.iter().map(|v| self.u.derivative(*v)).collect();
        let dw: Vec<Expr> = vars.iter().map(|v| omega.derivative(*v)).collect();
        let du_dot_dw = Expr::add(
            Expr::mul(du[0].clone(), dw[0].clone()),
            Expr::mul(du[1].clone(), dw[1].clone()),
        );
        let dw_sq = Expr::add(
            Expr::mul(dw[0].clone(), dw[0].clone()),
            Expr::mul(dw[1].clone(), dw[1].clone()),
        );
        let component = |a: usize, b: usize| -> Expr {
            let hess = dw[a].derivative(vars[b]);
            // Gamma^c_ab dω_c for the metric e^{2u} δ
            let mut gamma_dw = Expr::add(
                Expr::mul(du[a].clone(), dw[b].clone()),
                Expr::mul(du[b].clone(), dw[a].clone()),
            );
            let mut out = Expr::sub(self.rho_expr(a, b).clone(), hess);
            if a == b {
                gamma_dw = Expr::sub(gamma_dw, du_dot_dw.clone());
            }
            out = Expr::add(out, gamma_dw);
            out = Expr::add(out, Expr::mul(dw[a].clone(), dw[b].clone()));
            if a == b {
                out = Expr::sub(out, Expr::mul(Expr::num(0.5), dw_sq.clone()));
            }
            out
        };
        MoebiusStructure {
            u: Expr::add(self.u.clone(), omega.clone()),
            rho: [component(0, 0), component(0, 1), component(1, 1)],
            orientation: self.orientation,
        }
    }

    /// Checks that the metric trace of `P_ab` equals the Gauss curvature at
    /// every sample point.
    pub fn validate(&self, points: &[[f64; 2]], tol: f64) -> Result<ValidationReport> {
        let mut violations = Vec::new();
        let mut max_defect: f64 = 0.0;
        for &p in points {
            let geo = self.geometry_at(p, 2)?;
            let k = geo.gauss_curvature()?.value();
            let trace = geo.trace_rho().value();
            let em2u = geo.em2u.value();
            let p_scale = geo
                .rho
                .comps()
                .iter()
                .fold(0.0f64, |m, c| m.max(c.value().abs()))
                * em2u;
            let scale = k.abs().max(p_scale).max(1.0);
            let defect = (trace - k).abs() / scale;
            max_defect = max_defect.max(defect);
            if !(defect < tol) {
                violations.push(TraceViolation {
                    point: p,
                    trace,
                    curvature: k,
                });
            }
        }
        Ok(ValidationReport {
            max_defect,
            violations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceViolation {
    pub point: [f64; 2],
    pub trace: f64,
    pub curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Largest relative trace defect over the samples.
    pub max_defect: f64,
    pub violations: Vec<TraceViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn christoffel_from_gradient(du: &[Jet; 2]) -> [[[Jet; 2]; 2]; 2] {
    let base = du[0].base();
    let order = du[0].order();
    let zero = Jet::zero(base, order);
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                let mut g = zero.clone();
                if a == b {
                    g += &du[c];
                }
                if a == c {
                    g += &du[b];
                }
                if b == c {
                    g -= &du[a];
                }
                g
            })
        })
    })
}

/// A tensor field at a point, stored as one jet per component.
///
/// Components are indexed by the covariant indices followed by the
/// contravariant ones; each index is 0 or 1. `weight` is the conformal weight
/// carried as metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    lower: usize,
    upper: usize,
    weight: i32,
    comps: Vec<Jet>,
}

impl Tensor {
    pub fn new(lower: usize, upper: usize, weight: i32, comps: Vec<Jet>) -> Self {
        assert_eq!(comps.len(), 1 << (lower + upper), "component count");
        Tensor {
            lower,
            upper,
            weight,
            comps,
        }
    }

    pub fn scalar(value: Jet, weight: i32) -> Self {
        Tensor::new(0, 0, weight, vec![value])
    }

    pub fn covector(c: [Jet; 2], weight: i32) -> Self {
        Tensor::new(1, 0, weight, c.to_vec())
    }

    pub fn vector(c: [Jet; 2], weight: i32) -> Self {
        Tensor::new(0, 1, weight, c.to_vec())
    }

    pub fn lower_rank(&self) -> usize {
        self.lower
    }

    pub fn upper_rank(&self) -> usize {
        self.upper
    }

    pub fn rank(&self) -> usize {
        self.lower + self.upper
    }

    pub fn weight(&self) -> i32 {
        self.weight
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| (acc << 1) | i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.flat(idx)]
    }

    /// Component pair of a rank-one tensor.
    pub fn pair(&self) -> [Jet; 2] {
        assert_eq!(self.rank(), 1);
        [self.comps[0].clone(), self.comps[1].clone()]
    }

    /// Values of all components at the base point.
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }
}

/// Metric data, Christoffel symbols and the Rho tensor at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub point: [f64; 2],
    pub order: usize,
    pub u: Jet,
    pub du: [Jet; 2],
    /// `Gamma^a_bc` as `gamma[a][b][c]`.
    pub gamma: [[[Jet; 2]; 2]; 2],
    pub e2u: Jet,
    pub em2u: Jet,
    /// Orientation sign of the volume form.
    pub sign: f64,
    /// `P_ab`, weight 0.
    pub rho: Tensor,
}

impl PointGeometry {
    fn zero(&self) -> Jet {
        Jet::zero(self.point, self.order)
    }

    pub fn metric(&self) -> Tensor {
        let z = self.zero();
        Tensor::new(
            2,
            0,
            2,
            vec![self.e2u.clone(), z.clone(), z, self.e2u.clone()],
        )
    }

    pub fn inverse_metric(&self) -> Tensor {
        let z = self.zero();
        Tensor::new(
            0,
            2,
            -2,
            vec![self.em2u.clone(), z.clone(), z, self.em2u.clone()],
        )
    }

    /// `eps_ab` with `eps_12 = sign * e^{2u}`.
    pub fn volume_form(&self) -> Tensor {
        let z = self.zero();
        let e = self.e2u.scale(self.sign);
        Tensor::new(2, 0, 2, vec![z.clone(), e.clone(), -e, z])
    }

    /// `eps^ab` normalized so that `eps^ab eps_cb = delta_c^a`.
    pub fn inverse_volume_form(&self) -> Tensor {
        let z = self.zero();
        let e = self.em2u.scale(self.sign);
        Tensor::new(0, 2, -2, vec![z.clone(), e.clone(), -e, z])
    }

    /// Value of `eps_ab` as a jet (sign and `e^{2u}` included).
    pub fn eps_lower(&self, a: usize, b: usize) -> Jet {
        match (a, b) {
            (0, 1) => self.e2u.scale(self.sign),
            (1, 0) => self.e2u.scale(-self.sign),
            _ => self.zero(),
        }
    }

    pub fn eps_upper(&self, a: usize, b: usize) -> Jet {
        match (a, b) {
            (0, 1) => self.em2u.scale(self.sign),
            (1, 0) => self.em2u.scale(-self.sign),
            _ => self.zero(),
        }
    }

    /// `K = -e^{-2u} (u_xx + u_yy)`.
    pub fn gauss_curvature(&self) -> Result<Jet> {
        let lap = self.du[0].derivative(0)? + self.du[1].derivative(1)?;
        Ok(-(&self.em2u * &lap))
    }

    /// `g^{ab} P_ab`.
    pub fn trace_rho(&self) -> Jet {
        &self.em2u * &(self.rho.get(&[0, 0]) + self.rho.get(&[1, 1]))
    }

    /// Raises the index of a covector: `v^a = g^{ab} w_b`.
    pub fn raise(&self, w: &[Jet; 2]) -> [Jet; 2] {
        [&self.em2u * &w[0], &self.em2u * &w[1]]
    }

    /// Lowers the index of a vector: `w_a = g_ab v^b`.
    pub fn lower(&self, v: &[Jet; 2]) -> [Jet; 2] {
        [&self.e2u * &v[0], &self.e2u * &v[1]]
    }

    /// `g^{ab} v_a w_b` for two covectors.
    pub fn dot(&self, v: &[Jet; 2], w: &[Jet; 2]) -> Jet {
        &self.em2u * &(&v[0] * &w[0] + &v[1] * &w[1])
    }

    /// `eps^{ab} w_b`, the rotated vector of a covector.
    pub fn rotate(&self, w: &[Jet; 2]) -> [Jet; 2] {
        let s = self.em2u.scale(self.sign);
        [&s * &w[1], -(&s * &w[0])]
    }

    /// `eps_ab v^b` for a vector `v`.
    pub fn eps_contract_vector(&self, v: &[Jet; 2]) -> [Jet; 2] {
        let s = self.e2u.scale(self.sign);
        [&s * &v[1], -(&s * &v[0])]
    }

    /// Covariant derivative; the new covariant index is placed first.
    pub fn covariant_derivative(&self, t: &Tensor) -> Result<Tensor> {
        let rank = t.rank();
        let new_rank = rank + 1;
        let mut comps = Vec::with_capacity(1 << new_rank);
        let mut idx = vec![0usize; rank];
        for flat in 0..(1usize << new_rank) {
            let a = (flat >> rank) & 1;
            for (k, slot) in idx.iter_mut().enumerate() {
                *slot = (flat >> (rank - 1 - k)) & 1;
            }
            let mut c = t.get(&idx).derivative(a)?;
            for pos in 0..rank {
                let orig = idx[pos];
                for e in 0..2 {
                    let mut j = idx.clone();
                    j[pos] = e;
                    let term = t.get(&j);
                    if pos < t.lower {
                        c -= &self.gamma[e][a][orig] * term;
                    } else {
                        c += &self.gamma[orig][a][e] * term;
                    }
                }
            }
            comps.push(c);
        }
        Ok(Tensor::new(t.lower + 1, t.upper, t.weight, comps))
    }

    /// `nabla_a w_b` of a covector, as `[a][b]`.
    pub fn covector_gradient(&self, w: &[Jet; 2]) -> Result<[[Jet; 2]; 2]> {
        let t = self.covariant_derivative(&Tensor::covector(w.clone(), 0))?;
        Ok(std::array::from_fn(|a| {
            std::array::from_fn(|b| t.get(&[a, b]).clone())
        }))
    }

    /// `nabla_a V^b` of a vector, as `[a][b]`.
    pub fn vector_gradient(&self, v: &[Jet; 2]) -> Result<[[Jet; 2]; 2]> {
        let t = self.covariant_derivative(&Tensor::vector(v.clone(), 0))?;
        Ok(std::array::from_fn(|a| {
            std::array::from_fn(|b| t.get(&[a, b]).clone())
        }))
    }
}
