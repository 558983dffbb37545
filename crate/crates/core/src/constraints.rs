//! The polynomial constraints `P0 .. P3` on the curvature scalar `F`.
//!
//! Coefficients are written out directly from the invariants. The shorthand
//! `A = rho*ell + phi*tau` and `C = tau + 3*mu*rho` recurs throughout.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::PointInvariants;
pub use crate::polyalg::Poly;

/// The four constraint polynomials at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraints {
    pub p0: Poly,
    pub p1: Poly,
    pub p2: Poly,
    pub p3: Poly,
}

struct Short {
    rho: f64,
    sigma: f64,
    mu: f64,
    phi: f64,
    tau: f64,
    ell: f64,
    a: f64,
    c: f64,
}

impl Short {
    fn of(i: &PointInvariants) -> Self {
        Short {
            rho: i.rho,
            sigma: i.sigma,
            mu: i.mu,
            phi: i.phi,
            tau: i.tau,
            ell: i.ell,
            a: i.rho * i.ell + i.phi * i.tau,
            c: i.tau + 3.0 * i.mu * i.rho,
        }
    }
}

fn check_rho(i: &PointInvariants) -> Result<()> {
    if i.rho > 0.0 && i.rho.is_finite() {
        Ok(())
    } else {
        Err(Error::DivisionByRho { point: i.point })
    }
}

/// `P0(t) = sigma - 3 rho t^2`.
pub fn assemble_p0(i: &PointInvariants) -> Poly {
    Poly::new(vec![i.sigma, 0.0, -3.0 * i.rho])
}

pub fn assemble_p1(i: &PointInvariants) -> Poly {
    let Short {
        rho,
        sigma,
        mu,
        phi,
        tau,
        a,
        c,
        ..
    } = Short::of(i);
    let (un_sig, uu_hr) = (i.u_grad_sigma, i.uu_hess_rho);
    let d = 3.0 * rho * phi - sigma;
    let c8 = 31.5 * rho * rho;
    let c6 = -12.0 * rho * sigma;
    let c4 = 12.0 * rho * sigma * phi - 63.0 * rho * rho * phi * phi
        + 3.0 * rho * un_sig
        + 0.5 * c * c
        + 0.5 * d * d
        + 1.5 * rho * uu_hr
        - 9.0 * rho * rho * i.p_uu;
    let c3 = 7.5 * rho.powi(3) * mu + 2.5 * tau * rho * rho + 7.5 * rho * rho * i.uu_grad_y;
    let c2 = d * un_sig + 21.0 * rho * phi * phi * sigma - 3.0 * phi * sigma * sigma
        + a * c
        + 25.0 / 8.0 * rho.powi(4)
        + 3.0 * rho * i.uu_grad_l
        + 6.0 * rho * sigma * i.p_uu
        - 0.5 * sigma * uu_hr;
    let c1 = 2.5 * rho * rho * a - 2.5 * i.uu_grad_y * sigma * rho;
    let c0 = -sigma * phi * un_sig + 0.5 * a * a
        - 0.5 * phi * phi * sigma * sigma
        - sigma * (i.uu_grad_l + sigma * i.p_uu);
    Poly::new(vec![c0, c1, c2, c3, c4, 0.0, c6, 0.0, c8])
}

/// The polynomial part `Q` of the second constraint, so that
/// `P2~(t) = (sigma - 15 rho t^2) (A + 5/2 rho^2 t + C t^2)^2 / P0(t) + Q(t)`.
pub fn second_constraint_remainder(i: &PointInvariants) -> Poly {
    let Short {
        rho,
        sigma,
        phi,
        a,
        c,
        ..
    } = Short::of(i);
    let (yy_gu, yy_hr, yn_sig, yy_gl, p_yy) = (
        i.yy_grad_u,
        i.yy_hess_rho,
        i.y_grad_sigma,
        i.yy_grad_l,
        i.p_yy,
    );
    let d = 3.0 * phi * rho - sigma;
    let q8 = -4.5 * rho * rho;
    let q6 = -(9.0 * yy_gu * rho + 3.0 * rho * d);
    let q4 = 3.0 * yy_gu * sigma - 1.5 * rho * yy_hr
        + 1.5 * c * c
        + 9.0 * rho * rho * p_yy
        + 3.0 * phi * sigma * rho
        - 0.5 * d * d;
    let q3 = -25.0 * rho * rho * c;
    let q2 = 0.5 * yy_hr * sigma
        - 185.0 / 8.0 * rho.powi(4)
        - 3.0 * yy_gl * rho
        - 6.0 * rho * sigma * p_yy
        + phi * sigma * d
        + c * a
        - c * yn_sig;
    let q1 = 5.5 * rho * sigma * c - 13.5 * rho * rho * a - 2.5 * rho * rho * yn_sig;
    let q0 = yy_gl * sigma - 2.5 * sigma * rho.powi(3) + p_yy * sigma * sigma
        - 0.5 * a * a
        - 0.5 * phi * phi * sigma * sigma
        - a * yn_sig;
    Poly::new(vec![q0, q1, q2, q3, q4, 0.0, q6, 0.0, q8])
}

/// `A + 5/2 rho^2 t + C t^2`.
fn quadratic_factor(s: &Short) -> Poly {
    Poly::new(vec![s.a, 2.5 * s.rho * s.rho, s.c])
}

/// `P2 = P0 * P2~`, expanded without division.
pub fn assemble_p2(i: &PointInvariants) -> Poly {
    let s = Short::of(i);
    let g = quadratic_factor(&s);
    let lead = Poly::new(vec![s.sigma, 0.0, -15.0 * s.rho]);
    let grouped = &lead * &(&g * &g);
    &grouped + &(&assemble_p0(i) * &second_constraint_remainder(i))
}

/// The rational second constraint `P2~(t)`, evaluated directly.
pub fn second_constraint_rational(i: &PointInvariants, t: f64) -> Result<f64> {
    let p0 = assemble_p0(i).eval(t);
    if p0 == 0.0 {
        return Err(Error::P0Vanishes { f: t, p0 });
    }
    let s = Short::of(i);
    let g = quadratic_factor(&s).eval(t);
    Ok((s.sigma - 15.0 * s.rho * t * t) * g * g / p0 + second_constraint_remainder(i).eval(t))
}

pub fn assemble_p3(i: &PointInvariants) -> Result<Poly> {
    check_rho(i)?;
    let Short {
        rho,
        sigma,
        mu,
        phi,
        tau,
        ell,
        a,
        ..
    } = Short::of(i);
    let (un_sig, yn_sig, eps_gl) = (i.u_grad_sigma, i.y_grad_sigma, i.eps_grad_l);
    let c6 = -6.0 * tau;
    let c5 = 18.0 * rho * rho;
    let c4 = 3.0 * yn_sig + 24.0 * a - 6.0 * sigma * mu;
    let c3 = 13.0 * sigma * rho;
    let c2 = (3.0 * phi - sigma / rho) * yn_sig
        + 30.0 * mu * phi * sigma
        + 30.0 * phi * rho * ell
        + 30.0 * phi * phi * tau
        - (3.0 * mu + tau / rho) * un_sig
        - 10.0 * sigma * ell
        + 3.0 * rho * eps_gl;
    let c1 = 25.0 * phi * sigma * rho - 2.5 * rho * un_sig - 8.0 * sigma * sigma;
    let c0 = -phi * sigma / rho * yn_sig - un_sig * (ell + phi * tau / rho) - eps_gl * sigma;
    Ok(Poly::new(vec![c0, c1, c2, c3, c4, c5, c6]))
}

pub fn assemble(i: &PointInvariants) -> Result<Constraints> {
    check_rho(i)?;
    Ok(Constraints {
        p0: assemble_p0(i),
        p1: assemble_p1(i),
        p2: assemble_p2(i),
        p3: assemble_p3(i)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::MoebiusStructure;
    use crate::invariants::compute_invariants;
    use crate::tolerance::Tolerances;

    fn inv(p11: &str, p12: &str, p22: &str, at: [f64; 2]) -> PointInvariants {
        let s = MoebiusStructure::parse("0", p11, p12, p22).unwrap();
        compute_invariants(&s, at, &Tolerances::default()).unwrap()
    }

    fn twisted(at: [f64; 2]) -> PointInvariants {
        inv("x*y", "(y*y - x*x)/2", "-x*y", at)
    }

    fn radial(at: [f64; 2]) -> PointInvariants {
        inv("(x*x - y*y)/2", "x*y", "(y*y - x*x)/2", at)
    }

    fn antiradial(at: [f64; 2]) -> PointInvariants {
        inv("(y*y - x*x)/2", "-x*y", "(x*x - y*y)/2", at)
    }

    fn assert_coeffs(p: &Poly, expect: &[f64], rel: f64) {
        let scale = expect.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for (k, e) in expect.iter().enumerate() {
            let got = p.coeff(k);
            assert!(
                (got - e).abs() <= rel * e.abs().max(1e-12 * scale),
                "t^{k}: got {got}, expected {e}"
            );
        }
        assert!(
            p.coeffs().len() <= expect.len()
                || p.coeffs()[expect.len()..]
                    .iter()
                    .all(|c| c.abs() < 1e-9 * scale)
        );
    }

    #[test]
    fn first_and_third_constraints_twisted_unit_circle() {
        let i = twisted([1.0, 0.0]);
        let p1: Vec<f64> = [32.0, 320.0, 672.0, -640.0, 56.0, 0.0, 0.0, 0.0, 31.5]
            .iter()
            .map(|c| 256.0 * c)
            .collect();
        assert_coeffs(&assemble_p1(&i), &p1, 1e-12);
        assert_coeffs(
            &assemble_p3(&i).unwrap(),
            &[0.0, 0.0, 0.0, 0.0, 3072.0, 4608.0, -768.0],
            1e-12,
        );
    }

    #[test]
    fn zeroth_constraint() {
        assert_coeffs(
            &assemble_p0(&radial([1.0, 0.0])),
            &[-128.0, 0.0, -48.0],
            1e-12,
        );
        assert_coeffs(
            &assemble_p0(&antiradial([1.0, 0.0])),
            &[128.0, 0.0, -48.0],
            1e-12,
        );
    }

    #[test]
    fn radial_constraints_vanish_at_two() {
        let i = radial([1.0, 0.0]);
        let c = assemble(&i).unwrap();
        for p in [&c.p1, &c.p2, &c.p3] {
            for t in [-2.0, 2.0] {
                assert!(p.normalized_residual(t) < 1e-12, "{p} at {t}");
            }
        }
        assert_coeffs(
            &c.p3,
            &[0.0, 64.0 * 512.0, 0.0, -52.0 * 512.0, 0.0, 9.0 * 512.0],
            1e-12,
        );
    }

    #[test]
    fn radial_second_constraint_closed_form() {
        let i = radial([1.0, 0.0]);
        let r2: f64 = 256.0;
        let inner = Poly::new(vec![
            8.0 * r2 / 3.0 - 2048.0 / 9.0,
            0.0,
            -(6400.0 / 27.0 + 19.0 * r2 / 18.0),
            0.0,
            r2 / 16.0 - 224.0 / 3.0,
            0.0,
            -4.0,
            0.0,
            1.0,
        ]);
        let expect = (&Poly::new(vec![-4.0, 0.0, 1.0]) * &inner).scale(13.5 * 16f64.powi(3));
        let p2 = assemble_p2(&i);
        // allow an overall constant
        let k = p2.leading() / expect.leading();
        assert_coeffs(&p2, expect.scale(k).coeffs(), 1e-10);
    }

    #[test]
    fn antiradial_constraints_share_imaginary_factor() {
        let c = assemble(&antiradial([1.0, 0.0])).unwrap();
        let f = Poly::new(vec![4.0, 0.0, 1.0]);
        for p in [&c.p1, &c.p2, &c.p3] {
            let (_, r) = p.div_rem(&f).unwrap();
            assert!(r.max_abs() < 1e-9 * p.max_abs(), "{r}");
        }
    }

    #[test]
    fn grouped_second_constraint_matches_rational_form() {
        let s = MoebiusStructure::parse("0.2*x - 0.1*y*y", "x*x*y", "sin(x + y)", "exp(0.3*x) - y")
            .unwrap();
        let i = compute_invariants(&s, [0.4, -0.7], &Tolerances::default()).unwrap();
        let p0 = assemble_p0(&i);
        let p2 = assemble_p2(&i);
        for k in 0..20 {
            let t = -3.0 + 0.31 * k as f64;
            let direct = p0.eval(t) * second_constraint_rational(&i, t).unwrap();
            let grouped = p2.eval(t);
            assert!(
                (direct - grouped).abs() <= 1e-9 * grouped.abs().max(p2.max_abs() * 1e-6),
                "t = {t}: {direct} vs {grouped}"
            );
        }
    }

    #[test]
    fn p3_rejects_zero_rho() {
        let mut i = radial([1.0, 0.0]);
        i.rho = 0.0;
        assert!(matches!(assemble_p3(&i), Err(Error::DivisionByRho { .. })));
    }
}
