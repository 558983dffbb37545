//! Real univariate polynomials, Sylvester resultants and root finding.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Coefficients in ascending degree order; exact trailing zeros are trimmed.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// `lead * prod (t - r)`.
    pub fn from_roots(lead: f64, roots: &[f64]) -> Self {
        let mut p = Poly::constant(lead);
        for &r in roots {
            p = &p * &Poly::new(vec![-r, 1.0]);
        }
        p
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Divides by the largest coefficient magnitude.
    pub fn normalized(&self) -> Poly {
        let m = self.max_abs();
        if m == 0.0 {
            return Poly::zero();
        }
        self.scale(1.0 / m)
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|v| v * c).collect())
    }

    /// `p(s t)` as a polynomial in `t`.
    pub fn rescale_argument(&self, s: f64) -> Poly {
        let mut pow = 1.0;
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            out.push(c * pow);
            pow *= s;
        }
        Poly::new(out)
    }

    /// Drops leading coefficients below `rel` times the largest one.
    pub fn trim_relative(&self, rel: f64) -> Poly {
        let cut = rel * self.max_abs();
        let mut c = self.coeffs.clone();
        while matches!(c.last(), Some(v) if v.abs() <= cut) {
            c.pop();
        }
        Poly::new(c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    /// `|p(t)| / sum |c_k| |t|^k`, the evaluation error scale of Horner's rule.
    pub fn normalized_residual(&self, t: f64) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t.abs() + c.abs());
        if scale == 0.0 {
            return 0.0;
        }
        self.eval(t).abs() / scale
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// Euclidean division; errors on a zero divisor.
    pub fn div_rem(&self, d: &Poly) -> Result<(Poly, Poly)> {
        let dd = d.degree().ok_or(Error::ZeroPolynomial)?;
        let lead = d.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut quot = vec![0.0; rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= q * dc;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Poly::new(quot), Poly::new(rem)))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0.0 {
                continue;
            }
            if first {
                write!(f, "{c}")?;
            } else if *c < 0.0 {
                write!(f, " - {}", -c)?;
            } else {
                write!(f, " + {c}")?;
            }
            match k {
                0 => {}
                1 => write!(f, " t")?,
                _ => write!(f, " t^{k}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, o: Poly) -> Poly {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Sylvester matrix: `deg q` shifted rows of `p` followed by `deg p` shifted
/// rows of `q`, coefficients in descending order.
pub fn sylvester_matrix(p: &Poly, q: &Poly) -> Result<DMatrix<f64>> {
    let m = p.degree().ok_or(Error::ZeroPolynomial)?;
    let n = q.degree().ok_or(Error::ZeroPolynomial)?;
    let size = m + n;
    let mut s = DMatrix::zeros(size, size);
    for row in 0..n {
        for (k, c) in p.coeffs.iter().enumerate() {
            s[(row, row + m - k)] = *c;
        }
    }
    for row in 0..m {
        for (k, c) in q.coeffs.iter().enumerate() {
            s[(n + row, row + n - k)] = *c;
        }
    }
    Ok(s)
}

/// A resultant split as `normalized * 10^log10_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resultant {
    /// Resultant of the max-coefficient-normalized polynomials.
    pub normalized: f64,
    /// `deg q * log10 max|p| + deg p * log10 max|q|`.
    pub log10_scale: f64,
}

impl Resultant {
    /// The unnormalized resultant (may overflow to infinity).
    pub fn value(&self) -> f64 {
        self.normalized * 10f64.powf(self.log10_scale)
    }

    /// `log10 |Res|` of the unnormalized resultant.
    pub fn log10_abs(&self) -> f64 {
        self.normalized.abs().log10() + self.log10_scale
    }
}

pub fn sylvester_resultant(p: &Poly, q: &Poly) -> Result<Resultant> {
    let (m, n) = (
        p.degree().ok_or(Error::ZeroPolynomial)?,
        q.degree().ok_or(Error::ZeroPolynomial)?,
    );
    let (sp, sq) = (p.max_abs(), q.max_abs());
    let det = sylvester_matrix(&p.scale(1.0 / sp), &q.scale(1.0 / sq))?.determinant();
    Ok(Resultant {
        normalized: det,
        log10_scale: n as f64 * sp.log10() + m as f64 * sq.log10(),
    })
}

/// Ratio of the smallest to the largest singular value of the Sylvester
/// matrix of the max-normalized polynomials. Zero exactly when the
/// polynomials share a root; unlike the determinant it does not shrink
/// with the matrix size.
pub fn separation(p: &Poly, q: &Poly) -> Result<f64> {
    let s = sylvester_matrix(&p.normalized(), &q.normalized())?;
    if s.nrows() == 0 {
        return Ok(1.0);
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Ok(f64::NAN);
    }
    let sv = s.singular_values_unordered();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if max > 0.0 { min / max } else { 0.0 })
}

/// All complex roots, as eigenvalues of the companion matrix.
pub fn complex_roots(p: &Poly) -> Vec<Complex64> {
    let p = p.trim_relative(0.0);
    let Some(n) = p.degree() else {
        return Vec::new();
    };
    if n == 0 || p.coeffs.iter().any(|c| !c.is_finite()) {
        return Vec::new();
    }
    // factor out t^k exactly; a nilpotent companion block can stall Schur
    let k = p.coeffs.iter().take_while(|c| **c == 0.0).count();
    let mut out = vec![Complex64::new(0.0, 0.0); k];
    let m = n - k;
    if m == 0 {
        return out;
    }
    let lead = p.leading();
    let mut c = DMatrix::zeros(m, m);
    for i in 1..m {
        c[(i, i - 1)] = 1.0;
    }
    for i in 0..m {
        c[(i, m - 1)] = -p.coeffs[k + i] / lead;
    }
    match Schur::try_new(c, f64::EPSILON, 10_000) {
        Some(s) => out.extend(s.complex_eigenvalues().iter().cloned()),
        None => return Vec::new(),
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Root {
    pub value: f64,
    pub multiplicity: usize,
    /// Normalized residual `|P(t)| / sum |c_k| |t|^k`.
    pub residual: f64,
}

/// Real roots sorted ascending.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct RootSet {
    pub roots: Vec<Root>,
}

impl RootSet {
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.value).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }
}

fn newton_polish(p: &Poly, dp: &Poly, mut t: f64) -> f64 {
    let mut best = (p.normalized_residual(t), t);
    for _ in 0..50 {
        let d = dp.eval(t);
        if d == 0.0 {
            break;
        }
        let next = t - p.eval(t) / d;
        if !next.is_finite() {
            break;
        }
        let r = p.normalized_residual(next);
        if r < best.0 {
            best = (r, next);
        }
        if (next - t).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300) {
            break;
        }
        t = next;
    }
    best.1
}

/// Real roots of `p` whose normalized residual is below `tol`.
///
/// Leading coefficients below `1e-13` of the largest one are dropped first;
/// they only produce spurious roots near infinity.
pub fn real_roots(p: &Poly, tol: f64) -> RootSet {
    let p = p.trim_relative(1e-13);
    let dp = p.derivative();
    let mut found: Vec<(f64, f64)> = Vec::new();
    for z in complex_roots(&p) {
        // multiple real roots split into pairs with imaginary parts of
        // order sqrt(eps); the residual test decides
        if z.im.abs() > 1e-3 * z.norm().max(1.0) {
            continue;
        }
        let t = newton_polish(&p, &dp, z.re);
        let r = p.normalized_residual(t);
        if r < tol {
            found.push((t, r));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut roots: Vec<Root> = Vec::new();
    for (t, r) in found {
        if let Some(last) = roots.last_mut() {
            if (t - last.value).abs() <= 1e-6 * t.abs().max(1.0) {
                last.multiplicity += 1;
                if r < last.residual {
                    last.value = t;
                    last.residual = r;
                }
                continue;
            }
        }
        roots.push(Root {
            value: t,
            multiplicity: 1,
            residual: r,
        });
    }
    RootSet { roots }
}

/// Real roots shared by all `polys`, taken from the lowest-degree one, with
/// the roots of `exclude` removed.
pub fn common_real_roots(polys: &[&Poly], exclude: &Poly, tol: f64) -> Result<RootSet> {
    if polys.iter().any(|p| p.is_zero()) {
        return Err(Error::ZeroPolynomial);
    }
    let Some(base) = polys
        .iter()
        .min_by_key(|p| p.trim_relative(1e-13).degree().unwrap_or(0))
    else {
        return Ok(RootSet::default());
    };
    let mut out = real_roots(base, tol);
    out.roots.retain(|root| {
        let t = root.value;
        let shared = polys.iter().all(|p| p.normalized_residual(t) < tol);
        let excluded = !exclude.is_zero() && exclude.normalized_residual(t) < tol;
        shared && !excluded
    });
    for root in &mut out.roots {
        root.residual = polys
            .iter()
            .map(|p| p.normalized_residual(root.value))
            .fold(0.0, f64::max);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_and_reports_degree() {
        let p = Poly::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(Poly::new(vec![0.0]).degree(), None);
        assert!(Poly::zero().is_zero());
    }

    #[test]
    fn arithmetic() {
        let a = Poly::new(vec![1.0, 1.0]);
        let b = Poly::new(vec![-1.0, 1.0]);
        assert_eq!((&a * &b).coeffs(), &[-1.0, 0.0, 1.0]);
        assert_eq!((&a + &b).coeffs(), &[0.0, 2.0]);
        assert_eq!((&a - &a).degree(), None);
        assert_eq!(a.rescale_argument(2.0).coeffs(), &[1.0, 2.0]);
    }

    #[test]
    fn division() {
        // (t^2 + 4)(t^3 - t + 2) + (3t - 1)
        let d = Poly::new(vec![4.0, 0.0, 1.0]);
        let q = Poly::new(vec![2.0, -1.0, 0.0, 1.0]);
        let r = Poly::new(vec![-1.0, 3.0]);
        let n = &(&d * &q) + &r;
        let (qq, rr) = n.div_rem(&d).unwrap();
        assert_eq!(qq, q);
        assert_eq!(rr, r);
        assert!(n.div_rem(&Poly::zero()).is_err());
    }

    #[test]
    fn linear_resultants() {
        let p = Poly::new(vec![-3.0, 1.0]);
        let q = Poly::new(vec![-1.0, 1.0]);
        assert!((sylvester_resultant(&p, &q).unwrap().value() - 2.0).abs() < 1e-15);
        let shared = sylvester_resultant(&Poly::new(vec![-1.0, 0.0, 1.0]), &q).unwrap();
        assert_eq!(shared.value(), 0.0);
        assert!(sylvester_resultant(&Poly::zero(), &q).is_err());
    }

    #[test]
    fn resultant_scale_is_recoverable() {
        let p = Poly::new(vec![-300.0, 100.0]);
        let q = Poly::new(vec![-0.01, 0.01]);
        // 100 * 0.01 * (3 - 1)
        let r = sylvester_resultant(&p, &q).unwrap();
        assert!((r.value() - 2.0).abs() < 1e-12);
        assert!((r.log10_abs() - 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn separation_detects_common_roots() {
        let p = Poly::from_roots(1.0, &[1.0, 2.0, -3.0]);
        let q = Poly::from_roots(2.0, &[2.0, 5.0]);
        assert!(separation(&p, &q).unwrap() < 1e-14);
        let q = Poly::from_roots(2.0, &[2.5, 5.0]);
        assert!(separation(&p, &q).unwrap() > 1e-3);
    }

    #[test]
    fn roots_of_simple_polynomials() {
        let r = real_roots(&Poly::new(vec![-16.0, 0.0, 9.0]), 1e-7);
        let v = r.values();
        assert_eq!(v.len(), 2);
        assert!((v[0] + 4.0 / 3.0).abs() < 1e-14 && (v[1] - 4.0 / 3.0).abs() < 1e-14);
        assert!(real_roots(&Poly::new(vec![4.0, 0.0, 1.0]), 1e-7).is_empty());
    }

    #[test]
    fn roots_with_multiplicity() {
        let p = Poly::from_roots(3.0, &[1.0, 1.0, -2.0]);
        let r = real_roots(&p, 1e-7);
        assert_eq!(r.len(), 2);
        assert_eq!(r.roots[1].multiplicity, 2);
        assert!((r.roots[1].value - 1.0).abs() < 1e-7);
    }

    #[test]
    fn radial_example_third_polynomial_roots() {
        // 2 * 256 * (9 t^5 - 52 t^3 + 64 t)
        let p = Poly::new(vec![0.0, 64.0, 0.0, -52.0, 0.0, 9.0]).scale(512.0);
        let v = real_roots(&p, 1e-7).values();
        let expect = [-2.0, -4.0 / 3.0, 0.0, 4.0 / 3.0, 2.0];
        assert_eq!(v.len(), 5);
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn common_roots_exclude() {
        let a = Poly::from_roots(1.0, &[-2.0, 2.0, 7.0]);
        let b = Poly::from_roots(1.0, &[-2.0, 2.0, 0.5]);
        let c = Poly::from_roots(1.0, &[-2.0, 2.0]);
        let excl = Poly::from_roots(1.0, &[2.0, 9.0]);
        let r = common_real_roots(&[&a, &b, &c], &excl, 1e-7).unwrap();
        assert_eq!(r.values().len(), 1);
        assert!((r.values()[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_roots_are_deflated() {
        let z = complex_roots(&Poly::new(vec![0.0, 0.0, 0.0, 4.0]));
        assert_eq!(z.len(), 3);
        assert!(z.iter().all(|r| r.norm() == 0.0));
        let z = complex_roots(&Poly::new(vec![0.0, -2.0, -5.0, 4.0]));
        assert_eq!(z.len(), 3);
        assert_eq!(z.iter().filter(|r| r.norm() == 0.0).count(), 1);
    }
}
