//! Truncated bivariate Taylor expansions.
//!
//! A [`Jet`] of order `J` stores the Taylor coefficients
//! `c[i][j] = (d/dx)^i (d/dy)^j f / (i! j!)` of a scalar field at a base point
//! for every `i + j <= J`. Arithmetic on jets is the arithmetic of truncated
//! power series in the displacements `dx`, `dy`, so partial derivatives come
//! out exactly (up to rounding) without finite differencing.
//!
//! Jets of different orders may be combined; the result carries the smaller
//! order. Coordinate differentiation lowers the order by one.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 6;

#[inline]
fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

/// Number of stored coefficients for a jet of the given order.
#[inline]
pub fn coeff_count(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    base: [f64; 2],
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, base: [f64; 2], order: usize) -> Self {
        let mut coeffs = vec![0.0; coeff_count(order)];
        coeffs[0] = value;
        Jet {
            order,
            base,
            coeffs,
        }
    }

    pub fn zero(base: [f64; 2], order: usize) -> Self {
        Self::constant(0.0, base, order)
    }

    /// The coordinate function `x` (`axis == 0`) or `y` (`axis == 1`).
    pub fn variable(axis: usize, base: [f64; 2], order: usize) -> Self {
        assert!(axis < 2, "axis must be 0 or 1");
        let mut jet = Self::constant(base[axis], base, order);
        if order >= 1 {
            let k = if axis == 0 { index(1, 0) } else { index(0, 1) };
            jet.coeffs[k] = 1.0;
        }
        jet
    }

    /// Builds a jet from Taylor-normalized coefficients laid out by total
    /// degree, then by the power of `y`.
    ///
    /// Panics if `coeffs.len() != coeff_count(order)`.
    pub fn from_coeffs(order: usize, base: [f64; 2], coeffs: Vec<f64>) -> Self {
        assert_eq!(
            coeffs.len(),
            coeff_count(order),
            "coefficient count mismatch"
        );
        Jet {
            order,
            base,
            coeffs,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> [f64; 2] {
        self.base
    }

    /// Value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor-normalized coefficient of `dx^i dy^j`; zero beyond the truncation order.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.coeffs[index(i, j)]
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial derivative `(d/dx)^i (d/dy)^k` at the base point.
    pub fn partial(&self, i: usize, k: usize) -> Result<f64> {
        if i + k > self.order {
            return Err(Error::OrderExceeded {
                requested: i + k,
                available: self.order,
            });
        }
        Ok(self.coeffs[index(i, k)] * factorial(i) * factorial(k))
    }

    /// Jet of the coordinate partial derivative along `axis`, one order lower.
    pub fn derivative(&self, axis: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(Error::OrderExceeded {
                requested: 1,
                available: 0,
            });
        }
        let order = self.order - 1;
        let mut coeffs = vec![0.0; coeff_count(order)];
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                coeffs[index(i, j)] = if axis == 0 {
                    (i + 1) as f64 * self.coeffs[index(i + 1, j)]
                } else {
                    (j + 1) as f64 * self.coeffs[index(i, j + 1)]
                };
            }
        }
        Ok(Jet {
            order,
            base: self.base,
            coeffs,
        })
    }

    /// Gradient `(d/dx, d/dy)` as jets of one lower order.
    pub fn gradient(&self) -> Result<[Jet; 2]> {
        Ok([self.derivative(0)?, self.derivative(1)?])
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            order,
            base: self.base,
            coeffs: self.coeffs[..coeff_count(order)].to_vec(),
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            order: self.order,
            base: self.base,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert_eq!(self.base, other.base, "jets at different base points");
        let order = self.order.min(other.order);
        let n = coeff_count(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| f(*a, *b))
            .collect();
        Jet {
            order,
            base: self.base,
            coeffs,
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        debug_assert_eq!(self.base, other.base, "jets at different base points");
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; coeff_count(order)];
        for da in 0..=order {
            for qa in 0..=da {
                let a = self.coeffs[index(da - qa, qa)];
                if a == 0.0 {
                    continue;
                }
                let pa = da - qa;
                for db in 0..=(order - da) {
                    for qb in 0..=db {
                        let b = other.coeffs[index(db - qb, qb)];
                        coeffs[index(pa + db - qb, qa + qb)] += a * b;
                    }
                }
            }
        }
        Jet {
            order,
            base: self.base,
            coeffs,
        }
    }

    /// Quotient of truncated series; fails when the divisor vanishes at the base point.
    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        debug_assert_eq!(self.base, other.base, "jets at different base points");
        let b0 = other.coeffs[0];
        if b0 == 0.0 || !b0.is_finite() {
            return Err(Error::DegenerateDivision {
                point: self.base,
                span: None,
            });
        }
        let order = self.order.min(other.order);
        let mut q = vec![0.0; coeff_count(order)];
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                let mut s = self.coeffs[index(i, j)];
                // every other term of the Cauchy sum involves lower-degree q entries
                for p in 0..=i {
                    for r in 0..=j {
                        if p == i && r == j {
                            continue;
                        }
                        let bq = other.coeffs[index(i - p, j - r)];
                        if bq != 0.0 {
                            s -= q[index(p, r)] * bq;
                        }
                    }
                }
                q[index(i, j)] = s / b0;
            }
        }
        Ok(Jet {
            order,
            base: self.base,
            coeffs: q,
        })
    }

    pub fn recip(&self) -> Result<Jet> {
        Jet::constant(1.0, self.base, self.order).try_div(self)
    }

    /// Composes a univariate analytic function with this jet.
    ///
    /// `series[k]` must hold `f^(k)(v) / k!` where `v` is this jet's value;
    /// at least `order + 1` entries are required.
    pub fn compose(&self, series: &[f64]) -> Jet {
        assert!(
            series.len() > self.order,
            "series needs {} terms, got {}",
            self.order + 1,
            series.len()
        );
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(series[self.order], self.base, self.order);
        for k in (0..self.order).rev() {
            acc = acc.product(&h);
            acc.coeffs[0] += series[k];
        }
        acc
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let series: Vec<f64> = (0..=self.order).map(|k| e / factorial(k)).collect();
        self.compose(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let v = self.value();
        if !(v > 0.0) {
            return Err(self.domain("ln"));
        }
        let mut series = vec![v.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (k as f64 * v.powi(k as i32)));
        }
        Ok(self.compose(&series))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if !(self.value() > 0.0) {
            return Err(self.domain("sqrt"));
        }
        Ok(self.real_power(0.5))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let series: Vec<f64> = (0..=self.order)
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let series: Vec<f64> = (0..=self.order)
            .map(|k| cycle[k % 4] / factorial(k))
            .collect();
        self.compose(&series)
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = Jet::constant(1.0, self.base, self.order);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        Ok(result)
    }

    /// `self^c` for a real exponent. Integer exponents go through [`Jet::powi`];
    /// otherwise the base value must be positive.
    pub fn powf(&self, c: f64) -> Result<Jet> {
        if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
            return self.powi(c as i32);
        }
        if !(self.value() > 0.0) {
            return Err(self.domain("pow"));
        }
        Ok(self.real_power(c))
    }

    /// General power `self^other = exp(other * ln(self))`; falls back to
    /// [`Jet::powf`] when the exponent is a constant jet.
    pub fn pow(&self, other: &Jet) -> Result<Jet> {
        if other.coeffs[1..].iter().all(|c| *c == 0.0) {
            return self.powf(other.value());
        }
        if !(self.value() > 0.0) {
            return Err(self.domain("pow"));
        }
        Ok((other * &self.ln()?).exp())
    }

    fn real_power(&self, c: f64) -> Jet {
        let v = self.value();
        let mut series = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            series.push(binom * v.powf(c - k as f64));
            binom *= (c - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&series)
    }

    fn domain(&self, func: &'static str) -> Error {
        Error::Domain {
            func,
            arg: self.value(),
            point: self.base,
            span: None,
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
binop!(Mul, mul, |a, b| a.product(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = &*self - rhs;
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = &*self - &rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: [f64; 2] = [0.0, 0.0];

    #[test]
    fn one_plus_x_times_one_minus_x() {
        let x = Jet::variable(0, O, 2);
        let one = Jet::constant(1.0, O, 2);
        let p = (&one + &x) * (&one - &x);
        assert_eq!(p.coeff(0, 0), 1.0);
        assert_eq!(p.coeff(2, 0), -1.0);
        for (i, j) in [(1, 0), (0, 1), (1, 1), (0, 2)] {
            assert_eq!(p.coeff(i, j), 0.0);
        }
    }

    #[test]
    fn constant_quotient() {
        let a = Jet::constant(3.0, O, 4);
        let b = Jet::constant(2.0, O, 4);
        let q = a.try_div(&b).unwrap();
        assert_eq!(q, Jet::constant(1.5, O, 4));
    }

    #[test]
    fn division_by_vanishing_jet_reports_point() {
        let p = [0.0, 2.5];
        let x = Jet::variable(0, p, 3);
        let err = Jet::constant(1.0, p, 3).try_div(&x).unwrap_err();
        assert_eq!(
            err,
            Error::DegenerateDivision {
                point: p,
                span: None
            }
        );
    }

    /// Naive dense bivariate polynomial product used as an independent oracle.
    fn naive_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 7]; 7] {
        let mut out = [[0.0; 7]; 7];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        out[i + k][j + l] += a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn cubic_product_matches_naive_expansion() {
        // (x + y)^2 (x - y) at (0.5, 0.25) in displacements: x = 0.5 + dx, y = 0.25 + dy
        let base = [0.5, 0.25];
        let s: [[f64; 4]; 4] = {
            // (0.75 + dx + dy)^2
            let mut m = [[0.0; 4]; 4];
            m[0][0] = 0.5625;
            m[1][0] = 1.5;
            m[0][1] = 1.5;
            m[2][0] = 1.0;
            m[1][1] = 2.0;
            m[0][2] = 1.0;
            m
        };
        let d: [[f64; 4]; 4] = {
            let mut m = [[0.0; 4]; 4];
            m[0][0] = 0.25;
            m[1][0] = 1.0;
            m[0][1] = -1.0;
            m
        };
        let oracle = naive_mul(&s, &d);
        let x = Jet::variable(0, base, 3);
        let y = Jet::variable(1, base, 3);
        let jet = (&x + &y).powi(2).unwrap() * (&x - &y);
        for i in 0..=3 {
            for j in 0..=(3 - i) {
                assert_eq!(jet.coeff(i, j), oracle[i][j], "coefficient ({i},{j})");
            }
        }
    }

    #[test]
    fn exp_of_x_series() {
        let e = Jet::variable(0, O, 3).exp();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (k, v) in expect.iter().enumerate() {
            assert!((e.coeff(k, 0) - v).abs() < 1e-15);
        }
        assert_eq!(e.coeff(0, 1), 0.0);
    }

    #[test]
    fn sqrt_of_four() {
        let r = Jet::constant(4.0, O, 3).sqrt().unwrap();
        assert_eq!(r, Jet::constant(2.0, O, 3));
    }

    #[test]
    fn log_and_sqrt_reject_nonpositive() {
        let z = Jet::constant(0.0, O, 2);
        assert!(matches!(z.ln(), Err(Error::Domain { func: "ln", .. })));
        let n = Jet::constant(-1.0, O, 2);
        assert!(matches!(n.sqrt(), Err(Error::Domain { func: "sqrt", .. })));
    }

    #[test]
    fn extract_partials() {
        let base = [1.0, 2.0];
        let x = Jet::variable(0, base, 2);
        let y = Jet::variable(1, base, 2);
        let f = &x * &x + &y * &y;
        assert_eq!(f.partial(0, 0).unwrap(), 5.0);
        assert_eq!(f.partial(1, 0).unwrap(), 2.0);
        assert_eq!(f.partial(0, 1).unwrap(), 4.0);
        assert_eq!(f.partial(2, 0).unwrap(), 2.0);
        assert_eq!(
            f.partial(2, 1),
            Err(Error::OrderExceeded {
                requested: 3,
                available: 2
            })
        );
    }

    #[test]
    fn mixed_fourth_partial_of_exp_sum() {
        let x = Jet::variable(0, O, 6);
        let y = Jet::variable(1, O, 6);
        let e = (x + y).exp();
        assert!((e.partial(2, 2).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_lowers_order() {
        let base = [0.3, -0.2];
        let x = Jet::variable(0, base, 4);
        let y = Jet::variable(1, base, 4);
        let f = (&x * &y).sin();
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.order(), 3);
        for (i, j) in [(0, 0), (1, 0), (0, 2), (1, 2)] {
            let a = fx.partial(i, j).unwrap();
            let b = f.partial(i + 1, j).unwrap();
            assert!((a - b).abs() < 1e-13, "({i},{j}): {a} vs {b}");
        }
    }

    #[test]
    fn mixed_orders_truncate_to_minimum() {
        let a = Jet::variable(0, O, 5);
        let b = Jet::variable(1, O, 2);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!((&a + &b).order(), 2);
    }

    #[test]
    fn power_with_jet_exponent() {
        let base = [1.5, 0.5];
        let x = Jet::variable(0, base, 3);
        let y = Jet::variable(1, base, 3);
        let p = x.pow(&y).unwrap();
        // d/dy x^y = x^y ln x
        let expect = 1.5f64.powf(0.5) * 1.5f64.ln();
        assert!((p.partial(0, 1).unwrap() - expect).abs() < 1e-14);
        let q = x.powf(2.5).unwrap();
        assert!((q.partial(1, 0).unwrap() - 2.5 * 1.5f64.powf(1.5)).abs() < 1e-13);
        let neg = (&x - &Jet::constant(3.0, base, 3)).powf(2.0).unwrap();
        assert!((neg.value() - 2.25).abs() < 1e-15);
    }
}
