//! Truncated Taylor arithmetic.
//!
//! [`Jet1`] carries a univariate expansion in time, [`Jet2`] a bivariate
//! expansion in `(t, x)` truncated at a total degree. Both store normalized
//! coefficients `c_l = f^(l) / l!`, so products are plain Cauchy products.
//! Model fluxes and coupling functions are written once against [`Arith`] and
//! evaluated on plain scalars, time jets or space-time jets alike.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{factorial, from_usize, Scalar};

/// Number-like type closed under field operations and square roots.
pub trait Arith<S: Scalar>:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant with the same truncation shape as `self`.
    fn constant_like(&self, c: S) -> Self;
    /// Leading (point) value.
    fn value(&self) -> S;
    fn sqrt(&self) -> Self;
    fn scale(&self, s: S) -> Self;
    /// Whether every coefficient is finite.
    fn is_finite(&self) -> bool;
}

impl<S: Scalar> Arith<S> for S {
    #[inline]
    fn constant_like(&self, c: S) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> S {
        *self
    }
    #[inline]
    fn sqrt(&self) -> Self {
        num_traits::Float::sqrt(*self)
    }
    #[inline]
    fn scale(&self, s: S) -> Self {
        *self * s
    }
    #[inline]
    fn is_finite(&self) -> bool {
        num_traits::Float::is_finite(*self)
    }
}

/// Univariate truncated Taylor series with `order` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet1<S> {
    c: Vec<S>,
}

impl<S: Scalar> Jet1<S> {
    pub fn constant(value: S, order: usize) -> Self {
        let mut c = vec![S::zero(); order.max(1)];
        c[0] = value;
        Self { c }
    }

    /// The independent variable `t0 + t`.
    pub fn variable(t0: S, order: usize) -> Self {
        let mut j = Self::constant(t0, order);
        if j.c.len() > 1 {
            j.c[1] = S::one();
        }
        j
    }

    pub fn from_normalized(c: Vec<S>) -> Self {
        assert!(!c.is_empty(), "jet needs at least one coefficient");
        Self { c }
    }

    /// Builds a jet from derivatives `d^l f / dt^l`, `l = 0..`.
    pub fn from_derivatives(d: &[S]) -> Self {
        let c = d
            .iter()
            .enumerate()
            .map(|(l, v)| *v / factorial::<S>(l))
            .collect();
        Self::from_normalized(c)
    }

    pub fn order(&self) -> usize {
        self.c.len()
    }

    pub fn normalized(&self) -> &[S] {
        &self.c
    }

    pub fn normalized_mut(&mut self) -> &mut [S] {
        &mut self.c
    }

    /// `d^l f / dt^l` at the anchor.
    pub fn derivative(&self, l: usize) -> S {
        self.c.get(l).map_or(S::zero(), |v| *v * factorial::<S>(l))
    }

    pub fn derivatives(&self) -> Vec<S> {
        (0..self.c.len()).map(|l| self.derivative(l)).collect()
    }

    /// Evaluates the truncated polynomial at offset `t`.
    pub fn eval(&self, t: S) -> S {
        self.c.iter().rev().fold(S::zero(), |acc, v| acc * t + *v)
    }

    /// Mean value over `[0, dt]`, integrating the polynomial exactly.
    pub fn mean_over(&self, dt: S) -> S {
        self.c
            .iter()
            .enumerate()
            .rev()
            .fold(S::zero(), |acc, (l, v)| {
                acc * dt + *v / from_usize::<S>(l + 1)
            })
    }

    /// Same series with a different number of coefficients (zero padded).
    pub fn with_order(&self, order: usize) -> Self {
        let mut c = self.c.clone();
        c.resize(order.max(1), S::zero());
        Self { c }
    }

    fn zip(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        debug_assert_eq!(self.c.len(), other.c.len(), "jet order mismatch");
        Self {
            c: self
                .c
                .iter()
                .zip(&other.c)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }
}

impl<S: Scalar> Add for Jet1<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl<S: Scalar> Sub for Jet1<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl<S: Scalar> Neg for Jet1<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            c: self.c.into_iter().map(|v| -v).collect(),
        }
    }
}

impl<S: Scalar> Mul for Jet1<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let n = self.c.len();
        debug_assert_eq!(n, rhs.c.len(), "jet order mismatch");
        let mut c = vec![S::zero(); n];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c[..n - i].iter().enumerate() {
                c[i + j] += *a * *b;
            }
        }
        Self { c }
    }
}

impl<S: Scalar> Div for Jet1<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let n = self.c.len();
        debug_assert_eq!(n, rhs.c.len(), "jet order mismatch");
        let g0 = rhs.c[0];
        let mut c = vec![S::zero(); n];
        for k in 0..n {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= rhs.c[j] * c[k - j];
            }
            c[k] = acc / g0;
        }
        Self { c }
    }
}

impl<S: Scalar> Arith<S> for Jet1<S> {
    fn constant_like(&self, c: S) -> Self {
        Self::constant(c, self.c.len())
    }
    fn value(&self) -> S {
        self.c[0]
    }
    fn sqrt(&self) -> Self {
        let n = self.c.len();
        let mut s = vec![S::zero(); n];
        s[0] = self.c[0].sqrt();
        let two = S::one() + S::one();
        for k in 1..n {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc / (two * s[0]);
        }
        Self { c: s }
    }
    fn scale(&self, s: S) -> Self {
        Self {
            c: self.c.iter().map(|v| *v * s).collect(),
        }
    }
    fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }
}

/// Evaluates `f` on time jets and checks the result is well defined.
///
/// The `l`-th coefficient of each output equals `d^l/dt^l f(inputs(t)) / l!`
/// at the common anchor.
pub fn propagate<S, F>(inputs: &[Jet1<S>], f: F) -> Result<Vec<Jet1<S>>>
where
    S: Scalar,
    F: Fn(&[Jet1<S>]) -> Vec<Jet1<S>>,
{
    if let Some(first) = inputs.first() {
        if inputs.iter().any(|j| j.order() != first.order()) {
            return Err(Error::JetShape("inputs of different order".into()));
        }
    }
    let out = f(inputs);
    if out.iter().any(|j| !j.is_finite()) {
        return Err(Error::NonSmooth);
    }
    Ok(out)
}

/// Bivariate truncated Taylor series in `(t, x)` with total degree `< order`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2<S> {
    order: usize,
    c: Vec<S>,
}

impl<S: Scalar> Jet2<S> {
    pub fn zeros(order: usize) -> Self {
        let order = order.max(1);
        Self {
            order,
            c: vec![S::zero(); order * (order + 1) / 2],
        }
    }

    pub fn constant(value: S, order: usize) -> Self {
        let mut j = Self::zeros(order);
        j.c[0] = value;
        j
    }

    /// A function of `x` alone from its normalized coefficients.
    pub fn from_x_normalized(cx: &[S], order: usize) -> Self {
        let mut j = Self::zeros(order);
        for (b, v) in cx.iter().enumerate().take(order) {
            j.c[b] = *v;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    fn idx(&self, a: usize, b: usize) -> usize {
        // Row `a` (time power) holds `order - a` entries.
        a * self.order - a * a.saturating_sub(1) / 2 + b
    }

    /// Normalized coefficient of `t^a x^b`.
    #[inline]
    pub fn get(&self, a: usize, b: usize) -> S {
        if a + b >= self.order {
            return S::zero();
        }
        self.c[self.idx(a, b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: S) {
        assert!(a + b < self.order, "coefficient outside truncation");
        let i = self.idx(a, b);
        self.c[i] = v;
    }

    /// Mixed derivative `d^a/dt^a d^b/dx^b` at the anchor.
    pub fn derivative(&self, a: usize, b: usize) -> S {
        self.get(a, b) * factorial::<S>(a) * factorial::<S>(b)
    }

    /// `d/dx` of the series (one total degree is lost at the top).
    pub fn dx(&self) -> Self {
        let mut out = Self::zeros(self.order);
        for a in 0..self.order {
            for b in 0..self.order - a - 1 {
                out.set(a, b, from_usize::<S>(b + 1) * self.get(a, b + 1));
            }
        }
        out
    }

    /// Evaluates the polynomial at offsets `(t, x)`.
    pub fn eval(&self, t: S, x: S) -> S {
        let mut acc = S::zero();
        let mut tp = S::one();
        for a in 0..self.order {
            let mut row = S::zero();
            for b in (0..self.order - a).rev() {
                row = row * x + self.get(a, b);
            }
            acc += tp * row;
            tp *= t;
        }
        acc
    }

    /// Time coefficients at `x = anchor`, normalized.
    pub fn time_normalized(&self) -> Vec<S> {
        (0..self.order).map(|a| self.get(a, 0)).collect()
    }

    fn zip(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        debug_assert_eq!(self.order, other.order, "jet order mismatch");
        Self {
            order: self.order,
            c: self
                .c
                .iter()
                .zip(&other.c)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    /// Iterates `(a, b, index)` in graded lexicographic order.
    fn graded(order: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..order).flat_map(move |deg| (0..=deg).map(move |a| (a, deg - a)))
    }
}

impl<S: Scalar> Add for Jet2<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a + b)
    }
}

impl<S: Scalar> Sub for Jet2<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip(&rhs, |a, b| a - b)
    }
}

impl<S: Scalar> Neg for Jet2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            order: self.order,
            c: self.c.into_iter().map(|v| -v).collect(),
        }
    }
}

impl<S: Scalar> Mul for Jet2<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let k = self.order;
        debug_assert_eq!(k, rhs.order, "jet order mismatch");
        let mut out = Self::zeros(k);
        for a1 in 0..k {
            for b1 in 0..k - a1 {
                let f = self.c[self.idx(a1, b1)];
                if f.is_zero() {
                    continue;
                }
                for a2 in 0..k - a1 - b1 {
                    for b2 in 0..k - a1 - b1 - a2 {
                        let i = out.idx(a1 + a2, b1 + b2);
                        out.c[i] += f * rhs.c[rhs.idx(a2, b2)];
                    }
                }
            }
        }
        out
    }
}

impl<S: Scalar> Div for Jet2<S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let k = self.order;
        debug_assert_eq!(k, rhs.order, "jet order mismatch");
        let g0 = rhs.c[0];
        let mut out = Self::zeros(k);
        for (a, b) in Self::graded(k) {
            let mut acc = self.get(a, b);
            for a1 in 0..=a {
                for b1 in 0..=b {
                    if a1 == 0 && b1 == 0 {
                        continue;
                    }
                    acc -= rhs.get(a1, b1) * out.get(a - a1, b - b1);
                }
            }
            out.set(a, b, acc / g0);
        }
        out
    }
}

impl<S: Scalar> Arith<S> for Jet2<S> {
    fn constant_like(&self, c: S) -> Self {
        Self::constant(c, self.order)
    }
    fn value(&self) -> S {
        self.c[0]
    }
    fn sqrt(&self) -> Self {
        let k = self.order;
        let mut out = Self::zeros(k);
        let s0 = self.c[0].sqrt();
        let two = S::one() + S::one();
        for (a, b) in Self::graded(k) {
            if a == 0 && b == 0 {
                out.set(0, 0, s0);
                continue;
            }
            let mut acc = self.get(a, b);
            for a1 in 0..=a {
                for b1 in 0..=b {
                    if (a1 == 0 && b1 == 0) || (a1 == a && b1 == b) {
                        continue;
                    }
                    acc -= out.get(a1, b1) * out.get(a - a1, b - b1);
                }
            }
            out.set(a, b, acc / (two * s0));
        }
        out
    }
    fn scale(&self, s: S) -> Self {
        Self {
            order: self.order,
            c: self.c.iter().map(|v| *v * s).collect(),
        }
    }
    fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sin_times_cos_matches_analytic_derivatives() {
        // d^l/dt^l [sin t cos t] = d^l/dt^l [sin(2t)/2] at t = 0.3
        let t0 = 0.3_f64;
        let order = 4;
        let sin = Jet1::from_derivatives(&[t0.sin(), t0.cos(), -t0.sin(), -t0.cos()]);
        let cos = Jet1::from_derivatives(&[t0.cos(), -t0.sin(), -t0.cos(), t0.sin()]);
        assert_eq!(sin.order(), order);
        let out = propagate(&[sin, cos], |v| vec![v[0].clone() * v[1].clone()]).unwrap();
        let s2 = (2.0 * t0).sin();
        let c2 = (2.0 * t0).cos();
        let expected = [0.5 * s2, c2, -2.0 * s2, -4.0 * c2];
        for (l, e) in expected.iter().enumerate() {
            assert_relative_eq!(out[0].derivative(l), *e, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_propagation_returns_input() {
        let j = Jet1::from_normalized(vec![1.0, -2.0, 0.5]);
        let out = propagate(std::slice::from_ref(&j), |v| v.to_vec()).unwrap();
        assert_eq!(out[0], j);
    }

    #[test]
    fn division_by_zero_jet_is_reported() {
        let a = Jet1::variable(1.0, 3);
        let z = Jet1::constant(0.0, 3);
        let err = propagate(&[a, z], |v| vec![v[0].clone() / v[1].clone()]).unwrap_err();
        assert!(matches!(err, Error::NonSmooth));
    }

    #[test]
    fn mixed_orders_are_rejected() {
        let a = Jet1::variable(1.0, 3);
        let b = Jet1::variable(1.0, 4);
        assert!(propagate(&[a, b], |v| v.to_vec()).is_err());
    }

    #[test]
    fn jet1_division_and_sqrt_invert_products() {
        let a = Jet1::from_normalized(vec![2.0, 0.3, -0.1, 0.05, 0.2]);
        let b = Jet1::from_normalized(vec![1.5, -0.4, 0.2, 0.0, 0.1]);
        let q = (a.clone() * b.clone()) / b.clone();
        for (x, y) in q.normalized().iter().zip(a.normalized()) {
            assert_relative_eq!(*x, *y, epsilon = 1e-14);
        }
        let s = a.sqrt();
        let back = s.clone() * s;
        for (x, y) in back.normalized().iter().zip(a.normalized()) {
            assert_relative_eq!(*x, *y, epsilon = 1e-14);
        }
    }

    #[test]
    fn mean_over_integrates_polynomial_exactly() {
        // f(t) = 1 + 2t + 3t^2, mean over [0, 2] = (2 + 4 + 8) / 2 = 7
        let f = Jet1::from_normalized(vec![1.0, 2.0, 3.0]);
        assert_relative_eq!(f.mean_over(2.0), 7.0, epsilon = 1e-14);
        assert_relative_eq!(f.eval(2.0), 17.0, epsilon = 1e-14);
    }

    #[test]
    fn jet2_product_matches_polynomial_product() {
        // (1 + t + 2x)(3 - x + t x) truncated at total degree 2
        let order = 3;
        let mut p = Jet2::zeros(order);
        p.set(0, 0, 1.0);
        p.set(1, 0, 1.0);
        p.set(0, 1, 2.0);
        let mut q = Jet2::zeros(order);
        q.set(0, 0, 3.0);
        q.set(0, 1, -1.0);
        q.set(1, 1, 1.0);
        let r = p.clone() * q.clone();
        assert_relative_eq!(r.get(0, 0), 3.0);
        assert_relative_eq!(r.get(1, 0), 3.0);
        assert_relative_eq!(r.get(0, 1), 5.0);
        assert_relative_eq!(r.get(1, 1), 0.0);
        assert_relative_eq!(r.get(0, 2), -2.0);
        assert_relative_eq!(r.get(2, 0), 0.0);
        let back = r / q;
        for a in 0..order {
            for b in 0..order - a {
                assert_relative_eq!(back.get(a, b), p.get(a, b), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn jet2_sqrt_and_eval() {
        let mut p = Jet2::zeros(4);
        p.set(0, 0, 4.0);
        p.set(1, 0, 0.5);
        p.set(0, 1, -0.25);
        p.set(1, 1, 0.1);
        let s = p.sqrt();
        let sq = s.clone() * s;
        for a in 0..4 {
            for b in 0..4 - a {
                assert_relative_eq!(sq.get(a, b), p.get(a, b), epsilon = 1e-14);
            }
        }
        assert_relative_eq!(p.eval(0.1, 0.2), 4.0 + 0.05 - 0.05 + 0.002, epsilon = 1e-14);
    }
}
