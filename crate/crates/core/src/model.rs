//! Conservation laws on a single edge and the shallow water instantiation.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::jet::{Arith, Jet1};
use crate::scalar::{lit, Scalar};

/// Eigen decomposition of the flux Jacobian at a state.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigen<S> {
    /// Ascending eigenvalues.
    pub values: Vec<S>,
    /// Right eigenvectors, `vectors[j]` belongs to `values[j]`, first component 1.
    pub vectors: Vec<Vec<S>>,
    /// Number of strictly positive eigenvalues.
    pub positive: usize,
}

impl<S: Scalar> Eigen<S> {
    /// Columns spanning the outgoing (positive speed) waves.
    pub fn positive_basis(&self) -> Vec<Vec<S>> {
        let d = self.values.len();
        self.vectors[d - self.positive..].to_vec()
    }
}

/// A hyperbolic balance law `u_t + f(u)_x = s(u, b_x)` on one edge.
///
/// Junctions see every attached edge in an outward pointing frame; the model
/// seen through a mirrored frame is [`ConservationLaw::mirrored`], and states
/// transform by the sign pattern [`ConservationLaw::reflection`].
pub trait ConservationLaw<S: Scalar>: Clone + Debug + Send + Sync {
    fn dim(&self) -> usize;

    fn flux<V: Arith<S>>(&self, u: &[V]) -> Vec<V>;

    fn admissible(&self, u: &[S]) -> bool;

    /// Ascending eigenvalues of the flux Jacobian.
    fn eigenvalues(&self, u: &[S]) -> Vec<S>;

    /// Right eigenvectors matching [`ConservationLaw::eigenvalues`], first component 1.
    fn eigenvectors(&self, u: &[S]) -> Vec<Vec<S>>;

    /// Per-component signs of the state under `x -> -x`.
    fn reflection(&self) -> Vec<S>;

    /// The same law written in the mirrored coordinate.
    fn mirrored(&self) -> Self;

    /// State reached from `ur` along the outgoing wave curve at parameter `xi`.
    fn lax_curve(&self, xi: S, ur: &[S]) -> Result<Vec<S>>;

    /// Derivative of [`ConservationLaw::lax_curve`] in `xi`.
    fn lax_curve_jacobian(&self, xi: S, ur: &[S]) -> Result<Vec<S>>;

    /// Curve parameter of the anchor itself, so `lax_curve(lax_parameter(u), u) == u`.
    fn lax_parameter(&self, u: &[S]) -> S;

    /// Lower bound on `|lambda|` below which the coupling theory breaks down.
    fn eps_eig(&self) -> S {
        lit(1e-8)
    }

    /// Gravitational constant when the law carries a bottom topography source
    /// of the form `(0, -g h b_x)` with the first component as depth.
    fn gravity(&self) -> Option<S> {
        None
    }

    /// Bottom source for a given bottom slope.
    fn bottom_source<V: Arith<S>>(&self, u: &[V], db_dx: &V) -> Vec<V> {
        let _ = db_dx;
        u.iter().map(|v| v.constant_like(S::zero())).collect()
    }

    fn max_speed(&self, u: &[S]) -> S {
        self.eigenvalues(u)
            .iter()
            .fold(S::zero(), |m, l| m.max(l.abs()))
    }

    /// Eigen decomposition with the admissibility and sonic checks applied.
    fn eigen(&self, u: &[S]) -> Result<Eigen<S>> {
        if !self.admissible(u) {
            return Err(Error::Inadmissible(format!("{u:?}")));
        }
        let values = self.eigenvalues(u);
        let eps = self.eps_eig();
        if let Some(l) = values.iter().find(|l| l.abs() <= eps) {
            return Err(Error::NearSonic(l.to_f64().unwrap_or(f64::NAN)));
        }
        let positive = values.iter().filter(|l| **l > S::zero()).count();
        Ok(Eigen {
            vectors: self.eigenvectors(u),
            values,
            positive,
        })
    }

    /// Flux Jacobian, rows indexed by flux component.
    fn jacobian(&self, u: &[S]) -> Vec<Vec<S>> {
        let d = self.dim();
        let mut m = vec![vec![S::zero(); d]; d];
        for j in 0..d {
            let x: Vec<Jet1<S>> = (0..d)
                .map(|i| {
                    let mut v = Jet1::constant(u[i], 2);
                    if i == j {
                        v.normalized_mut()[1] = S::one();
                    }
                    v
                })
                .collect();
            for (i, fi) in self.flux(&x).iter().enumerate() {
                m[i][j] = fi.normalized()[1];
            }
        }
        m
    }

    /// Columns of `R+`, the eigenvectors with positive eigenvalue.
    fn linear_lax_basis(&self, ug: &[S]) -> Result<Vec<Vec<S>>> {
        Ok(self.eigen(ug)?.positive_basis())
    }
}

/// Shallow water equations for depth `h` and discharge `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShallowWater<S> {
    pub g: S,
    pub eps_eig: S,
}

impl<S: Scalar> Default for ShallowWater<S> {
    fn default() -> Self {
        Self {
            g: lit(9.81),
            eps_eig: lit(1e-8),
        }
    }
}

impl<S: Scalar> ShallowWater<S> {
    pub fn new(g: S) -> Self {
        Self {
            g,
            ..Self::default()
        }
    }

    /// Energy level `q^2 / (2 g h^2) + h`.
    pub fn hydraulic_head<V: Arith<S>>(&self, u: &[V]) -> V {
        hydraulic_head(self.g, u)
    }

    /// Velocity increment across the outgoing wave joining depth `hg` to `hr`.
    fn phi(&self, hg: S, hr: S) -> (S, S) {
        let g = self.g;
        let two = lit::<S>(2.0);
        let half = lit::<S>(0.5);
        if hg <= hr {
            let v = two * ((g * hg).sqrt() - (g * hr).sqrt());
            let d = (g / hg).sqrt();
            (v, d)
        } else {
            let s = half * g * (S::one() / hg + S::one() / hr);
            let rs = s.sqrt();
            let v = (hg - hr) * rs;
            let ds = -half * g / (hg * hg);
            let d = rs + (hg - hr) * ds / (two * rs);
            (v, d)
        }
    }
}

/// `q^2 / (2 g h^2) + h` for a shallow water state.
pub fn hydraulic_head<S: Scalar, V: Arith<S>>(g: S, u: &[V]) -> V {
    let h = u[0].clone();
    let q = u[1].clone();
    let v = q / h.clone();
    (v.clone() * v).scale(S::one() / (lit::<S>(2.0) * g)) + h
}

impl<S: Scalar> ConservationLaw<S> for ShallowWater<S> {
    fn dim(&self) -> usize {
        2
    }

    fn flux<V: Arith<S>>(&self, u: &[V]) -> Vec<V> {
        let h = u[0].clone();
        let q = u[1].clone();
        let mom = q.clone() * q.clone() / h.clone() + (h.clone() * h).scale(lit::<S>(0.5) * self.g);
        vec![q, mom]
    }

    fn admissible(&self, u: &[S]) -> bool {
        u.len() == 2 && u[0] > S::zero() && u[0].is_finite() && u[1].is_finite()
    }

    fn eigenvalues(&self, u: &[S]) -> Vec<S> {
        let v = u[1] / u[0];
        let c = (self.g * u[0]).sqrt();
        vec![v - c, v + c]
    }

    fn eigenvectors(&self, u: &[S]) -> Vec<Vec<S>> {
        self.eigenvalues(u)
            .into_iter()
            .map(|l| vec![S::one(), l])
            .collect()
    }

    fn reflection(&self) -> Vec<S> {
        vec![S::one(), -S::one()]
    }

    fn mirrored(&self) -> Self {
        self.clone()
    }

    fn lax_curve(&self, xi: S, ur: &[S]) -> Result<Vec<S>> {
        if !(xi > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lax curve parameter {xi} must be positive"
            )));
        }
        if !self.admissible(ur) {
            return Err(Error::Inadmissible(format!("{ur:?}")));
        }
        if xi == ur[0] {
            return Ok(ur.to_vec());
        }
        let (phi, _) = self.phi(xi, ur[0]);
        let v = ur[1] / ur[0] + phi;
        Ok(vec![xi, xi * v])
    }

    fn lax_curve_jacobian(&self, xi: S, ur: &[S]) -> Result<Vec<S>> {
        if !(xi > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lax curve parameter {xi} must be positive"
            )));
        }
        if !self.admissible(ur) {
            return Err(Error::Inadmissible(format!("{ur:?}")));
        }
        let (phi, dphi) = self.phi(xi, ur[0]);
        let v = ur[1] / ur[0] + phi;
        Ok(vec![S::one(), v + xi * dphi])
    }

    fn lax_parameter(&self, u: &[S]) -> S {
        u[0]
    }

    fn eps_eig(&self) -> S {
        self.eps_eig
    }

    fn gravity(&self) -> Option<S> {
        Some(self.g)
    }

    fn bottom_source<V: Arith<S>>(&self, u: &[V], db_dx: &V) -> Vec<V> {
        let h = u[0].clone();
        vec![
            h.constant_like(S::zero()),
            -(h * db_dx.clone()).scale(self.g),
        ]
    }

    fn jacobian(&self, u: &[S]) -> Vec<Vec<S>> {
        let v = u[1] / u[0];
        vec![
            vec![S::zero(), S::one()],
            vec![self.g * u[0] - v * v, lit::<S>(2.0) * v],
        ]
    }
}
