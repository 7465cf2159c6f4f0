//! Coupling conditions `Phi(u^1..u^n, w) = 0` and junction ODEs `w' = F(u^1..u^n, w)`.
//!
//! All states are given in the outward frame of their edge. Both functions are
//! generic over [`Arith`] so their time derivatives come from jet propagation.

use crate::jet::Arith;
use crate::model::hydraulic_head;
use crate::scalar::{lit, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum CouplingSpec<S> {
    /// Two edges forming a smooth continuation of each other. `reflection` is
    /// the model's state sign pattern under mirroring.
    Transmission { reflection: Vec<S> },
    /// Mass conservation plus equal depths at the junction.
    EqualHeights { n: usize },
    /// Storage tank with cross section `area`; ODE state `(h_m, Q_m)`.
    Manhole { n: usize, area: S, g: S },
}

pub fn coupling_transmission<S: Scalar>(reflection: Vec<S>) -> CouplingSpec<S> {
    CouplingSpec::Transmission { reflection }
}

pub fn coupling_equal_heights<S: Scalar>(n: usize) -> CouplingSpec<S> {
    CouplingSpec::EqualHeights { n }
}

pub fn coupling_manhole<S: Scalar>(n: usize, area: S, g: S) -> CouplingSpec<S> {
    CouplingSpec::Manhole { n, area, g }
}

impl<S: Scalar> CouplingSpec<S> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Transmission { .. } => "transmission",
            Self::EqualHeights { .. } => "equal_heights",
            Self::Manhole { .. } => "manhole",
        }
    }

    /// Number of attached edges.
    pub fn edges(&self) -> usize {
        match self {
            Self::Transmission { .. } => 2,
            Self::EqualHeights { n } | Self::Manhole { n, .. } => *n,
        }
    }

    /// Number of algebraic conditions.
    pub fn conditions(&self) -> usize {
        match self {
            Self::Transmission { reflection } => reflection.len(),
            Self::EqualHeights { n } | Self::Manhole { n, .. } => *n,
        }
    }

    /// Dimension of the junction ODE state.
    pub fn ode_dim(&self) -> usize {
        match self {
            Self::Manhole { .. } => 2,
            _ => 0,
        }
    }

    pub fn phi<V: Arith<S>>(&self, u: &[Vec<V>], w: &[V]) -> Vec<V> {
        match self {
            Self::Transmission { reflection } => reflection
                .iter()
                .enumerate()
                .map(|(c, s)| u[0][c].scale(*s) - u[1][c].clone())
                .collect(),
            Self::EqualHeights { n } => {
                let mut r = Vec::with_capacity(*n);
                r.push(
                    u.iter()
                        .skip(1)
                        .fold(u[0][1].clone(), |acc, ui| acc + ui[1].clone()),
                );
                for ui in &u[1..] {
                    r.push(u[0][0].clone() - ui[0].clone());
                }
                r
            }
            Self::Manhole { n, g, .. } => {
                let mut r = Vec::with_capacity(*n);
                r.push(u.iter().fold(w[1].clone(), |acc, ui| acc + ui[1].clone()));
                let h1 = hydraulic_head(*g, &u[0]);
                for ui in &u[1..] {
                    r.push(h1.clone() - hydraulic_head(*g, ui));
                }
                r
            }
        }
    }

    pub fn rhs<V: Arith<S>>(&self, u: &[Vec<V>], w: &[V]) -> Vec<V> {
        match self {
            Self::Manhole { area, g, .. } => {
                let hm = w[0].clone();
                let qm = w[1].clone();
                let dh = qm.scale(S::one() / *area);
                let vt = qm.scale(S::one() / *area);
                let tank_head =
                    (vt.clone() * vt).scale(S::one() / (lit::<S>(2.0) * *g)) + hm.clone();
                let dq =
                    (hydraulic_head(*g, &u[0]) - tank_head) / hm.scale(S::one() / (*g * *area));
                vec![dh, dq]
            }
            _ => Vec::new(),
        }
    }

    /// Conserved quantity stored in the junction (tank volume for manholes).
    pub fn stored_mass(&self, w: &[S]) -> S {
        match self {
            Self::Manhole { area, .. } => *area * w[0],
            _ => S::zero(),
        }
    }
}
