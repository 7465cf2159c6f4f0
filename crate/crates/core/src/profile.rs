//! Scalar profiles `f(x)` along an edge, used for initial data and bottoms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::quadrature::gauss_legendre;
use crate::scalar::{factorial, from_usize, Scalar};

/// Interpolation constraint: value at `x` plus `flat` vanishing derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteNode {
    pub x: f64,
    pub value: f64,
    #[serde(default)]
    pub flat: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `sum c_m ((x - center) / scale)^m`.
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `amplitude * sin(omega x + phase)`.
    Sine {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `values[j]` on `[breaks[j-1], breaks[j])`, with `values.len() == breaks.len() + 1`.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// Polynomial through the given nodes, solved on construction.
    Hermite {
        nodes: Vec<HermiteNode>,
    },
    Sum {
        terms: Vec<Profile>,
    },
}

fn one() -> f64 {
    1.0
}

/// Coefficients in `s = (x - center) / scale` of the unique polynomial of degree
/// `sum (1 + flat) - 1` matching all node constraints.
pub fn hermite_init(nodes: &[HermiteNode], center: f64, scale: f64) -> Result<Vec<f64>> {
    let n: usize = nodes.iter().map(|c| c.flat + 1).sum();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "hermite interpolation needs constraints".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for node in nodes {
        let s = (node.x - center) / scale;
        for d in 0..=node.flat {
            let row: Vec<f64> = (0..n)
                .map(|m| {
                    if m < d {
                        0.0
                    } else {
                        falling(m, d) * s.powi((m - d) as i32)
                    }
                })
                .collect();
            // Row equilibration keeps the high derivative rows comparable.
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            rows.push(row.iter().map(|v| v / scale).collect::<Vec<_>>());
            rhs.push(if d == 0 { node.value / scale } else { 0.0 });
        }
    }
    let lu = Lu::new(&rows)
        .ok_or_else(|| Error::InvalidParameter("degenerate hermite constraints".into()))?;
    let mut c = lu.solve(&rhs);
    for _ in 0..3 {
        let r: Vec<f64> = rows
            .iter()
            .zip(&rhs)
            .map(|(row, b)| b - row.iter().zip(&c).map(|(a, x)| a * x).sum::<f64>())
            .collect();
        for (ci, d) in c.iter_mut().zip(lu.solve(&r)) {
            *ci += d;
        }
    }
    Ok(c)
}

fn falling(m: usize, d: usize) -> f64 {
    (0..d).fold(1.0, |acc, i| acc * (m - i) as f64)
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    /// Replaces `Hermite` nodes by explicit polynomial coefficients over `[0, length]`.
    pub fn resolve(&self, length: f64) -> Result<Self> {
        Ok(match self {
            Self::Hermite { nodes } => {
                let half = 0.5 * length;
                Self::Polynomial {
                    coeffs: hermite_init(nodes, half, half)?,
                    center: half,
                    scale: half,
                }
            }
            Self::Sum { terms } => Self::Sum {
                terms: terms
                    .iter()
                    .map(|t| t.resolve(length))
                    .collect::<Result<_>>()?,
            },
            Self::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 || breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config(
                        "piecewise profile needs sorted breaks and one more value".into(),
                    ));
                }
                self.clone()
            }
            Self::Polynomial { scale, .. } if *scale <= 0.0 => {
                return Err(Error::Config("polynomial scale must be positive".into()))
            }
            other => other.clone(),
        })
    }

    /// Normalized Taylor coefficients at `x`, `k` of them. Piecewise parts only
    /// contribute their value.
    pub fn taylor<S: Scalar>(&self, x: S, k: usize) -> Vec<S> {
        let mut out = vec![S::zero(); k];
        self.add_taylor(x, &mut out);
        out
    }

    fn add_taylor<S: Scalar>(&self, x: S, out: &mut [S]) {
        let k = out.len();
        if k == 0 {
            return;
        }
        match self {
            Self::Constant { value } => out[0] += S::from_f64(*value).unwrap(),
            Self::Polynomial {
                coeffs,
                center,
                scale,
            } => {
                let scale = S::from_f64(*scale).unwrap();
                let s = (x - S::from_f64(*center).unwrap()) / scale;
                let mut inv = S::one();
                for (l, o) in out.iter_mut().enumerate() {
                    let mut v = S::zero();
                    for m in (l..coeffs.len()).rev() {
                        v = v * s + S::from_f64(coeffs[m] * binomial(m, l)).unwrap();
                    }
                    // Horner above runs over m with power s^(m-l).
                    *o += v * inv;
                    inv /= scale;
                }
            }
            Self::Sine {
                amplitude,
                omega,
                phase,
            } => {
                let a = S::from_f64(*amplitude).unwrap();
                let w = S::from_f64(*omega).unwrap();
                let arg = w * x + S::from_f64(*phase).unwrap();
                let (s, c) = arg.sin_cos();
                let mut pw = a;
                for (l, o) in out.iter_mut().enumerate() {
                    let d = match l % 4 {
                        0 => s,
                        1 => c,
                        2 => -s,
                        _ => -c,
                    };
                    *o += pw * d / factorial::<S>(l);
                    pw *= w;
                }
            }
            Self::Piecewise { breaks, values } => {
                let xf = x.to_f64().unwrap();
                let j = breaks.iter().take_while(|b| xf >= **b).count();
                out[0] += S::from_f64(values[j]).unwrap();
            }
            Self::Hermite { .. } => panic!("hermite profile must be resolved before evaluation"),
            Self::Sum { terms } => terms.iter().for_each(|t| t.add_taylor(x, out)),
        }
    }

    pub fn eval<S: Scalar>(&self, x: S) -> S {
        self.taylor(x, 1)[0]
    }

    fn breaks(&self, out: &mut Vec<f64>) {
        match self {
            Self::Piecewise { breaks, .. } => out.extend_from_slice(breaks),
            Self::Sum { terms } => terms.iter().for_each(|t| t.breaks(out)),
            _ => {}
        }
    }

    /// Mean over `[a, b]`, split at discontinuities, with `points` Gauss nodes per piece.
    pub fn average<S: Scalar>(&self, a: S, b: S, points: usize) -> S {
        let mut cuts = vec![a];
        let mut br = Vec::new();
        self.breaks(&mut br);
        br.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for v in br {
            let v = S::from_f64(v).unwrap();
            if v > a && v < b {
                cuts.push(v);
            }
        }
        cuts.push(b);
        let (nodes, weights) = gauss_legendre::<S>(points);
        let half = S::from_f64(0.5).unwrap();
        let mut total = S::zero();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = (lo + hi) * half;
            let len = hi - lo;
            let piece: S = nodes
                .iter()
                .zip(&weights)
                .map(|(x, wt)| *wt * self.eval(mid + *x * len))
                .sum();
            total += piece * len;
        }
        total / (b - a)
    }

    /// Cell averages over a uniform grid of `n` cells on `[0, length]`.
    pub fn cell_averages<S: Scalar>(&self, length: S, n: usize, points: usize) -> Vec<S> {
        let dx = length / from_usize::<S>(n);
        (0..n)
            .map(|i| self.average(dx * from_usize::<S>(i), dx * from_usize::<S>(i + 1), points))
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_two_constraints_is_linear() {
        let c = hermite_init(
            &[
                HermiteNode {
                    x: 0.0,
                    value: 2.0,
                    flat: 0,
                },
                HermiteNode {
                    x: 25.0,
                    value: 3.0,
                    flat: 0,
                },
            ],
            0.0,
            25.0,
        )
        .unwrap();
        assert_eq!(c.len(), 2);
        assert_relative_eq!(c[0], 2.0, epsilon = 1e-14);
        assert_relative_eq!(c[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hermite_flat_ends() {
        let nodes = [
            HermiteNode {
                x: 0.0,
                value: 2.0,
                flat: 7,
            },
            HermiteNode {
                x: 25.0,
                value: 3.0,
                flat: 7,
            },
        ];
        let p = Profile::Hermite {
            nodes: nodes.to_vec(),
        }
        .resolve(25.0)
        .unwrap();
        assert_relative_eq!(p.eval(0.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(p.eval(25.0), 3.0, epsilon = 1e-12);
        let t: Vec<f64> = p.taylor(25.0, 8);
        assert!(t[1..].iter().all(|v| v.abs() < 1e-9));
        // Symmetry about the midpoint up to the value offset.
        for x in [1.0, 5.0, 11.0] {
            assert_relative_eq!(p.eval(x) - 2.0, 3.0 - p.eval(25.0 - x), epsilon = 1e-12);
        }
    }

    #[test]
    fn taylor_of_sine_and_polynomial() {
        let s = Profile::Sine {
            amplitude: 2.0,
            omega: 0.5,
            phase: 0.1,
        };
        let t = s.taylor(1.3, 4);
        let arg: f64 = 0.5 * 1.3 + 0.1;
        assert_relative_eq!(t[0], 2.0 * arg.sin());
        assert_relative_eq!(t[1], arg.cos(), epsilon = 1e-15);
        assert_relative_eq!(t[3], -2.0 * 0.125 * arg.cos() / 6.0, epsilon = 1e-15);
        let p = Profile::Polynomial {
            coeffs: vec![1.0, 2.0, 3.0],
            center: 0.0,
            scale: 2.0,
        };
        let t = p.taylor(1.0, 3);
        assert_relative_eq!(t[0], 1.0 + 1.0 + 0.75);
        assert_relative_eq!(t[1], 1.0 + 1.5);
        assert_relative_eq!(t[2], 0.75);
    }

    #[test]
    fn piecewise_average_is_exact() {
        let p = Profile::Piecewise {
            breaks: vec![18.5],
            values: vec![3.0, 2.0],
        };
        assert_relative_eq!(p.average(18.0, 19.0, 5), 2.5, epsilon = 1e-15);
        assert_eq!(p.eval(18.4), 3.0);
        assert_eq!(p.eval(18.5), 2.0);
    }
}
