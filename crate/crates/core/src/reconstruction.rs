//! Polynomial reconstruction from cell averages.
//!
//! Interior cells use a weighted combination of all `K`-cell stencils that
//! contain the cell (each a full degree `K-1` polynomial, so the combination
//! keeps order `K` for any convex weights). Edge ends use nested one-sided
//! stencils of growing length whose weights favour the longest stencil in
//! smooth regions and fall back to shorter ones across discontinuities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::scalar::{from_usize, lit, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReconstructionMode {
    #[default]
    Weno,
    Linear,
}

/// Normalized Taylor coefficients `p_l = d^l u / dx^l (x0) / l!` per component.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialJet<S> {
    pub coeffs: Vec<Vec<S>>,
}

impl<S: Scalar> SpatialJet<S> {
    pub fn constant(u: &[S], order: usize) -> Self {
        let coeffs = u
            .iter()
            .map(|v| {
                let mut c = vec![S::zero(); order.max(1)];
                c[0] = *v;
                c
            })
            .collect();
        Self { coeffs }
    }

    pub fn from_derivatives(derivs: Vec<Vec<S>>) -> Self {
        let coeffs = derivs
            .into_iter()
            .map(|d| {
                d.iter()
                    .enumerate()
                    .map(|(l, v)| *v / crate::scalar::factorial::<S>(l))
                    .collect()
            })
            .collect();
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn value(&self) -> Vec<S> {
        self.coeffs.iter().map(|c| c[0]).collect()
    }

    pub fn derivative(&self, comp: usize, l: usize) -> S {
        self.coeffs[comp][l] * crate::scalar::factorial::<S>(l)
    }

    /// Jet seen from the opposite coordinate direction: odd coefficients flip,
    /// component `c` is multiplied by `signs[c]`.
    pub fn mirrored(&self, signs: &[S]) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(signs)
            .map(|(c, s)| {
                c.iter()
                    .enumerate()
                    .map(|(l, v)| if l % 2 == 1 { -*v * *s } else { *v * *s })
                    .collect()
            })
            .collect();
        Self { coeffs }
    }

    pub fn eval(&self, comp: usize, dx: S) -> S {
        self.coeffs[comp]
            .iter()
            .rev()
            .fold(S::zero(), |acc, v| acc * dx + *v)
    }
}

/// Mean of `xi^m` over `[a, b]`.
fn monomial_mean<S: Scalar>(m: usize, a: S, b: S) -> S {
    let p = (m + 1) as i32;
    (b.powi(p) - a.powi(p)) / (from_usize::<S>(m + 1) * (b - a))
}

/// `int_a^b xi^p dxi`.
fn monomial_integral<S: Scalar>(p: usize, a: S, b: S) -> S {
    let e = (p + 1) as i32;
    (b.powi(e) - a.powi(e)) / from_usize::<S>(p + 1)
}

fn binomial<S: Scalar>(n: usize, k: usize) -> S {
    let mut r = S::one();
    for i in 0..k {
        r = r * from_usize::<S>(n - i) / from_usize::<S>(i + 1);
    }
    r
}

/// Quadratic form `Q` with `a^T Q a = sum_{l>=1} int_a^b (p^(l))^2` for `p = sum a_m xi^m`.
fn smoothness_form<S: Scalar>(deg: usize, a: S, b: S) -> Vec<Vec<S>> {
    let n = deg + 1;
    let mut q = vec![vec![S::zero(); n]; n];
    for l in 1..n {
        for m in l..n {
            let cm: S = falling(m, l);
            for k in l..n {
                let ck: S = falling(k, l);
                q[m][k] += cm * ck * monomial_integral::<S>(m - l + k - l, a, b);
            }
        }
    }
    q
}

fn falling<S: Scalar>(m: usize, l: usize) -> S {
    (0..l).fold(S::one(), |acc, i| acc * from_usize::<S>(m - i))
}

fn quad<S: Scalar>(q: &[Vec<S>], a: &[S]) -> S {
    let mut s = S::zero();
    for (i, row) in q.iter().enumerate() {
        let mut r = S::zero();
        for (j, v) in row.iter().enumerate() {
            r += *v * a[j];
        }
        s += a[i] * r;
    }
    s
}

fn inverse_of<S: Scalar>(rows: Vec<Vec<S>>) -> Vec<Vec<S>> {
    Lu::new(&rows)
        .expect("reconstruction matrix is regular")
        .inverse()
}

/// Precomputed stencil data for a fixed order `K`.
#[derive(Clone, Debug)]
pub struct Reconstructor<S> {
    k: usize,
    mode: ReconstructionMode,
    eps: S,
    /// `inv[r]` maps the averages of cells `i-r .. i-r+K-1` to monomial coefficients in
    /// `xi = (x - x_i) / dx`.
    inv: Vec<Vec<Vec<S>>>,
    lambda: Vec<S>,
    smooth: Vec<Vec<S>>,
    /// One-sided: `side_inv[r]` maps averages of the `r+1` cells next to the end
    /// to coefficients in `xi = distance / dx`.
    side_inv: Vec<Vec<Vec<S>>>,
    side_smooth: Vec<Vec<Vec<S>>>,
}

impl<S: Scalar> Reconstructor<S> {
    pub fn new(order: usize, mode: ReconstructionMode) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "reconstruction order must be at least 1".into(),
            ));
        }
        let k = order;
        let half = lit::<S>(0.5);
        let mut inv = Vec::with_capacity(k);
        for r in 0..k {
            let rows = (0..k)
                .map(|j| {
                    let off = from_usize::<S>(j) - from_usize::<S>(r);
                    (0..k)
                        .map(|m| monomial_mean::<S>(m, off - half, off + half))
                        .collect()
                })
                .collect();
            inv.push(inverse_of(rows));
        }
        let central: Vec<usize> = if k % 2 == 1 {
            vec![(k - 1) / 2]
        } else {
            vec![k / 2 - 1, k / 2]
        };
        let big = lit::<S>(50.0) / from_usize::<S>(central.len());
        let lambda = (0..k)
            .map(|r| if central.contains(&r) { big } else { S::one() })
            .collect();
        let smooth = smoothness_form(k - 1, -half, half);
        let mut side_inv = Vec::with_capacity(k);
        let mut side_smooth = Vec::with_capacity(k);
        for r in 0..k {
            let rows = (0..=r)
                .map(|j| {
                    let a = from_usize::<S>(j);
                    (0..=r)
                        .map(|m| monomial_mean::<S>(m, a, a + S::one()))
                        .collect()
                })
                .collect();
            side_inv.push(inverse_of(rows));
            side_smooth.push(smoothness_form(r, S::zero(), S::one()));
        }
        Ok(Self {
            k,
            mode,
            eps: lit(1e-6),
            inv,
            lambda,
            smooth,
            side_inv,
            side_smooth,
        })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> ReconstructionMode {
        self.mode
    }

    /// Polynomial of cell `i` (index into `data`) in `xi = (x - x_i)/dx`, using only
    /// cells with indices in `lo..hi`.
    pub fn cell_poly(&self, data: &[S], i: usize, lo: usize, hi: usize) -> Result<Vec<S>> {
        let k = self.k;
        if hi < lo + k || i < lo || i >= hi {
            return Err(Error::TooFewCells {
                needed: k,
                have: hi.saturating_sub(lo),
            });
        }
        let mut acc = vec![S::zero(); k];
        let mut total = S::zero();
        let mut cands: Vec<(S, Vec<S>)> = Vec::with_capacity(k);
        let base = data[i];
        for r in 0..k {
            if i < lo + r || i - r + k > hi {
                continue;
            }
            let cells = &data[i - r..i - r + k];
            // Work relative to the cell's own average so constants are reproduced exactly.
            let a: Vec<S> = self.inv[r]
                .iter()
                .map(|row| row.iter().zip(cells).map(|(m, u)| *m * (*u - base)).sum())
                .collect();
            let w = match self.mode {
                ReconstructionMode::Linear => self.lambda[r],
                ReconstructionMode::Weno => {
                    let s = self.eps + quad(&self.smooth, &a);
                    self.lambda[r] / (s * s)
                }
            };
            cands.push((w, a));
        }
        for (w, _) in &cands {
            total += *w;
        }
        for (w, a) in &cands {
            let f = *w / total;
            for (c, v) in acc.iter_mut().zip(a) {
                *c += f * *v;
            }
        }
        acc[0] += base;
        Ok(acc)
    }

    /// Normalized Taylor coefficients in `x` of a cell polynomial at `xi0`.
    pub fn taylor_at(&self, poly: &[S], xi0: S, dx: S) -> Vec<S> {
        let k = poly.len();
        let mut out = vec![S::zero(); k];
        let mut scale = S::one();
        for (l, o) in out.iter_mut().enumerate() {
            let mut v = S::zero();
            for m in (l..k).rev() {
                v += binomial::<S>(m, l) * poly[m] * xi0.powi((m - l) as i32);
            }
            *o = v / scale;
            scale *= dx;
        }
        out
    }

    /// Jet at an edge end from the averages ordered from the end inward
    /// (`near[0]` is the cell touching the end). Coefficients are with respect to
    /// the inward distance from the end. `length` is the edge length used to make
    /// the weights dimensionless.
    pub fn one_sided(&self, near: &[S], dx: S, length: S) -> Result<Vec<S>> {
        if near.is_empty() {
            return Err(Error::TooFewCells { needed: 1, have: 0 });
        }
        let top = self.k.min(near.len()) - 1;
        let base = near[0];
        let poly_of = |r: usize| -> Vec<S> {
            self.side_inv[r]
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&near[..=r])
                        .map(|(m, u)| *m * (*u - base))
                        .sum()
                })
                .collect()
        };
        let mut coeffs = vec![S::zero(); self.k];
        match self.mode {
            ReconstructionMode::Linear => {
                for (c, v) in coeffs.iter_mut().zip(poly_of(top)) {
                    *c = v;
                }
            }
            ReconstructionMode::Weno => {
                let ratio = dx / length;
                let mut d: Vec<S> = (0..=top).map(|r| ratio.powi((top - r) as i32)).collect();
                let rest: S = d[..top].iter().copied().sum();
                d[top] = S::one() - rest;
                let mut polys = Vec::with_capacity(top + 1);
                let mut betas = Vec::with_capacity(top + 1);
                for r in 0..=top {
                    let p = poly_of(r);
                    betas.push(if r == 0 {
                        ratio * ratio
                    } else {
                        quad(&self.side_smooth[r], &p)
                    });
                    polys.push(p);
                }
                let weights: Vec<S> = d
                    .iter()
                    .zip(&betas)
                    .map(|(dr, b)| *dr / ((self.eps + *b) * (self.eps + *b)))
                    .collect();
                let total: S = weights.iter().copied().sum();
                // Sensor: the full stencil is much rougher than the smoothest shorter one.
                let shortest = if top >= 2 { 1 } else { 0 };
                let smoothest = betas[shortest..top]
                    .iter()
                    .copied()
                    .fold(betas[top], |a, b| a.min(b));
                let jump = betas[top] * ratio / (self.eps + smoothest);
                let theta = (jump * jump).min(S::one());
                for (r, (w, p)) in weights.iter().zip(&polys).enumerate() {
                    let mut f = theta * *w / total;
                    if r == top {
                        f += S::one() - theta;
                    }
                    for (c, v) in coeffs.iter_mut().zip(p) {
                        *c += f * *v;
                    }
                }
            }
        }
        coeffs[0] += base;
        let mut scale = S::one();
        for c in coeffs.iter_mut() {
            *c /= scale;
            scale *= dx;
        }
        Ok(coeffs)
    }
}

/// Left and right interface jets (normalized `x` coefficients) for every interior
/// interface of a single-component array of averages.
pub fn reconstruct_interfaces<S: Scalar>(
    averages: &[S],
    dx: S,
    order: usize,
    mode: ReconstructionMode,
) -> Result<Vec<(Vec<S>, Vec<S>)>> {
    let rec = Reconstructor::new(order, mode)?;
    let n = averages.len();
    if n < order {
        return Err(Error::TooFewCells {
            needed: order,
            have: n,
        });
    }
    let polys = (0..n)
        .map(|i| rec.cell_poly(averages, i, 0, n))
        .collect::<Result<Vec<_>>>()?;
    let half = lit::<S>(0.5);
    Ok((0..n - 1)
        .map(|i| {
            (
                rec.taylor_at(&polys[i], half, dx),
                rec.taylor_at(&polys[i + 1], -half, dx),
            )
        })
        .collect())
}

/// One-sided jet at the left (`at_left = true`) or right end of a single-component
/// array, coefficients with respect to the edge coordinate `x`.
pub fn reconstruct_one_sided<S: Scalar>(
    averages: &[S],
    at_left: bool,
    dx: S,
    order: usize,
    mode: ReconstructionMode,
) -> Result<Vec<S>> {
    let rec = Reconstructor::new(order, mode)?;
    let length = dx * from_usize::<S>(averages.len());
    if at_left {
        rec.one_sided(averages, dx, length)
    } else {
        let rev: Vec<S> = averages.iter().rev().copied().collect();
        let mut c = rec.one_sided(&rev, dx, length)?;
        for (l, v) in c.iter_mut().enumerate() {
            if l % 2 == 1 {
                *v = -*v;
            }
        }
        Ok(c)
    }
}
