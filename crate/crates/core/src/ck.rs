//! Cauchy-Kowalevsky procedure: spatial jets to space-time jets and back.

use crate::error::{Error, Result};
use crate::jet::{Arith, Jet1, Jet2};
use crate::linalg::Lu;
use crate::model::ConservationLaw;
use crate::scalar::{from_usize, Scalar};

/// Normalized `x` coefficients of `b'(x)` from those of `b(x)`, truncated to `k`.
pub fn slope_coeffs<S: Scalar>(bottom: &[S], k: usize) -> Vec<S> {
    (0..k)
        .map(|l| {
            bottom
                .get(l + 1)
                .map_or(S::zero(), |v| *v * from_usize::<S>(l + 1))
        })
        .collect()
}

/// Space-time expansion `u(t, x)` around the anchor from normalized spatial
/// coefficients, up to time power `rows` (at most `k - 1`).
fn expand_rows<S: Scalar, M: ConservationLaw<S>>(
    model: &M,
    x_coeffs: &[Vec<S>],
    slope: Option<&Jet2<S>>,
    k: usize,
    rows: usize,
) -> Vec<Jet2<S>> {
    let mut u: Vec<Jet2<S>> = x_coeffs
        .iter()
        .map(|c| Jet2::from_x_normalized(c, k))
        .collect();
    for a in 0..rows.min(k.saturating_sub(1)) {
        let f = model.flux(&u);
        let s = slope.map(|bx| model.bottom_source(&u, bx));
        let inv = S::one() / from_usize::<S>(a + 1);
        for (c, uc) in u.iter_mut().enumerate() {
            for b in 0..k - 1 - a {
                let mut v = -from_usize::<S>(b + 1) * f[c].get(a, b + 1);
                if let Some(s) = &s {
                    v += s[c].get(a, b);
                }
                uc.set(a + 1, b, v * inv);
            }
        }
    }
    u
}

/// Full space-time jets (total degree `< k`) of the solution of
/// `u_t + f(u)_x = s(u, b_x)` with the given spatial Taylor data.
///
/// `x_coeffs[c]` holds normalized coefficients of component `c`; `bottom`
/// optionally holds normalized coefficients of `b(x)` at the same anchor.
pub fn ck_expand<S: Scalar, M: ConservationLaw<S>>(
    model: &M,
    x_coeffs: &[Vec<S>],
    bottom: Option<&[S]>,
    k: usize,
) -> Result<Vec<Jet2<S>>> {
    if x_coeffs.len() != model.dim() || x_coeffs.iter().any(|c| c.len() < k) {
        return Err(Error::JetShape(format!(
            "spatial jet must have {} components of order {k}",
            model.dim()
        )));
    }
    let value: Vec<S> = x_coeffs.iter().map(|c| c[0]).collect();
    if !model.admissible(&value) {
        return Err(Error::Inadmissible(format!("{value:?}")));
    }
    let slope = bottom.map(|b| Jet2::from_x_normalized(&slope_coeffs(b, k), k));
    let u = expand_rows(model, x_coeffs, slope.as_ref(), k, k - 1);
    if u.iter().any(|j| !j.is_finite()) {
        return Err(Error::NonSmooth);
    }
    Ok(u)
}

/// Time jets at the anchor (normalized coefficients) from spatial Taylor data.
pub fn ck_transform<S: Scalar, M: ConservationLaw<S>>(
    model: &M,
    x_coeffs: &[Vec<S>],
    bottom: Option<&[S]>,
    k: usize,
) -> Result<Vec<Jet1<S>>> {
    Ok(ck_expand(model, x_coeffs, bottom, k)?
        .iter()
        .map(|j| Jet1::from_normalized(j.time_normalized()))
        .collect())
}

/// Spatial coefficients reproducing prescribed time coefficients at the anchor,
/// the inverse of [`ck_transform`]. Each level is affine in the new spatial
/// coefficient with matrix `(-A)^l`, solved directly.
pub fn ck_inverse<S: Scalar, M: ConservationLaw<S>>(
    model: &M,
    t_coeffs: &[Vec<S>],
    bottom: Option<&[S]>,
    k: usize,
) -> Result<Vec<Vec<S>>> {
    let d = model.dim();
    if t_coeffs.len() != d || t_coeffs.iter().any(|c| c.len() < k) {
        return Err(Error::JetShape(format!(
            "time jet must have {d} components of order {k}"
        )));
    }
    let slope = bottom.map(|b| Jet2::from_x_normalized(&slope_coeffs(b, k), k));
    let mut x: Vec<Vec<S>> = (0..d)
        .map(|c| {
            let mut v = vec![S::zero(); k];
            v[0] = t_coeffs[c][0];
            v
        })
        .collect();
    if !model.admissible(&x.iter().map(|c| c[0]).collect::<Vec<_>>()) {
        return Err(Error::Inadmissible(format!(
            "{:?}",
            t_coeffs.iter().map(|c| c[0]).collect::<Vec<_>>()
        )));
    }
    for a in 1..k {
        let base = expand_rows(model, &x, slope.as_ref(), k, a);
        let base_val: Vec<S> = base.iter().map(|j| j.get(a, 0)).collect();
        let mut cols = vec![vec![S::zero(); d]; d];
        for j in 0..d {
            x[j][a] = S::one();
            let pert = expand_rows(model, &x, slope.as_ref(), k, a);
            for i in 0..d {
                cols[i][j] = pert[i].get(a, 0) - base_val[i];
            }
            x[j][a] = S::zero();
        }
        let lu = Lu::new(&cols).ok_or(Error::SingularDerivativeSystem)?;
        let rhs: Vec<S> = (0..d).map(|i| t_coeffs[i][a] - base_val[i]).collect();
        for (j, v) in lu.solve(&rhs).into_iter().enumerate() {
            x[j][a] = v;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ShallowWater;
    use approx::assert_relative_eq;

    #[test]
    fn constant_state_has_zero_time_derivatives() {
        let m = ShallowWater::<f64>::default();
        for k in 1..=6 {
            let mut h = vec![0.0; k];
            h[0] = 2.0;
            let mut q = vec![0.0; k];
            q[0] = 0.4;
            let t = ck_transform(&m, &[h, q], None, k).unwrap();
            assert_eq!(t[0].normalized()[0], 2.0);
            assert_eq!(t[1].normalized()[0], 0.4);
            for j in &t {
                assert!(j.normalized()[1..].iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn rest_state_depth_perturbation() {
        // q_t = -(g h h_x) at q = 0
        let m = ShallowWater::<f64>::default();
        let t = ck_transform(&m, &[vec![1.5, 0.2, 0.0], vec![0.0, 0.0, 0.0]], None, 3).unwrap();
        assert_relative_eq!(t[1].derivative(1), -9.81 * 1.5 * 0.2, epsilon = 1e-13);
        assert_relative_eq!(t[0].derivative(1), 0.0);
    }

    #[test]
    fn lake_at_rest_over_bottom_is_steady() {
        let m = ShallowWater::<f64>::default();
        let b = [0.1, 0.03, -0.02, 0.004, 0.001];
        let h: Vec<f64> = (0..4)
            .map(|l| if l == 0 { 3.0 - b[0] } else { -b[l] })
            .collect();
        let t = ck_transform(&m, &[h, vec![0.0; 4]], Some(&b), 4).unwrap();
        for j in &t {
            for v in &j.normalized()[1..] {
                assert!(v.abs() < 1e-13, "{v}");
            }
        }
    }

    #[test]
    fn inverse_recovers_spatial_coefficients() {
        let m = ShallowWater::<f64>::default();
        let x = vec![
            vec![2.0, 0.1, -0.05, 0.02, 0.01],
            vec![0.3, -0.2, 0.04, 0.0, -0.01],
        ];
        let b = [0.0, 0.01, 0.002, 0.0, 0.0, 0.0];
        let t = ck_transform(&m, &x, Some(&b), 5).unwrap();
        let tc: Vec<Vec<f64>> = t.iter().map(|j| j.normalized().to_vec()).collect();
        let back = ck_inverse(&m, &tc, Some(&b), 5).unwrap();
        for (bc, xc) in back.iter().zip(&x) {
            for (u, v) in bc.iter().zip(xc) {
                assert_relative_eq!(*u, *v, epsilon = 1e-12);
            }
        }
    }
}
