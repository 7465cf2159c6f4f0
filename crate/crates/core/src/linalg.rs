//! Dense Gaussian elimination for the small systems arising at junctions.

use crate::scalar::Scalar;

/// LU factors with partial pivoting of a square matrix given by rows.
#[derive(Clone, Debug)]
pub struct Lu<S> {
    n: usize,
    a: Vec<S>,
    piv: Vec<usize>,
    sign: S,
}

impl<S: Scalar> Lu<S> {
    /// Returns `None` when a pivot vanishes exactly.
    pub fn new(rows: &[Vec<S>]) -> Option<Self> {
        let n = rows.len();
        let mut a: Vec<S> = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            a.extend_from_slice(r);
        }
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = S::one();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| {
                a[i * n + k]
                    .abs()
                    .partial_cmp(&a[j * n + k].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[p * n + k] == S::zero() || !a[p * n + k].is_finite() {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
                sign = -sign;
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                for c in k + 1..n {
                    let v = a[k * n + c];
                    a[i * n + c] -= f * v;
                }
            }
        }
        Some(Self { n, a, piv, sign })
    }

    pub fn det(&self) -> S {
        (0..self.n).fold(self.sign, |acc, k| acc * self.a[k * self.n + k])
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x: Vec<S> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= self.a[i * n + k] * v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = x[k];
                x[i] -= self.a[i * n + k] * v;
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }

    pub fn inverse(&self) -> Vec<Vec<S>> {
        let n = self.n;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![S::zero(); n];
            e[j] = S::one();
            cols.push(self.solve(&e));
        }
        (0..n)
            .map(|i| (0..n).map(|j| cols[j][i]).collect())
            .collect()
    }
}

/// Determinant divided by the product of column norms, a scale free measure
/// of how close a matrix is to singular (1 for orthogonal columns).
pub fn scaled_det<S: Scalar>(rows: &[Vec<S>]) -> S {
    let n = rows.len();
    if n == 0 {
        return S::one();
    }
    let mut norm = S::one();
    for j in 0..n {
        let c = rows.iter().map(|r| r[j] * r[j]).sum::<S>().sqrt();
        if c == S::zero() {
            return S::zero();
        }
        norm *= c;
    }
    Lu::new(rows).map_or(S::zero(), |lu| lu.det().abs() / norm)
}

pub fn mat_vec<S: Scalar>(m: &[Vec<S>], v: &[S]) -> Vec<S> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| *a * *b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_pivoting_system() {
        let a = vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ];
        let lu = Lu::new(&a).unwrap();
        let x = lu.solve(&[5.0, 3.0, 6.0]);
        let r = mat_vec(&a, &x);
        for (ri, bi) in r.iter().zip([5.0, 3.0, 6.0]) {
            assert_relative_eq!(*ri, bi, epsilon = 1e-14);
        }
        // det by cofactor expansion: 0*(1) - 2*(1-0) + 1*(0-3) = -5
        assert_relative_eq!(lu.det(), -5.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_matrix_has_zero_scaled_det() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(scaled_det(&a) < 1e-15);
        let id = vec![vec![2.0, 0.0], vec![0.0, 3.0]];
        assert_relative_eq!(scaled_det(&id), 1.0);
    }
}
