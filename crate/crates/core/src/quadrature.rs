//! Gauss-Legendre rules on `[-1/2, 1/2]`.

use crate::scalar::{lit, Scalar};

/// Nodes and weights of the `n`-point rule on `[-1/2, 1/2]` (weights sum to 1).
pub fn gauss_legendre<S: Scalar>(n: usize) -> (Vec<S>, Vec<S>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let pi = std::f64::consts::PI;
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess, in f64.
        let mut z = (pi * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x.push(lit::<S>(-0.5 * z));
        w.push(lit::<S>(1.0 / ((1.0 - z * z) * dp * dp)));
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn five_point_rule_integrates_degree_nine() {
        let (x, w) = gauss_legendre::<f64>(5);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        // mean of x^8 over [-1/2, 1/2] = 2 * (1/2)^9 / 9
        let m: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(8)).sum();
        assert_relative_eq!(m, 2.0 * 0.5f64.powi(9) / 9.0, epsilon = 1e-15);
        let odd: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(9)).sum();
        assert!(odd.abs() < 1e-16);
    }

    #[test]
    fn single_point_is_midpoint() {
        let (x, w) = gauss_legendre::<f64>(1);
        assert!(x[0].abs() < 1e-16);
        assert_relative_eq!(w[0], 1.0);
    }
}
