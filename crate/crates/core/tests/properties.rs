//! Algebraic invariants of jets, Cauchy-Kowalevsky, reconstruction, tableaus and frames.

use adernet::ck::ck_transform;
use adernet::jet::Jet1;
use adernet::model::ShallowWater;
use adernet::network::EndpointFrame;
use adernet::reconstruction::{
    reconstruct_interfaces, reconstruct_one_sided, ReconstructionMode, SpatialJet,
};
use adernet::tableau::ButcherTableau;
use proptest::collection::vec;
use proptest::prelude::*;

const ORDER: usize = 5;

fn jet() -> impl Strategy<Value = Jet1<f64>> {
    vec(-2.0f64..2.0, ORDER).prop_map(Jet1::from_normalized)
}

fn close(a: &Jet1<f64>, b: &Jet1<f64>, tol: f64) -> bool {
    a.normalized()
        .iter()
        .zip(b.normalized())
        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

/// Mean of the polynomial `sum c_m x^m` over `[a, b]`.
fn poly_mean(c: &[f64], a: f64, b: f64) -> f64 {
    c.iter()
        .enumerate()
        .map(|(m, v)| v * (b.powi(m as i32 + 1) - a.powi(m as i32 + 1)) / (m as f64 + 1.0))
        .sum::<f64>()
        / (b - a)
}

/// Normalized Taylor coefficients of `sum c_m x^m` at `x0`.
fn poly_taylor(c: &[f64], x0: f64) -> Vec<f64> {
    (0..c.len())
        .map(|l| {
            (l..c.len())
                .map(|m| {
                    let binom = (0..l).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64);
                    binom * c[m] * x0.powi((m - l) as i32)
                })
                .sum()
        })
        .collect()
}

proptest! {
    #[test]
    fn jet_ring_axioms(a in jet(), b in jet(), c in jet()) {
        let tol = 1e-12;
        prop_assert!(close(&(a.clone() + b.clone()), &(b.clone() + a.clone()), tol));
        prop_assert!(close(&(a.clone() * b.clone()), &(b.clone() * a.clone()), tol));
        prop_assert!(close(&((a.clone() + b.clone()) + c.clone()), &(a.clone() + (b.clone() + c.clone())), tol));
        prop_assert!(close(&((a.clone() * b.clone()) * c.clone()), &(a.clone() * (b.clone() * c.clone())), tol));
        prop_assert!(close(&(a.clone() * (b.clone() + c.clone())), &(a.clone() * b.clone() + a.clone() * c.clone()), tol));
        let one = Jet1::constant(1.0, ORDER);
        let zero = Jet1::constant(0.0, ORDER);
        prop_assert!(close(&(a.clone() * one), &a, tol));
        prop_assert!(close(&(a.clone() + zero.clone()), &a, tol));
        prop_assert!(close(&(a.clone() - a.clone()), &zero, tol));
    }

    #[test]
    fn jet_division_inverts_multiplication(a in jet(), b in jet(), shift in 0.5f64..3.0) {
        let mut b = b;
        b.normalized_mut()[0] = shift;
        prop_assert!(close(&((a.clone() * b.clone()) / b), &a, 1e-10));
    }

    #[test]
    fn ck_of_constant_state_is_constant(h in 0.2f64..6.0, fr in -0.9f64..0.9, k in 1usize..7) {
        let m = ShallowWater::new(9.81);
        let q = fr * h * (9.81 * h).sqrt();
        let data = SpatialJet::constant(&[h, q], k).coeffs;
        let t = ck_transform(&m, &data, None, k).unwrap();
        prop_assert_eq!(t[0].normalized()[0], h);
        prop_assert_eq!(t[1].normalized()[0], q);
        for j in &t {
            prop_assert!(j.normalized()[1..].iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn ck_of_lake_at_rest_is_steady(level in 2.0f64..5.0, b1 in -0.5f64..0.5, b2 in -0.2f64..0.2, k in 1usize..7) {
        let m = ShallowWater::new(9.81);
        let mut bottom = vec![0.0; k];
        bottom[0] = 0.3;
        if k > 1 { bottom[1] = b1; }
        if k > 2 { bottom[2] = b2; }
        let mut h: Vec<f64> = bottom.iter().map(|v| -v).collect();
        h[0] += level;
        let t = ck_transform(&m, &[h, vec![0.0; k]], Some(&bottom), k).unwrap();
        for j in &t {
            prop_assert!(j.normalized()[1..].iter().all(|v| v.abs() < 1e-12), "{:?}", j.normalized());
        }
    }

    #[test]
    fn reconstruction_reproduces_polynomials(k in 2usize..=6, c in vec(-1.0f64..1.0, 6), dx in 0.05f64..0.5) {
        let c = &c[..k];
        let n = 3 * k;
        let avg: Vec<f64> = (0..n).map(|i| poly_mean(c, i as f64 * dx, (i + 1) as f64 * dx)).collect();
        for mode in [ReconstructionMode::Linear, ReconstructionMode::Weno] {
            let faces = reconstruct_interfaces(&avg, dx, k, mode).unwrap();
            for (i, (l, r)) in faces.iter().enumerate() {
                let exact = poly_taylor(c, (i + 1) as f64 * dx);
                for (a, (x, y)) in exact.iter().zip(l.iter().zip(r)) {
                    prop_assert!((a - x).abs() < 1e-8 * (1.0 + a.abs()), "order {k} face {i}: {a} vs {x}");
                    prop_assert!((a - y).abs() < 1e-8 * (1.0 + a.abs()), "order {k} face {i}: {a} vs {y}");
                }
            }
            // Nonlinear one-sided weights mix in lower degree stencils.
            if mode == ReconstructionMode::Weno {
                continue;
            }
            let left = reconstruct_one_sided(&avg, true, dx, k, mode).unwrap();
            let right = reconstruct_one_sided(&avg, false, dx, k, mode).unwrap();
            for (a, x) in poly_taylor(c, 0.0).iter().zip(&left) {
                prop_assert!((a - x).abs() < 1e-7 * (1.0 + a.abs()), "order {k} left end: {a} vs {x}");
            }
            for (a, x) in poly_taylor(c, n as f64 * dx).iter().zip(&right) {
                prop_assert!((a - x).abs() < 1e-7 * (1.0 + a.abs()), "order {k} right end: {a} vs {x}");
            }
        }
    }

    #[test]
    fn frame_is_an_involution(h in 0.1f64..5.0, q in -3.0f64..3.0, c in vec(-1.0f64..1.0, 1..7), mirror: bool) {
        let frame = EndpointFrame { edge: 0, mirror };
        let refl = [1.0, -1.0];
        let u = [h, q];
        prop_assert_eq!(frame.state(&refl, &frame.state(&refl, &u)), u.to_vec());
        prop_assert_eq!(frame.scalar_coeffs(&frame.scalar_coeffs(&c)), c.clone());
        let jet = SpatialJet { coeffs: vec![c.clone(), c.iter().map(|v| 2.0 * v).collect()] };
        prop_assert_eq!(frame.jet(&refl, &frame.jet(&refl, &jet)), jet);
        // Flux seen from the vertex and mapped back is the edge flux.
        let f = [q, q * q / h + 0.5 * 9.81 * h * h];
        let seen = frame.state(&refl, &u);
        let fv = [seen[1], seen[1] * seen[1] / seen[0] + 0.5 * 9.81 * seen[0] * seen[0]];
        let back = frame.flux_to_edge(&refl, &fv);
        prop_assert!((back[0] - f[0]).abs() < 1e-12 && (back[1] - f[1]).abs() < 1e-12);
    }
}

#[test]
fn butcher_order_conditions() {
    for t in [
        ButcherTableau::<f64>::euler(),
        ButcherTableau::heun(),
        ButcherTableau::kutta3(),
        ButcherTableau::rk4(),
        ButcherTableau::butcher5(),
        ButcherTableau::butcher6(),
    ] {
        assert!(
            t.order_defect(t.order) < 1e-14,
            "{} fails order {}",
            t.name,
            t.order
        );
        assert!(
            t.order_defect(t.order + 1) > 1e-6,
            "{} exceeds order {}",
            t.name,
            t.order
        );
    }
}
