use adernet::config::SolverKind;
use adernet::coupling::{coupling_manhole, coupling_transmission};
use adernet::engine::{SchemeOptions, Simulation};
use adernet::error::Result;
use adernet::jet::Arith;
use adernet::model::{ConservationLaw, ShallowWater};
use adernet::network::{Edge, End, Endpoint, Network, Vertex};
use adernet::profile::Profile;
use adernet::reconstruction::ReconstructionMode;

/// Linear advection `u_t + a u_x = 0`, only used to test exactness.
#[derive(Clone, Debug)]
struct Advection {
    a: f64,
}

impl ConservationLaw<f64> for Advection {
    fn dim(&self) -> usize {
        1
    }
    fn flux<V: Arith<f64>>(&self, u: &[V]) -> Vec<V> {
        vec![u[0].scale(self.a)]
    }
    fn admissible(&self, u: &[f64]) -> bool {
        u[0].is_finite()
    }
    fn eigenvalues(&self, _: &[f64]) -> Vec<f64> {
        vec![self.a]
    }
    fn eigenvectors(&self, _: &[f64]) -> Vec<Vec<f64>> {
        vec![vec![1.0]]
    }
    fn reflection(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn mirrored(&self) -> Self {
        Advection { a: -self.a }
    }
    fn lax_curve(&self, xi: f64, _: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![xi])
    }
    fn lax_curve_jacobian(&self, _: f64, _: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0])
    }
    fn lax_parameter(&self, u: &[f64]) -> f64 {
        u[0]
    }
}

fn opts(order: usize, solver: SolverKind) -> SchemeOptions<f64> {
    SchemeOptions {
        order,
        solver,
        reconstruction: ReconstructionMode::Weno,
        cfl: 0.9,
    }
}

fn swe_edge(
    id: &str,
    x0: f64,
    length: f64,
    cells: usize,
    reversed: bool,
) -> Edge<f64, ShallowWater<f64>> {
    let h = Profile::Sum {
        terms: vec![
            Profile::constant(2.0),
            Profile::Sine {
                amplitude: 0.2,
                omega: 0.7,
                phase: 0.3,
            },
        ],
    };
    let dx = length / cells as f64;
    let mut hs = Vec::new();
    let mut qs = Vec::new();
    for i in 0..cells {
        // Global coordinate of the cell, walking backwards on a reversed edge.
        let a = if reversed {
            x0 + length - (i + 1) as f64 * dx
        } else {
            x0 + i as f64 * dx
        };
        hs.push(h.average(a, a + dx, 8));
        let q = 0.3 + 0.1 * (a + 0.5 * dx).cos();
        qs.push(if reversed { -q } else { q });
    }
    Edge::new(id, length, cells, ShallowWater::default(), vec![hs, qs]).unwrap()
}

#[test]
fn stitched_channel_matches_single_edge() {
    for solver in [SolverKind::Tt, SolverKind::Heoc] {
        for k in 2..=4 {
            for reversed in [false, true] {
                let one = Network::new(vec![swe_edge("E", 0.0, 10.0, 40, false)], vec![]).unwrap();
                let e2 = swe_edge("E2", 5.0, 5.0, 20, reversed);
                let v = Vertex {
                    id: "V".into(),
                    endpoints: vec![
                        Endpoint {
                            edge: 0,
                            end: End::Right,
                        },
                        Endpoint {
                            edge: 1,
                            end: if reversed { End::Right } else { End::Left },
                        },
                    ],
                    coupling: coupling_transmission(vec![1.0, -1.0]),
                    w: vec![],
                };
                let two =
                    Network::new(vec![swe_edge("E1", 0.0, 5.0, 20, false), e2], vec![v]).unwrap();
                let mut a = Simulation::new(one, opts(k, solver)).unwrap();
                let mut b = Simulation::new(two, opts(k, solver)).unwrap();
                for _ in 0..20 {
                    let dt = a.compute_dt().unwrap();
                    a.step(dt).unwrap();
                    b.step(dt).unwrap();
                }
                let mut worst: f64 = 0.0;
                for i in 0..40 {
                    let single = a.network.edges[0].cell(i);
                    let split = if i < 20 {
                        b.network.edges[0].cell(i)
                    } else if reversed {
                        let c = b.network.edges[1].cell(39 - i);
                        vec![c[0], -c[1]]
                    } else {
                        b.network.edges[1].cell(i - 20)
                    };
                    worst = worst
                        .max((single[0] - split[0]).abs())
                        .max((single[1] - split[1]).abs());
                }
                // A reversed edge sums its stencils in the opposite order.
                let tol = if reversed { 1e-10 } else { 1e-12 };
                assert!(
                    worst <= tol,
                    "{solver:?} k={k} reversed={reversed}: {worst:e}"
                );
            }
        }
    }
}

#[test]
fn advection_of_polynomials_is_exact() {
    for solver in [SolverKind::Tt, SolverKind::Heoc] {
        for k in 1..=6 {
            let n = 24;
            let dx = 0.25;
            let coeffs: Vec<f64> = (0..k)
                .map(|m| 0.3 / (m + 1) as f64 * if m % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            let p = Profile::Polynomial {
                coeffs: coeffs.clone(),
                center: 3.0,
                scale: 2.0,
            };
            let u = p.cell_averages(dx * n as f64, n, 8);
            for a in [1.3, -0.7] {
                let e = Edge::new("E", dx * n as f64, n, Advection { a }, vec![u.clone()]).unwrap();
                let mut sim =
                    Simulation::new(Network::new(vec![e], vec![]).unwrap(), opts(k, solver))
                        .unwrap();
                let dt = sim.compute_dt().unwrap();
                sim.step(dt).unwrap();
                let shifted = Profile::Polynomial {
                    coeffs: coeffs.clone(),
                    center: 3.0 + a * dt,
                    scale: 2.0,
                };
                let exact = shifted.cell_averages(dx * n as f64, n, 8);
                for i in k + 1..n - k - 1 {
                    let d = (sim.network.edges[0].u[0][i] - exact[i]).abs();
                    assert!(d < 1e-12, "{solver:?} k={k} a={a} cell {i}: {d:e}");
                }
            }
        }
    }
}

#[test]
fn closed_manhole_loop_conserves_mass() {
    for solver in [SolverKind::Tt, SolverKind::Heoc] {
        let edges = vec![
            swe_edge("E1", 0.0, 6.0, 12, false),
            swe_edge("E2", 0.0, 6.0, 12, false),
        ];
        let tank = |id: &str, end| Vertex {
            id: id.into(),
            endpoints: vec![Endpoint { edge: 0, end }, Endpoint { edge: 1, end }],
            coupling: coupling_manhole(2, 1.0, 9.81),
            w: vec![2.1, 0.0],
        };
        let net = Network::new(edges, vec![tank("V1", End::Left), tank("V2", End::Right)]).unwrap();
        let mut sim = Simulation::new(net, opts(3, solver)).unwrap();
        let m0 = sim.total_conserved()[0];
        for _ in 0..60 {
            let dt = sim.compute_dt().unwrap();
            sim.step(dt).unwrap();
        }
        let m1 = sim.total_conserved()[0];
        assert!(((m1 - m0) / m0).abs() < 1e-12, "{solver:?}: {m0} {m1}");
    }
}
