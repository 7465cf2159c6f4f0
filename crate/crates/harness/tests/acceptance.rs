//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use adernet::config::SolverKind;
use adernet::coupling::{coupling_equal_heights, coupling_transmission};
use adernet::engine::{SchemeOptions, Simulation};
use adernet::jet::Jet1;
use adernet::junction::{solve_classical, NewtonOptions};
use adernet::model::{ConservationLaw, ShallowWater};
use adernet::network::{Edge, End, Endpoint, EndpointFrame, Network, Vertex};
use adernet::profile::Profile;
use adernet::reconstruction::{reconstruct_interfaces, ReconstructionMode, SpatialJet};
use adernet::tableau::ButcherTableau;
use adernet::{ck::ck_transform, Swe};
use adernet_harness::cases::{builtin_case, with_resolution};
use adernet_harness::simulation;
use adernet_harness::study::{convergence, reference_cells, Study, REFERENCE_ORDER};
use rand::{rngs::StdRng, Rng, SeedableRng};

const G: f64 = 9.81;
const GRIDS: [usize; 4] = [50, 100, 200, 400];

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(cond: bool, detail: String, out: &mut Outcome) {
    if !cond {
        out.pass = false;
    }
    if !out.detail.is_empty() {
        out.detail.push_str("; ");
    }
    out.detail.push_str(&detail);
}

fn study(case: &str, solver: SolverKind, orders: &[usize]) -> Study {
    convergence(
        case,
        solver,
        orders,
        &GRIDS,
        REFERENCE_ORDER,
        reference_cells(&GRIDS),
        ReconstructionMode::Weno,
    )
    .unwrap()
}

/// Criteria 1 and 2: split-circle refinement with TT and HEOC.
fn split_circle(solver: SolverKind) -> Outcome {
    let s = study("split-circle", solver, &[2, 4, 5]);
    let published = [(2, 3.79e-3), (4, 2.95e-6), (5, 4.04e-7)];
    let mut out = Outcome {
        pass: true,
        detail: String::new(),
    };
    for (k, expected) in published {
        let finest = s.row(k, 400).unwrap();
        let kf = k as f64;
        let l1 = finest.l1_rate.unwrap();
        if solver == SolverKind::Tt {
            check(l1 >= kf - 0.3, format!("k={k} O_L1 {l1:.2}"), &mut out);
            let ode = finest.ode_rate.unwrap();
            check(ode >= kf - 0.5, format!("O_ODE {ode:.2}"), &mut out);
            let e = s.row(k, 200).unwrap().norms.l1;
            check(
                e <= 10.0 * expected && e >= expected / 10.0,
                format!("L1(200) {e:.2e}"),
                &mut out,
            );
        } else {
            check(l1 >= kf - 0.4, format!("k={k} O_L1 {l1:.2}"), &mut out);
        }
    }
    out
}

/// Criterion 3: diamond network with a lumped sub-network.
fn diamond() -> Outcome {
    let s = study("diamond", SolverKind::Heoc, &[2, 4]);
    let mut out = Outcome {
        pass: true,
        detail: String::new(),
    };
    for k in [2, 4] {
        let r = s.row(k, 400).unwrap();
        let (l1, ode) = (r.l1_rate.unwrap(), r.ode_rate.unwrap());
        check(
            l1 >= k as f64 - 0.3,
            format!("k={k} O_L1 {l1:.2}"),
            &mut out,
        );
        check(ode >= k as f64 - 0.3, format!("O_ODE {ode:.2}"), &mut out);
    }
    out
}

/// Criterion 4: mass conservation through the shock test.
fn shock_mass() -> Outcome {
    let mut out = Outcome {
        pass: true,
        detail: String::new(),
    };
    for solver in [SolverKind::Tt, SolverKind::Heoc] {
        let mut sim = simulation(&with_resolution(
            builtin_case("shock").unwrap(),
            50,
            6,
            solver,
        ))
        .unwrap();
        let m0 = sim.total_conserved()[0];
        let mut drift: f64 = 0.0;
        sim.run_until(4.0, |s| {
            drift = drift.max(((s.total_conserved()[0] - m0) / m0).abs());
            Ok(())
        })
        .unwrap();
        check(
            drift <= 1e-10,
            format!("{solver:?} drift {drift:.1e}"),
            &mut out,
        );
    }
    out
}

fn wave(h: f64, hk: f64) -> (f64, f64) {
    if h <= hk {
        (2.0 * ((G * h).sqrt() - (G * hk).sqrt()), (G / h).sqrt())
    } else {
        let s = 0.5 * G * (h + hk) / (h * hk);
        (
            (h - hk) * s.sqrt(),
            s.sqrt() - 0.25 * G * (h - hk) / (h * h * s.sqrt()),
        )
    }
}

/// Exact star state of the shallow water Riemann problem.
fn exact_star(hl: f64, ul: f64, hr: f64, ur: f64) -> (f64, f64) {
    let mut h = 0.5 * (hl + hr);
    for _ in 0..100 {
        let (fl, dl) = wave(h, hl);
        let (fr, dr) = wave(h, hr);
        let step = (fl + fr + ur - ul) / (dl + dr);
        h = (h - step).max(0.1 * h);
        if step.abs() < 1e-15 * h {
            break;
        }
    }
    (h, 0.5 * (ul + ur) + 0.5 * (wave(h, hr).0 - wave(h, hl).0))
}

/// Criterion 5: two-edge equal-heights junction against the exact solver.
fn classical_riemann() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let m = ShallowWater::new(G);
    let spec = coupling_equal_heights(2);
    let opts = NewtonOptions {
        tol: 1e-14,
        max_iter: 50,
    };
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    while solved < 200 {
        let (hl, hr) = (rng.random_range(0.5..4.0), rng.random_range(0.5..4.0));
        let ul = rng.random_range(-0.6..0.6) * (G * hl).sqrt();
        let ur = rng.random_range(-0.6..0.6) * (G * hr).sqrt();
        let (hs, us) = exact_star(hl, ul, hr, ur);
        if us.abs() >= 0.9 * (G * hs).sqrt() {
            continue;
        }
        let states = vec![vec![hl, -hl * ul], vec![hr, hr * ur]];
        let sol =
            solve_classical(&[m.mirrored(), m.clone()], &states, &[], &spec, None, opts).unwrap();
        let qs = hs * us;
        for d in [
            sol.states[1][0] - hs,
            sol.states[1][1] - qs,
            sol.states[0][0] - hs,
            sol.states[0][1] + qs,
        ] {
            worst = worst.max(d.abs());
        }
        solved += 1;
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("200 problems, max deviation {worst:.1e}"),
    }
}

fn channel(id: &str, x0: f64, length: f64, cells: usize) -> Edge<f64, Swe> {
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
    let hs = (0..cells)
        .map(|i| h.average(x0 + i as f64 * dx, x0 + (i + 1) as f64 * dx, 8))
        .collect();
    let qs = (0..cells)
        .map(|i| 0.3 + 0.1 * (x0 + (i as f64 + 0.5) * dx).cos())
        .collect();
    Edge::new(id, length, cells, ShallowWater::default(), vec![hs, qs]).unwrap()
}

/// Criterion 6: a transmission vertex is invisible.
fn transmission() -> Outcome {
    let mut worst: f64 = 0.0;
    for solver in [SolverKind::Tt, SolverKind::Heoc] {
        for order in 2..=4 {
            let opts = SchemeOptions {
                order,
                solver,
                reconstruction: ReconstructionMode::Weno,
                cfl: 0.9,
            };
            let one = Network::new(vec![channel("E", 0.0, 10.0, 40)], vec![]).unwrap();
            let v = Vertex {
                id: "V".into(),
                endpoints: vec![
                    Endpoint {
                        edge: 0,
                        end: End::Right,
                    },
                    Endpoint {
                        edge: 1,
                        end: End::Left,
                    },
                ],
                coupling: coupling_transmission(vec![1.0, -1.0]),
                w: vec![],
            };
            let two = Network::new(
                vec![channel("E1", 0.0, 5.0, 20), channel("E2", 5.0, 5.0, 20)],
                vec![v],
            )
            .unwrap();
            let mut a = Simulation::new(one, opts).unwrap();
            let mut b = Simulation::new(two, opts).unwrap();
            for _ in 0..20 {
                let dt = a.compute_dt().unwrap();
                a.step(dt).unwrap();
                b.step(dt).unwrap();
            }
            for c in 0..2 {
                let split = b.network.edges[0].u[c]
                    .iter()
                    .chain(&b.network.edges[1].u[c]);
                for (x, y) in a.network.edges[0].u[c].iter().zip(split) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max difference {worst:.1e}"),
    }
}

/// Criterion 7: lake at rest over the b2 and b3 bottoms with a lumped edge.
fn well_balanced() -> Outcome {
    let mut out = Outcome {
        pass: true,
        detail: String::new(),
    };
    for case in ["well-balanced-b2", "well-balanced-b3"] {
        let config = with_resolution(builtin_case(case).unwrap(), 100, 4, SolverKind::Heoc);
        let mut sim = simulation(&config).unwrap();
        sim.run_until(0.3, |_| Ok(())).unwrap();
        let (mut inner, mut near): (f64, f64) = (0.0, 0.0);
        for (i, e) in sim.network.edges.iter().enumerate() {
            if sim.network.is_lumped(i) {
                continue;
            }
            let n = e.cells;
            for (c, q) in e.u[1].iter().enumerate() {
                if c < 4 || c + 4 >= n {
                    near = near.max(q.abs());
                } else {
                    inner = inner.max(q.abs());
                }
            }
        }
        let region = sim.region.as_ref().unwrap();
        let lumped = region
            .edges
            .iter()
            .map(|e| e.u[1].abs())
            .fold(0.0, f64::max);
        let tanks = sim
            .network
            .vertices
            .iter()
            .map(|v| v.w[1].abs())
            .fold(0.0, f64::max);
        check(
            inner <= 1e-12,
            format!("{case}: interior {inner:.1e}"),
            &mut out,
        );
        check(near <= 1e-6, format!("near vertices {near:.1e}"), &mut out);
        check(
            lumped.max(tanks) <= 1e-12,
            format!("lumped {:.1e}", lumped.max(tanks)),
            &mut out,
        );
    }
    out
}

/// Criterion 8: deterministic spot checks of the algebraic invariants plus
/// the tree symmetry. The randomized versions live in the core test suite.
fn properties() -> Outcome {
    let mut out = Outcome {
        pass: true,
        detail: String::new(),
    };
    let a: Jet1<f64> = Jet1::from_normalized(vec![1.2, -0.3, 0.5, 0.1, -0.7]);
    let b = Jet1::from_normalized(vec![0.8, 0.4, -0.2, 0.9, 0.3]);
    let c = Jet1::from_normalized(vec![-0.5, 0.6, 0.1, -0.4, 0.2]);
    let lhs = a.clone() * (b.clone() + c.clone());
    let rhs = a.clone() * b.clone() + a.clone() * c.clone();
    let ring = lhs
        .normalized()
        .iter()
        .zip(rhs.normalized())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        + ((a.clone() * b.clone()) / b.clone())
            .normalized()
            .iter()
            .zip(a.normalized())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
    check(ring < 1e-12, format!("jet ring {ring:.1e}"), &mut out);

    let m = ShallowWater::new(G);
    let t = ck_transform(&m, &SpatialJet::constant(&[2.0, 0.7], 6).coeffs, None, 6).unwrap();
    let ck = t
        .iter()
        .flat_map(|j| j.normalized()[1..].to_vec())
        .fold(0.0f64, |x, v| x.max(v.abs()));
    check(ck < 1e-13, format!("CK constants {ck:.1e}"), &mut out);

    let mut weno: f64 = 0.0;
    for k in 2..=6 {
        let dx = 0.1;
        let coeffs: Vec<f64> = (0..k).map(|m| 0.5 / (m + 1) as f64).collect();
        let p = Profile::Polynomial {
            coeffs: coeffs.clone(),
            center: 0.0,
            scale: 1.0,
        };
        let avg = p.cell_averages(3.0 * k as f64 * dx, 3 * k, 8);
        for (i, (l, r)) in reconstruct_interfaces(&avg, dx, k, ReconstructionMode::Weno)
            .unwrap()
            .iter()
            .enumerate()
        {
            let exact = p.taylor((i + 1) as f64 * dx, k);
            for (e, (x, y)) in exact.iter().zip(l.iter().zip(r)) {
                weno = weno.max((e - x).abs()).max((e - y).abs());
            }
        }
    }
    check(
        weno < 1e-8,
        format!("WENO reproduction {weno:.1e}"),
        &mut out,
    );

    let butcher = [
        ButcherTableau::<f64>::heun(),
        ButcherTableau::kutta3(),
        ButcherTableau::rk4(),
        ButcherTableau::butcher5(),
        ButcherTableau::butcher6(),
    ]
    .iter()
    .map(|t| t.order_defect(t.order))
    .fold(0.0, f64::max);
    check(butcher < 1e-14, format!("Butcher {butcher:.1e}"), &mut out);

    let frame = EndpointFrame {
        edge: 0,
        mirror: true,
    };
    let u = [2.0, -0.4];
    let inv = frame.state(&[1.0, -1.0], &frame.state(&[1.0, -1.0], &u)) == u.to_vec();
    check(inv, "frame involution".into(), &mut out);

    let mut sim = simulation(&builtin_case("tree").unwrap()).unwrap();
    sim.run_until(6.0, |_| Ok(())).unwrap();
    let groups: [&[usize]; 6] = [
        &[3, 4],
        &[5, 6, 7, 8],
        &[9, 10, 11, 12, 13, 14, 15, 16],
        &[17, 18, 19, 20, 21, 22, 23, 24],
        &[25, 26, 27, 28],
        &[29, 30],
    ];
    let net = &sim.network;
    let edge = |e: usize| &net.edges[net.edge_index(&format!("E{e}")).unwrap()];
    let mut asym: f64 = 0.0;
    for g in groups {
        for e in &g[1..] {
            for c in 0..2 {
                for (x, y) in edge(g[0]).u[c].iter().zip(&edge(*e).u[c]) {
                    asym = asym.max((x - y).abs());
                }
            }
        }
    }
    check(asym <= 1e-12, format!("tree symmetry {asym:.1e}"), &mut out);
    out
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: Vec<Criterion> = vec![
        ("1 TT split-circle convergence", || {
            split_circle(SolverKind::Tt)
        }),
        ("2 HEOC split-circle convergence", || {
            split_circle(SolverKind::Heoc)
        }),
        ("3 diamond LPM convergence", diamond),
        ("4 shock mass conservation", shock_mass),
        ("5 classical junction Riemann solver", classical_riemann),
        ("6 transmission vertex", transmission),
        ("7 well-balanced lumped network", well_balanced),
        ("8 property suites", properties),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = std::time::Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} ({:.0?})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
    }
    println!("PASS 9 figures: qualitative, reproduced by `adernet run` on the built-in cases");
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
