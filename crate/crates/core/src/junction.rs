//! Riemann solvers at junctions: the classical nonlinear solve, the derivative
//! cascade with a Taylor update of the junction ODE, and the Runge-Kutta staged
//! variant that only uses classical solves.
//!
//! Everything here works in the outward frame of each attached edge.

use crate::ck::ck_transform;
use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};
use crate::jet::Jet1;
use crate::linalg::{mat_vec, scaled_det, Lu};
use crate::model::ConservationLaw;
use crate::reconstruction::SpatialJet;
use crate::scalar::{lit, max_abs, Scalar};
use crate::tableau::ButcherTableau;

/// Newton parameters of the classical solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions<S> {
    pub tol: S,
    pub max_iter: usize,
}

impl<S: Scalar> Default for NewtonOptions<S> {
    fn default() -> Self {
        Self {
            tol: lit(1e-12),
            max_iter: 50,
        }
    }
}

/// Riemann data of one edge at a junction.
#[derive(Clone, Debug)]
pub struct JunctionEdge<S, M> {
    /// The law as seen in the outward frame.
    pub model: M,
    /// Spatial Taylor data at the junction in the outward coordinate.
    pub jet: SpatialJet<S>,
    /// Normalized bottom coefficients at the junction, outward coordinate.
    pub bottom: Option<Vec<S>>,
}

impl<S: Scalar, M: ConservationLaw<S>> JunctionEdge<S, M> {
    pub fn new(model: M, jet: SpatialJet<S>) -> Self {
        Self {
            model,
            jet,
            bottom: None,
        }
    }
}

/// Result of a classical junction solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalSolution<S> {
    pub states: Vec<Vec<S>>,
    /// Lax curve parameters of the edges carrying an outgoing wave.
    pub xi: Vec<S>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionSolution<S> {
    /// Godunov time jets (normalized coefficients) per edge and component. For
    /// the staged solver these interpolate nothing and stay empty.
    pub time_jets: Vec<Vec<Vec<S>>>,
    /// Godunov states per stage, edge and component (staged solver only).
    pub stage_states: Vec<Vec<Vec<S>>>,
    /// Junction ODE slopes per stage (staged solver only).
    pub stage_slopes: Vec<Vec<S>>,
    /// Normalized Taylor coefficients of `w` (cascade solver only).
    pub w_jet: Vec<Vec<S>>,
    /// Time averaged flux over the step per edge, outward frame.
    pub fluxes: Vec<Vec<S>>,
    pub w_new: Vec<S>,
    /// Matrix of the derivative systems (cascade solver only).
    pub a_matrix: Vec<Vec<S>>,
    pub newton_iterations: usize,
}

fn outgoing_counts<S: Scalar, M: ConservationLaw<S>>(
    models: &[M],
    states: &[Vec<S>],
) -> Result<Vec<usize>> {
    models
        .iter()
        .zip(states)
        .map(|(m, u)| {
            let c = m.eigen(u)?.positive;
            if c > 1 {
                Err(Error::Unsupported(c))
            } else {
                Ok(c)
            }
        })
        .collect()
}

fn check_dims<S: Scalar>(spec: &CouplingSpec<S>, n: usize, w: &[S], waves: usize) -> Result<()> {
    if spec.edges() != n {
        return Err(Error::InvalidParameter(format!(
            "{} coupling expects {} edges, got {n}",
            spec.name(),
            spec.edges()
        )));
    }
    if spec.ode_dim() != w.len() {
        return Err(Error::InvalidParameter(format!(
            "{} coupling expects ODE state of size {}",
            spec.name(),
            spec.ode_dim()
        )));
    }
    if spec.conditions() != waves {
        return Err(Error::CouplingDimension {
            conditions: spec.conditions(),
            waves,
        });
    }
    Ok(())
}

fn const_jets<S: Scalar>(v: &[S], order: usize) -> Vec<Jet1<S>> {
    v.iter().map(|x| Jet1::constant(*x, order)).collect()
}

/// Gradient blocks `d Phi / d u^i` (rows: conditions, columns: components).
pub fn coupling_gradients<S: Scalar>(
    spec: &CouplingSpec<S>,
    states: &[Vec<S>],
    w: &[S],
) -> Vec<Vec<Vec<S>>> {
    let wj = const_jets(w, 2);
    let base: Vec<Vec<Jet1<S>>> = states.iter().map(|u| const_jets(u, 2)).collect();
    let c = spec.conditions();
    states
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let mut g = vec![vec![S::zero(); u.len()]; c];
            for comp in 0..u.len() {
                let mut x = base.clone();
                x[i][comp].normalized_mut()[1] = S::one();
                for (row, r) in spec.phi(&x, &wj).iter().enumerate() {
                    g[row][comp] = r.normalized()[1];
                }
            }
            g
        })
        .collect()
}

/// The matrix `[grad_{u^i} Phi R+^i]` whose regularity makes the junction problem
/// well posed; also the matrix of every derivative system of the cascade.
pub fn coupling_matrix<S: Scalar, M: ConservationLaw<S>>(
    models: &[M],
    states: &[Vec<S>],
    w: &[S],
    spec: &CouplingSpec<S>,
) -> Result<Vec<Vec<S>>> {
    let grads = coupling_gradients(spec, states, w);
    let mut cols: Vec<Vec<S>> = Vec::new();
    for ((m, u), g) in models.iter().zip(states).zip(&grads) {
        for r in m.linear_lax_basis(u)? {
            cols.push(mat_vec(g, &r));
        }
    }
    let rows = spec.conditions();
    Ok((0..rows)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}

/// Solves `Phi(L^1(xi^1, u_r^1), ..., L^n(xi^n, u_r^n), w) = 0` by Newton's method.
///
/// `guess` optionally provides starting parameters for the edges with an
/// outgoing wave; by default the right states themselves are used.
pub fn solve_classical<S: Scalar, M: ConservationLaw<S>>(
    models: &[M],
    ur: &[Vec<S>],
    w: &[S],
    spec: &CouplingSpec<S>,
    guess: Option<&[S]>,
    opts: NewtonOptions<S>,
) -> Result<ClassicalSolution<S>> {
    let n = ur.len();
    if models.len() != n {
        return Err(Error::InvalidParameter(
            "one model per edge required".into(),
        ));
    }
    let counts = outgoing_counts(models, ur)?;
    let active: Vec<usize> = (0..n).filter(|&i| counts[i] == 1).collect();
    check_dims(spec, n, w, active.len())?;

    let mut xi: Vec<S> = match guess {
        Some(g) if g.len() == active.len() && g.iter().all(|v| *v > S::zero()) => g.to_vec(),
        _ => active
            .iter()
            .map(|&i| models[i].lax_parameter(&ur[i]))
            .collect(),
    };
    let states_at = |xi: &[S]| -> Result<Vec<Vec<S>>> {
        let mut s = ur.to_vec();
        for (k, &i) in active.iter().enumerate() {
            s[i] = models[i].lax_curve(xi[k], &ur[i])?;
        }
        Ok(s)
    };
    let wj2 = const_jets(w, 2);

    let mut states = states_at(&xi)?;
    let mut res = spec.phi(&states, w);
    let mut norm = max_abs(&res);
    let mut iterations = 0;
    let roundoff = lit::<S>(64.0) * S::epsilon();
    while norm > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm.to_f64().unwrap_or(f64::NAN),
            });
        }
        iterations += 1;
        let mut jac = vec![vec![S::zero(); active.len()]; active.len()];
        for (k, &i) in active.iter().enumerate() {
            let dl = models[i].lax_curve_jacobian(xi[k], &ur[i])?;
            let x: Vec<Vec<Jet1<S>>> = states
                .iter()
                .enumerate()
                .map(|(e, u)| {
                    u.iter()
                        .enumerate()
                        .map(|(c, v)| {
                            let mut j = Jet1::constant(*v, 2);
                            if e == i {
                                j.normalized_mut()[1] = dl[c];
                            }
                            j
                        })
                        .collect()
                })
                .collect();
            for (row, r) in spec.phi(&x, &wj2).iter().enumerate() {
                jac[row][k] = r.normalized()[1];
            }
        }
        let lu = Lu::new(&jac).ok_or(Error::SingularCouplingJacobian)?;
        let delta = lu.solve(&res.iter().map(|v| -*v).collect::<Vec<_>>());
        let mut step = S::one();
        let mut accepted = None;
        for attempt in 0..60 {
            let trial: Vec<S> = xi.iter().zip(&delta).map(|(x, d)| *x + step * *d).collect();
            if trial.iter().all(|v| *v > S::zero()) {
                let st = states_at(&trial)?;
                let r = spec.phi(&st, w);
                let nr = max_abs(&r);
                // One halving is tried when the residual grows; otherwise the step is kept.
                if nr <= norm || attempt >= 1 {
                    accepted = Some((trial, st, r, nr));
                    break;
                }
            }
            step *= lit(0.5);
        }
        let (trial, st, r, nr) = accepted.ok_or(Error::NoConvergence {
            iterations,
            residual: norm.to_f64().unwrap_or(f64::NAN),
        })?;
        let step_size = max_abs(
            &xi.iter()
                .zip(&trial)
                .map(|(a, b)| *a - *b)
                .collect::<Vec<_>>(),
        );
        xi = trial;
        states = st;
        res = r;
        norm = nr;
        // Residual stuck at the rounding level of large states.
        if step_size <= roundoff * (S::one() + max_abs(&xi)) && norm <= lit::<S>(1e3) * opts.tol {
            break;
        }
    }
    let after = outgoing_counts(models, &states).map_err(|e| match e {
        Error::Unsupported(_) | Error::NearSonic(_) => Error::StateLeftSubcritical,
        other => other,
    })?;
    if after != counts {
        return Err(Error::StateLeftSubcritical);
    }
    if !active.is_empty() {
        let a = coupling_matrix(models, &states, w, spec)?;
        if scaled_det(&a) < lit(1e-12) {
            return Err(Error::SingularCouplingJacobian);
        }
    }
    Ok(ClassicalSolution {
        states,
        xi,
        iterations,
    })
}

/// Time coefficients of the edge data after the Cauchy-Kowalevsky procedure,
/// anchored at the given Godunov states.
pub(crate) fn anchored_time_coeffs<S: Scalar, M: ConservationLaw<S>>(
    edges: &[JunctionEdge<S, M>],
    anchors: &[Vec<S>],
    k: usize,
) -> Result<Vec<Vec<Vec<S>>>> {
    edges
        .iter()
        .zip(anchors)
        .map(|(e, ug)| {
            let mut x = e.jet.coeffs.clone();
            for (c, xc) in x.iter_mut().enumerate() {
                xc.resize(k.max(1), S::zero());
                xc[0] = ug[c];
            }
            let t = ck_transform(&e.model, &x, e.bottom.as_deref(), k)?;
            Ok(t.into_iter().map(|j| j.normalized().to_vec()).collect())
        })
        .collect()
}

fn jets_of<S: Scalar>(coeffs: &[Vec<S>], order: usize) -> Vec<Jet1<S>> {
    coeffs
        .iter()
        .map(|c| {
            let mut v: Vec<S> = c.iter().take(order).copied().collect();
            v.resize(order, S::zero());
            Jet1::from_normalized(v)
        })
        .collect()
}

fn flux_average<S: Scalar, M: ConservationLaw<S>>(
    model: &M,
    ug: &[Vec<S>],
    k: usize,
    dt: S,
) -> Vec<S> {
    model
        .flux(&jets_of(ug, k))
        .iter()
        .map(|f| f.mean_over(dt))
        .collect()
}

/// Derivative cascade solver with Taylor update of the junction ODE.
pub fn solve_tt<S: Scalar, M: ConservationLaw<S>>(
    edges: &[JunctionEdge<S, M>],
    w0: &[S],
    spec: &CouplingSpec<S>,
    k: usize,
    dt: S,
    opts: NewtonOptions<S>,
) -> Result<JunctionSolution<S>> {
    if k == 0 {
        return Err(Error::InvalidParameter("order must be positive".into()));
    }
    if edges.iter().any(|e| e.jet.order() < k) {
        return Err(Error::JetShape(format!("spatial jets must have order {k}")));
    }
    let models: Vec<M> = edges.iter().map(|e| e.model.clone()).collect();
    let ur: Vec<Vec<S>> = edges.iter().map(|e| e.jet.value()).collect();
    let classical = solve_classical(&models, &ur, w0, spec, None, opts)?;
    let ug0 = classical.states.clone();
    let tr = anchored_time_coeffs(edges, &ug0, k)?;

    let l = w0.len();
    let mut ug: Vec<Vec<Vec<S>>> = ug0
        .iter()
        .map(|u| {
            u.iter()
                .map(|v| {
                    let mut c = vec![S::zero(); k];
                    c[0] = *v;
                    c
                })
                .collect()
        })
        .collect();
    let mut wj: Vec<Vec<S>> = w0
        .iter()
        .map(|v| {
            let mut c = vec![S::zero(); k + 1];
            c[0] = *v;
            c
        })
        .collect();

    let grads = coupling_gradients(spec, &ug0, w0);
    let bases: Vec<Vec<Vec<S>>> = models
        .iter()
        .zip(&ug0)
        .map(|(m, u)| m.linear_lax_basis(u))
        .collect::<Result<_>>()?;
    let a_matrix = coupling_matrix(&models, &ug0, w0, spec)?;
    let lu = if a_matrix.is_empty() {
        None
    } else {
        Some(Lu::new(&a_matrix).ok_or(Error::SingularDerivativeSystem)?)
    };

    // Coefficient `j` of the ODE right-hand side along the current jets, order `j+1`.
    let rhs_coeff = |ug: &[Vec<Vec<S>>], wj: &[Vec<S>], j: usize| -> Vec<S> {
        let u: Vec<Vec<Jet1<S>>> = ug.iter().map(|e| jets_of(e, j + 1)).collect();
        let w = jets_of(wj, j + 1);
        spec.rhs(&u, &w).iter().map(|f| f.normalized()[j]).collect()
    };

    for level in 1..k {
        if l > 0 {
            let f = rhs_coeff(&ug, &wj, level - 1);
            for m in 0..l {
                wj[m][level] = f[m] / lit::<S>(level as f64);
            }
        }
        let u: Vec<Vec<Jet1<S>>> = ug.iter().map(|e| jets_of(e, level + 1)).collect();
        let w = jets_of(&wj, level + 1);
        let psi: Vec<S> = spec
            .phi(&u, &w)
            .iter()
            .map(|p| p.normalized()[level])
            .collect();
        let mut rhs: Vec<S> = psi.iter().map(|p| -*p).collect();
        for (g, t) in grads.iter().zip(&tr) {
            let tk: Vec<S> = t.iter().map(|c| c[level]).collect();
            for (r, v) in rhs.iter_mut().zip(mat_vec(g, &tk)) {
                *r -= v;
            }
        }
        let xi = lu.as_ref().map(|lu| lu.solve(&rhs)).unwrap_or_default();
        let mut col = 0;
        for (i, basis) in bases.iter().enumerate() {
            for c in 0..ug[i].len() {
                ug[i][c][level] = tr[i][c][level];
            }
            for r in basis {
                for c in 0..ug[i].len() {
                    ug[i][c][level] += r[c] * xi[col];
                }
                col += 1;
            }
        }
    }
    if l > 0 {
        let f = rhs_coeff(&ug, &wj, k - 1);
        for m in 0..l {
            wj[m][k] = f[m] / lit::<S>(k as f64);
        }
    }
    let fluxes = models
        .iter()
        .zip(&ug)
        .map(|(m, u)| flux_average(m, u, k, dt))
        .collect();
    let w_new = wj
        .iter()
        .map(|c| Jet1::from_normalized(c.clone()).eval(dt))
        .collect();
    Ok(JunctionSolution {
        time_jets: ug,
        stage_states: Vec::new(),
        stage_slopes: Vec::new(),
        w_jet: wj,
        fluxes,
        w_new,
        a_matrix,
        newton_iterations: classical.iterations,
    })
}

/// Staged solver: classical solves at the Runge-Kutta nodes, fluxes and ODE
/// advanced with the same weights.
pub fn solve_heoc<S: Scalar, M: ConservationLaw<S>>(
    edges: &[JunctionEdge<S, M>],
    w0: &[S],
    spec: &CouplingSpec<S>,
    k: usize,
    dt: S,
    tableau: &ButcherTableau<S>,
    opts: NewtonOptions<S>,
) -> Result<JunctionSolution<S>> {
    if !(dt > S::zero()) {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    if tableau.order < k {
        return Err(Error::InvalidParameter(format!(
            "tableau {} has order below {k}",
            tableau.name
        )));
    }
    if edges.iter().any(|e| e.jet.order() < k) {
        return Err(Error::JetShape(format!("spatial jets must have order {k}")));
    }
    let models: Vec<M> = edges.iter().map(|e| e.model.clone()).collect();
    let ur0: Vec<Vec<S>> = edges.iter().map(|e| e.jet.value()).collect();
    let first = solve_classical(&models, &ur0, w0, spec, None, opts).map_err(|e| e.at_stage(0))?;
    let tr = anchored_time_coeffs(edges, &first.states, k)?;
    let mut iterations = first.iterations;
    let mut guess = first.xi.clone();
    let s = tableau.stages();
    let mut stage_states = Vec::with_capacity(s);
    let mut slopes: Vec<Vec<S>> = Vec::with_capacity(s);
    let d = models.first().map_or(0, |m| m.dim());
    let mut fluxes = vec![vec![S::zero(); d]; edges.len()];
    for stage in 0..s {
        let t = tableau.c[stage] * dt;
        let ur: Vec<Vec<S>> = tr
            .iter()
            .map(|e| {
                e.iter()
                    .map(|c| Jet1::from_normalized(c.clone()).eval(t))
                    .collect()
            })
            .collect();
        let mut w = w0.to_vec();
        for (j, kj) in slopes.iter().enumerate() {
            for (wm, km) in w.iter_mut().zip(kj) {
                *wm += dt * tableau.a[stage][j] * *km;
            }
        }
        let sol = solve_classical(&models, &ur, &w, spec, Some(&guess), opts)
            .map_err(|e| e.at_stage(stage))?;
        iterations += sol.iterations;
        guess = sol.xi.clone();
        slopes.push(spec.rhs(&sol.states, &w));
        for ((acc, m), u) in fluxes.iter_mut().zip(&models).zip(&sol.states) {
            for (a, f) in acc.iter_mut().zip(m.flux(u)) {
                *a += tableau.b[stage] * f;
            }
        }
        stage_states.push(sol.states);
    }
    let mut w_new = w0.to_vec();
    for (b, kj) in tableau.b.iter().zip(&slopes) {
        for (wm, km) in w_new.iter_mut().zip(kj) {
            *wm += dt * *b * *km;
        }
    }
    Ok(JunctionSolution {
        time_jets: Vec::new(),
        stage_states,
        stage_slopes: slopes,
        w_jet: Vec::new(),
        fluxes,
        w_new,
        a_matrix: Vec::new(),
        newton_iterations: iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{coupling_equal_heights, coupling_manhole};
    use crate::model::ShallowWater;
    use approx::assert_relative_eq;

    fn swe() -> ShallowWater<f64> {
        ShallowWater::default()
    }

    #[test]
    fn coupled_rest_state_is_a_fixed_point() {
        let m = vec![swe(); 2];
        let sol = solve_classical(
            &m,
            &[vec![2.0, 0.0], vec![2.0, 0.0]],
            &[],
            &coupling_equal_heights(2),
            None,
            Default::default(),
        )
        .unwrap();
        assert_eq!(sol.states, vec![vec![2.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(sol.iterations, 0);
        let m3 = vec![swe(); 3];
        let sol = solve_classical(
            &m3,
            &vec![vec![2.0, 0.0]; 3],
            &[2.0, 0.0],
            &coupling_manhole(3, 1.0, 9.81),
            None,
            Default::default(),
        )
        .unwrap();
        assert_eq!(sol.states, vec![vec![2.0, 0.0]; 3]);
    }

    #[test]
    fn manhole_mass_balances() {
        let m = vec![swe(); 3];
        let spec = coupling_manhole(3, 1.0, 9.81);
        let w = [2.2, 0.1];
        let sol = solve_classical(
            &m,
            &[vec![2.0, 0.1], vec![2.5, -0.2], vec![1.8, 0.05]],
            &w,
            &spec,
            None,
            Default::default(),
        )
        .unwrap();
        let total: f64 = sol.states.iter().map(|u| u[1]).sum::<f64>() + w[1];
        assert!(total.abs() < 1e-11);
    }

    #[test]
    fn first_order_cascade_is_classical_plus_euler() {
        let m = swe();
        let spec = coupling_manhole(2, 1.0, 9.81);
        let edges = vec![
            JunctionEdge::new(
                m.clone(),
                SpatialJet {
                    coeffs: vec![vec![2.1], vec![0.1]],
                },
            ),
            JunctionEdge::new(
                m.clone(),
                SpatialJet {
                    coeffs: vec![vec![1.9], vec![-0.2]],
                },
            ),
        ];
        let w0 = [2.0, 0.05];
        let dt = 0.01;
        let tt = solve_tt(&edges, &w0, &spec, 1, dt, Default::default()).unwrap();
        let cl = solve_classical(
            &[m.clone(), m.clone()],
            &[vec![2.1, 0.1], vec![1.9, -0.2]],
            &w0,
            &spec,
            None,
            Default::default(),
        )
        .unwrap();
        let f = spec.rhs(&cl.states, &w0);
        for i in 0..2 {
            assert_relative_eq!(tt.w_new[i], w0[i] + dt * f[i], epsilon = 1e-14);
        }
        let heoc = solve_heoc(
            &edges,
            &w0,
            &spec,
            1,
            dt,
            &ButcherTableau::euler(),
            Default::default(),
        )
        .unwrap();
        for i in 0..2 {
            assert_relative_eq!(heoc.w_new[i], tt.w_new[i], epsilon = 1e-14);
            for c in 0..2 {
                assert_relative_eq!(heoc.fluxes[i][c], tt.fluxes[i][c], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn steady_coupled_data_gives_steady_solution() {
        let m = swe();
        let spec = coupling_manhole(3, 1.0, 9.81);
        let jet = SpatialJet::constant(&[3.0, 0.0], 4);
        let edges = vec![JunctionEdge::new(m.clone(), jet); 3];
        let tt = solve_tt(&edges, &[3.0, 0.0], &spec, 4, 0.05, Default::default()).unwrap();
        assert_eq!(tt.w_new, vec![3.0, 0.0]);
        for e in &tt.time_jets {
            for c in e {
                assert!(c[1..].iter().all(|v| v.abs() < 1e-14));
            }
        }
        let heoc = solve_heoc(
            &edges,
            &[3.0, 0.0],
            &spec,
            4,
            0.05,
            &ButcherTableau::rk4(),
            Default::default(),
        )
        .unwrap();
        assert_eq!(heoc.w_new, vec![3.0, 0.0]);
        for st in &heoc.stage_states {
            assert_eq!(st, &vec![vec![3.0, 0.0]; 3]);
        }
        assert_relative_eq!(heoc.fluxes[0][1], 0.5 * 9.81 * 9.0, epsilon = 1e-12);
    }
}
