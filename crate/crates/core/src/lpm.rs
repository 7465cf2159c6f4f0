//! Lumped parameter models: a connected set of edges replaced by their spatial
//! averages, advanced together with the ODE states of the touched vertices by
//! the staged junction solver.

use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};
use crate::jet::Jet1;
use crate::junction::{anchored_time_coeffs, solve_classical, JunctionEdge, NewtonOptions};
use crate::model::ConservationLaw;
use crate::network::{End, EndpointFrame, Network};
use crate::scalar::{from_usize, lit, Scalar};
use crate::tableau::ButcherTableau;

/// Averaged state of one lumped edge.
#[derive(Clone, Debug, PartialEq)]
pub struct LumpedEdge<S> {
    pub edge: usize,
    pub length: S,
    pub u: Vec<S>,
    /// Bottom elevation at `x = 0` and `x = L` (zero without bottom).
    pub b0: S,
    pub bl: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LumpedRegion<S> {
    pub edges: Vec<LumpedEdge<S>>,
    /// Every vertex touching a lumped edge.
    pub vertices: Vec<usize>,
}

impl<S: Scalar> LumpedRegion<S> {
    /// Size of the composite ODE state.
    pub fn dim<M: ConservationLaw<S>>(&self, net: &Network<S, M>) -> usize {
        self.edges.iter().map(|e| e.u.len()).sum::<usize>()
            + self
                .vertices
                .iter()
                .map(|v| net.vertices[*v].w.len())
                .sum::<usize>()
    }

    /// Composite state: lumped edge averages followed by vertex ODE states.
    pub fn state<M: ConservationLaw<S>>(&self, net: &Network<S, M>) -> Vec<S> {
        let mut s: Vec<S> = self
            .edges
            .iter()
            .flat_map(|e| e.u.iter().copied())
            .collect();
        for v in &self.vertices {
            s.extend_from_slice(&net.vertices[*v].w);
        }
        s
    }

    fn slot_of(&self, edge: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.edge == edge)
    }

    /// Mass (first component) stored in the lumped edges.
    pub fn mass(&self) -> S {
        self.edges.iter().map(|e| e.length * e.u[0]).sum()
    }
}

/// Interface depth of the hydrostatic reconstruction,
/// `h* = max(0, h + b_here - max(b_here, b_neighbor))`, discharge kept.
pub fn hydrostatic_reconstruct<S: Scalar>(u: &[S], b_here: S, b_neighbor: S) -> Vec<S> {
    let mut out = u.to_vec();
    out[0] = (u[0] + b_here - b_here.max(b_neighbor)).max(S::zero());
    out
}

/// State of a lumped edge at one of its ends (edge frame). The averaged depth
/// belongs to the mean linearized bottom and is moved to the bottom at the end
/// with the free surface held fixed.
pub fn lumped_anchor<S: Scalar>(e: &LumpedEdge<S>, u: &[S], end: End) -> Vec<S> {
    let b_mid = (e.b0 + e.bl) * lit(0.5);
    let b_end = match end {
        End::Left => e.b0,
        End::Right => e.bl,
    };
    let mut out = u.to_vec();
    out[0] = (u[0] + b_mid - b_end).max(S::zero());
    out
}

/// Checks that the lumped edges form a connected selection with every end
/// attached to a vertex.
pub fn check_region<S: Scalar, M: ConservationLaw<S>>(net: &Network<S, M>) -> Result<()> {
    if net.lumped.is_empty() {
        return Ok(());
    }
    for &e in &net.lumped {
        if net.vertex_at(e, End::Left).is_none() || net.vertex_at(e, End::Right).is_none() {
            return Err(Error::Network(format!(
                "lumped edge {} has an open end",
                net.edges[e].id
            )));
        }
    }
    // Union-find over vertices joined by lumped edges.
    let mut parent: Vec<usize> = (0..net.vertices.len()).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for &e in &net.lumped {
        let a = root(&mut parent, net.vertex_at(e, End::Left).unwrap());
        let b = root(&mut parent, net.vertex_at(e, End::Right).unwrap());
        parent[a] = b;
    }
    let first = net.vertex_at(net.lumped[0], End::Left).unwrap();
    let r = root(&mut parent, first);
    for &e in &net.lumped {
        let v = net.vertex_at(e, End::Left).unwrap();
        if root(&mut parent, v) != r {
            return Err(Error::Network(
                "lumped edges do not form a connected region".into(),
            ));
        }
    }
    Ok(())
}

/// Builds the region from the network's lumped edges, averaging the cell data.
/// With a bottom, the depth average is shifted by `mean(b) - (b(0) + b(L)) / 2`.
pub fn lump_region<S: Scalar, M: ConservationLaw<S>>(
    net: &Network<S, M>,
) -> Result<LumpedRegion<S>> {
    check_region(net)?;
    let mut edges = Vec::with_capacity(net.lumped.len());
    let mut vertices: Vec<usize> = Vec::new();
    for &ei in &net.lumped {
        let e = &net.edges[ei];
        let n = from_usize::<S>(e.cells);
        let mut u: Vec<S> =
            e.u.iter()
                .map(|c| c.iter().copied().sum::<S>() / n)
                .collect();
        let (mut b0, mut bl) = (S::zero(), S::zero());
        if let Some(b) = &e.bottom {
            b0 = b.eval(S::zero());
            bl = b.eval(e.length);
            let mean: S = b
                .cell_averages(e.length, e.cells, crate::config::AVERAGING_POINTS)
                .iter()
                .copied()
                .sum::<S>()
                / n;
            u[0] += mean - (b0 + bl) * lit(0.5);
        }
        edges.push(LumpedEdge {
            edge: ei,
            length: e.length,
            u,
            b0,
            bl,
        });
        for end in [End::Left, End::Right] {
            let v = net.vertex_at(ei, end).unwrap();
            if !vertices.contains(&v) {
                vertices.push(v);
            }
        }
    }
    vertices.sort_unstable();
    Ok(LumpedRegion { edges, vertices })
}

/// One endpoint of a region vertex.
#[derive(Clone, Debug)]
pub enum Attachment<S, M> {
    /// Live edge with its Riemann data in the outward frame.
    Pde(JunctionEdge<S, M>),
    /// Lumped edge: index into [`LumpedRegion::edges`] and the end touching the vertex.
    Lumped { slot: usize, end: End },
}

#[derive(Clone, Debug)]
pub struct RegionVertex<S, M> {
    pub vertex: usize,
    pub attachments: Vec<Attachment<S, M>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpmStep<S> {
    /// Per region vertex and endpoint: time averaged flux in the outward frame.
    pub fluxes: Vec<Vec<Vec<S>>>,
    /// New ODE states per region vertex.
    pub w_new: Vec<Vec<S>>,
    /// New averages per lumped edge.
    pub u_new: Vec<Vec<S>>,
    /// Godunov states per stage, region vertex and endpoint.
    pub stage_states: Vec<Vec<Vec<Vec<S>>>>,
    pub newton_iterations: usize,
}

/// Attachment list of every region vertex with only lumped endpoints filled in;
/// the caller replaces live endpoints by [`Attachment::Pde`].
pub fn region_vertices<S: Scalar, M: ConservationLaw<S>>(
    net: &Network<S, M>,
    region: &LumpedRegion<S>,
) -> Vec<(usize, Vec<Option<Attachment<S, M>>>)> {
    region
        .vertices
        .iter()
        .map(|&v| {
            let att = net.vertices[v]
                .endpoints
                .iter()
                .map(|ep| {
                    region
                        .slot_of(ep.edge)
                        .map(|slot| Attachment::Lumped { slot, end: ep.end })
                })
                .collect();
            (v, att)
        })
        .collect()
}

/// Advances the region over one step with the staged solver. Within a stage all
/// vertices are solved independently from the stage values of the composite state.
pub fn lpm_stage_solve<S: Scalar, M: ConservationLaw<S>>(
    net: &Network<S, M>,
    region: &LumpedRegion<S>,
    inputs: &[RegionVertex<S, M>],
    k: usize,
    dt: S,
    tableau: &ButcherTableau<S>,
    opts: NewtonOptions<S>,
) -> Result<LpmStep<S>> {
    if !(dt > S::zero()) {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    let edge_model = |slot: usize| &net.edges[region.edges[slot].edge].model;
    let frame_of = |slot: usize, end: End| EndpointFrame {
        edge: region.edges[slot].edge,
        mirror: end == End::Right,
    };

    // Per vertex: models in the outward frame.
    let models: Vec<Vec<M>> = inputs
        .iter()
        .map(|rv| {
            rv.attachments
                .iter()
                .map(|a| match a {
                    Attachment::Pde(je) => je.model.clone(),
                    Attachment::Lumped { slot, end } => {
                        frame_of(*slot, *end).model(edge_model(*slot))
                    }
                })
                .collect()
        })
        .collect();
    let anchors =
        |vi: usize, u_lumped: &[Vec<S>], pde: &dyn Fn(usize, usize) -> Vec<S>| -> Vec<Vec<S>> {
            inputs[vi]
                .attachments
                .iter()
                .enumerate()
                .map(|(j, a)| match a {
                    Attachment::Pde(_) => pde(vi, j),
                    Attachment::Lumped { slot, end } => {
                        let m = edge_model(*slot);
                        let s = lumped_anchor(&region.edges[*slot], &u_lumped[*slot], *end);
                        frame_of(*slot, *end).state(&m.reflection(), &s)
                    }
                })
                .collect()
        };
    let u0: Vec<Vec<S>> = region.edges.iter().map(|e| e.u.clone()).collect();
    let w0: Vec<Vec<S>> = inputs
        .iter()
        .map(|rv| net.vertices[rv.vertex].w.clone())
        .collect();
    let name = |vi: usize| net.vertices[inputs[vi].vertex].id.clone();
    let spec = |vi: usize| -> &CouplingSpec<S> { &net.vertices[inputs[vi].vertex].coupling };

    // Zeroth order solves and time polynomials of the live edges.
    let mut iterations = 0;
    let mut guesses = Vec::with_capacity(inputs.len());
    let mut time_coeffs: Vec<Vec<Option<Vec<Vec<S>>>>> = Vec::with_capacity(inputs.len());
    for (vi, rv) in inputs.iter().enumerate() {
        let ur = anchors(vi, &u0, &|vi, j| match &inputs[vi].attachments[j] {
            Attachment::Pde(je) => je.jet.value(),
            _ => unreachable!(),
        });
        let sol = solve_classical(&models[vi], &ur, &w0[vi], spec(vi), None, opts)
            .map_err(|e| e.at_stage(0).at_vertex(&name(vi)))?;
        iterations += sol.iterations;
        let mut tc = Vec::with_capacity(rv.attachments.len());
        for (j, a) in rv.attachments.iter().enumerate() {
            tc.push(match a {
                Attachment::Pde(je) => Some(
                    anchored_time_coeffs(std::slice::from_ref(je), &sol.states[j..=j], k)
                        .map_err(|e| e.at_vertex(&name(vi)))?
                        .remove(0),
                ),
                Attachment::Lumped { .. } => None,
            });
        }
        time_coeffs.push(tc);
        guesses.push(sol.xi);
    }

    let s = tableau.stages();
    let d = net.edges.first().map_or(0, |e| e.model.dim());
    let mut fluxes: Vec<Vec<Vec<S>>> = inputs
        .iter()
        .map(|rv| vec![vec![S::zero(); d]; rv.attachments.len()])
        .collect();
    let mut k_u: Vec<Vec<Vec<S>>> = Vec::with_capacity(s);
    let mut k_w: Vec<Vec<Vec<S>>> = Vec::with_capacity(s);
    let mut stage_states = Vec::with_capacity(s);
    for stage in 0..s {
        let t = tableau.c[stage] * dt;
        let combine =
            |base: &[Vec<S>], ks: &[Vec<Vec<S>>], coef: &dyn Fn(usize) -> S| -> Vec<Vec<S>> {
                let mut out = base.to_vec();
                for (j, kj) in ks.iter().enumerate() {
                    let c = coef(j);
                    for (o, kk) in out.iter_mut().zip(kj) {
                        for (a, b) in o.iter_mut().zip(kk) {
                            *a += dt * c * *b;
                        }
                    }
                }
                out
            };
        let ul = combine(&u0, &k_u, &|j| tableau.a[stage][j]);
        let wl = combine(&w0, &k_w, &|j| tableau.a[stage][j]);
        let pde_at = |vi: usize, j: usize| -> Vec<S> {
            time_coeffs[vi][j]
                .as_ref()
                .unwrap()
                .iter()
                .map(|c| Jet1::from_normalized(c.clone()).eval(t))
                .collect()
        };
        let mut states = Vec::with_capacity(inputs.len());
        let mut slopes_w = Vec::with_capacity(inputs.len());
        for vi in 0..inputs.len() {
            let ur = anchors(vi, &ul, &pde_at);
            let sol = solve_classical(
                &models[vi],
                &ur,
                &wl[vi],
                spec(vi),
                Some(&guesses[vi]),
                opts,
            )
            .map_err(|e| e.at_stage(stage).at_vertex(&name(vi)))?;
            iterations += sol.iterations;
            guesses[vi] = sol.xi.clone();
            slopes_w.push(spec(vi).rhs(&sol.states, &wl[vi]));
            for ((acc, m), ug) in fluxes[vi].iter_mut().zip(&models[vi]).zip(&sol.states) {
                for (a, f) in acc.iter_mut().zip(m.flux(ug)) {
                    *a += tableau.b[stage] * f;
                }
            }
            states.push(sol.states);
        }
        // Lumped edge slopes from the Godunov fluxes at both ends.
        let mut slopes_u: Vec<Vec<S>> = region
            .edges
            .iter()
            .map(|e| vec![S::zero(); e.u.len()])
            .collect();
        let mut h_star: Vec<[S; 2]> = vec![[S::zero(); 2]; region.edges.len()];
        for (vi, rv) in inputs.iter().enumerate() {
            for (j, a) in rv.attachments.iter().enumerate() {
                if let Attachment::Lumped { slot, end } = a {
                    let m = edge_model(*slot);
                    let fr = frame_of(*slot, *end);
                    let f = fr.flux_to_edge(&m.reflection(), &models[vi][j].flux(&states[vi][j]));
                    let sign = if *end == End::Right {
                        -S::one()
                    } else {
                        S::one()
                    };
                    let len = region.edges[*slot].length;
                    for (sv, fv) in slopes_u[*slot].iter_mut().zip(&f) {
                        *sv += sign * *fv / len;
                    }
                    h_star[*slot][end.index()] =
                        lumped_anchor(&region.edges[*slot], &ul[*slot], *end)[0];
                }
            }
        }
        for (slot, e) in region.edges.iter().enumerate() {
            if e.b0 != e.bl {
                let mut mean = ul[slot].clone();
                mean[0] = (h_star[slot][0] + h_star[slot][1]) * lit(0.5);
                let src = edge_model(slot).bottom_source(&mean, &((e.bl - e.b0) / e.length));
                for (sv, v) in slopes_u[slot].iter_mut().zip(src) {
                    *sv += v;
                }
            }
        }
        k_u.push(slopes_u);
        k_w.push(slopes_w);
        stage_states.push(states);
    }
    let finish = |base: &[Vec<S>], ks: &[Vec<Vec<S>>]| -> Vec<Vec<S>> {
        let mut out = base.to_vec();
        for (b, kj) in tableau.b.iter().zip(ks) {
            for (o, kk) in out.iter_mut().zip(kj) {
                for (a, v) in o.iter_mut().zip(kk) {
                    *a += dt * *b * *v;
                }
            }
        }
        out
    };
    Ok(LpmStep {
        fluxes,
        w_new: finish(&w0, &k_w),
        u_new: finish(&u0, &k_u),
        stage_states,
        newton_iterations: iterations,
    })
}
