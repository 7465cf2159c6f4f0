//! ADER finite volume time stepping on a network.
//!
//! Per step: one-sided junction data, junction solves, ghost cells, cell
//! reconstruction, interface GRPs and the conservative update. Depth is
//! reconstructed as the free surface `h + b` when an edge has a bottom.

use crate::ck::ck_expand;
use crate::config::{build_network, NetworkConfig, SolverKind, AVERAGING_POINTS};
use crate::coupling::{coupling_transmission, CouplingSpec};
use crate::error::{Error, Result};
use crate::junction::{solve_heoc, solve_tt, JunctionEdge, NewtonOptions};
use crate::lpm::{
    lpm_stage_solve, lump_region, region_vertices, Attachment, LumpedRegion, RegionVertex,
};
use crate::model::{ConservationLaw, ShallowWater};
use crate::network::{End, Endpoint, EndpointFrame, Network};
use crate::quadrature::gauss_legendre;
use crate::reconstruction::{ReconstructionMode, Reconstructor, SpatialJet};
use crate::scalar::{from_usize, lit, Scalar};
use crate::tableau::ButcherTableau;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeOptions<S> {
    pub order: usize,
    pub solver: SolverKind,
    pub reconstruction: ReconstructionMode,
    pub cfl: S,
}

/// How an edge end is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EndKind {
    /// No vertex: constant extrapolation.
    External,
    /// Two-edge transmission vertex treated as an interior interface. `owner`
    /// marks the endpoint that computes the shared interface flux.
    Stitched { other: Endpoint, owner: bool },
    /// Junction solved by the configured solver.
    Junction { vertex: usize },
    /// Vertex inside a lumped region.
    Region { vertex: usize },
}

#[derive(Clone, Debug)]
struct EdgeBottom<S> {
    avg: Vec<S>,
    /// Normalized Taylor coefficients at faces `0..=N`, order `K + 1`.
    face: Vec<Vec<S>>,
    /// Same at cell centers.
    center: Vec<Vec<S>>,
    /// Values at the quadrature nodes of every cell.
    nodes: Vec<Vec<S>>,
}

#[derive(Clone, Debug)]
pub struct Simulation<S, M> {
    pub network: Network<S, M>,
    pub region: Option<LumpedRegion<S>>,
    pub options: SchemeOptions<S>,
    pub time: S,
    pub steps: usize,
    pub newton_iterations: usize,
    rec: Reconstructor<S>,
    /// One order lower, for the cell touching an end without ghosts; the full
    /// order one-sided stencil there is unstable from order six on.
    edge_rec: Option<Reconstructor<S>>,
    tableau: ButcherTableau<S>,
    newton: NewtonOptions<S>,
    ends: Vec<[EndKind; 2]>,
    bottoms: Vec<Option<EdgeBottom<S>>>,
    quad: (Vec<S>, Vec<S>),
}

/// Number of ghost cells on each side of an edge.
fn ghosts(k: usize) -> usize {
    k
}

/// `cfl * min dx / max |lambda|` over all cells of the live edges.
pub fn compute_dt<S: Scalar, M: ConservationLaw<S>>(net: &Network<S, M>, cfl: S) -> Result<S> {
    if !(cfl > S::zero()) {
        return Err(Error::InvalidParameter("cfl must be positive".into()));
    }
    let mut best: Option<S> = None;
    for (ei, e) in net.edges.iter().enumerate() {
        if net.is_lumped(ei) {
            continue;
        }
        let dx = e.dx();
        for i in 0..e.cells {
            let s = e.model.max_speed(&e.cell(i));
            if s > S::zero() {
                let v = dx / s;
                best = Some(best.map_or(v, |b: S| b.min(v)));
            }
        }
    }
    let dt = best
        .ok_or_else(|| Error::InvalidParameter("no wave speed to bound the time step".into()))?
        * cfl;
    if !(dt > S::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    Ok(dt)
}

/// Conserved totals: `sum dx u` over live edges, lumped averages times length,
/// plus stored junction mass in the first component.
pub fn total_conserved<S: Scalar, M: ConservationLaw<S>>(
    net: &Network<S, M>,
    region: Option<&LumpedRegion<S>>,
) -> Vec<S> {
    let d = net.edges.first().map_or(1, |e| e.model.dim());
    let mut t = vec![S::zero(); d];
    for (ei, e) in net.edges.iter().enumerate() {
        if net.is_lumped(ei) && region.is_some() {
            continue;
        }
        for (a, v) in t.iter_mut().zip(e.total()) {
            *a += v;
        }
    }
    if let Some(r) = region {
        for le in &r.edges {
            for (a, v) in t.iter_mut().zip(&le.u) {
                *a += le.length * *v;
            }
        }
    }
    for v in &net.vertices {
        t[0] += v.coupling.stored_mass(&v.w);
    }
    t
}

fn poly_average<S: Scalar>(c: &[S], a: S, b: S) -> S {
    let mut s = S::zero();
    for (l, v) in c.iter().enumerate() {
        let p = (l + 1) as i32;
        s += *v * (b.powi(p) - a.powi(p)) / from_usize::<S>(l + 1);
    }
    s / (b - a)
}

fn horner<S: Scalar>(c: &[S], x: S) -> S {
    c.iter().rev().fold(S::zero(), |acc, v| acc * x + *v)
}

impl<S: Scalar> Simulation<S, ShallowWater<S>> {
    pub fn from_config(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let net = build_network::<S>(config)?;
        let r = &config.run;
        Self::new(
            net,
            SchemeOptions {
                order: r.order,
                solver: r.solver,
                reconstruction: r.reconstruction,
                cfl: S::from_f64(r.cfl).unwrap(),
            },
        )
    }
}

impl<S: Scalar, M: ConservationLaw<S>> Simulation<S, M> {
    pub fn new(network: Network<S, M>, options: SchemeOptions<S>) -> Result<Self> {
        let k = options.order;
        if k == 0 || k > 6 {
            return Err(Error::Unsupported(k));
        }
        if !(options.cfl > S::zero()) {
            return Err(Error::InvalidParameter("cfl must be positive".into()));
        }
        let rec = Reconstructor::new(k, options.reconstruction)?;
        let edge_rec = if k >= 6 {
            Some(Reconstructor::new(k - 1, options.reconstruction)?)
        } else {
            None
        };
        let tableau = ButcherTableau::for_order(k)?;
        let region = if network.lumped.is_empty() {
            None
        } else {
            Some(lump_region(&network)?)
        };
        let mut ends = Vec::with_capacity(network.edges.len());
        for (ei, e) in network.edges.iter().enumerate() {
            let lumped = network.is_lumped(ei);
            if !lumped && e.cells < 2 * k - 1 {
                return Err(Error::TooFewCells {
                    needed: 2 * k - 1,
                    have: e.cells,
                });
            }
            let mut kinds = [EndKind::External; 2];
            for end in [End::Left, End::Right] {
                let Some(v) = network.vertex_at(ei, end) else {
                    continue;
                };
                let vx = &network.vertices[v];
                let in_region = region.as_ref().is_some_and(|r| r.vertices.contains(&v));
                kinds[end.index()] = if in_region {
                    EndKind::Region { vertex: v }
                } else if matches!(vx.coupling, CouplingSpec::Transmission { .. }) {
                    let me = Endpoint { edge: ei, end };
                    let other = *vx.endpoints.iter().find(|p| **p != me).unwrap();
                    let o = &network.edges[other.edge];
                    if (o.dx() - e.dx()).abs() > lit::<S>(1e-12) * e.dx() {
                        return Err(Error::Network(format!(
                            "transmission vertex {} joins edges of unequal cell width",
                            vx.id
                        )));
                    }
                    EndKind::Stitched {
                        other,
                        owner: vx.endpoints[0] == me,
                    }
                } else {
                    EndKind::Junction { vertex: v }
                };
            }
            ends.push(kinds);
        }
        let quad = gauss_legendre::<S>(AVERAGING_POINTS);
        let bottoms = network
            .edges
            .iter()
            .map(|e| {
                e.bottom.as_ref().map(|b| {
                    let dx = e.dx();
                    EdgeBottom {
                        avg: b.cell_averages(e.length, e.cells, AVERAGING_POINTS),
                        face: (0..=e.cells)
                            .map(|i| b.taylor(dx * from_usize::<S>(i), k + 1))
                            .collect(),
                        center: (0..e.cells)
                            .map(|i| b.taylor(e.cell_center(i), k + 1))
                            .collect(),
                        nodes: (0..e.cells)
                            .map(|i| {
                                quad.0
                                    .iter()
                                    .map(|x| b.eval(e.cell_center(i) + *x * dx))
                                    .collect()
                            })
                            .collect(),
                    }
                })
            })
            .collect::<Vec<_>>();
        if network
            .edges
            .iter()
            .zip(&bottoms)
            .any(|(e, b)| b.is_some() && e.model.gravity().is_none())
        {
            return Err(Error::InvalidParameter(
                "bottom given for a model without bottom source".into(),
            ));
        }
        Ok(Self {
            network,
            region,
            options,
            time: S::zero(),
            steps: 0,
            newton_iterations: 0,
            rec,
            edge_rec,
            tableau,
            newton: NewtonOptions::default(),
            ends,
            bottoms,
            quad,
        })
    }

    pub fn compute_dt(&self) -> Result<S> {
        compute_dt(&self.network, self.options.cfl)
    }

    pub fn total_conserved(&self) -> Vec<S> {
        total_conserved(&self.network, self.region.as_ref())
    }

    /// Depth-like first component converted to the reconstructed variable.
    fn padded(&self, ei: usize) -> Vec<Vec<S>> {
        let e = &self.network.edges[ei];
        let g = ghosts(self.options.order);
        e.u.iter()
            .enumerate()
            .map(|(c, vals)| {
                let mut v = vec![S::zero(); vals.len() + 2 * g];
                for (i, x) in vals.iter().enumerate() {
                    v[g + i] = *x;
                    if c == 0 {
                        if let Some(b) = &self.bottoms[ei] {
                            v[g + i] += b.avg[i];
                        }
                    }
                }
                v
            })
            .collect()
    }

    /// Cells of an edge ordered from `end` inward, seen in the edge's frame.
    fn inward(data: &[Vec<S>], g: usize, n: usize, end: End, count: usize) -> Vec<Vec<S>> {
        data.iter()
            .map(|c| {
                (0..count)
                    .map(|j| match end {
                        End::Left => c[g + j],
                        End::Right => c[g + n - 1 - j],
                    })
                    .collect()
            })
            .collect()
    }

    /// Bottom Taylor coefficients at an end in the outward coordinate of that end.
    fn end_bottom(&self, ei: usize, end: End) -> Option<Vec<S>> {
        self.bottoms[ei].as_ref().map(|b| {
            let frame = EndpointFrame {
                edge: ei,
                mirror: end == End::Right,
            };
            let c = match end {
                End::Left => &b.face[0],
                End::Right => &b.face[b.face.len() - 1],
            };
            frame.scalar_coeffs(c)
        })
    }

    /// One-sided Riemann data at an edge end, in the outward frame of the end.
    fn end_data(&self, ei: usize, end: End, data: &[Vec<S>]) -> Result<JunctionEdge<S, M>> {
        let e = &self.network.edges[ei];
        let g = ghosts(self.options.order);
        let frame = EndpointFrame {
            edge: ei,
            mirror: end == End::Right,
        };
        let near = Self::inward(data, g, e.cells, end, self.options.order.min(e.cells));
        let refl = e.model.reflection();
        let bottom = self.end_bottom(ei, end);
        let mut coeffs = Vec::with_capacity(near.len());
        for (c, cells) in near.iter().enumerate() {
            let mut v = self.rec.one_sided(cells, e.dx(), e.length)?;
            if c == 0 {
                if let Some(b) = &bottom {
                    for (x, y) in v.iter_mut().zip(b) {
                        *x -= *y;
                    }
                }
            }
            if frame.mirror {
                for x in v.iter_mut() {
                    *x *= refl[c];
                }
            }
            coeffs.push(v);
        }
        Ok(JunctionEdge {
            model: frame.model(&e.model),
            jet: SpatialJet { coeffs },
            bottom,
        })
    }

    /// Ghost averages from Godunov time jets by the inverse Cauchy-Kowalevsky
    /// procedure; returned in the edge frame, ordered outward from the end.
    fn ilw_ghosts(
        &self,
        ei: usize,
        end: End,
        je: &JunctionEdge<S, M>,
        time_jets: &[Vec<S>],
    ) -> Result<Vec<Vec<S>>> {
        let k = self.options.order;
        let e = &self.network.edges[ei];
        let dx = e.dx();
        let x = crate::ck::ck_inverse(&je.model, time_jets, je.bottom.as_deref(), k)?;
        let refl = e.model.reflection();
        let g = ghosts(k);
        Ok(x.iter()
            .enumerate()
            .map(|(c, p)| {
                (0..g)
                    .map(|j| {
                        let a = -dx * from_usize::<S>(j + 1);
                        let b = -dx * from_usize::<S>(j);
                        let mut v = poly_average(p, a, b);
                        if c == 0 {
                            if let Some(bc) = &je.bottom {
                                v += poly_average(&bc[..k], a, b);
                            }
                        }
                        if end == End::Right {
                            v *= refl[c];
                        }
                        v
                    })
                    .collect()
            })
            .collect())
    }

    /// Neighbor cells across a stitched vertex, edge frame of the receiving end,
    /// ordered outward.
    fn stitched_ghosts(&self, end: End, other: Endpoint, data: &[Vec<S>]) -> Vec<Vec<S>> {
        let g = ghosts(self.options.order);
        let o = &self.network.edges[other.edge];
        let refl = o.model.reflection();
        let flip = end == other.end;
        Self::inward(data, g, o.cells, other.end, g)
            .into_iter()
            .enumerate()
            .map(|(c, v)| {
                if flip {
                    v.into_iter().map(|x| x * refl[c]).collect()
                } else {
                    v
                }
            })
            .collect()
    }

    /// Flux of the interface GRP between two cell jets, in the edge frame.
    fn interface_flux(
        &self,
        model: &M,
        left: SpatialJet<S>,
        right: SpatialJet<S>,
        bottom: Option<&[S]>,
        dt: S,
    ) -> Result<Vec<S>> {
        let refl = model.reflection();
        let mirror = EndpointFrame {
            edge: 0,
            mirror: true,
        };
        let edges = [
            JunctionEdge {
                model: model.mirrored(),
                jet: left.mirrored(&refl),
                bottom: bottom.map(|b| mirror.scalar_coeffs(b)),
            },
            JunctionEdge {
                model: model.clone(),
                jet: right,
                bottom: bottom.map(<[S]>::to_vec),
            },
        ];
        let spec = coupling_transmission(refl);
        let k = self.options.order;
        let sol = match self.options.solver {
            SolverKind::Tt => solve_tt(&edges, &[], &spec, k, dt, self.newton)?,
            SolverKind::Heoc => solve_heoc(&edges, &[], &spec, k, dt, &self.tableau, self.newton)?,
        };
        Ok(sol.fluxes[1].clone())
    }

    /// Advances by `dt`.
    pub fn step(&mut self, dt: S) -> Result<()> {
        if !(dt > S::zero()) {
            return Err(Error::InvalidParameter("time step must be positive".into()));
        }
        let k = self.options.order;
        let g = ghosts(k);
        let ne = self.network.edges.len();
        let live: Vec<bool> = (0..ne)
            .map(|i| !self.network.is_lumped(i) || self.region.is_none())
            .collect();
        let mut data: Vec<Vec<Vec<S>>> = (0..ne)
            .map(|i| if live[i] { self.padded(i) } else { Vec::new() })
            .collect();
        let mut valid = vec![[false; 2]; ne];
        let mut end_flux: Vec<[Option<Vec<S>>; 2]> = vec![[None, None]; ne];
        let mut new_w: Vec<Option<Vec<S>>> = vec![None; self.network.vertices.len()];
        let mut iterations = 0;

        // Junction solves.
        for (vi, vx) in self.network.vertices.iter().enumerate() {
            let kind = vx
                .endpoints
                .first()
                .map(|ep| self.ends[ep.edge][ep.end.index()]);
            if !matches!(kind, Some(EndKind::Junction { .. })) {
                continue;
            }
            let jes = vx
                .endpoints
                .iter()
                .map(|ep| self.end_data(ep.edge, ep.end, &data[ep.edge]))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.at_vertex(&vx.id))?;
            let sol = match self.options.solver {
                SolverKind::Tt => solve_tt(&jes, &vx.w, &vx.coupling, k, dt, self.newton),
                SolverKind::Heoc => {
                    solve_heoc(&jes, &vx.w, &vx.coupling, k, dt, &self.tableau, self.newton)
                }
            }
            .map_err(|e| e.at_vertex(&vx.id))?;
            iterations += sol.newton_iterations;
            for (j, ep) in vx.endpoints.iter().enumerate() {
                let e = &self.network.edges[ep.edge];
                let frame = EndpointFrame::of(*ep);
                end_flux[ep.edge][ep.end.index()] =
                    Some(frame.flux_to_edge(&e.model.reflection(), &sol.fluxes[j]));
                if self.options.solver == SolverKind::Tt {
                    let gh = self
                        .ilw_ghosts(ep.edge, ep.end, &jes[j], &sol.time_jets[j])
                        .map_err(|e| e.at_vertex(&vx.id))?;
                    write_ghosts(&mut data[ep.edge], g, e.cells, ep.end, &gh);
                    valid[ep.edge][ep.end.index()] = true;
                }
            }
            new_w[vi] = Some(sol.w_new);
        }

        // Lumped region.
        let mut new_region = None;
        if let Some(region) = &self.region {
            let mut inputs = Vec::with_capacity(region.vertices.len());
            for (v, att) in region_vertices(&self.network, region) {
                let vx = &self.network.vertices[v];
                let mut full = Vec::with_capacity(att.len());
                for (a, ep) in att.into_iter().zip(&vx.endpoints) {
                    full.push(match a {
                        Some(a) => a,
                        None => Attachment::Pde(
                            self.end_data(ep.edge, ep.end, &data[ep.edge])
                                .map_err(|e| e.at_vertex(&vx.id))?,
                        ),
                    });
                }
                inputs.push(RegionVertex {
                    vertex: v,
                    attachments: full,
                });
            }
            let step = lpm_stage_solve(
                &self.network,
                region,
                &inputs,
                k,
                dt,
                &self.tableau,
                self.newton,
            )?;
            iterations += step.newton_iterations;
            for (rv, (fl, w)) in inputs.iter().zip(step.fluxes.iter().zip(&step.w_new)) {
                let vx = &self.network.vertices[rv.vertex];
                for (ep, f) in vx.endpoints.iter().zip(fl) {
                    if matches!(self.ends[ep.edge][ep.end.index()], EndKind::Region { .. })
                        && live[ep.edge]
                        && !self.network.is_lumped(ep.edge)
                    {
                        let e = &self.network.edges[ep.edge];
                        end_flux[ep.edge][ep.end.index()] =
                            Some(EndpointFrame::of(*ep).flux_to_edge(&e.model.reflection(), f));
                    }
                }
                new_w[rv.vertex] = Some(w.clone());
            }
            let mut r = region.clone();
            for (le, u) in r.edges.iter_mut().zip(step.u_new) {
                le.u = u;
            }
            new_region = Some(r);
        }

        // Remaining ghosts.
        for ei in 0..ne {
            if !live[ei] || (self.region.is_some() && self.network.is_lumped(ei)) {
                continue;
            }
            let n = self.network.edges[ei].cells;
            for end in [End::Left, End::Right] {
                match self.ends[ei][end.index()] {
                    EndKind::External => {
                        let gh: Vec<Vec<S>> = Self::inward(&data[ei], g, n, end, 1)
                            .iter()
                            .map(|c| vec![c[0]; g])
                            .collect();
                        write_ghosts(&mut data[ei], g, n, end, &gh);
                        valid[ei][end.index()] = true;
                    }
                    EndKind::Stitched { other, .. } => {
                        let gh = self.stitched_ghosts(end, other, &data[other.edge]);
                        write_ghosts(&mut data[ei], g, n, end, &gh);
                        valid[ei][end.index()] = true;
                    }
                    _ => {}
                }
            }
        }

        // Reconstruction and interface fluxes.
        let mut polys: Vec<Vec<Vec<Vec<S>>>> = vec![Vec::new(); ne];
        for ei in 0..ne {
            if data[ei].is_empty() || (self.region.is_some() && self.network.is_lumped(ei)) {
                continue;
            }
            let n = self.network.edges[ei].cells;
            let lo = if valid[ei][0] { 0 } else { g };
            let hi = if valid[ei][1] { n + 2 * g } else { g + n };
            let first = if valid[ei][0] { g - 1 } else { g };
            let last = if valid[ei][1] { g + n } else { g + n - 1 };
            // polys[ei][comp][p - first] for padded index p.
            polys[ei] = data[ei]
                .iter()
                .map(|c| {
                    (first..=last)
                        .map(|p| match &self.edge_rec {
                            Some(low)
                                if (!valid[ei][0] && p == g)
                                    || (!valid[ei][1] && p + 1 == g + n) =>
                            {
                                let mut q = low.cell_poly(c, p, lo, hi)?;
                                q.push(S::zero());
                                Ok(q)
                            }
                            _ => self.rec.cell_poly(c, p, lo, hi),
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
        }
        let half = lit::<S>(0.5);
        let mut face_flux: Vec<Vec<Vec<S>>> = vec![Vec::new(); ne];
        for ei in 0..ne {
            if polys[ei].is_empty() {
                continue;
            }
            let e = &self.network.edges[ei];
            let n = e.cells;
            let dx = e.dx();
            let first = if valid[ei][0] { g - 1 } else { g };
            let jet_of = |p: usize, xi: S| -> SpatialJet<S> {
                let mut coeffs: Vec<Vec<S>> = polys[ei]
                    .iter()
                    .map(|c| self.rec.taylor_at(&c[p - first], xi, dx))
                    .collect();
                if let Some(b) = &self.bottoms[ei] {
                    // Face index of the interface at this side of padded cell p.
                    let f = if xi > S::zero() { p + 1 - g } else { p - g };
                    for (x, y) in coeffs[0].iter_mut().zip(&b.face[f]) {
                        *x -= *y;
                    }
                }
                SpatialJet { coeffs }
            };
            let mut fl = vec![Vec::new(); n + 1];
            for f in 0..=n {
                let end = if f == 0 {
                    Some(End::Left)
                } else if f == n {
                    Some(End::Right)
                } else {
                    None
                };
                if let Some(end) = end {
                    match self.ends[ei][end.index()] {
                        EndKind::External | EndKind::Stitched { owner: true, .. } => {}
                        _ => continue,
                    }
                }
                let left = jet_of(g + f - 1, half);
                let right = jet_of(g + f, -half);
                let b = self.bottoms[ei].as_ref().map(|b| b.face[f].as_slice());
                fl[f] = self
                    .interface_flux(&e.model, left, right, b, dt)
                    .map_err(|err| Error::Network(format!("edge {} interface {f}: {err}", e.id)))?;
            }
            face_flux[ei] = fl;
        }
        // Shared fluxes at stitched vertices.
        for ei in 0..ne {
            for end in [End::Left, End::Right] {
                if let EndKind::Stitched { other, owner: true } = self.ends[ei][end.index()] {
                    let f = face_flux[ei][if end == End::Left {
                        0
                    } else {
                        self.network.edges[ei].cells
                    }]
                    .clone();
                    let o = &self.network.edges[other.edge];
                    let fo = if end == other.end {
                        f.iter()
                            .zip(o.model.reflection())
                            .map(|(v, s)| -*v * s)
                            .collect()
                    } else {
                        f
                    };
                    let idx = if other.end == End::Left { 0 } else { o.cells };
                    face_flux[other.edge][idx] = fo;
                }
            }
        }
        for ei in 0..ne {
            if face_flux[ei].is_empty() {
                continue;
            }
            let n = self.network.edges[ei].cells;
            for end in [End::Left, End::Right] {
                if let Some(f) = end_flux[ei][end.index()].take() {
                    face_flux[ei][if end == End::Left { 0 } else { n }] = f;
                }
            }
        }

        // Conservative update.
        let sources: Vec<Option<Vec<S>>> = (0..ne)
            .map(|ei| {
                if face_flux[ei].is_empty() || self.bottoms[ei].is_none() {
                    return Ok(None);
                }
                self.bottom_sources(ei, &polys[ei], if valid[ei][0] { g - 1 } else { g }, dt)
                    .map(Some)
            })
            .collect::<Result<_>>()?;
        for ei in 0..ne {
            if face_flux[ei].is_empty() {
                continue;
            }
            let e = &mut self.network.edges[ei];
            let r = dt / e.dx();
            for i in 0..e.cells {
                for c in 0..e.u.len() {
                    e.u[c][i] -= r * (face_flux[ei][i + 1][c] - face_flux[ei][i][c]);
                }
                if let Some(s) = &sources[ei] {
                    e.u[1][i] += dt * s[i];
                }
            }
            for i in 0..e.cells {
                if !e.model.admissible(&e.cell(i)) {
                    return Err(Error::AdmissibilityLost {
                        edge: e.id.clone(),
                        cell: i,
                    });
                }
            }
        }
        for (v, w) in new_w.into_iter().enumerate() {
            if let Some(w) = w {
                self.network.vertices[v].w = w;
            }
        }
        if let Some(r) = new_region {
            for le in &r.edges {
                if !self.network.edges[le.edge].model.admissible(&le.u) {
                    return Err(Error::AdmissibilityLost {
                        edge: self.network.edges[le.edge].id.clone(),
                        cell: 0,
                    });
                }
            }
            self.region = Some(r);
        }
        self.time += dt;
        self.steps += 1;
        self.newton_iterations += iterations;
        Ok(())
    }

    /// Cell averaged bottom source of the momentum equation, time averaged over
    /// the step, in a form that balances the flux difference of a lake at rest.
    fn bottom_sources(
        &self,
        ei: usize,
        polys: &[Vec<Vec<S>>],
        first: usize,
        dt: S,
    ) -> Result<Vec<S>> {
        let e = &self.network.edges[ei];
        let b = self.bottoms[ei].as_ref().unwrap();
        let grav = e.model.gravity().unwrap();
        let k = self.options.order;
        let g = ghosts(k);
        let dx = e.dx();
        let half = lit::<S>(0.5);
        let (nodes, weights) = &self.quad;
        let mut out = Vec::with_capacity(e.cells);
        for i in 0..e.cells {
            let p = g + i - first;
            let hp = &polys[0][p];
            // Time terms of the surface from a local space-time expansion.
            let mut time_terms: Vec<Vec<S>> = Vec::new();
            if k > 1 {
                let mut x: Vec<Vec<S>> = polys
                    .iter()
                    .map(|c| self.rec.taylor_at(&c[p], S::zero(), dx))
                    .collect();
                for (v, bb) in x[0].iter_mut().zip(&b.center[i]) {
                    *v -= *bb;
                }
                let u = ck_expand(&e.model, &x, Some(&b.center[i]), k)?;
                // Coefficient of x^m in the time average of h - h(t=0).
                time_terms = vec![vec![S::zero(); k]];
                for a in 1..k {
                    let w = dt.powi(a as i32) / from_usize::<S>(a + 1);
                    for m in 0..k - a {
                        time_terms[0][m] += u[0].get(a, m) * w;
                    }
                }
            }
            let surface = |xr: S| -> S {
                let mut v = horner(hp, xr / dx);
                if let Some(t) = time_terms.first() {
                    v += horner(t, xr);
                }
                v
            };
            let slope = |xr: S| -> S {
                let mut v = S::zero();
                let xi = xr / dx;
                for m in (1..hp.len()).rev() {
                    v = v * xi + hp[m] * from_usize::<S>(m);
                }
                v /= dx;
                if let Some(t) = time_terms.first() {
                    let mut d = S::zero();
                    for m in (1..t.len()).rev() {
                        d = d * xr + t[m] * from_usize::<S>(m);
                    }
                    v += d;
                }
                v
            };
            let bl = b.face[i][0];
            let br = b.face[i + 1][0];
            let hl = surface(-half * dx);
            let hr = surface(half * dx);
            let integral: S = nodes
                .iter()
                .zip(weights)
                .zip(&b.nodes[i])
                .map(|((x, w), bv)| *w * slope(*x * dx) * *bv)
                .sum::<S>()
                * dx;
            let s =
                (-grav * (hr * br - hl * bl) + grav * integral + half * grav * (br * br - bl * bl))
                    / dx;
            out.push(s);
        }
        Ok(out)
    }

    /// Steps until `t_end`, clipping the last step. The callback sees the state
    /// after every step.
    pub fn run_until(
        &mut self,
        t_end: S,
        mut on_step: impl FnMut(&Self) -> Result<()>,
    ) -> Result<()> {
        let tiny = lit::<S>(1e-12) * (S::one() + t_end.abs());
        while self.time < t_end - tiny {
            let mut dt = self.compute_dt()?;
            if self.time + dt > t_end {
                dt = t_end - self.time;
            }
            let steps = self.steps;
            self.step(dt).map_err(|e| match e {
                Error::Junction { .. } | Error::AdmissibilityLost { .. } => e,
                other => Error::Network(format!("step {steps}: {other}")),
            })?;
            on_step(self)?;
        }
        Ok(())
    }
}

/// Writes ghost values (edge frame, ordered outward) into a padded array.
fn write_ghosts<S: Scalar>(data: &mut [Vec<S>], g: usize, n: usize, end: End, gh: &[Vec<S>]) {
    for (c, vals) in data.iter_mut().zip(gh) {
        for (j, v) in vals.iter().enumerate().take(g) {
            match end {
                End::Left => c[g - 1 - j] = *v,
                End::Right => c[g + n + j] = *v,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Edge;
    use approx::assert_relative_eq;

    fn single(h: f64, n: usize, dx: f64) -> Network<f64, ShallowWater<f64>> {
        let e = Edge::new(
            "E1",
            dx * n as f64,
            n,
            ShallowWater::default(),
            vec![vec![h; n], vec![0.0; n]],
        )
        .unwrap();
        Network::new(vec![e], vec![]).unwrap()
    }

    #[test]
    fn dt_examples() {
        let net = single(1.0, 10, 0.5);
        let dt = compute_dt(&net, 0.95).unwrap();
        assert_relative_eq!(dt, 0.95 * 0.5 / 9.81f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(dt, 0.15166, epsilon = 1e-5);
        let fine = single(1.0, 20, 0.25);
        assert_relative_eq!(compute_dt(&fine, 0.95).unwrap(), dt / 2.0, epsilon = 1e-14);
        assert!(compute_dt(&net, 0.0).is_err());
    }

    #[test]
    fn constant_state_is_steady() {
        for solver in [SolverKind::Tt, SolverKind::Heoc] {
            let mut sim = Simulation::new(
                single(2.0, 8, 0.5),
                SchemeOptions {
                    order: 3,
                    solver,
                    reconstruction: ReconstructionMode::Weno,
                    cfl: 0.9,
                },
            )
            .unwrap();
            for _ in 0..5 {
                let dt = sim.compute_dt().unwrap();
                sim.step(dt).unwrap();
            }
            assert!(sim.network.edges[0].u[0]
                .iter()
                .all(|v| (*v - 2.0).abs() < 1e-14));
            assert!(sim.network.edges[0].u[1].iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn too_few_cells_rejected() {
        let r = Simulation::new(
            single(2.0, 6, 0.5),
            SchemeOptions {
                order: 4,
                solver: SolverKind::Tt,
                reconstruction: ReconstructionMode::Weno,
                cfl: 0.9,
            },
        );
        assert!(matches!(r, Err(Error::TooFewCells { needed: 7, have: 6 })));
    }
}
