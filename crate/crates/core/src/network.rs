//! Network topology, per-edge fields and the outward frame at junctions.

use crate::coupling::CouplingSpec;
use crate::error::{Error, Result};
use crate::model::ConservationLaw;
use crate::profile::Profile;
use crate::reconstruction::SpatialJet;
use crate::scalar::{from_usize, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum End {
    /// `x = 0`
    Left,
    /// `x = L`
    Right,
}

impl End {
    pub fn index(self) -> usize {
        match self {
            End::Left => 0,
            End::Right => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub edge: usize,
    pub end: End,
}

/// Orientation of an edge seen from a vertex. With `mirror` the edge's own
/// coordinate points into the vertex and is flipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EndpointFrame {
    pub edge: usize,
    pub mirror: bool,
}

impl EndpointFrame {
    pub fn of(ep: Endpoint) -> Self {
        Self {
            edge: ep.edge,
            mirror: ep.end == End::Right,
        }
    }

    pub fn state<S: Scalar>(&self, reflection: &[S], u: &[S]) -> Vec<S> {
        if self.mirror {
            u.iter().zip(reflection).map(|(v, s)| *v * *s).collect()
        } else {
            u.to_vec()
        }
    }

    pub fn jet<S: Scalar>(&self, reflection: &[S], jet: &SpatialJet<S>) -> SpatialJet<S> {
        if self.mirror {
            jet.mirrored(reflection)
        } else {
            jet.clone()
        }
    }

    /// Scalar coefficients (bottoms) seen in the frame: odd powers flip.
    pub fn scalar_coeffs<S: Scalar>(&self, c: &[S]) -> Vec<S> {
        if self.mirror {
            c.iter()
                .enumerate()
                .map(|(l, v)| if l % 2 == 1 { -*v } else { *v })
                .collect()
        } else {
            c.to_vec()
        }
    }

    /// Flux of the vertex-frame model mapped back to the edge's own frame.
    pub fn flux_to_edge<S: Scalar>(&self, reflection: &[S], f: &[S]) -> Vec<S> {
        if self.mirror {
            f.iter().zip(reflection).map(|(v, s)| -*v * *s).collect()
        } else {
            f.to_vec()
        }
    }

    pub fn model<S: Scalar, M: ConservationLaw<S>>(&self, m: &M) -> M {
        if self.mirror {
            m.mirrored()
        } else {
            m.clone()
        }
    }
}

/// State expressed in the outward frame of the given endpoint.
pub fn to_vertex_frame<S: Scalar, M: ConservationLaw<S>>(
    model: &M,
    u: &[S],
    frame: EndpointFrame,
) -> Vec<S> {
    frame.state(&model.reflection(), u)
}

#[derive(Clone, Debug)]
pub struct Edge<S, M> {
    pub id: String,
    pub length: S,
    pub cells: usize,
    pub model: M,
    /// Cell averages, `u[component][cell]`.
    pub u: Vec<Vec<S>>,
    pub bottom: Option<Profile>,
}

impl<S: Scalar, M: ConservationLaw<S>> Edge<S, M> {
    pub fn new(
        id: impl Into<String>,
        length: S,
        cells: usize,
        model: M,
        u: Vec<Vec<S>>,
    ) -> Result<Self> {
        let id = id.into();
        if !(length > S::zero()) || cells == 0 {
            return Err(Error::Network(format!(
                "edge {id}: length and cell count must be positive"
            )));
        }
        if u.len() != model.dim() || u.iter().any(|c| c.len() != cells) {
            return Err(Error::Network(format!(
                "edge {id}: field shape does not match {cells} cells"
            )));
        }
        let e = Self {
            id,
            length,
            cells,
            model,
            u,
            bottom: None,
        };
        for i in 0..cells {
            if !e.model.admissible(&e.cell(i)) {
                return Err(Error::Network(format!(
                    "edge {}: inadmissible initial state in cell {i}",
                    e.id
                )));
            }
        }
        Ok(e)
    }

    pub fn with_bottom(mut self, bottom: Profile) -> Self {
        self.bottom = Some(bottom);
        self
    }

    pub fn dx(&self) -> S {
        self.length / from_usize::<S>(self.cells)
    }

    pub fn cell(&self, i: usize) -> Vec<S> {
        self.u.iter().map(|c| c[i]).collect()
    }

    pub fn cell_center(&self, i: usize) -> S {
        self.dx() * (from_usize::<S>(i) + S::from_f64(0.5).unwrap())
    }

    /// `sum dx * u` per component.
    pub fn total(&self) -> Vec<S> {
        let dx = self.dx();
        self.u
            .iter()
            .map(|c| c.iter().copied().sum::<S>() * dx)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Vertex<S> {
    pub id: String,
    pub endpoints: Vec<Endpoint>,
    pub coupling: CouplingSpec<S>,
    pub w: Vec<S>,
}

#[derive(Clone, Debug)]
pub struct Network<S, M> {
    pub edges: Vec<Edge<S, M>>,
    pub vertices: Vec<Vertex<S>>,
    /// Edges replaced by a lumped parameter model.
    pub lumped: Vec<usize>,
    /// Vertex at the left and right end of each edge.
    attach: Vec<[Option<usize>; 2]>,
}

impl<S: Scalar, M: ConservationLaw<S>> Network<S, M> {
    pub fn new(edges: Vec<Edge<S, M>>, vertices: Vec<Vertex<S>>) -> Result<Self> {
        let mut attach: Vec<[Option<usize>; 2]> = vec![[None, None]; edges.len()];
        for (vi, v) in vertices.iter().enumerate() {
            if v.endpoints.is_empty() {
                return Err(Error::Network(format!("vertex {} has no endpoints", v.id)));
            }
            for ep in &v.endpoints {
                let slot = attach.get_mut(ep.edge).ok_or_else(|| {
                    Error::Network(format!("vertex {} references a missing edge", v.id))
                })?;
                let s = &mut slot[ep.end.index()];
                if let Some(other) = s {
                    return Err(Error::Network(format!(
                        "endpoint {:?} of edge {} attached to both {} and {}",
                        ep.end, edges[ep.edge].id, vertices[*other].id, v.id
                    )));
                }
                *s = Some(vi);
            }
            if v.coupling.edges() != v.endpoints.len() {
                return Err(Error::Network(format!(
                    "vertex {}: {} coupling needs {} endpoints, has {}",
                    v.id,
                    v.coupling.name(),
                    v.coupling.edges(),
                    v.endpoints.len()
                )));
            }
            if v.coupling.ode_dim() != v.w.len() {
                return Err(Error::Network(format!(
                    "vertex {}: ODE state must have {} components",
                    v.id,
                    v.coupling.ode_dim()
                )));
            }
        }
        Ok(Self {
            edges,
            vertices,
            lumped: Vec::new(),
            attach,
        })
    }

    pub fn vertex_at(&self, edge: usize, end: End) -> Option<usize> {
        self.attach[edge][end.index()]
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.vertices.iter().map(|v| v.endpoints.len()).collect()
    }

    pub fn is_lumped(&self, edge: usize) -> bool {
        self.lumped.contains(&edge)
    }
}
