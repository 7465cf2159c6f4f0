//! Built-in test networks.

use std::collections::BTreeMap;

use adernet::config::{
    CouplingKind, EdgeConfig, LumpConfig, NetworkConfig, RunConfig, SolverKind, VertexConfig,
};
use adernet::profile::{HermiteNode, Profile};
use adernet::reconstruction::ReconstructionMode;

use crate::{HarnessError, Result};

/// Cells per 25 m of edge length used when a case is loaded without a grid.
pub const DEFAULT_CELLS: usize = 100;

pub struct CaseInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const CASES: &[CaseInfo] = &[
    CaseInfo {
        name: "split-circle",
        summary: "3 edges between two manholes, smooth degree-15 data, t_end 2.4",
    },
    CaseInfo {
        name: "diamond",
        summary: "6 edges, 4 vertices, all but E1 lumped, degree-14 data on E1, t_end 7",
    },
    CaseInfo {
        name: "shock",
        summary: "4 edges, 3 manholes, levels 5/5/6/5 at rest, t_end 4",
    },
    CaseInfo {
        name: "tree",
        summary: "32 edges, 24 equal-heights vertices, dam break on E1, no lumping",
    },
    CaseInfo {
        name: "tree-lumped",
        summary: "tree with the lower branch lumped",
    },
    CaseInfo {
        name: "well-balanced-b1",
        summary: "split circle over a linear bottom with a raised level block, E2 lumped",
    },
    CaseInfo {
        name: "well-balanced-b2",
        summary: "lake at rest over a quadratic bottom, E2 lumped",
    },
    CaseInfo {
        name: "well-balanced-b3",
        summary: "lake at rest over a sinusoidal bottom, E2 lumped",
    },
];

const L: f64 = 25.0;

fn constant(v: f64) -> Profile {
    Profile::constant(v)
}

fn edge(length: f64, h: Profile) -> EdgeConfig {
    EdgeConfig {
        length,
        cells: cells_for(length, DEFAULT_CELLS),
        model: "swe".into(),
        h: Some(h),
        level: None,
        q: Some(constant(0.0)),
        bottom: None,
    }
}

fn vertex(endpoints: &[&str], coupling: CouplingKind, initial: &[f64]) -> VertexConfig {
    VertexConfig {
        endpoints: endpoints.iter().map(|s| s.to_string()).collect(),
        coupling,
        area: (coupling == CouplingKind::Manhole).then_some(1.0),
        initial: initial.to_vec(),
    }
}

fn run(t_end: f64, order: usize) -> RunConfig {
    RunConfig {
        order,
        cfl: 0.95,
        t_end,
        solver: SolverKind::Tt,
        reconstruction: ReconstructionMode::Weno,
        outputs: vec![],
        gravity: 9.81,
    }
}

fn cells_for(length: f64, per_25: usize) -> usize {
    ((length / L) * per_25 as f64).round().max(1.0) as usize
}

fn split_circle() -> NetworkConfig {
    let h = Profile::Hermite {
        nodes: vec![
            HermiteNode {
                x: 0.0,
                value: 2.0,
                flat: 7,
            },
            HermiteNode {
                x: L,
                value: 3.0,
                flat: 7,
            },
        ],
    };
    let mut edges = BTreeMap::new();
    for id in ["E1", "E2", "E3"] {
        edges.insert(id.to_string(), edge(L, h.clone()));
    }
    let mut vertices = BTreeMap::new();
    vertices.insert(
        "V1".into(),
        vertex(
            &["E1:left", "E2:left", "E3:left"],
            CouplingKind::Manhole,
            &[2.0, 0.0],
        ),
    );
    vertices.insert(
        "V2".into(),
        vertex(
            &["E1:right", "E2:right", "E3:right"],
            CouplingKind::Manhole,
            &[3.0, 0.0],
        ),
    );
    NetworkConfig {
        run: run(2.4, 4),
        edge: edges,
        vertex: vertices,
        lump: None,
    }
}

fn diamond() -> NetworkConfig {
    let bump = Profile::Hermite {
        nodes: vec![
            HermiteNode {
                x: 0.0,
                value: 5.0,
                flat: 6,
            },
            HermiteNode {
                x: 0.5 * L,
                value: 5.3,
                flat: 0,
            },
            HermiteNode {
                x: L,
                value: 5.0,
                flat: 6,
            },
        ],
    };
    let layout = [
        ("E1", "V1", "V2"),
        ("E2", "V3", "V1"),
        ("E3", "V1", "V4"),
        ("E4", "V4", "V3"),
        ("E5", "V2", "V3"),
        ("E6", "V2", "V4"),
    ];
    let mut edges = BTreeMap::new();
    for (id, _, _) in layout {
        edges.insert(
            id.to_string(),
            edge(
                L,
                if id == "E1" {
                    bump.clone()
                } else {
                    constant(5.0)
                },
            ),
        );
    }
    let mut vertices = BTreeMap::new();
    for v in ["V1", "V2", "V3", "V4"] {
        let eps = endpoints_of(&layout, v);
        let eps: Vec<&str> = eps.iter().map(String::as_str).collect();
        let vc = if v == "V1" || v == "V3" {
            vertex(&eps, CouplingKind::Manhole, &[5.0, 0.0])
        } else {
            vertex(&eps, CouplingKind::EqualHeights, &[])
        };
        vertices.insert(v.to_string(), vc);
    }
    let lump = LumpConfig {
        edges: ["E2", "E3", "E4", "E5", "E6"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    NetworkConfig {
        run: run(7.0, 4),
        edge: edges,
        vertex: vertices,
        lump: Some(lump),
    }
}

fn endpoints_of(layout: &[(&str, &str, &str)], v: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (e, a, b) in layout {
        if *a == v {
            out.push(format!("{e}:left"));
        }
        if *b == v {
            out.push(format!("{e}:right"));
        }
    }
    out
}

fn shock() -> NetworkConfig {
    let layout = [
        ("E1", "V1", "V2"),
        ("E2", "V1", "V2"),
        ("E3", "V3", "V1"),
        ("E4", "V2", "V3"),
    ];
    let mut edges = BTreeMap::new();
    for (id, _, _) in layout {
        edges.insert(
            id.to_string(),
            edge(L, constant(if id == "E3" { 6.0 } else { 5.0 })),
        );
    }
    let mut vertices = BTreeMap::new();
    for v in ["V1", "V2", "V3"] {
        let eps = endpoints_of(&layout, v);
        let eps: Vec<&str> = eps.iter().map(String::as_str).collect();
        vertices.insert(
            v.to_string(),
            vertex(&eps, CouplingKind::Manhole, &[5.0, 0.0]),
        );
    }
    NetworkConfig {
        run: run(4.0, 6),
        edge: edges,
        vertex: vertices,
        lump: None,
    }
}

/// Edge layout of the tree: `(edge, tail vertex, head vertex)`.
pub fn tree_layout() -> Vec<(String, String, String)> {
    let mut out = Vec::new();
    let mut add = |e: usize, a: usize, b: usize| {
        out.push((format!("E{e}"), format!("V{a}"), format!("V{b}")))
    };
    add(1, 1, 2);
    add(2, 1, 1);
    add(3, 2, 3);
    add(4, 2, 4);
    // Two splitting levels: V3..V8 fan out into V5..V16.
    for (i, v) in (3..=8).enumerate() {
        add(5 + 2 * i, v, 2 * v - 1);
        add(6 + 2 * i, v, 2 * v);
    }
    // Joining levels: pairs of vertices merge until V23.
    for i in 0..8 {
        add(17 + i, 9 + i, 17 + i / 2);
    }
    for i in 0..4 {
        add(25 + i, 17 + i, 21 + i / 2);
    }
    add(29, 21, 23);
    add(30, 22, 23);
    add(31, 23, 24);
    add(32, 24, 24);
    out
}

/// Edges of the lower half of the tree, replaced by a lumped model in `tree-lumped`.
pub const TREE_LUMPED: &[&str] = &[
    "E5", "E6", "E9", "E10", "E11", "E12", "E17", "E18", "E19", "E20", "E25", "E26",
];

fn tree(lumped: bool) -> NetworkConfig {
    let layout = tree_layout();
    let layout: Vec<(&str, &str, &str)> = layout
        .iter()
        .map(|(e, a, b)| (e.as_str(), a.as_str(), b.as_str()))
        .collect();
    let long = ["E1", "E2", "E3", "E4", "E29", "E30", "E31", "E32"];
    let mut edges = BTreeMap::new();
    for (id, _, _) in &layout {
        let length = if long.contains(id) { L } else { 2.5 };
        let h = match *id {
            "E1" => Profile::Piecewise {
                breaks: vec![18.5],
                values: vec![3.0, 2.0],
            },
            "E2" => constant(3.0),
            _ => constant(2.0),
        };
        edges.insert(id.to_string(), edge(length, h));
    }
    let mut vertices = BTreeMap::new();
    for v in 1..=24 {
        let name = format!("V{v}");
        let eps = endpoints_of(&layout, &name);
        let eps: Vec<&str> = eps.iter().map(String::as_str).collect();
        vertices.insert(name, vertex(&eps, CouplingKind::EqualHeights, &[]));
    }
    let lump = lumped.then(|| LumpConfig {
        edges: TREE_LUMPED.iter().map(|s| s.to_string()).collect(),
    });
    NetworkConfig {
        run: run(6.0, 3),
        edge: edges,
        vertex: vertices,
        lump,
    }
}

/// Bottom `b`, surface level `H` and the depths at both ends.
fn well_balanced(which: usize) -> NetworkConfig {
    let s = 0.3 / L;
    let bottom = match which {
        1 => Profile::Polynomial {
            coeffs: vec![0.0, s],
            center: 0.0,
            scale: 1.0,
        },
        // 0.3 (x/L + (x/L - 1/2)^2 - 1/4) = 0.3 (x/L)^2
        2 => Profile::Polynomial {
            coeffs: vec![0.0, 0.0, 0.3],
            center: 0.0,
            scale: L,
        },
        _ => Profile::Sum {
            terms: vec![
                Profile::Polynomial {
                    coeffs: vec![0.0, s],
                    center: 0.0,
                    scale: 1.0,
                },
                Profile::Sine {
                    amplitude: 0.3,
                    omega: std::f64::consts::PI / L,
                    phase: 0.0,
                },
            ],
        },
    };
    let level = if which == 1 {
        Profile::Piecewise {
            breaks: vec![0.25 * L, 0.75 * L],
            values: vec![3.0, 4.0, 3.0],
        }
    } else {
        constant(3.0)
    };
    let b_end = 0.3;
    let mut edges = BTreeMap::new();
    for id in ["E1", "E2", "E3"] {
        let mut e = edge(L, constant(0.0));
        e.h = None;
        e.level = Some(level.clone());
        e.bottom = Some(bottom.clone());
        edges.insert(id.to_string(), e);
    }
    let mut vertices = BTreeMap::new();
    vertices.insert(
        "V1".into(),
        vertex(
            &["E1:left", "E2:left", "E3:left"],
            CouplingKind::Manhole,
            &[3.0, 0.0],
        ),
    );
    vertices.insert(
        "V2".into(),
        vertex(
            &["E1:right", "E2:right", "E3:right"],
            CouplingKind::Manhole,
            &[3.0 - b_end, 0.0],
        ),
    );
    let mut run = run(0.3, 4);
    run.solver = SolverKind::Heoc;
    NetworkConfig {
        run,
        edge: edges,
        vertex: vertices,
        lump: Some(LumpConfig {
            edges: vec!["E2".into()],
        }),
    }
}

/// Configuration of a built-in case at the default resolution.
pub fn builtin_case(name: &str) -> Result<NetworkConfig> {
    Ok(match name {
        "split-circle" => split_circle(),
        "diamond" => diamond(),
        "shock" => shock(),
        "tree" => tree(false),
        "tree-lumped" => tree(true),
        "well-balanced-b1" => well_balanced(1),
        "well-balanced-b2" => well_balanced(2),
        "well-balanced-b3" => well_balanced(3),
        other => {
            return Err(HarnessError::Config(format!(
                "unknown case {other:?}, see list-cases"
            )))
        }
    })
}

/// Sets the grid (cells per 25 m of edge), order and solver of a configuration.
pub fn with_resolution(
    mut config: NetworkConfig,
    cells_per_25: usize,
    order: usize,
    solver: SolverKind,
) -> NetworkConfig {
    for e in config.edge.values_mut() {
        e.cells = cells_for(e.length, cells_per_25);
    }
    config.run.order = order;
    config.run.solver = solver;
    config
}
