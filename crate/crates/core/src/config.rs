//! TOML network configuration and network construction.
//!
//! ```toml
//! [run]
//! order = 4
//! cfl = 0.95
//! t_end = 2.4
//! solver = "tt"            # or "heoc"
//! reconstruction = "weno"  # or "linear"
//! outputs = [2.4]          # snapshot times
//!
//! [edge.E1]
//! length = 25.0
//! cells = 100
//! h = { kind = "constant", value = 2.0 }
//! q = { kind = "constant", value = 0.0 }
//!
//! [vertex.V1]
//! endpoints = ["E1:left"]
//! coupling = "manhole"
//! area = 1.0
//! initial = [2.0, 0.0]
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coupling::{
    coupling_equal_heights, coupling_manhole, coupling_transmission, CouplingSpec,
};
use crate::error::{Error, Result};
use crate::model::{ConservationLaw, ShallowWater};
use crate::network::{Edge, End, Endpoint, Network, Vertex};
use crate::profile::Profile;
use crate::reconstruction::ReconstructionMode;
use crate::scalar::Scalar;

/// Gauss points per cell (and per smooth piece) for initial cell averages.
pub const AVERAGING_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Tt,
    Heoc,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tt" => Ok(Self::Tt),
            "heoc" => Ok(Self::Heoc),
            other => Err(Error::Config(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub order: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub reconstruction: ReconstructionMode,
    /// Snapshot times; the final time is always written.
    #[serde(default)]
    pub outputs: Vec<f64>,
    #[serde(default = "default_g")]
    pub gravity: f64,
}

fn default_cfl() -> f64 {
    0.95
}

fn default_g() -> f64 {
    9.81
}

fn default_model() -> String {
    "swe".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub length: f64,
    pub cells: usize,
    #[serde(default = "default_model")]
    pub model: String,
    /// Depth. Exactly one of `h` and `level` (free surface `h + b`) is required.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom: Option<Profile>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Transmission,
    EqualHeights,
    Manhole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexConfig {
    /// `"<edge id>:left"` or `"<edge id>:right"`.
    pub endpoints: Vec<String>,
    pub coupling: CouplingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LumpConfig {
    pub edges: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub run: RunConfig,
    #[serde(default)]
    pub edge: BTreeMap<String, EdgeConfig>,
    #[serde(default)]
    pub vertex: BTreeMap<String, VertexConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lump: Option<LumpConfig>,
}

impl NetworkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Edge ids in natural order (`E2` before `E10`).
    pub fn edge_ids(&self) -> Vec<String> {
        sorted_ids(self.edge.keys())
    }

    pub fn vertex_ids(&self) -> Vec<String> {
        sorted_ids(self.vertex.keys())
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if r.order == 0 || r.order > 6 {
            return Err(Error::Config(format!("order {} outside 1..=6", r.order)));
        }
        if !(r.cfl > 0.0) {
            return Err(Error::Config("cfl must be positive".into()));
        }
        if !(r.t_end >= 0.0) {
            return Err(Error::Config("t_end must be nonnegative".into()));
        }
        if r.outputs.iter().any(|t| !(*t >= 0.0 && *t <= r.t_end)) {
            return Err(Error::Config("output times must lie in [0, t_end]".into()));
        }
        if !(r.gravity > 0.0) {
            return Err(Error::Config("gravity must be positive".into()));
        }
        build_network::<f64>(self).map(|_| ())
    }
}

fn natural_key(s: &str) -> (String, u64, String) {
    let split = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
    let digits: String = s[split..]
        .chars()
        .take_while(char::is_ascii_digit)
        .collect();
    let rest = s[split + digits.len()..].to_string();
    (s[..split].to_string(), digits.parse().unwrap_or(0), rest)
}

fn sorted_ids<'a>(ids: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut v: Vec<String> = ids.cloned().collect();
    v.sort_by_key(|s| natural_key(s));
    v
}

fn parse_endpoint(s: &str, ids: &[String]) -> Result<Endpoint> {
    let (id, end) = s
        .rsplit_once(':')
        .ok_or_else(|| Error::Config(format!("endpoint {s:?} must be <edge>:left|right")))?;
    let end = match end {
        "left" => End::Left,
        "right" => End::Right,
        other => {
            return Err(Error::Config(format!(
                "endpoint side {other:?} must be left or right"
            )))
        }
    };
    let edge = ids
        .iter()
        .position(|e| e == id)
        .ok_or_else(|| Error::Config(format!("endpoint {s:?} names an unknown edge")))?;
    Ok(Endpoint { edge, end })
}

/// Builds the network with cell averages of the configured profiles.
pub fn build_network<S: Scalar>(config: &NetworkConfig) -> Result<Network<S, ShallowWater<S>>> {
    let g = S::from_f64(config.run.gravity).unwrap();
    let model = ShallowWater::new(g);
    let ids = config.edge_ids();
    let mut edges = Vec::with_capacity(ids.len());
    for id in &ids {
        let ec = &config.edge[id];
        if ec.model != "swe" {
            return Err(Error::Config(format!(
                "edge {id}: unknown model {:?}",
                ec.model
            )));
        }
        if !(ec.length > 0.0) || ec.cells == 0 {
            return Err(Error::Config(format!(
                "edge {id}: length and cells must be positive"
            )));
        }
        let length = S::from_f64(ec.length).unwrap();
        let bottom = ec
            .bottom
            .as_ref()
            .map(|b| b.resolve(ec.length))
            .transpose()?;
        let averages = |p: &Profile| -> Result<Vec<S>> {
            Ok(p.resolve(ec.length)?
                .cell_averages(length, ec.cells, AVERAGING_POINTS))
        };
        let h = match (&ec.h, &ec.level) {
            (Some(h), None) => averages(h)?,
            (None, Some(level)) => {
                let lv = averages(level)?;
                match &bottom {
                    Some(b) => {
                        let bv: Vec<S> = b.cell_averages(length, ec.cells, AVERAGING_POINTS);
                        lv.iter().zip(&bv).map(|(a, b)| *a - *b).collect()
                    }
                    None => lv,
                }
            }
            _ => {
                return Err(Error::Config(format!(
                    "edge {id}: give exactly one of h and level"
                )))
            }
        };
        let q = match &ec.q {
            Some(q) => averages(q)?,
            None => vec![S::zero(); ec.cells],
        };
        let mut edge = Edge::new(id.clone(), length, ec.cells, model.clone(), vec![h, q])
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(b) = bottom {
            edge = edge.with_bottom(b);
        }
        edges.push(edge);
    }
    let mut vertices = Vec::new();
    for vid in config.vertex_ids() {
        let vc = &config.vertex[&vid];
        let endpoints = vc
            .endpoints
            .iter()
            .map(|s| parse_endpoint(s, &ids))
            .collect::<Result<Vec<_>>>()?;
        let n = endpoints.len();
        let coupling: CouplingSpec<S> = match vc.coupling {
            CouplingKind::Transmission => coupling_transmission(model.reflection()),
            CouplingKind::EqualHeights => coupling_equal_heights(n),
            CouplingKind::Manhole => {
                let area = vc
                    .area
                    .ok_or_else(|| Error::Config(format!("vertex {vid}: manhole needs area")))?;
                if !(area > 0.0) {
                    return Err(Error::Config(format!(
                        "vertex {vid}: area must be positive"
                    )));
                }
                coupling_manhole(n, S::from_f64(area).unwrap(), g)
            }
        };
        if vc.coupling != CouplingKind::Manhole && vc.area.is_some() {
            return Err(Error::Config(format!(
                "vertex {vid}: area only applies to manholes"
            )));
        }
        if vc.initial.len() != coupling.ode_dim() {
            return Err(Error::Config(format!(
                "vertex {vid}: initial must have {} entries",
                coupling.ode_dim()
            )));
        }
        if vc.coupling == CouplingKind::Manhole && !(vc.initial[0] > 0.0) {
            return Err(Error::Config(format!(
                "vertex {vid}: tank level must be positive"
            )));
        }
        vertices.push(Vertex {
            id: vid.clone(),
            endpoints,
            coupling,
            w: vc
                .initial
                .iter()
                .map(|v| S::from_f64(*v).unwrap())
                .collect(),
        });
    }
    let mut net = Network::new(edges, vertices).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(lump) = &config.lump {
        let mut lumped = Vec::new();
        for id in &lump.edges {
            let i = ids
                .iter()
                .position(|e| e == id)
                .ok_or_else(|| Error::Config(format!("lump names unknown edge {id}")))?;
            if !lumped.contains(&i) {
                lumped.push(i);
            }
        }
        net.lumped = lumped;
        crate::lpm::check_region(&net).map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIMPLE: &str = r#"
[run]
order = 2
t_end = 1.0

[edge.E1]
length = 2.0
cells = 4
h = { kind = "constant", value = 2.0 }
"#;

    #[test]
    fn parses_and_builds_single_edge() {
        let c = NetworkConfig::from_toml(SIMPLE).unwrap();
        assert_eq!(c.run.cfl, 0.95);
        let net = build_network::<f64>(&c).unwrap();
        assert_eq!(net.edges.len(), 1);
        assert!(net.vertices.is_empty());
        assert_eq!(net.edges[0].u[0], vec![2.0; 4]);
        assert_eq!(net.edges[0].u[1], vec![0.0; 4]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_endpoints() {
        assert!(NetworkConfig::from_toml(&format!("{SIMPLE}\nfoo = 1\n")).is_err());
        let bad = format!(
            "{SIMPLE}\n[vertex.V1]\nendpoints = [\"E9:left\"]\ncoupling = \"equal_heights\"\n"
        );
        let c = NetworkConfig::from_toml(&bad).unwrap();
        assert!(build_network::<f64>(&c).is_err());
        let dup = format!(
            "{SIMPLE}\n[vertex.V1]\nendpoints = [\"E1:left\"]\ncoupling = \"equal_heights\"\n[vertex.V2]\nendpoints = [\"E1:left\"]\ncoupling = \"equal_heights\"\n"
        );
        assert!(build_network::<f64>(&NetworkConfig::from_toml(&dup).unwrap()).is_err());
    }

    #[test]
    fn natural_edge_order() {
        let ids = ["E10", "E2", "E1"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>();
        assert_eq!(sorted_ids(ids.iter()), vec!["E1", "E2", "E10"]);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = NetworkConfig::from_toml(SIMPLE).unwrap();
        let again = NetworkConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
