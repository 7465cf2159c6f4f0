//! Test networks, error norms, convergence studies and CSV output for adernet.

pub mod cases;
pub mod norms;
pub mod output;
pub mod study;

use adernet::config::NetworkConfig;

pub type Sim = adernet::SweSimulation;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Solver(_) => 3,
            HarnessError::Io(_) | HarnessError::Csv(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl From<adernet::Error> for HarnessError {
    fn from(e: adernet::Error) -> Self {
        match e {
            adernet::Error::Config(m) => HarnessError::Config(m),
            other => HarnessError::Solver(other.to_string()),
        }
    }
}

/// Builds a simulation; every failure at this point counts as a config error.
pub fn simulation(config: &NetworkConfig) -> Result<Sim> {
    Sim::from_config(config).map_err(|e| HarnessError::Config(e.to_string()))
}

/// ODE-type state of a simulation: vertex ODE states, then lumped edge averages.
pub fn ode_state(sim: &Sim) -> Vec<f64> {
    let mut out: Vec<f64> = sim
        .network
        .vertices
        .iter()
        .flat_map(|v| v.w.iter().copied())
        .collect();
    if let Some(r) = &sim.region {
        out.extend(r.edges.iter().flat_map(|e| e.u.iter().copied()));
    }
    out
}

/// Column labels matching [`ode_state`].
pub fn ode_labels(sim: &Sim) -> Vec<String> {
    let mut out = Vec::new();
    for v in &sim.network.vertices {
        for c in 0..v.w.len() {
            out.push(format!("{}_w{c}", v.id));
        }
    }
    if let Some(r) = &sim.region {
        for e in &r.edges {
            let id = &sim.network.edges[e.edge].id;
            out.push(format!("{id}_h"));
            out.push(format!("{id}_q"));
        }
    }
    out
}

/// Time series of the ODE-type state, starting at the initial time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Trace {
    pub fn start(sim: &Sim) -> Self {
        Self {
            labels: ode_labels(sim),
            times: vec![sim.time],
            values: vec![ode_state(sim)],
        }
    }

    pub fn record(&mut self, sim: &Sim) {
        self.times.push(sim.time);
        self.values.push(ode_state(sim));
    }
}

/// Runs to `t_end`, recording the ODE trace and calling `snapshot` whenever a
/// time in `outputs` is reached (steps are clipped to land on them).
pub fn run_recorded(
    sim: &mut Sim,
    t_end: f64,
    outputs: &[f64],
    mut snapshot: impl FnMut(&Sim) -> Result<()>,
) -> Result<Trace> {
    let mut trace = Trace::start(sim);
    let mut marks: Vec<f64> = outputs.iter().copied().filter(|t| *t < t_end).collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    if t_end > 0.0 && outputs.iter().any(|t| *t <= 0.0) {
        snapshot(sim)?;
    }
    for stop in marks
        .into_iter()
        .filter(|t| *t > 0.0)
        .chain(std::iter::once(t_end))
    {
        sim.run_until(stop, |s| {
            trace.record(s);
            Ok(())
        })?;
        snapshot(sim)?;
    }
    Ok(trace)
}
