//! High-order ADER finite-volume schemes on networks of one-dimensional
//! hyperbolic balance laws coupled at junctions by algebraic conditions,
//! junction ODEs and lumped sub-network models.

pub mod ck;
pub mod config;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod jet;
pub mod junction;
pub mod linalg;
pub mod lpm;
pub mod model;
pub mod network;
pub mod profile;
pub mod quadrature;
pub mod reconstruction;
pub mod scalar;
pub mod tableau;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Shallow water in double precision.
pub type Swe = model::ShallowWater<f64>;
/// Shallow water network in double precision.
pub type SweNetwork = network::Network<f64, Swe>;
/// Shallow water simulation in double precision.
pub type SweSimulation = engine::Simulation<f64, Swe>;
pub type Tableau = tableau::ButcherTableau<f64>;
