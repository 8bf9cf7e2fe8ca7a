//! Monte Carlo and numerical-optimization laboratory for critical Bernoulli
//! percolation in high dimension: half-space two-point functions, pioneer
//! counts, capacities and regularity diagnostics.

pub mod analysis;
pub mod capacity;
pub mod cluster;
pub mod configuration;
pub mod error;
pub mod estimators;
pub mod flow;
pub mod lattice;
pub mod regularity;

pub use configuration::{Configuration, CriticalPoint, PcProvenance, PC_D7_NN_LITERATURE};
pub use error::{Error, Result};
pub use lattice::{GraphSpec, Model, Point, Region};
