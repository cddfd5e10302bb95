//! Simulation and analysis engine for reversal collision dynamics on finite
//! state spaces with an involution.
//!
//! The crate evolves measures under the binary reversal collision operator,
//! predicts the exact asymptotic equilibrium from the interaction graph of
//! the initial datum, and verifies conservation, entropy-decay, spectral and
//! stability properties numerically.

pub mod acceptance;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod measure;
pub mod oracles;
pub mod runner;
pub mod scenario;
pub mod space;

pub use error::{Error, Result};
pub use kernel::CollisionKernel;
pub use measure::{DiscreteMeasure, OddCoordinate};
pub use space::StateSpace;
