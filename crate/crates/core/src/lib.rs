//! Encoding of QUBO problems onto a simulated Rydberg-atom annealer with
//! site-resolved detunings, optimized annealing protocols and a spectral
//! hardness measure.

pub mod annealer;
pub mod encoding;
pub mod error;
pub mod hardness;
pub mod optimizer;
pub mod problems;
pub mod qubo;

pub use error::{Error, Result};
