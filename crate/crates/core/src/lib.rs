//! Discrete stochastic chaos series `S_N(c, Z) = Σ_m Σ_{α ∈ Γ_m} c(α) Z^α`:
//! coefficient diagnostics, contraction-based fourth cumulants, exact moment
//! oracles, product-formula expansions, seeded simulation and bound
//! evaluators.

pub mod combinatorics;
pub mod contraction;
pub mod distributions;
pub mod error;
pub mod expansion;
pub mod experiments;
pub mod fixtures;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod report;
pub mod sampling;
pub mod splitting;
pub mod stats;
pub mod suite;

pub use error::{Error, Result};
pub use kernel::{AffineChaos, ChaosCoefficients, MultiIndex, SymmetricKernel};
