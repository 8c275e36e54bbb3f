//! Simulation and semi-analytic laboratory for the zero set of Brownian motion
//! with a variable drift, `B − f`.
//!
//! The modules build on each other bottom-up:
//!
//! | module | contents |
//! |---|---|
//! | [`gaussian`] | seeded substreams, Φ, bivariate rectangle probabilities |
//! | [`brownian`] | Brownian paths, bridge refinement, exact fBm |
//! | [`cantor`] | Cantor sets C_γ, addresses, the Cantor function, exclusion sets |
//! | [`drift`] | drift catalog with Hölder metadata and increment diagnostics |
//! | [`counting`] | the counting variable Z_{γ,n}: exact moments and Monte Carlo |
//! | [`zeros`] | zero detection, isolated candidates, singleton and record experiments |
//! | [`percolation`] | fractal percolation, Galton–Watson survival, joint Hawkes experiment |
//! | [`dimension`] | box counting, covering sums, defect sets |

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod brownian;
pub mod cantor;
pub mod counting;
pub mod dimension;
pub mod drift;
pub mod error;
pub mod gaussian;
pub mod percolation;
pub mod stats;
pub mod zeros;

pub use error::{Error, Result};
pub use gaussian::SeedSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
