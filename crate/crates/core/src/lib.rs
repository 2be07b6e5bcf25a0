//! Minimal Gated Unit (MGU) recurrent networks for nonlinear system
//! identification, with parametric input-to-state stability (ISS) and
//! incremental ISS (δISS) certificates and stability-promoting training.
//!
//! Module map:
//! * [`netcore`]: parameters, forward simulation, initialization, checkpoints;
//! * [`stability`]: ISS/δISS conditions, gains, cascade bound, empirical probe;
//! * [`gradients`]: MSE, δISS penalty, BPTT gradient, finite-difference oracle;
//! * [`optimize`]: Adam, warm-start, L1-ball projection, training loop;
//! * [`dataio`]: excitation signals, synthetic plant, transforms, CSV, metrics;
//! * [`cli`]: configuration files and the command implementations behind the `mgu` binary.

pub mod cli;
pub mod dataio;
pub mod error;
pub mod gradients;
pub mod linalg;
pub mod netcore;
pub mod optimize;
pub mod stability;

pub use error::{Error, Result};

/// Crate version, stamped into every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
