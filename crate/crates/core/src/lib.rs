//! Stochastic mean curvature flow on networks.
//!
//! Each site of a coupling graph carries a scalar position `u_i` that evolves
//! by `du_i = κ_i dt + σ_i dW_i`, where `κ = -L u` is the discrete curvature
//! (negative graph Laplacian). The crate integrates this SDE with
//! Euler-Maruyama, decomposes functionals along paths with Itô's formula, runs
//! reproducible Monte Carlo ensembles and checks all of it against the exact
//! Ornstein-Uhlenbeck moments of the linear drift.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod functionals;
pub mod graph;
pub mod io;
pub mod noise;
pub mod oracle;
pub mod sde;
pub mod validate;

pub use config::RunConfig;
pub use ensemble::{run_ensemble, strong_order_estimate, weak_error, EnsembleResult, PathRunner};
pub use error::{Result, SmcfError};
pub use functionals::{quadratic_energy, Functional, ItoLedger};
pub use graph::{Network, State};
pub use noise::NoiseStream;
pub use oracle::SpectralOracle;
pub use sde::{em_step, em_step_sequential, simulate, InitialCondition, SimConfig, Trajectory, UpdateMode};
