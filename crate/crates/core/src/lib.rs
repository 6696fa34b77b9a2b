//! Solvers for European puts under the Bates stochastic-volatility
//! jump-diffusion model, written in the transformed variables
//!
//! ```text
//! x = ln(S/K),  y = σ/v,  τ = T − t,  u = e^{(r+λ)τ} V / K
//! ```
//!
//! Three spatial discretizations share the grid, boundary data and jump
//! quadrature: a fourth-order compact finite-difference scheme (the
//! primary method), a standard second-order centered scheme, and a
//! biquadratic (Q2) finite-element method. The local operator is treated
//! implicitly and the nonlocal jump integral explicitly.

pub mod analysis;
pub mod error;
pub mod fem;
pub mod grid;
pub mod jump;
pub mod linalg;
pub mod model;
pub mod ops;
pub mod solver;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::{Direction, Grid2D, GridField};
pub use model::{BatesParams, ComputationalPoint, Domain};
pub use ops::SpatialOrder;
pub use stepper::{Scheme, SchemeConfig};
