//! Energy-preserving high-order Runge–Kutta integrators for the
//! Korteweg–de Vries equation
//!
//! ```text
//!   u_t + η u u_x + μ² u_xxx = 0,   x ∈ [a, b] periodic
//! ```
//!
//! The cubic Hamiltonian `H = ∫ −η/6 u³ + μ²/2 u_x² dx` is rewritten with the
//! quadratic auxiliary variable `q = u²`, which turns it into a quadratic
//! invariant of an enlarged system. Any Runge–Kutta method satisfying the
//! symplectic condition (the Gauss collocation family here) then conserves
//! the original energy exactly at the fully discrete level.
//!
//! Crate layout:
//!
//! * [`spectral`]: periodic grid, Fourier differentiation `D1`, discrete inner product.
//! * [`kdv_model`]: parameters, mass / momentum / energy functionals, variational derivative.
//! * [`tableau`]: Gauss–Legendre Butcher tableaus and the symplectic residual.
//! * [`qav_integrator`]: the QAV-EPRK step, the explicit-`q` variant and the stage solver.
//! * [`baselines`]: AVF and classic Gauss RK on the original semi-discretization.
//! * [`eip_projection`]: mass-exact, energy-correcting post-step projection.
//! * [`experiments`]: initial data, simulation driver, refinement studies, CSV and config I/O.

pub mod baselines;
pub mod eip_projection;
pub mod error;
pub mod experiments;
pub mod kdv_model;
pub mod qav_integrator;
pub mod spectral;
pub mod tableau;

pub use error::{Error, Result};
pub use kdv_model::{InvariantRecord, KdvParams};
pub use qav_integrator::{SolverConfig, StageSet, StepDiagnostics};
pub use spectral::{make_grid, Grid, GridFunction, SpectralOperator};
pub use tableau::{gauss_tableau, ButcherTableau};
