//! KdV parameters and the discrete functionals monitored by the integrators.
//!
//! With `D1` the Fourier differentiation matrix:
//!
//! ```text
//!   mass      (u, 1)_h
//!   momentum  (u, u)_h
//!   H[u]      = -η/6 (u³, 1)_h + μ²/2 ‖D1 u‖_h²
//!   E[u, q]   = -η/6 (u, q)_h  + μ²/2 ‖D1 u‖_h²
//!   δH/δu     = -η/2 u² - μ² D1² u
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{dot_h, GridFunction, SpectralOperator};

/// Coefficients of `u_t + η u u_x + μ² u_xxx = 0`. Only `μ²` enters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KdvParams {
    pub eta: f64,
    pub mu: f64,
}

impl KdvParams {
    pub fn new(eta: f64, mu: f64) -> Result<Self> {
        let p = KdvParams { eta, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta.is_finite() && self.mu.is_finite() {
            Ok(())
        } else {
            Err(Error::config("KdV parameters must be finite"))
        }
    }

    pub fn mu2(&self) -> f64 {
        self.mu * self.mu
    }
}

impl Default for KdvParams {
    fn default() -> Self {
        KdvParams { eta: 1.0, mu: 1.0 }
    }
}

/// Invariants and solver diagnostics at one recorded time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy_h: f64,
    /// Modified energy `E[u, q]`; equals `energy_h` up to round-off when `q`
    /// is not tracked (`q = u²`).
    pub energy_e: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy multiplier of the projection; 0 when it was not applied.
    pub lambda_eip: f64,
}

/// `‖D1 u‖_h²` on raw values.
fn gradient_energy(op: &SpectralOperator, u: &[f64]) -> f64 {
    let du = op.d1_values(u, 1);
    dot_h(op.grid().h(), &du, &du)
}

pub(crate) fn hamiltonian_values(op: &SpectralOperator, u: &[f64], p: &KdvParams) -> f64 {
    let h = op.grid().h();
    let cubic = h * u.iter().map(|v| v * v * v).sum::<f64>();
    -p.eta / 6.0 * cubic + 0.5 * p.mu2() * gradient_energy(op, u)
}

pub(crate) fn grad_values(op: &SpectralOperator, u: &[f64], p: &KdvParams) -> Vec<f64> {
    let uxx = op.d1_values(u, 2);
    u.iter()
        .zip(&uxx)
        .map(|(v, vxx)| -0.5 * p.eta * v * v - p.mu2() * vxx)
        .collect()
}

/// Original energy `H[u]`.
pub fn hamiltonian_h(op: &SpectralOperator, u: &GridFunction, p: &KdvParams) -> Result<f64> {
    op.check(u)?;
    Ok(hamiltonian_values(op, u.values(), p))
}

/// Modified (quadratic) energy `E[u, q]`.
pub fn modified_energy_h(
    op: &SpectralOperator,
    u: &GridFunction,
    q: &GridFunction,
    p: &KdvParams,
) -> Result<f64> {
    op.check(u)?;
    u.check_grid(q)?;
    let h = op.grid().h();
    Ok(-p.eta / 6.0 * dot_h(h, u.values(), q.values())
        + 0.5 * p.mu2() * gradient_energy(op, u.values()))
}

pub fn mass_h(u: &GridFunction) -> f64 {
    crate::spectral::sum_h(u)
}

/// `(u, u)_h`, the L² momentum of KdV.
pub fn momentum_h(u: &GridFunction) -> f64 {
    let h = u.grid().h();
    dot_h(h, u.values(), u.values())
}

/// Discrete variational derivative `δH/δu = -η/2 u² - μ² D1² u`.
pub fn grad_h(op: &SpectralOperator, u: &GridFunction, p: &KdvParams) -> Result<GridFunction> {
    op.check(u)?;
    Ok(GridFunction::from_raw(op.grid(), grad_values(op, u.values(), p)))
}
