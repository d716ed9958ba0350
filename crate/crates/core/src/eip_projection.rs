//! Post-step projection that restores the discrete mass exactly and the
//! energy up to one Newton step.
//!
//! For a step result `ũ`, the corrected state is `φ + λψ` with
//!
//! ```text
//!   φ = ũ + ((u⁰, 1)_h - (ũ, 1)_h) / |Ω| · e
//!   ψ = g - (g, 1)_h / |Ω| · e,     g = δH/δu[ũ]
//! ```
//!
//! `ψ` has zero mean, so the mass of `φ + λψ` is that of `u⁰` for every
//! `λ`. `λ` solves `H[φ + λψ] = H[u⁰]`; the default takes a single Newton
//! step from `λ = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kdv_model::{grad_values, hamiltonian_values, KdvParams};
use crate::spectral::{dot_h, norm_h, GridFunction, SpectralOperator};

/// Iteration cap of [`ProjectionMode::FullNewton`].
pub const MAX_NEWTON: usize = 50;

/// Invariants of the discrete initial state the projection restores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceInvariants {
    pub mass0: f64,
    pub energy0: f64,
    pub domain_length: f64,
}

impl ReferenceInvariants {
    pub fn from_initial(op: &SpectralOperator, u0: &GridFunction, p: &KdvParams) -> Result<Self> {
        op.check(u0)?;
        Ok(ReferenceInvariants {
            mass0: crate::kdv_model::mass_h(u0),
            energy0: hamiltonian_values(op, u0.values(), p),
            domain_length: op.grid().length(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    #[default]
    OneStep,
    FullNewton,
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub u: GridFunction,
    /// Multiplier of `ψ`.
    pub lambda: f64,
    /// Multiplier of `e` in `ũ + λ g + ν e`.
    pub nu: f64,
    pub newton_steps: usize,
}

/// The mass-corrected state `φ` and zero-mean direction `ψ`.
pub fn projection_basis(
    op: &SpectralOperator,
    u_tilde: &GridFunction,
    reference: &ReferenceInvariants,
    p: &KdvParams,
) -> Result<(GridFunction, GridFunction)> {
    let (phi, psi, _, _) = basis_values(op, u_tilde, reference, p)?;
    let grid = op.grid();
    Ok((GridFunction::from_raw(grid, phi), GridFunction::from_raw(grid, psi)))
}

/// Returns `(φ, ψ, mass shift, mean of g)`.
fn basis_values(
    op: &SpectralOperator,
    u_tilde: &GridFunction,
    reference: &ReferenceInvariants,
    p: &KdvParams,
) -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
    op.check(u_tilde)?;
    if !(reference.domain_length > 0.0) {
        return Err(Error::config("reference domain length must be positive"));
    }
    let len = reference.domain_length;
    let u = u_tilde.values();
    let shift = (reference.mass0 - crate::kdv_model::mass_h(u_tilde)) / len;
    let phi: Vec<f64> = u.iter().map(|v| v + shift).collect();
    let g = grad_values(op, u, p);
    let g_mean = op.grid().h() * g.iter().sum::<f64>() / len;
    let psi: Vec<f64> = g.iter().map(|v| v - g_mean).collect();
    Ok((phi, psi, shift, g_mean))
}

pub fn project_eip(
    op: &SpectralOperator,
    u_tilde: &GridFunction,
    reference: &ReferenceInvariants,
    p: &KdvParams,
    mode: ProjectionMode,
) -> Result<Projection> {
    let (phi, psi, shift, g_mean) = basis_values(op, u_tilde, reference, p)?;
    let h = op.grid().h();
    let psi_norm2 = dot_h(h, &psi, &psi);
    let energy0 = reference.energy0;

    let along = |lambda: f64| -> Vec<f64> {
        phi.iter().zip(&psi).map(|(a, b)| a + lambda * b).collect()
    };
    let newton_update = |v: &[f64]| -> Result<f64> {
        let denom = dot_h(h, &grad_values(op, v, p), &psi);
        if !(denom.abs() >= 1e-14 * (1.0 + psi_norm2)) {
            return Err(Error::DegenerateProjection { denominator: denom });
        }
        Ok((hamiltonian_values(op, v, p) - energy0) / denom)
    };

    let mut lambda = 0.0;
    let mut steps = 0;
    match mode {
        ProjectionMode::OneStep => {
            lambda -= newton_update(&phi)?;
            steps = 1;
        }
        ProjectionMode::FullNewton => {
            let target = 1e-13 * (1.0 + energy0.abs());
            while steps < MAX_NEWTON {
                let v = along(lambda);
                if (hamiltonian_values(op, &v, p) - energy0).abs() <= target {
                    break;
                }
                lambda -= newton_update(&v)?;
                steps += 1;
            }
        }
    }

    let u = along(lambda);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateProjection { denominator: f64::NAN });
    }
    Ok(Projection {
        u: GridFunction::from_raw(op.grid(), u),
        lambda,
        nu: shift - lambda * g_mean,
        newton_steps: steps,
    })
}

/// `|(ψ, 1)_h|` and `‖ψ‖_h`, for diagnostics.
pub fn direction_mean(psi: &GridFunction) -> (f64, f64) {
    (crate::spectral::sum_h(psi).abs(), norm_h(psi))
}
