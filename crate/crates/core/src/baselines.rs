//! Reference schemes on the original semi-discretization
//! `u_t = D1(-η/2 u² - μ² D1² u)`:
//!
//! * AVF: `(u¹ - u⁰)/Δt = D1(-η/6 (u⁰² + u⁰u¹ + u¹²) - μ² D1² (u⁰ + u¹)/2)`,
//!   energy-preserving, second order.
//! * GRK: a Gauss RK method applied directly; symplectic, order `2s`, but it
//!   does not conserve the cubic energy.
//!
//! Both reuse the stage iteration of the QAV schemes (dispersion implicit,
//! nonlinear flux explicit) so timings compare formulations, not solvers.

use crate::eip_projection::ReferenceInvariants;
use crate::error::{Error, Result};
use crate::kdv_model::KdvParams;
use crate::qav_integrator::{
    combine, maybe_project, stage_states, SolverConfig, StageIteration, StageLinearSolver,
    StepDiagnostics,
};
use crate::spectral::{GridFunction, SpectralOperator};
use crate::tableau::{gauss_tableau, ButcherTableau};

/// AVF stepper. The slope `k = (u¹ - u⁰)/Δt` is iterated, with the linear
/// part carried by the one-stage tableau `a = [[1/2]]`.
#[derive(Debug, Clone)]
pub struct AvfStepper {
    op: SpectralOperator,
    params: KdvParams,
    cfg: SolverConfig,
    midpoint: ButcherTableau,
    solver: StageLinearSolver,
}

impl AvfStepper {
    pub fn new(op: &SpectralOperator, params: &KdvParams, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let midpoint = gauss_tableau(1)?;
        Ok(AvfStepper {
            op: op.clone(),
            params: *params,
            cfg: *cfg,
            solver: StageLinearSolver::new(op, &midpoint, params.mu2(), cfg.dt)?,
            midpoint,
        })
    }

    pub fn step(
        &mut self,
        u_n: &GridFunction,
        reference: Option<&ReferenceInvariants>,
    ) -> Result<(GridFunction, StepDiagnostics)> {
        self.op.check(u_n)?;
        let u0 = u_n.values();
        let dt = self.cfg.dt;
        let eta = self.params.eta;
        let iter = StageIteration {
            op: &self.op,
            solver: &self.solver,
            mu2: self.params.mu2(),
        };
        let (k, mut diag) = iter.run(u0, &self.cfg, None, |k, out| {
            for ((f, a), kv) in out[0].iter_mut().zip(u0).zip(&k[0]) {
                let b = a + dt * kv;
                *f = -eta / 6.0 * (a * a + a * b + b * b);
            }
        })?;
        let next = GridFunction::from_raw(self.op.grid(), combine(u0, self.midpoint.b(), dt, &k));
        let next = maybe_project(&self.op, next, &self.params, &self.cfg, reference, &mut diag)?;
        Ok((next, diag))
    }
}

/// Classic Gauss RK stepper on the original system.
#[derive(Debug, Clone)]
pub struct GrkStepper {
    op: SpectralOperator,
    tab: ButcherTableau,
    params: KdvParams,
    cfg: SolverConfig,
    solver: StageLinearSolver,
}

impl GrkStepper {
    pub fn new(
        op: &SpectralOperator,
        tab: &ButcherTableau,
        params: &KdvParams,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        if tab.symplectic_residual() > 1e-12 {
            return Err(Error::config("GRK requires a Gauss tableau"));
        }
        Ok(GrkStepper {
            op: op.clone(),
            tab: tab.clone(),
            params: *params,
            cfg: *cfg,
            solver: StageLinearSolver::new(op, tab, params.mu2(), cfg.dt)?,
        })
    }

    pub fn step(
        &mut self,
        u_n: &GridFunction,
        reference: Option<&ReferenceInvariants>,
    ) -> Result<(GridFunction, StepDiagnostics)> {
        self.op.check(u_n)?;
        let u0 = u_n.values();
        let dt = self.cfg.dt;
        let eta = self.params.eta;
        let tab = &self.tab;
        let iter = StageIteration {
            op: &self.op,
            solver: &self.solver,
            mu2: self.params.mu2(),
        };
        let (k, mut diag) = iter.run(u0, &self.cfg, None, |k, out| {
            let us = stage_states(u0, tab, dt, k);
            for (f, ui) in out.iter_mut().zip(&us) {
                for (fv, uv) in f.iter_mut().zip(ui) {
                    *fv = -0.5 * eta * uv * uv;
                }
            }
        })?;
        let next = GridFunction::from_raw(self.op.grid(), combine(u0, tab.b(), dt, &k));
        let next = maybe_project(&self.op, next, &self.params, &self.cfg, reference, &mut diag)?;
        Ok((next, diag))
    }
}

pub fn avf_step(
    op: &SpectralOperator,
    u_n: &GridFunction,
    p: &KdvParams,
    cfg: &SolverConfig,
) -> Result<(GridFunction, StepDiagnostics)> {
    AvfStepper::new(op, p, cfg)?.step(u_n, None)
}

pub fn grk_step(
    op: &SpectralOperator,
    u_n: &GridFunction,
    tab: &ButcherTableau,
    p: &KdvParams,
    cfg: &SolverConfig,
) -> Result<(GridFunction, StepDiagnostics)> {
    GrkStepper::new(op, tab, p, cfg)?.step(u_n, None)
}
