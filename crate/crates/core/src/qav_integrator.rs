//! Fully discrete QAV Runge–Kutta steps and their fixed-point stage solver.
//!
//! Stage equations of the energy-preserving scheme, for a tableau `(a, b, c)`:
//!
//! ```text
//!   U_i = uⁿ + Δt Σ_j a_ij k_j
//!   Q_i = (uⁿ)² + 2Δt Σ_j a_ij U_j k_j
//!   k_i = D1(-η/6 Q_i - η/3 U_i² - μ² D1² U_i)
//!   uⁿ⁺¹ = uⁿ + Δt Σ_i b_i k_i
//! ```
//!
//! The iteration treats the dispersive term implicitly and the nonlinear
//! flux explicitly:
//!
//! ```text
//!   k_i⁽ᵐ⁺¹⁾ + μ²Δt Σ_j a_ij D1³ k_j⁽ᵐ⁺¹⁾ = D1 F_i(k⁽ᵐ⁾) - μ² D1³ uⁿ
//! ```
//!
//! The left-hand operator is diagonal in Fourier space, so each wavenumber
//! gives an independent `s × s` complex system `I - iμ²Δtθ³ A`, inverted
//! once per `(Δt, tableau)` by [`StageLinearSolver`].

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::eip_projection::{project_eip, ProjectionMode, ReferenceInvariants};
use crate::error::{Error, Result};
use crate::kdv_model::KdvParams;
use crate::spectral::{max_abs, Grid, GridFunction, SpectralOperator};
use crate::tableau::ButcherTableau;

/// Stage norms below this use the absolute stopping criterion.
const ZERO_SLOPE: f64 = 1e-30;

/// Maximum symplectic residual accepted by the energy-preserving steps.
pub const SYMPLECTIC_GATE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Apply the EIP projection after each step.
    pub eip: bool,
    /// Start the stage iteration from the previous step's slopes.
    pub warm_start: bool,
}

impl SolverConfig {
    pub fn new(dt: f64) -> Self {
        SolverConfig {
            dt,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            tol: 1e-14,
            max_iter: 100,
            eip: false,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub iterations: usize,
    /// Last value of the stopping criterion.
    pub final_residual: f64,
    pub converged: bool,
    /// Energy multiplier of the post-step projection, 0 if none was applied.
    pub lambda_eip: f64,
}

/// Stage values of one step. `l` is empty unless `q` is evolved explicitly.
#[derive(Debug, Clone)]
pub struct StageSet {
    pub u: Vec<GridFunction>,
    pub q: Vec<GridFunction>,
    pub k: Vec<GridFunction>,
    pub l: Vec<GridFunction>,
}

impl StageSet {
    pub fn stages(&self) -> usize {
        self.k.len()
    }
}

/// Per-wavenumber inverses of `I + μ²Δt (iθ)³ A`.
#[derive(Debug, Clone)]
pub struct StageLinearSolver {
    s: usize,
    /// `n` blocks of `s × s`, row-major.
    inverses: Vec<Complex64>,
}

impl StageLinearSolver {
    pub fn new(op: &SpectralOperator, tab: &ButcherTableau, mu2: f64, dt: f64) -> Result<Self> {
        let s = tab.stages();
        let n = op.n();
        let mut inverses = Vec::with_capacity(n * s * s);
        for k in 0..n {
            let sym = op.symbol(k, 3) * (mu2 * dt);
            let m = DMatrix::from_fn(s, s, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                Complex64::new(id, 0.0) + sym * tab.a(i, j)
            });
            let inv = m
                .try_inverse()
                .ok_or_else(|| Error::config(format!("singular stage system at mode {k}")))?;
            for i in 0..s {
                for j in 0..s {
                    inverses.push(inv[(i, j)]);
                }
            }
        }
        Ok(StageLinearSolver { s, inverses })
    }

    pub fn stages(&self) -> usize {
        self.s
    }

    /// Solves in place, mode by mode; `rhs[i][k]` is stage `i` at wavenumber `k`.
    pub fn solve_spectral(&self, rhs: &mut [Vec<Complex64>]) {
        let s = self.s;
        let n = rhs[0].len();
        let mut tmp = vec![Complex64::new(0.0, 0.0); s];
        for k in 0..n {
            let block = &self.inverses[k * s * s..(k + 1) * s * s];
            for (i, t) in tmp.iter_mut().enumerate() {
                *t = (0..s).map(|j| block[i * s + j] * rhs[j][k]).sum();
            }
            for (i, t) in tmp.iter().enumerate() {
                rhs[i][k] = *t;
            }
        }
    }

    /// Physical-space solve: transforms, solves per mode, transforms back.
    pub fn solve(&self, op: &SpectralOperator, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut spec: Vec<Vec<Complex64>> = rhs.iter().map(|r| op.forward(r)).collect();
        self.solve_spectral(&mut spec);
        spec.into_iter().map(|c| op.inverse(c)).collect()
    }
}

/// Linear-implicit / nonlinear-explicit iteration shared by all schemes.
///
/// The scheme enters through a flux closure: given the current slopes it
/// fills `F_i` so that the next slopes solve
/// `(I + μ²Δt A ⊗ D1³) k = D1 F(k) - μ² D1³ uⁿ`.
pub(crate) struct StageIteration<'a> {
    pub op: &'a SpectralOperator,
    pub solver: &'a StageLinearSolver,
    pub mu2: f64,
}

impl StageIteration<'_> {
    pub fn run<F>(
        &self,
        u_n: &[f64],
        cfg: &SolverConfig,
        initial: Option<Vec<Vec<f64>>>,
        mut flux: F,
    ) -> Result<(Vec<Vec<f64>>, StepDiagnostics)>
    where
        F: FnMut(&[Vec<f64>], &mut [Vec<f64>]),
    {
        let op = self.op;
        let n = op.n();
        let s = self.solver.stages();

        let u_hat = op.forward(u_n);
        let linear: Vec<Complex64> = u_hat
            .iter()
            .enumerate()
            .map(|(k, c)| -self.mu2 * op.symbol(k, 3) * c)
            .collect();

        let mut k = initial.unwrap_or_else(|| vec![vec![0.0; n]; s]);
        let mut fluxes = vec![vec![0.0; n]; s];
        let mut diag = StepDiagnostics::default();

        for m in 0..cfg.max_iter {
            flux(&k, &mut fluxes);
            let mut spec: Vec<Vec<Complex64>> = fluxes
                .iter()
                .map(|f| {
                    let mut fh = op.forward(f);
                    for (idx, c) in fh.iter_mut().enumerate() {
                        *c = op.symbol(idx, 1) * *c + linear[idx];
                    }
                    fh
                })
                .collect();
            self.solver.solve_spectral(&mut spec);
            let next: Vec<Vec<f64>> = spec.into_iter().map(|c| op.inverse(c)).collect();

            if next.iter().any(|ki| ki.iter().any(|v| !v.is_finite())) {
                return Err(Error::Divergence { iteration: m + 1 });
            }

            let residual = next
                .iter()
                .zip(&k)
                .map(|(new, old)| {
                    let diff = new
                        .iter()
                        .zip(old)
                        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
                    let scale = max_abs(new);
                    if scale < ZERO_SLOPE {
                        diff
                    } else {
                        diff / scale
                    }
                })
                .fold(0.0_f64, f64::max);

            k = next;
            diag.iterations = m + 1;
            diag.final_residual = residual;
            if residual < cfg.tol {
                diag.converged = true;
                break;
            }
        }
        Ok((k, diag))
    }
}

/// `Uᵢ = uⁿ + Δt Σ_j a_ij k_j` for all stages.
pub(crate) fn stage_states(u_n: &[f64], tab: &ButcherTableau, dt: f64, k: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let s = tab.stages();
    (0..s)
        .map(|i| {
            let mut ui = u_n.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let w = dt * tab.a(i, j);
                for (x, y) in ui.iter_mut().zip(kj) {
                    *x += w * y;
                }
            }
            ui
        })
        .collect()
}

/// `Qᵢ = base + 2Δt Σ_j a_ij U_j k_j`.
fn stage_auxiliaries(
    base: &[f64],
    tab: &ButcherTableau,
    dt: f64,
    u: &[Vec<f64>],
    k: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let s = tab.stages();
    (0..s)
        .map(|i| {
            let mut qi = base.to_vec();
            for j in 0..s {
                let w = 2.0 * dt * tab.a(i, j);
                for ((x, uj), kj) in qi.iter_mut().zip(&u[j]).zip(&k[j]) {
                    *x += w * uj * kj;
                }
            }
            qi
        })
        .collect()
}

/// `uⁿ + Δt Σ b_i k_i`.
pub(crate) fn combine(u_n: &[f64], b: &[f64], dt: f64, k: &[Vec<f64>]) -> Vec<f64> {
    let mut out = u_n.to_vec();
    for (bi, ki) in b.iter().zip(k) {
        let w = dt * bi;
        for (x, y) in out.iter_mut().zip(ki) {
            *x += w * y;
        }
    }
    out
}

/// `D1(-η/6 Q - η/3 U² - μ² D1² U)`.
pub fn stage_rhs(
    op: &SpectralOperator,
    u: &GridFunction,
    q: &GridFunction,
    p: &KdvParams,
) -> Result<GridFunction> {
    op.check(u)?;
    u.check_grid(q)?;
    let uxx = op.d1_values(u.values(), 2);
    let inner: Vec<f64> = u
        .values()
        .iter()
        .zip(q.values())
        .zip(&uxx)
        .map(|((uv, qv), uxx)| -p.eta / 6.0 * qv - p.eta / 3.0 * uv * uv - p.mu2() * uxx)
        .collect();
    Ok(GridFunction::from_raw(op.grid(), op.d1_values(&inner, 1)))
}

fn check_tableau(tab: &ButcherTableau) -> Result<()> {
    let r = tab.symplectic_residual();
    if r > SYMPLECTIC_GATE {
        return Err(Error::config(format!(
            "tableau violates the symplectic condition (residual {r:e})"
        )));
    }
    Ok(())
}

fn wrap(grid: &Arc<Grid>, v: Vec<Vec<f64>>) -> Vec<GridFunction> {
    v.into_iter().map(|x| GridFunction::from_raw(grid, x)).collect()
}

/// Reusable stepper for one `(grid, tableau, params, Δt)` combination.
///
/// Holds the factored stage systems so repeated steps skip the per-mode
/// inversions, and the last slopes for warm starts.
#[derive(Debug, Clone)]
pub struct QavStepper {
    op: SpectralOperator,
    tab: ButcherTableau,
    params: KdvParams,
    cfg: SolverConfig,
    solver: StageLinearSolver,
    previous: Option<Vec<Vec<f64>>>,
}

impl QavStepper {
    pub fn new(
        op: &SpectralOperator,
        tab: &ButcherTableau,
        params: &KdvParams,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        check_tableau(tab)?;
        Ok(QavStepper {
            op: op.clone(),
            tab: tab.clone(),
            params: *params,
            cfg: *cfg,
            solver: StageLinearSolver::new(op, tab, params.mu2(), cfg.dt)?,
            previous: None,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn operator(&self) -> &SpectralOperator {
        &self.op
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tab
    }

    fn initial(&self, previous: Option<&StageSet>) -> Option<Vec<Vec<f64>>> {
        if !self.cfg.warm_start {
            return None;
        }
        previous
            .map(|st| st.k.iter().map(|k| k.values().to_vec()).collect())
            .or_else(|| self.previous.clone())
    }

    /// Solves the stage equations with `Q` anchored at `q_base`
    /// (`(uⁿ)²` for the energy-preserving form, `qⁿ` for the explicit-`q` form).
    fn solve_raw(
        &self,
        u_n: &[f64],
        q_base: &[f64],
        initial: Option<Vec<Vec<f64>>>,
    ) -> Result<(Vec<Vec<f64>>, StepDiagnostics)> {
        let tab = &self.tab;
        let dt = self.cfg.dt;
        let eta = self.params.eta;
        let iter = StageIteration {
            op: &self.op,
            solver: &self.solver,
            mu2: self.params.mu2(),
        };
        iter.run(u_n, &self.cfg, initial, |k, out| {
            let us = stage_states(u_n, tab, dt, k);
            let qs = stage_auxiliaries(q_base, tab, dt, &us, k);
            for ((f, ui), qi) in out.iter_mut().zip(&us).zip(&qs) {
                for ((fv, uv), qv) in f.iter_mut().zip(ui).zip(qi) {
                    *fv = -eta / 6.0 * qv - eta / 3.0 * uv * uv;
                }
            }
        })
    }

    /// Stage solve for the energy-preserving scheme.
    pub fn fixed_point_solve(
        &self,
        u_n: &GridFunction,
        previous: Option<&StageSet>,
    ) -> Result<(StageSet, StepDiagnostics)> {
        self.op.check(u_n)?;
        let u = u_n.values();
        let base: Vec<f64> = u.iter().map(|v| v * v).collect();
        let (k, diag) = self.solve_raw(u, &base, self.initial(previous))?;
        let us = stage_states(u, &self.tab, self.cfg.dt, &k);
        let qs = stage_auxiliaries(&base, &self.tab, self.cfg.dt, &us, &k);
        let grid = self.op.grid();
        Ok((
            StageSet {
                u: wrap(grid, us),
                q: wrap(grid, qs),
                k: wrap(grid, k),
                l: Vec::new(),
            },
            diag,
        ))
    }

    /// One QAV-EPRK step; projects when `eip` is on and a reference is given.
    pub fn step(
        &mut self,
        u_n: &GridFunction,
        reference: Option<&ReferenceInvariants>,
    ) -> Result<(GridFunction, StepDiagnostics)> {
        self.op.check(u_n)?;
        let u = u_n.values();
        let base: Vec<f64> = u.iter().map(|v| v * v).collect();
        let initial = self.initial(None);
        let (k, mut diag) = self.solve_raw(u, &base, initial)?;
        let next = GridFunction::from_raw(self.op.grid(), combine(u, self.tab.b(), self.cfg.dt, &k));
        if self.cfg.warm_start {
            self.previous = Some(k);
        }
        let next = maybe_project(&self.op, next, &self.params, &self.cfg, reference, &mut diag)?;
        Ok((next, diag))
    }

    /// One step of the explicit-`q` scheme: evolves `(u, q)` jointly with
    /// `l_i = 2 U_i k_i`.
    pub fn step_with_q(
        &mut self,
        u_n: &GridFunction,
        q_n: &GridFunction,
    ) -> Result<(GridFunction, GridFunction, StepDiagnostics)> {
        self.op.check(u_n)?;
        u_n.check_grid(q_n)?;
        let u = u_n.values();
        let q = q_n.values();
        let initial = self.initial(None);
        let (k, diag) = self.solve_raw(u, q, initial)?;
        let dt = self.cfg.dt;
        let us = stage_states(u, &self.tab, dt, &k);
        let l: Vec<Vec<f64>> = us
            .iter()
            .zip(&k)
            .map(|(ui, ki)| ui.iter().zip(ki).map(|(a, b)| 2.0 * a * b).collect())
            .collect();
        let grid = self.op.grid();
        let u_next = GridFunction::from_raw(grid, combine(u, self.tab.b(), dt, &k));
        let q_next = GridFunction::from_raw(grid, combine(q, self.tab.b(), dt, &l));
        if self.cfg.warm_start {
            self.previous = Some(k);
        }
        Ok((u_next, q_next, diag))
    }
}

/// Applies the one-step projection when requested. A degenerate direction
/// leaves the step unprojected.
pub(crate) fn maybe_project(
    op: &SpectralOperator,
    u: GridFunction,
    params: &KdvParams,
    cfg: &SolverConfig,
    reference: Option<&ReferenceInvariants>,
    diag: &mut StepDiagnostics,
) -> Result<GridFunction> {
    if !cfg.eip {
        return Ok(u);
    }
    let reference = reference.ok_or_else(|| {
        Error::config("projection requested without reference invariants")
    })?;
    match project_eip(op, &u, reference, params, ProjectionMode::OneStep) {
        Ok(p) => {
            diag.lambda_eip = p.lambda;
            Ok(p.u)
        }
        Err(Error::DegenerateProjection { denominator }) => {
            log::warn!("skipping projection: degenerate direction ({denominator:e})");
            Ok(u)
        }
        Err(e) => Err(e),
    }
}

/// Stage solve for the energy-preserving scheme, without warm start state.
pub fn fixed_point_solve(
    op: &SpectralOperator,
    u_n: &GridFunction,
    tab: &ButcherTableau,
    p: &KdvParams,
    cfg: &SolverConfig,
    previous: Option<&StageSet>,
) -> Result<(StageSet, StepDiagnostics)> {
    QavStepper::new(op, tab, p, cfg)?.fixed_point_solve(u_n, previous)
}

/// `uⁿ⁺¹ = uⁿ + Δt Σ b_i k_i` from converged (or capped) stages.
pub fn qav_eprk_step(
    op: &SpectralOperator,
    u_n: &GridFunction,
    tab: &ButcherTableau,
    p: &KdvParams,
    cfg: &SolverConfig,
    reference: Option<&ReferenceInvariants>,
) -> Result<(GridFunction, StepDiagnostics)> {
    QavStepper::new(op, tab, p, cfg)?.step(u_n, reference)
}

pub fn qav_rk_step_with_q(
    op: &SpectralOperator,
    u_n: &GridFunction,
    q_n: &GridFunction,
    tab: &ButcherTableau,
    p: &KdvParams,
    cfg: &SolverConfig,
) -> Result<(GridFunction, GridFunction, StepDiagnostics)> {
    QavStepper::new(op, tab, p, cfg)?.step_with_q(u_n, q_n)
}
