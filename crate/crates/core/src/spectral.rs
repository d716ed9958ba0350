//! Periodic uniform grids and Fourier pseudo-spectral differentiation.
//!
//! `D1` is applied through the FFT: a grid function is transformed, its
//! coefficients are multiplied by `(iθ_k)^p` and transformed back. The
//! Nyquist wavenumber is set to zero for every power, so the real matrix
//! representation of `D1` is exactly skew-symmetric and `D1² = D1 ∘ D1`.
//! The discrete energy conservation of the integrators depends on both
//! properties.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid `x_j = a + j h`, `j = 0..N-1`, `h = (b - a) / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::config(format!("invalid domain [{a}, {b}]")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::config(format!(
                "grid size must be even and at least 4, got {n}"
            )));
        }
        Ok(Grid {
            a,
            b,
            n,
            h: (b - a) / n as f64,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Domain length `|Ω| = b - a`.
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }
}

/// Builds a shared grid; see [`Grid::new`] for the accepted inputs.
pub fn make_grid(a: f64, b: f64, n: usize) -> Result<Arc<Grid>> {
    Grid::new(a, b, n).map(Arc::new)
}

/// Real values sampled on the nodes of a [`Grid`].
#[derive(Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("n", &self.grid.n)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl GridFunction {
    /// Wraps `values`; the length must match the grid and all entries must be finite.
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::config(format!(
                "expected {} values, got {}",
                grid.n,
                values.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("non-finite value at node {j}")));
        }
        Ok(GridFunction {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        GridFunction {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.n])
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(grid, (0..grid.n).map(|j| f(grid.node(j))).collect())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// `‖self - other‖_∞`; both must share a grid.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `f(self_j, other_j)`.
    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        ))
    }

    pub(crate) fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `(u, v)_h = h Σ u_j v_j`.
pub fn inner_h(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.check_grid(v)?;
    Ok(dot_h(u.grid.h, &u.values, &v.values))
}

/// `‖u‖_h = sqrt((u, u)_h)`.
pub fn norm_h(u: &GridFunction) -> f64 {
    dot_h(u.grid.h, &u.values, &u.values).sqrt()
}

/// `(u, 1)_h`.
pub fn sum_h(u: &GridFunction) -> f64 {
    u.grid.h * u.values.iter().sum::<f64>()
}

pub(crate) fn dot_h(h: f64, u: &[f64], v: &[f64]) -> f64 {
    h * u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>()
}

/// Fourier differentiation on one grid, with cached FFT plans.
///
/// Plans are shared `Arc<dyn Fft>` handles, which are `Send + Sync`; each
/// transform allocates its own scratch, so concurrent calls are safe.
#[derive(Clone)]
pub struct SpectralOperator {
    grid: Arc<Grid>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralOperator")
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl SpectralOperator {
    pub fn new(grid: &Arc<Grid>) -> Self {
        let n = grid.n;
        let scale = 2.0 * PI / grid.length();
        let mut wavenumbers = vec![0.0; n];
        for k in 1..n / 2 {
            wavenumbers[k] = scale * k as f64;
            wavenumbers[n - k] = -scale * k as f64;
        }
        // wavenumbers[n / 2] (Nyquist) stays zero
        let mut planner = FftPlanner::new();
        SpectralOperator {
            grid: Arc::clone(grid),
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// `θ_k` in FFT order, Nyquist slot zero.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Multiplier `(iθ_k)^p` of the `p`-th power of `D1`.
    pub fn symbol(&self, k: usize, p: u32) -> Complex64 {
        Complex64::new(0.0, self.wavenumbers[k]).powu(p)
    }

    /// Unnormalized forward DFT of real data.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Normalized inverse DFT; returns the real part and the largest
    /// discarded imaginary magnitude.
    pub fn inverse_with_residue(&self, mut spectrum: Vec<Complex64>) -> (Vec<f64>, f64) {
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.grid.n as f64;
        let residue = spectrum.iter().fold(0.0_f64, |m, c| m.max(c.im.abs())) * scale;
        (spectrum.iter().map(|c| c.re * scale).collect(), residue)
    }

    pub fn inverse(&self, spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse_with_residue(spectrum).0
    }

    /// `D1^p` on raw values of this grid.
    pub(crate) fn d1_values(&self, values: &[f64], p: u32) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (k, c) in spec.iter_mut().enumerate() {
            *c *= self.symbol(k, p);
        }
        self.inverse(spec)
    }

    /// `D1^p u` for `p ∈ {1, 2, 3}`.
    pub fn apply_d1(&self, u: &GridFunction, p: u32) -> Result<GridFunction> {
        if !(1..=3).contains(&p) {
            return Err(Error::config(format!("derivative power must be 1..=3, got {p}")));
        }
        self.check(u)?;
        Ok(GridFunction::from_raw(&self.grid, self.d1_values(&u.values, p)))
    }

    pub(crate) fn check(&self, u: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &u.grid) || *self.grid == *u.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Dense first-order Fourier differentiation matrix, built from the closed
/// form `D_jl = (π/L)(-1)^(j-l) cot(π(j-l)/N)`, zero diagonal.
///
/// Only offered for `N ≤ 64`; used to cross-check the FFT path.
pub fn dense_d1(grid: &Grid) -> Result<DMatrix<f64>> {
    let n = grid.n;
    if n > 64 {
        return Err(Error::config("dense D1 is limited to N <= 64"));
    }
    let scale = PI / grid.length();
    Ok(DMatrix::from_fn(n, n, |j, l| {
        if j == l {
            0.0
        } else {
            let d = j as isize - l as isize;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            scale * sign / (PI * d as f64 / n as f64).tan()
        }
    }))
}
