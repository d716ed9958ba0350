//! Initial data for the benchmark problems.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kdv_model::KdvParams;
use crate::spectral::{Grid, GridFunction, SpectralOperator};

/// Solitary wave `3c sech²(κx - ωt - x0)` with `κ = √(ηc)/(2μ)`, `ω = cηκ`.
pub fn soliton_exact(x: f64, t: f64, c: f64, x0: f64, p: &KdvParams) -> Result<f64> {
    let (kappa, omega) = soliton_rates(c, p)?;
    let s = 1.0 / (kappa * x - omega * t - x0).cosh();
    Ok(3.0 * c * s * s)
}

/// `(κ, ω)` of the solitary wave with speed parameter `c`.
pub fn soliton_rates(c: f64, p: &KdvParams) -> Result<(f64, f64)> {
    if !(p.eta * c > 0.0) || p.mu == 0.0 || !c.is_finite() {
        return Err(Error::config(format!(
            "soliton needs ηc > 0 and μ ≠ 0 (η = {}, μ = {}, c = {c})",
            p.eta, p.mu
        )));
    }
    let kappa = (p.eta * c).sqrt() / (2.0 * p.mu.abs());
    Ok((kappa, c * p.eta * kappa))
}

/// `(κ_i, x_i)` of the three-soliton interaction benchmark.
pub const THREE_SOLITONS: [(f64, f64); 3] = [(0.3, -60.0), (0.25, -44.0), (0.2, -26.0)];

/// `Σ 12κ_i² sech²(κ_i (x - x_i))`.
pub fn sum_of_solitons(x: f64, solitons: &[(f64, f64)]) -> f64 {
    solitons
        .iter()
        .map(|&(k, xi)| {
            let s = 1.0 / (k * (x - xi)).cosh();
            12.0 * k * k * s * s
        })
        .sum()
}

pub fn init_three_solitons(g: &Arc<Grid>) -> GridFunction {
    GridFunction::from_fn(g, |x| sum_of_solitons(x, &THREE_SOLITONS))
}

/// `12(3 + 4cosh 2x + cosh 4x) / (3cosh x + cosh 3x)²`.
pub fn two_soliton_profile(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 15.0 {
        let num = 3.0 + 4.0 * (2.0 * x).cosh() + (4.0 * x).cosh();
        let den = 3.0 * x.cosh() + (3.0 * x).cosh();
        12.0 * num / (den * den)
    } else {
        // numerator scaled by e^{-4|x|}, each denominator factor by e^{-3|x|}
        let e = |k: f64| (-k * ax).exp();
        let num = 3.0 * e(4.0) + 2.0 * (e(2.0) + e(6.0)) + 0.5 * (1.0 + e(8.0));
        let den = 1.5 * (e(2.0) + e(4.0)) + 0.5 * (1.0 + e(6.0));
        12.0 * num / (den * den) * e(2.0)
    }
}

pub fn init_two_soliton(g: &Arc<Grid>) -> GridFunction {
    GridFunction::from_fn(g, two_soliton_profile)
}

/// Two-peak wavenumber spectrum
/// `S(k) = Q1 exp(-(k-k1)²/(2K1²)) + Q2 exp(-(k-k2)²/(2K2²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BimodalSpectrum {
    pub q1: f64,
    pub q2: f64,
    pub k1: f64,
    pub k2: f64,
    #[serde(rename = "big_k1")]
    pub width1: f64,
    #[serde(rename = "big_k2")]
    pub width2: f64,
    pub dk: f64,
}

impl BimodalSpectrum {
    /// The six parameter cases (I–VI) of the random-wave benchmark, with
    /// `Q1 = 1` and `Δk = 0.01`.
    pub fn case(index: usize) -> Result<Self> {
        // (Q2/Q1, k1, K1, k2, K2); case I has no second peak
        let table = [
            (0.0, 1.0, 0.1, 0.0, 1.0),
            (0.5, 1.0, 0.1, 0.5, 0.05),
            (0.5, 1.0, 0.1, 0.5, 0.1),
            (1.0, 1.0, 0.1, 0.5, 0.05),
            (0.5, 1.0, 0.1, 1.5, 0.05),
            (1.0, 1.0, 0.1, 1.5, 0.05),
        ];
        let &(ratio, k1, w1, k2, w2) = index
            .checked_sub(1)
            .and_then(|i| table.get(i))
            .ok_or_else(|| Error::config(format!("bimodal case must be 1..=6, got {index}")))?;
        Ok(BimodalSpectrum {
            q1: 1.0,
            q2: ratio,
            k1,
            k2,
            width1: w1,
            width2: w2,
            dk: 0.01,
        })
    }

    pub fn density(&self, k: f64) -> f64 {
        let peak = |q: f64, kc: f64, w: f64| q * (-(k - kc).powi(2) / (2.0 * w * w)).exp();
        peak(self.q1, self.k1, self.width1) + peak(self.q2, self.k2, self.width2)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.q1, self.q2, self.k1, self.k2, self.width1, self.width2, self.dk];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("bimodal parameters must be finite"));
        }
        if !(self.width1 > 0.0 && self.width2 > 0.0 && self.dk > 0.0) {
            return Err(Error::config("bimodal widths and Δk must be positive"));
        }
        Ok(())
    }
}

/// `Σ_{j=1}^{N/2-1} √(2S(k_j)Δk) cos(k_j x + ψ_j)`, `k_j = jΔk`,
/// `ψ_j ~ U(0, 2π)` drawn from ChaCha8 seeded with `seed`.
///
/// Evaluated with one inverse FFT, which requires `Δk = 2π/(b - a)` so every
/// `k_j` is a grid wavenumber.
pub fn init_bimodal(op: &SpectralOperator, spec: &BimodalSpectrum, seed: u64) -> Result<GridFunction> {
    spec.validate()?;
    let g = op.grid();
    let base = 2.0 * PI / g.length();
    if ((spec.dk - base) / base).abs() > 1e-10 {
        return Err(Error::config(format!(
            "Δk = {} does not match the domain wavenumber 2π/|Ω| = {base}",
            spec.dk
        )));
    }
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for j in 1..n / 2 {
        let k = j as f64 * spec.dk;
        let amp = (2.0 * spec.density(k) * spec.dk).sqrt();
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        // shift the phase so x_0 = a lands at index 0
        let c = Complex64::from_polar(0.5 * amp, k * g.a() + phase);
        coeffs[j] = c;
        coeffs[n - j] = c.conj();
    }
    // `inverse` divides by N; the cosine sum wants the raw synthesis
    let values: Vec<f64> = op.inverse(coeffs).into_iter().map(|v| v * n as f64).collect();
    GridFunction::new(g, values)
}

/// Initial condition selector for experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Soliton {
        c: f64,
        #[serde(default)]
        x0: f64,
    },
    ThreeSolitons {
        /// `(κ_i, x_i)` pairs; defaults to the benchmark values.
        #[serde(default = "default_three")]
        solitons: Vec<(f64, f64)>,
    },
    TwoSolitonRational,
    Bimodal(BimodalSpectrum),
}

fn default_three() -> Vec<(f64, f64)> {
    THREE_SOLITONS.to_vec()
}

impl InitialCondition {
    pub fn three_solitons() -> Self {
        InitialCondition::ThreeSolitons {
            solitons: default_three(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialCondition::Soliton { c, x0 } if !(c.is_finite() && x0.is_finite()) => {
                Err(Error::config("soliton parameters must be finite"))
            }
            InitialCondition::ThreeSolitons { solitons }
                if solitons.iter().any(|(k, x)| !(k.is_finite() && x.is_finite())) =>
            {
                Err(Error::config("soliton parameters must be finite"))
            }
            InitialCondition::Bimodal(spec) => spec.validate(),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, op: &SpectralOperator, p: &KdvParams, seed: u64) -> Result<GridFunction> {
        self.validate()?;
        let g = op.grid();
        match self {
            InitialCondition::Soliton { c, x0 } => {
                soliton_rates(*c, p)?;
                let vals = g
                    .nodes()
                    .into_iter()
                    .map(|x| soliton_exact(x, 0.0, *c, *x0, p))
                    .collect::<Result<Vec<_>>>()?;
                GridFunction::new(g, vals)
            }
            InitialCondition::ThreeSolitons { solitons } => {
                Ok(GridFunction::from_fn(g, |x| sum_of_solitons(x, solitons)))
            }
            InitialCondition::TwoSolitonRational => Ok(init_two_soliton(g)),
            InitialCondition::Bimodal(spec) => init_bimodal(op, spec, seed),
        }
    }

    /// Closed-form solution at time `t`, when one exists.
    pub fn exact(&self, g: &Arc<Grid>, t: f64, p: &KdvParams) -> Option<Result<GridFunction>> {
        match self {
            InitialCondition::Soliton { c, x0 } => Some(
                g.nodes()
                    .into_iter()
                    .map(|x| soliton_exact(x, t, *c, *x0, p))
                    .collect::<Result<Vec<_>>>()
                    .and_then(|v| GridFunction::new(g, v)),
            ),
            _ => None,
        }
    }
}
