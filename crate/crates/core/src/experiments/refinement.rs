//! Time and space refinement studies.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::driver::simulate;
use crate::error::{Error, Result};
use crate::spectral::{norm_h, Grid, GridFunction, SpectralOperator};

/// Resolutions to sweep: time steps (with the base grid) or grid sizes
/// (with the base time step).
#[derive(Debug, Clone, PartialEq)]
pub enum Levels {
    Time(Vec<f64>),
    Space(Vec<usize>),
}

impl Levels {
    fn len(&self) -> usize {
        match self {
            Levels::Time(v) => v.len(),
            Levels::Space(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementRow {
    /// `Δt` for time studies, `N` for space studies.
    pub resolution: f64,
    pub l2_error: f64,
    pub linf_error: f64,
    /// Observed order from the previous row, based on the L² error.
    pub observed_order: Option<f64>,
    pub wall_seconds: f64,
}

/// Discrete L² and max-norm errors.
pub fn error_norms(u: &GridFunction, exact: &GridFunction) -> Result<(f64, f64)> {
    let diff = u.zip_map(exact, |a, b| a - b)?;
    Ok((norm_h(&diff), diff.max_abs()))
}

/// Evaluates the trigonometric interpolant of `u` at the nodes of `target`
/// (same domain, any even size).
pub fn interpolate(op: &SpectralOperator, u: &GridFunction, target: &Arc<Grid>) -> Result<GridFunction> {
    op.check(u)?;
    let src = op.grid();
    if src.a() != target.a() || src.b() != target.b() {
        return Err(Error::config("interpolation needs a common domain"));
    }
    let n = src.n();
    let coeffs = op.forward(u.values());
    let base = 2.0 * PI / src.length();
    let values = (0..target.n())
        .map(|j| {
            let x = target.node(j) - src.a();
            let mut sum = coeffs[0].re;
            for (k, c) in coeffs.iter().enumerate().take(n / 2).skip(1) {
                sum += 2.0 * (c * Complex64::from_polar(1.0, base * k as f64 * x)).re;
            }
            sum += coeffs[n / 2].re * (base * (n / 2) as f64 * x).cos();
            sum / n as f64
        })
        .collect();
    GridFunction::new(target, values)
}

/// Runs each level of `levels` on top of `base` and measures the error at
/// the final time against the closed-form solution, or against `reference`
/// when no closed form exists.
pub fn refinement_study(
    base: &ExperimentConfig,
    levels: &Levels,
    reference: Option<&ExperimentConfig>,
) -> Result<Vec<RefinementRow>> {
    if levels.len() == 0 {
        return Err(Error::config("refinement study needs at least one level"));
    }
    let configs: Vec<ExperimentConfig> = match levels {
        Levels::Time(dts) => dts
            .iter()
            .map(|&dt| ExperimentConfig {
                dt,
                output_path: None,
                record_every: usize::MAX,
                ..base.clone()
            })
            .collect(),
        Levels::Space(ns) => ns
            .iter()
            .map(|&n| {
                let mut c = base.clone();
                c.domain.n = n;
                c.output_path = None;
                c.record_every = usize::MAX;
                c
            })
            .collect(),
    };
    for c in &configs {
        c.validate()?;
    }

    let reference_state = match base.initial.exact(&base.grid()?, base.t_final, &base.params) {
        Some(_) => None,
        None => {
            let r = reference.ok_or_else(|| {
                Error::config("no closed-form solution; a reference configuration is required")
            })?;
            check_finer(r, &configs, levels)?;
            let mut r = r.clone();
            r.output_path = None;
            r.record_every = usize::MAX;
            let out = simulate(&r)?;
            let op = SpectralOperator::new(&r.grid()?);
            Some((op, out.final_state))
        }
    };

    let results: Vec<Result<(f64, f64, f64)>> = configs
        .par_iter()
        .map(|c| {
            let out = simulate(c)?;
            let grid = c.grid()?;
            let exact = match &reference_state {
                Some((op, u)) => interpolate(op, u, &grid)?,
                None => c
                    .initial
                    .exact(&grid, c.t_final, &c.params)
                    .expect("closed form exists")?,
            };
            let (l2, linf) = error_norms(&out.final_state, &exact)?;
            Ok((l2, linf, out.elapsed.as_secs_f64()))
        })
        .collect();

    let mut rows: Vec<RefinementRow> = Vec::with_capacity(configs.len());
    for (i, res) in results.into_iter().enumerate() {
        let (l2, linf, wall) = res?;
        let resolution = match levels {
            Levels::Time(v) => v[i],
            Levels::Space(v) => v[i] as f64,
        };
        let observed_order = rows.last().map(|prev| {
            let ratio = match levels {
                Levels::Time(_) => prev.resolution / resolution,
                Levels::Space(_) => resolution / prev.resolution,
            };
            (prev.l2_error / l2).ln() / ratio.ln()
        });
        rows.push(RefinementRow {
            resolution,
            l2_error: l2,
            linf_error: linf,
            observed_order,
            wall_seconds: wall,
        });
    }
    Ok(rows)
}

fn check_finer(r: &ExperimentConfig, configs: &[ExperimentConfig], levels: &Levels) -> Result<()> {
    let ok = configs.iter().all(|c| match levels {
        Levels::Time(_) => r.dt < c.dt && r.domain.n >= c.domain.n,
        Levels::Space(_) => r.domain.n > c.domain.n && r.dt <= c.dt,
    }) && configs.iter().all(|c| {
        r.domain.a == c.domain.a && r.domain.b == c.domain.b && (r.t_final - c.t_final).abs() < 1e-12
    });
    if ok {
        Ok(())
    } else {
        Err(Error::config(
            "reference configuration must be strictly finer than every level",
        ))
    }
}

/// Writes `resolution,l2_error,linf_error,observed_order,wall_seconds`.
pub fn write_table(path: &std::path::Path, rows: &[RefinementRow]) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "resolution,l2_error,linf_error,observed_order,wall_seconds")?;
    for r in rows {
        let order = r.observed_order.map(|o| format!("{o:.6}")).unwrap_or_default();
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{},{:.6}",
            r.resolution, r.l2_error, r.linf_error, order, r.wall_seconds
        )?;
    }
    w.flush()?;
    Ok(())
}
