//! Experiment configuration and its file format.
//!
//! Config files are TOML: top-level keys first, then `[domain]`, `[params]`,
//! `[solver]` and `[initial]` tables. Example:
//!
//! ```toml
//! scheme = "qav_eprk_2"
//! dt = 0.1
//! t_final = 40.0
//! record_every = 1
//! seed = 0
//! output_path = "three_solitons.csv"
//!
//! [domain]
//! a = -100.0
//! b = 100.0
//! n = 512
//!
//! [params]
//! eta = 1.0
//! mu = 1.0
//!
//! [solver]
//! tol = 1e-14
//! max_iter = 100
//! eip = false
//!
//! [initial]
//! kind = "three_solitons"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::initial::InitialCondition;
use crate::error::{Error, Result};
use crate::kdv_model::KdvParams;
use crate::qav_integrator::SolverConfig;
use crate::spectral::{make_grid, Grid};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "qav_eprk_1")]
    QavEprk1,
    #[serde(rename = "qav_eprk_2")]
    QavEprk2,
    #[serde(rename = "qav_eprk_3")]
    QavEprk3,
    /// Explicit-`q` form with the 2-stage Gauss tableau.
    #[serde(rename = "qav_rk_with_q")]
    QavRkWithQ,
    #[serde(rename = "grk_2")]
    Grk2,
    #[serde(rename = "grk_3")]
    Grk3,
    #[serde(rename = "avf")]
    Avf,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::QavEprk1,
        Scheme::QavEprk2,
        Scheme::QavEprk3,
        Scheme::QavRkWithQ,
        Scheme::Grk2,
        Scheme::Grk3,
        Scheme::Avf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::QavEprk1 => "qav_eprk_1",
            Scheme::QavEprk2 => "qav_eprk_2",
            Scheme::QavEprk3 => "qav_eprk_3",
            Scheme::QavRkWithQ => "qav_rk_with_q",
            Scheme::Grk2 => "grk_2",
            Scheme::Grk3 => "grk_3",
            Scheme::Avf => "avf",
        }
    }

    /// Gauss stage count, `None` for AVF.
    pub fn stages(self) -> Option<usize> {
        match self {
            Scheme::QavEprk1 => Some(1),
            Scheme::QavEprk2 | Scheme::QavRkWithQ | Scheme::Grk2 => Some(2),
            Scheme::QavEprk3 | Scheme::Grk3 => Some(3),
            Scheme::Avf => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s)
            .ok_or_else(|| Error::config(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub eip: bool,
    pub warm_start: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSettings {
            tol: d.tol,
            max_iter: d.max_iter,
            eip: d.eip,
            warm_start: d.warm_start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Phase seed for bimodal initial data.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub domain: Domain,
    #[serde(default)]
    pub params: KdvParams,
    #[serde(default)]
    pub solver: SolverSettings,
    pub initial: InitialCondition,
}

fn default_record_every() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        make_grid(self.domain.a, self.domain.b, self.domain.n)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            eip: self.solver.eip,
            warm_start: self.solver.warm_start,
        }
    }

    /// Number of steps `T / Δt`; must be an integer up to a relative 1e-9.
    pub fn step_count(&self) -> Result<usize> {
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::config(format!("invalid final time {}", self.t_final)));
        }
        let ratio = self.t_final / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::config(format!(
                "final time {} is not a multiple of dt {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params.validate()?;
        self.solver_config().validate()?;
        self.initial.validate()?;
        self.step_count()?;
        if self.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        if self.scheme == Scheme::QavRkWithQ && self.solver.eip {
            return Err(Error::config(
                "the projection is not defined for the explicit-q scheme",
            ));
        }
        Ok(())
    }
}
