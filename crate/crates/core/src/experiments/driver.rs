//! Simulation driver, CSV output and plot data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use super::config::{ExperimentConfig, Scheme};
use crate::baselines::{AvfStepper, GrkStepper};
use crate::eip_projection::ReferenceInvariants;
use crate::error::{Error, Result};
use crate::kdv_model::{
    hamiltonian_h, mass_h, modified_energy_h, momentum_h, InvariantRecord, KdvParams,
};
use crate::qav_integrator::{QavStepper, StepDiagnostics};
use crate::spectral::{GridFunction, SpectralOperator};
use crate::tableau::gauss_tableau;

pub const CSV_HEADER: &str =
    "step,t,mass,momentum,energy_H,energy_E,mass_err,energy_err,iterations,converged,lambda_eip";

enum Stepper {
    Qav(QavStepper),
    QavWithQ(QavStepper),
    Avf(AvfStepper),
    Grk(GrkStepper),
}

/// A running simulation: current state, reference invariants and stepper.
pub struct Simulation {
    op: SpectralOperator,
    params: KdvParams,
    stepper: Stepper,
    reference: ReferenceInvariants,
    u: GridFunction,
    q: Option<GridFunction>,
    step: usize,
    dt: f64,
}

impl Simulation {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let op = SpectralOperator::new(&grid);
        let u0 = cfg.initial.evaluate(&op, &cfg.params, cfg.seed)?;
        Self::from_state(cfg, op, u0)
    }

    /// Starts from an explicit initial state instead of `cfg.initial`.
    pub fn from_state(cfg: &ExperimentConfig, op: SpectralOperator, u0: GridFunction) -> Result<Self> {
        op.check(&u0)?;
        let params = cfg.params;
        let solver = cfg.solver_config();
        let stepper = match cfg.scheme {
            Scheme::Avf => Stepper::Avf(AvfStepper::new(&op, &params, &solver)?),
            Scheme::Grk2 | Scheme::Grk3 => {
                let tab = gauss_tableau(cfg.scheme.stages().unwrap_or(2))?;
                Stepper::Grk(GrkStepper::new(&op, &tab, &params, &solver)?)
            }
            Scheme::QavRkWithQ => {
                let tab = gauss_tableau(2)?;
                Stepper::QavWithQ(QavStepper::new(&op, &tab, &params, &solver)?)
            }
            Scheme::QavEprk1 | Scheme::QavEprk2 | Scheme::QavEprk3 => {
                let tab = gauss_tableau(cfg.scheme.stages().unwrap_or(2))?;
                Stepper::Qav(QavStepper::new(&op, &tab, &params, &solver)?)
            }
        };
        let q = matches!(stepper, Stepper::QavWithQ(_)).then(|| u0.map(|v| v * v));
        let reference = ReferenceInvariants::from_initial(&op, &u0, &params)?;
        Ok(Simulation {
            op,
            params,
            stepper,
            reference,
            u: u0,
            q,
            step: 0,
            dt: cfg.dt,
        })
    }

    pub fn state(&self) -> &GridFunction {
        &self.u
    }

    pub fn auxiliary(&self) -> Option<&GridFunction> {
        self.q.as_ref()
    }

    pub fn reference(&self) -> &ReferenceInvariants {
        &self.reference
    }

    pub fn operator(&self) -> &SpectralOperator {
        &self.op
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn advance(&mut self) -> Result<StepDiagnostics> {
        let reference = Some(&self.reference);
        let result = match &mut self.stepper {
            Stepper::Qav(s) => s.step(&self.u, reference),
            Stepper::Avf(s) => s.step(&self.u, reference),
            Stepper::Grk(s) => s.step(&self.u, reference),
            Stepper::QavWithQ(s) => {
                let q = self.q.as_ref().expect("explicit-q scheme tracks q");
                s.step_with_q(&self.u, q).map(|(u, q, d)| {
                    self.q = Some(q);
                    (u, d)
                })
            }
        };
        let (u, diag) = result.map_err(|e| Error::Step {
            step: self.step + 1,
            source: Box::new(e),
        })?;
        self.u = u;
        self.step += 1;
        Ok(diag)
    }

    pub fn record(&self, diag: &StepDiagnostics) -> Result<InvariantRecord> {
        let energy_h = hamiltonian_h(&self.op, &self.u, &self.params)?;
        let energy_e = match &self.q {
            Some(q) => modified_energy_h(&self.op, &self.u, q, &self.params)?,
            None => energy_h,
        };
        Ok(InvariantRecord {
            step: self.step,
            t: self.time(),
            mass: mass_h(&self.u),
            momentum: momentum_h(&self.u),
            energy_h,
            energy_e,
            iterations: diag.iterations,
            converged: diag.converged,
            lambda_eip: diag.lambda_eip,
        })
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<InvariantRecord>,
    pub final_state: GridFunction,
    pub elapsed: Duration,
    /// Steps that hit the iteration cap.
    pub unconverged_steps: usize,
}

impl RunOutput {
    /// `max_n |Hⁿ - H⁰| / (1 + |H⁰|)` over the recorded levels.
    pub fn max_relative_energy_error(&self) -> f64 {
        let h0 = self.records[0].energy_h;
        self.records
            .iter()
            .map(|r| (r.energy_h - h0).abs() / (1.0 + h0.abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_relative_mass_error(&self) -> f64 {
        let m0 = self.records[0].mass;
        self.records
            .iter()
            .map(|r| (r.mass - m0).abs() / (1.0 + m0.abs()))
            .fold(0.0, f64::max)
    }

    pub fn final_relative_energy_error(&self) -> f64 {
        let h0 = self.records[0].energy_h;
        let last = self.records.last().expect("at least one record");
        (last.energy_h - h0).abs() / (1.0 + h0.abs())
    }
}

/// Runs `cfg` to its final time, recording every `record_every` steps plus
/// the final step. Writes the CSV when `output_path` is set.
pub fn simulate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut sim = Simulation::new(cfg)?;
    let steps = cfg.step_count()?;
    let start = Instant::now();
    let mut records = vec![sim.record(&StepDiagnostics {
        converged: true,
        ..Default::default()
    })?];
    let mut unconverged = 0;
    for n in 1..=steps {
        let diag = sim.advance()?;
        if !diag.converged {
            unconverged += 1;
        }
        if n % cfg.record_every == 0 || n == steps {
            records.push(sim.record(&diag)?);
        }
    }
    let elapsed = start.elapsed();
    if unconverged > 0 {
        log::warn!("{unconverged} of {steps} steps hit the iteration cap");
    }
    if let Some(path) = &cfg.output_path {
        write_csv(path, &records)?;
    }
    Ok(RunOutput {
        records,
        final_state: sim.u,
        elapsed,
        unconverged_steps: unconverged,
    })
}

/// Runs `cfg` and returns the recorded invariant series.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<Vec<InvariantRecord>> {
    simulate(cfg).map(|out| out.records)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv_to<W: Write>(mut w: W, records: &[InvariantRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let Some(first) = records.first() else {
        return Ok(());
    };
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            fmt_f(r.t),
            fmt_f(r.mass),
            fmt_f(r.momentum),
            fmt_f(r.energy_h),
            fmt_f(r.energy_e),
            fmt_f(r.mass - first.mass),
            fmt_f(r.energy_h - first.energy_h),
            r.iterations,
            u8::from(r.converged),
            fmt_f(r.lambda_eip),
        )?;
    }
    Ok(())
}

pub fn write_csv(path: &Path, records: &[InvariantRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv_to(&mut w, records)?;
    w.flush()?;
    Ok(())
}

/// Writes `<stem>_<name>.dat` two-column files for energy, mass and
/// momentum errors plus a gnuplot script `<stem>.gp`. Returns the paths.
pub fn write_plot_data(stem: &Path, records: &[InvariantRecord]) -> Result<Vec<PathBuf>> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let series: [(&str, fn(&InvariantRecord) -> f64, f64); 3] = [
        ("energy", |r| r.energy_h, first.energy_h),
        ("mass", |r| r.mass, first.mass),
        ("momentum", |r| r.momentum, first.momentum),
    ];
    let mut paths = Vec::new();
    for (name, get, base) in series {
        let path = sibling(stem, &format!("_{name}.dat"));
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "# t relative_{name}_error")?;
        for r in records {
            writeln!(w, "{} {}", fmt_f(r.t), fmt_f((get(r) - base).abs() / (1.0 + base.abs())))?;
        }
        w.flush()?;
        paths.push(path);
    }
    let script = sibling(stem, ".gp");
    let mut w = BufWriter::new(File::create(&script)?);
    writeln!(w, "set logscale y\nset xlabel 't'\nset format y '%.0e'")?;
    let plots: Vec<String> = paths
        .iter()
        .map(|p| {
            let file = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            format!("'{file}' using 1:2 with lines title '{file}'")
        })
        .collect();
    writeln!(w, "plot {}", plots.join(", \\\n     "))?;
    w.flush()?;
    paths.push(script);
    Ok(paths)
}

/// Writes `x u` pairs of a grid function.
pub fn write_profile(path: &Path, u: &GridFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# x u")?;
    for (j, v) in u.values().iter().enumerate() {
        writeln!(w, "{} {}", fmt_f(u.grid().node(j)), fmt_f(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// `dir/stem.csv` + suffix → `dir/stem<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    path.with_file_name(format!("{stem}{suffix}"))
}
