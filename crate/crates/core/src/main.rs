use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qav_kdv::experiments::driver::{sibling, write_plot_data, write_profile};
use qav_kdv::experiments::refinement::write_table;
use qav_kdv::experiments::{
    refinement_study, simulate, BimodalSpectrum, Domain, ExperimentConfig, InitialCondition,
    Levels, RunOutput, Scheme, SolverSettings,
};
use qav_kdv::spectral::norm_h;
use qav_kdv::{Error, KdvParams, Result};

#[derive(Parser)]
#[command(name = "qav-kdv", version, about = "Energy-preserving KdV solvers and benchmark runs")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time and space refinement tables for the single soliton
    Accuracy {
        /// Also time AVF, QAV-EPRK-2 and QAV-EPRK-3 at matched accuracy (T = 10)
        #[arg(long)]
        cpu: bool,
    },
    /// Three interacting solitons
    Solitons3,
    /// Two-soliton collision from rational initial data
    Twosoliton,
    /// Random waves with a bimodal spectrum
    Bimodal {
        /// Spectrum case, 1 to 6
        #[arg(long, default_value_t = 2)]
        case: usize,
    },
    /// Run a TOML experiment file
    Run { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    scheme: Option<Scheme>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    #[arg(long, global = true)]
    t_final: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true, value_enum)]
    eip: Option<Switch>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path (or file stem for `accuracy`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    record_every: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(n) = self.grid_n {
            cfg.domain.n = n;
        }
        if let Some(t) = self.t_final {
            cfg.t_final = t;
        }
        if let Some(tol) = self.tol {
            cfg.solver.tol = tol;
        }
        if let Some(m) = self.max_iter {
            cfg.solver.max_iter = m;
        }
        if let Some(e) = self.eip {
            cfg.solver.eip = matches!(e, Switch::On);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_path = Some(out.clone());
        }
        if let Some(r) = self.record_every {
            cfg.record_every = r;
        }
    }
}

fn base(
    scheme: Scheme,
    (a, b, n): (f64, f64, usize),
    dt: f64,
    t_final: f64,
    initial: InitialCondition,
) -> ExperimentConfig {
    ExperimentConfig {
        scheme,
        dt,
        t_final,
        record_every: 1,
        seed: 0,
        output_path: None,
        domain: Domain { a, b, n },
        params: KdvParams::default(),
        solver: SolverSettings::default(),
        initial,
    }
}

fn soliton_base() -> ExperimentConfig {
    base(
        Scheme::QavEprk3,
        (-40.0, 40.0, 512),
        0.0125,
        1.0,
        InitialCondition::Soliton { c: 1.0, x0: 0.0 },
    )
}

fn solitons3_config() -> ExperimentConfig {
    ExperimentConfig {
        output_path: Some("solitons3.csv".into()),
        ..base(
            Scheme::QavEprk2,
            (-100.0, 100.0, 512),
            0.1,
            40.0,
            InitialCondition::three_solitons(),
        )
    }
}

fn twosoliton_config() -> ExperimentConfig {
    ExperimentConfig {
        params: KdvParams { eta: 6.0, mu: 1.0 },
        record_every: 20,
        output_path: Some("twosoliton.csv".into()),
        solver: SolverSettings {
            tol: 1e-7,
            eip: true,
            ..SolverSettings::default()
        },
        ..base(
            Scheme::QavEprk2,
            (-20.0, 20.0, 256),
            0.005,
            200.0,
            InitialCondition::TwoSolitonRational,
        )
    }
}

fn bimodal_config(case: usize) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        params: KdvParams {
            eta: 1.0,
            mu: (2.0_f64 / 9.0).sqrt(),
        },
        seed: 2021,
        record_every: 10,
        output_path: Some(format!("bimodal_case{case}.csv").into()),
        solver: SolverSettings {
            eip: true,
            ..SolverSettings::default()
        },
        ..base(
            Scheme::QavEprk2,
            (0.0, 200.0 * PI, 4096),
            0.01,
            20.0,
            InitialCondition::Bimodal(BimodalSpectrum::case(case)?),
        )
    })
}

fn summarize(cfg: &ExperimentConfig, out: &RunOutput) {
    let last = out.records.last().expect("at least one record");
    println!(
        "{} dt={} N={} T={}: {} steps in {:.2}s",
        cfg.scheme,
        cfg.dt,
        cfg.domain.n,
        cfg.t_final,
        last.step,
        out.elapsed.as_secs_f64()
    );
    println!(
        "  max rel energy error {:.3e}, max rel mass error {:.3e}, unconverged steps {}",
        out.max_relative_energy_error(),
        out.max_relative_mass_error(),
        out.unconverged_steps
    );
}

fn run_and_write(cfg: &ExperimentConfig) -> Result<()> {
    let out = simulate(cfg)?;
    summarize(cfg, &out);
    if let Some(path) = &cfg.output_path {
        let mut written = vec![path.clone()];
        written.extend(write_plot_data(path, &out.records)?);
        let profile = sibling(path, "_profile.dat");
        write_profile(&profile, &out.final_state)?;
        written.push(profile);
        for p in written {
            println!("  wrote {}", p.display());
        }
    }
    Ok(())
}

fn print_rows(label: &str, rows: &[qav_kdv::experiments::RefinementRow]) {
    println!("{label}");
    println!("  {:>10} {:>12} {:>12} {:>8}", "res", "L2", "Linf", "order");
    for r in rows {
        let order = r.observed_order.map(|o| format!("{o:.3}")).unwrap_or_default();
        println!(
            "  {:>10} {:>12.4e} {:>12.4e} {:>8}",
            r.resolution, r.l2_error, r.linf_error, order
        );
    }
}

fn accuracy(overrides: &Overrides, cpu: bool) -> Result<()> {
    let stem = overrides.out.clone().unwrap_or_else(|| "accuracy.csv".into());
    let mut cfg = soliton_base();
    overrides.apply(&mut cfg);
    cfg.output_path = None;

    let ladder = vec![0.1, 0.05, 0.025, 0.0125];
    let schemes = match overrides.scheme {
        Some(s) => vec![s],
        None => vec![Scheme::Avf, Scheme::QavEprk2, Scheme::QavEprk3],
    };
    for scheme in schemes {
        let base = ExperimentConfig {
            scheme,
            ..cfg.clone()
        };
        let rows = refinement_study(&base, &Levels::Time(ladder.clone()), None)?;
        print_rows(&format!("time refinement, {scheme}, N = {}", base.domain.n), &rows);
        write_table(&sibling(&stem, &format!("_time_{scheme}.csv")), &rows)?;
    }

    let space = ExperimentConfig {
        scheme: overrides.scheme.unwrap_or(Scheme::QavEprk3),
        dt: overrides.dt.unwrap_or(1e-3),
        t_final: overrides.t_final.unwrap_or(0.1),
        ..cfg.clone()
    };
    let rows = refinement_study(&space, &Levels::Space(vec![100, 150, 200, 250, 300]), None)?;
    print_rows(&format!("space refinement, {}, dt = {}", space.scheme, space.dt), &rows);
    write_table(&sibling(&stem, "_space.csv"), &rows)?;

    if cpu {
        println!("CPU time at matched accuracy, T = 10");
        for (scheme, dt) in [(Scheme::Avf, 5e-5), (Scheme::QavEprk2, 1e-2), (Scheme::QavEprk3, 4e-2)] {
            let run = ExperimentConfig {
                scheme,
                dt,
                t_final: 10.0,
                record_every: usize::MAX,
                ..cfg.clone()
            };
            let out = simulate(&run)?;
            let exact = run
                .initial
                .exact(&run.grid()?, run.t_final, &run.params)
                .expect("soliton has a closed form")?;
            let err = norm_h(&out.final_state.zip_map(&exact, |a, b| a - b)?);
            println!(
                "  {scheme:<12} dt={dt:<8} L2 {err:.3e}  {:.2}s",
                out.elapsed.as_secs_f64()
            );
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let o = &cli.overrides;
    let mut cfg = match &cli.command {
        Command::Accuracy { cpu } => return accuracy(o, *cpu),
        Command::Solitons3 => solitons3_config(),
        Command::Twosoliton => twosoliton_config(),
        Command::Bimodal { case } => bimodal_config(*case)?,
        Command::Run { config } => ExperimentConfig::from_file(config)?,
    };
    o.apply(&mut cfg);
    cfg.validate()?;
    run_and_write(&cfg)
}

fn exit_code(err: &Error) -> u8 {
    if err.is_divergence() {
        3
    } else if matches!(
        err,
        Error::Config(_) | Error::ConfigFile(_) | Error::GridMismatch
    ) {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
