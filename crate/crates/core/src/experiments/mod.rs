//! Benchmark problems, the simulation driver and refinement studies.

pub mod config;
pub mod driver;
pub mod initial;
pub mod refinement;

pub use config::{Domain, ExperimentConfig, Scheme, SolverSettings};
pub use driver::{run_simulation, simulate, RunOutput, Simulation, CSV_HEADER};
pub use initial::{
    init_bimodal, init_three_solitons, init_two_soliton, soliton_exact, BimodalSpectrum,
    InitialCondition,
};
pub use refinement::{refinement_study, Levels, RefinementRow};
