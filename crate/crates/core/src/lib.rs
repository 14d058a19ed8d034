//! Bayesian optimization with contextual improvement.
//!
//! The crate bundles a Gaussian-process surrogate ([`gp`]), improvement-based
//! acquisition functions including the adaptive `AEI` rule ([`acquisition`]),
//! Sobol candidate search ([`sampling`]), benchmark and external objectives
//! ([`objectives`]), and a harness that repeats searches and aggregates them
//! into bootstrap bands, `delta_ci` and normalized rankings ([`runner`]).
//! [`config`] and [`report`] cover the file formats used by the `ctxbo` binary.
//!
//! ```no_run
//! use ctxbo::{AcquisitionSpec, ExperimentConfig, Objective, run_bo};
//!
//! let config = ExperimentConfig::new(Objective::camelback(), AcquisitionSpec::aei());
//! let trace = run_bo(&config, 42).unwrap();
//! println!("best value: {:?}", trace.final_best());
//! ```

pub mod acquisition;
pub mod bounds;
pub mod config;
pub mod gp;
pub mod objectives;
pub mod report;
pub mod runner;
pub mod sampling;
pub mod simplex;

pub use acquisition::{AcquisitionKind, AcquisitionSpec, MarginConvention, PosteriorSummary};
pub use bounds::Bounds;
pub use gp::{Dataset, GpPosterior, KernelParams};
pub use objectives::{Direction, Objective};
pub use runner::{
    epsilon_sweep, run_bo, run_study, ExperimentConfig, RunError, Study, StudySummary, Sweep,
    Trace,
};
pub use sampling::{SearchBudget, SobolStream};
