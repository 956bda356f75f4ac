//! Experiment configuration, sweeps, error norms and rate fits.

pub mod config;
pub mod experiment;
pub mod norms;
pub mod rates;

pub use config::{DtRule, ExperimentConfig, InterfaceSpec};
pub use experiment::{run_eps, run_experiment, run_sharp, EpsOutcome, RunMode, SweepReport};
pub use norms::{error_norms, frame_errors, ErrorReport, Frame, FrameErrors};
pub use rates::{fit_rate, RateFit};
