#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod profile;
pub mod sharp;
pub mod snapshot;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{Boundary, GridSpec, ScalarField, StaggeredVectorField};
pub use geometry::{Curve, Point};
pub use harness::{ExperimentConfig, RunMode};
pub use profile::{ProfileTable, Quartic};
pub use solver::{NsacSolver, NsacState, StepParams};
