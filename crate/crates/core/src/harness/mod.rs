//! Experiment runners, persisted records and file formats.
//!
//! Every experiment is a pure function of its inputs and seeds. Independent
//! cells (grid points, permutations) run on the rayon pool and are collected
//! in grid order, so outputs do not depend on the number of workers.

mod experiments;
mod io;
mod records;

use std::path::PathBuf;

use thiserror::Error;

use crate::cmaes::CmaError;
use crate::fitness::FitnessError;
use crate::model::ModelError;
use crate::sampler::SamplerError;
use crate::trotter::TrotterError;

pub use experiments::{
    baseline, generalize, generate_instance, optimize, perms, resolve_ordering, sample, sweep_r,
    Axis, OptimizeConfig, SweepMode,
};
pub use io::{
    read_instance, read_json, write_csv, write_instance, write_json, write_timing, Timing,
};
pub use records::{
    BaselineReport, PermsRow, RunRecord, SweepPoint, SweepRecord, ThresholdReadout, TrajectoryRow,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
    #[error("{path}: {error}")]
    Json {
        path: PathBuf,
        error: serde_json::Error,
    },
    #[error("{path}: {error}")]
    Csv { path: PathBuf, error: csv::Error },
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid must be strictly increasing, got {0:?}")]
    GridOrder(Vec<f64>),
    #[error("grid value {value} is not valid for axis {axis}")]
    GridValue { axis: &'static str, value: f64 },
    #[error("at least one random permutation is required")]
    NoPermutations,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trotter(#[from] TrotterError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Cma(#[from] CmaError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}
