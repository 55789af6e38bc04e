use serde::{Deserialize, Serialize};

use crate::cmaes::{CmaOutcome, TrajectoryPoint};
use crate::model::ChainInstance;
use crate::trotter::{DecompositionSpec, PVector};

/// Result of one optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: ChainInstance,
    pub spec: DecompositionSpec,
    pub rng_seed: u64,
    pub cell: u64,
    pub sigma0: f64,
    pub generations: usize,
    pub p_initial: PVector,
    /// Best individual seen over the run.
    pub p_final: PVector,
    pub error_initial: f64,
    pub error_final: f64,
    pub reduction_pct: f64,
    pub final_mean: Vec<f64>,
    pub final_mean_error: f64,
    pub final_mean_reduction_pct: f64,
    pub evaluations: usize,
    pub covariance_repairs: usize,
    /// Smallest and largest covariance eigenvalue over the run.
    pub covariance_eigen_range: (f64, f64),
    pub trajectory: Vec<TrajectoryPoint>,
}

impl RunRecord {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_outcome(
        instance: ChainInstance,
        spec: DecompositionSpec,
        p_initial: PVector,
        rng_seed: u64,
        cell: u64,
        sigma0: f64,
        generations: usize,
        out: CmaOutcome,
    ) -> Result<Self, super::HarnessError> {
        let pct = |e: f64| 100.0 * (out.initial_f - e) / out.initial_f;
        Ok(Self {
            p_final: PVector::new(spec.k, out.best_x.clone())?,
            instance,
            spec,
            rng_seed,
            cell,
            sigma0,
            generations,
            p_initial,
            error_initial: out.initial_f,
            error_final: out.best_f,
            reduction_pct: pct(out.best_f),
            final_mean_error: out.final_mean_f,
            final_mean_reduction_pct: pct(out.final_mean_f),
            final_mean: out.final_mean,
            evaluations: out.evaluations,
            covariance_repairs: out.repairs,
            covariance_eigen_range: out.cov_extremes,
            trajectory: out.trajectory.0,
        })
    }

    pub fn trajectory_rows(&self) -> Vec<TrajectoryRow> {
        self.trajectory
            .iter()
            .map(|p| TrajectoryRow {
                generation: p.generation,
                best_so_far: p.best_so_far,
                generation_best: p.generation_best,
                centroid_error: p.centroid_fitness,
                sigma: p.sigma,
                reduction_pct: 100.0 * (self.error_initial - p.best_so_far) / self.error_initial,
            })
            .collect()
    }
}

/// Flat row of a run trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub generation: usize,
    pub best_so_far: f64,
    pub generation_best: f64,
    pub centroid_error: f64,
    pub sigma: f64,
    pub reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub instance: ChainInstance,
    pub spec: DecompositionSpec,
    pub seed_error: f64,
    pub unmerged_gates: usize,
    pub merged_gates: usize,
}

/// One grid point of a sweep. Optimized columns are empty for
/// baseline-only sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: String,
    pub value: f64,
    pub baseline_error: f64,
    pub optimized_error: Option<f64>,
    pub reduction_pct: Option<f64>,
}

/// Smallest grid values whose error falls below `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReadout {
    pub epsilon: f64,
    pub baseline_r: Option<usize>,
    pub optimized_r: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub parameter: String,
    pub grid: Vec<f64>,
    /// Where the optimized column comes from.
    pub p_source: String,
    /// Frozen vector evaluated at every point, if any.
    pub p_vector: Option<PVector>,
    pub points: Vec<SweepPoint>,
    pub threshold: Option<ThresholdReadout>,
}

/// Merged gate count and error of one ordering family at one `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermsRow {
    pub r: usize,
    pub ordering: String,
    /// Orderings averaged into this row.
    pub orderings: usize,
    pub merged_gates: f64,
    pub error: f64,
}
