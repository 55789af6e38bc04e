use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::{
    BaselineReport, PermsRow, RunRecord, SweepPoint, SweepRecord, ThresholdReadout,
};
use super::HarnessError;
use crate::cmaes::{cma_run, CmaConfig};
use crate::fitness::{error_reduction_pct, FitnessContext};
use crate::model::{
    merged_gate_count, random_orderings, unmerged_gate_count, ChainInstance, TermOrdering,
};
use crate::rng::{stream_rng, streams};
use crate::sampler::{run_sampling, SamplingPlan, SamplingRow};
use crate::trotter::{suzuki_seed, DecompositionSpec, PVector};

pub fn generate_instance(
    n: usize,
    t: Option<f64>,
    seed: u64,
) -> Result<ChainInstance, HarnessError> {
    Ok(ChainInstance::generate(n, t, seed)?)
}

/// Maps an ordering name to a [`TermOrdering`]; `random` draws a permutation
/// from the permutation stream of `seed`.
pub fn resolve_ordering(name: &str, num_terms: usize, seed: u64) -> Option<TermOrdering> {
    match name {
        "canonical" => Some(TermOrdering::Canonical),
        "grouped" => Some(TermOrdering::Grouped),
        "random" => Some(TermOrdering::random(
            num_terms,
            &mut stream_rng(seed, streams::PERMUTATIONS),
        )),
        _ => None,
    }
}

/// Suzuki-seed error and gate counts.
pub fn baseline(
    instance: &ChainInstance,
    spec: &DecompositionSpec,
) -> Result<BaselineReport, HarnessError> {
    let ctx = FitnessContext::new(instance.clone(), spec.clone())?;
    Ok(BaselineReport {
        seed_error: ctx.evaluate_p(&suzuki_seed(spec.k)?)?,
        unmerged_gates: unmerged_gate_count(instance, spec.k, spec.r),
        merged_gates: merged_gate_count(instance, &spec.ordering, spec.k, spec.r)?,
        instance: instance.clone(),
        spec: spec.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub generations: usize,
    /// `None` uses `1e-7 / d`.
    pub sigma0: Option<f64>,
    pub rng_seed: u64,
    pub cell: u64,
    pub parallel: bool,
}

impl OptimizeConfig {
    pub fn new(generations: usize, rng_seed: u64) -> Self {
        Self {
            generations,
            sigma0: None,
            rng_seed,
            cell: 0,
            parallel: false,
        }
    }

    pub fn sigma0_for(&self, dim: usize) -> f64 {
        self.sigma0.unwrap_or(1e-7 / dim as f64)
    }
}

/// CMA-ES from the Suzuki seed.
pub fn optimize(
    instance: &ChainInstance,
    spec: &DecompositionSpec,
    config: &OptimizeConfig,
) -> Result<RunRecord, HarnessError> {
    let ctx = FitnessContext::new(instance.clone(), spec.clone())?;
    let seed = suzuki_seed(spec.k)?;
    let sigma0 = config.sigma0_for(seed.len());
    let cma = CmaConfig {
        generations: config.generations,
        sigma0,
        rng_seed: config.rng_seed,
        cell: config.cell,
        parallel: config.parallel,
    };
    let objective = |x: &[f64]| ctx.evaluate(x).unwrap_or(f64::NAN);
    let out = cma_run(seed.as_slice(), objective, &cma)?;
    RunRecord::from_outcome(
        instance.clone(),
        spec.clone(),
        seed,
        config.rng_seed,
        config.cell,
        sigma0,
        config.generations,
        out,
    )
}

fn check_grid(grid: &[f64]) -> Result<(), HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    if grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(HarnessError::GridOrder(grid.to_vec()));
    }
    Ok(())
}

fn as_count(axis: &'static str, value: f64, min: usize) -> Result<usize, HarnessError> {
    if value.fract() == 0.0 && value >= min as f64 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(HarnessError::GridValue { axis, value })
    }
}

/// What fills the optimized column of an r sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    BaselineOnly,
    /// A fresh CMA-ES run per grid point; point `i` uses cell `i`.
    Optimize(OptimizeConfig),
    Fixed(PVector),
}

pub fn sweep_r(
    instance: &ChainInstance,
    k: usize,
    ordering: &TermOrdering,
    grid: &[usize],
    mode: &SweepMode,
    epsilon: Option<f64>,
) -> Result<SweepRecord, HarnessError> {
    let values: Vec<f64> = grid.iter().map(|&r| r as f64).collect();
    check_grid(&values)?;
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(i, &r)| {
            let spec = DecompositionSpec::new(k, r, ordering.clone())?;
            let (base, opt) = match mode {
                SweepMode::BaselineOnly => (baseline(instance, &spec)?.seed_error, None),
                SweepMode::Fixed(p) => {
                    let ctx = FitnessContext::new(instance.clone(), spec)?;
                    (ctx.evaluate_p(&suzuki_seed(k)?)?, Some(ctx.evaluate_p(p)?))
                }
                SweepMode::Optimize(cfg) => {
                    let cfg = OptimizeConfig {
                        cell: cfg.cell + i as u64,
                        ..*cfg
                    };
                    let rec = optimize(instance, &spec, &cfg)?;
                    (rec.error_initial, Some(rec.error_final))
                }
            };
            point("r", r as f64, base, opt)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let threshold = epsilon.map(|epsilon| {
        let first = |err: &dyn Fn(&SweepPoint) -> Option<f64>| {
            points
                .iter()
                .find(|p| err(p).is_some_and(|e| e < epsilon))
                .map(|p| p.value as usize)
        };
        ThresholdReadout {
            epsilon,
            baseline_r: first(&|p| Some(p.baseline_error)),
            optimized_r: first(&|p| p.optimized_error),
        }
    });
    let (p_source, p_vector) = match mode {
        SweepMode::BaselineOnly => ("none".to_string(), None),
        SweepMode::Fixed(p) => ("fixed".to_string(), Some(p.clone())),
        SweepMode::Optimize(_) => ("optimized-per-point".to_string(), None),
    };
    Ok(SweepRecord {
        parameter: "r".into(),
        grid: values,
        p_source,
        p_vector,
        points,
        threshold,
    })
}

fn point(
    parameter: &str,
    value: f64,
    base: f64,
    opt: Option<f64>,
) -> Result<SweepPoint, HarnessError> {
    let reduction_pct = opt.map(|o| error_reduction_pct(base, o)).transpose()?;
    Ok(SweepPoint {
        parameter: parameter.into(),
        value,
        baseline_error: base,
        optimized_error: opt,
        reduction_pct,
    })
}

/// Axis along which a frozen vector is re-evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Grid values are instance seeds; `n` and `t` stay those of the source.
    V,
    /// Disorder components are appended from the source instance's seed.
    N,
    T,
    R,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::V => "v",
            Axis::N => "n",
            Axis::T => "t",
            Axis::R => "r",
        }
    }
}

/// Evaluates the optimized vector of `record` and the Suzuki seed along one axis.
pub fn generalize(
    record: &RunRecord,
    axis: Axis,
    grid: &[f64],
) -> Result<SweepRecord, HarnessError> {
    check_grid(grid)?;
    let src = &record.instance;
    let k = record.spec.k;
    let points = grid
        .par_iter()
        .map(|&value| {
            let mut spec = record.spec.clone();
            let inst = match axis {
                Axis::V => {
                    ChainInstance::generate(src.n, Some(src.t), as_count("v", value, 0)? as u64)?
                }
                Axis::N => src.extended(as_count("n", value, 3)?)?,
                Axis::T => {
                    if !(value >= 0.0 && value.is_finite()) {
                        return Err(HarnessError::GridValue { axis: "t", value });
                    }
                    src.with_time(value)?
                }
                Axis::R => {
                    spec.r = as_count("r", value, 1)?;
                    src.clone()
                }
            };
            let ctx = FitnessContext::new(inst, spec)?;
            let base = ctx.evaluate_p(&suzuki_seed(k)?)?;
            let opt = ctx.evaluate_p(&record.p_final)?;
            point(axis.name(), value, base, Some(opt))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(SweepRecord {
        parameter: axis.name().into(),
        grid: grid.to_vec(),
        p_source: format!("run rng_seed={} cell={}", record.rng_seed, record.cell),
        p_vector: Some(record.p_final.clone()),
        points,
        threshold: None,
    })
}

/// Gate count and Suzuki-seed error for grouped, canonical and `n_random`
/// random orderings at each `r`. Random rows average over the same set of
/// permutations at every `r`.
pub fn perms(
    instance: &ChainInstance,
    k: usize,
    r_grid: &[usize],
    n_random: usize,
    seed: u64,
) -> Result<Vec<PermsRow>, HarnessError> {
    check_grid(&r_grid.iter().map(|&r| r as f64).collect::<Vec<_>>())?;
    if n_random == 0 {
        return Err(HarnessError::NoPermutations);
    }
    let random = random_orderings(instance.num_terms(), n_random, seed, streams::PERMUTATIONS);
    let p = suzuki_seed(k)?;
    let cells: Vec<(usize, usize)> = r_grid
        .iter()
        .flat_map(|&r| (0..n_random + 2).map(move |j| (r, j)))
        .collect();
    let measured = cells
        .par_iter()
        .map(|&(r, j)| {
            let ordering = match j {
                0 => TermOrdering::Grouped,
                1 => TermOrdering::Canonical,
                _ => random[j - 2].clone(),
            };
            let gates = merged_gate_count(instance, &ordering, k, r)? as f64;
            let ctx =
                FitnessContext::new(instance.clone(), DecompositionSpec::new(k, r, ordering)?)?;
            Ok((gates, ctx.evaluate_p(&p)?))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let mut rows = Vec::with_capacity(3 * r_grid.len());
    for (chunk, &r) in measured.chunks(n_random + 2).zip(r_grid) {
        let row = |ordering: &str, cells: &[(f64, f64)]| {
            let m = cells.len() as f64;
            PermsRow {
                r,
                ordering: ordering.into(),
                orderings: cells.len(),
                merged_gates: cells.iter().map(|c| c.0).sum::<f64>() / m,
                error: cells.iter().map(|c| c.1).sum::<f64>() / m,
            }
        };
        rows.push(row("grouped", &chunk[..1]));
        rows.push(row("canonical", &chunk[1..2]));
        rows.push(row("random", &chunk[2..]));
    }
    Ok(rows)
}

pub fn sample(
    instance: &ChainInstance,
    spec: &DecompositionSpec,
    plan: &SamplingPlan,
    seed: u64,
) -> Result<Vec<SamplingRow>, HarnessError> {
    let ctx = FitnessContext::new(instance.clone(), spec.clone())?;
    Ok(run_sampling(&ctx, plan, seed, true)?)
}
