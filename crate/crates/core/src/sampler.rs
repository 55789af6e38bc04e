//! Fitness landscape sampling around a fixed center at a range of scales.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{FitnessContext, FitnessError};
use crate::rng::{standard_normal, stream_rng, streams};
use crate::trotter::{suzuki_seed, TrotterError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("samples per scale must be at least 1")]
    NoSamples,
    #[error("scale list is empty")]
    NoScales,
    #[error("scale {0} is not positive and finite")]
    BadScale(f64),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error(transparent)]
    Trotter(#[from] TrotterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingScheme {
    /// Every component centered on `1/d`.
    AroundUniform,
    /// Centered on the Suzuki coefficients.
    AroundSuzuki,
}

impl SamplingScheme {
    pub fn label(self) -> &'static str {
        match self {
            SamplingScheme::AroundUniform => "around-uniform",
            SamplingScheme::AroundSuzuki => "around-suzuki",
        }
    }
}

/// Powers of ten from `1e-9` to `1`.
pub fn default_scales() -> Vec<f64> {
    (-9..=0).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub scheme: SamplingScheme,
    pub scales: Vec<f64>,
    pub samples_per_scale: usize,
}

impl SamplingPlan {
    pub fn new(
        scheme: SamplingScheme,
        scales: Vec<f64>,
        samples_per_scale: usize,
    ) -> Result<Self, SamplerError> {
        let plan = Self {
            scheme,
            scales,
            samples_per_scale,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_defaults(scheme: SamplingScheme) -> Self {
        Self {
            scheme,
            scales: default_scales(),
            samples_per_scale: 100,
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.samples_per_scale == 0 {
            return Err(SamplerError::NoSamples);
        }
        if self.scales.is_empty() {
            return Err(SamplerError::NoScales);
        }
        if let Some(&s) = self.scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(SamplerError::BadScale(s));
        }
        Ok(())
    }

    pub fn center(&self, k: usize) -> Result<Vec<f64>, SamplerError> {
        let seed = suzuki_seed(k)?;
        Ok(match self.scheme {
            SamplingScheme::AroundSuzuki => seed.into_vec(),
            SamplingScheme::AroundUniform => {
                let d = seed.len();
                vec![1.0 / d as f64; d]
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRow {
    pub scale: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
}

/// Draws `samples_per_scale` points `center + scale * N(0, I)` at every scale
/// and aggregates their fitness.
///
/// All normals are drawn up front in (scale, sample, component) order, so
/// the table does not depend on `parallel`.
pub fn run_sampling(
    ctx: &FitnessContext,
    plan: &SamplingPlan,
    rng_seed: u64,
    parallel: bool,
) -> Result<Vec<SamplingRow>, SamplerError> {
    plan.validate()?;
    let center = plan.center(ctx.spec().k)?;
    let mut rng = stream_rng(rng_seed, streams::SAMPLING);
    let points: Vec<Vec<Vec<f64>>> = plan
        .scales
        .iter()
        .map(|&scale| {
            (0..plan.samples_per_scale)
                .map(|_| {
                    center
                        .iter()
                        .map(|c| c + scale * standard_normal(&mut rng))
                        .collect()
                })
                .collect()
        })
        .collect();

    plan.scales
        .iter()
        .zip(&points)
        .map(|(&scale, batch)| {
            let values: Vec<f64> = if parallel {
                batch
                    .par_iter()
                    .map(|x| ctx.evaluate(x))
                    .collect::<Result<_, _>>()?
            } else {
                batch
                    .iter()
                    .map(|x| ctx.evaluate(x))
                    .collect::<Result<_, _>>()?
            };
            let sum: f64 = values.iter().sum();
            Ok(SamplingRow {
                scale,
                mean: sum / values.len() as f64,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                samples: values.len(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainInstance, TermOrdering};
    use crate::trotter::{DecompositionSpec, PVector};

    fn ctx(n: usize, k: usize, r: usize) -> FitnessContext {
        let inst = ChainInstance::generate(n, None, 3).unwrap();
        FitnessContext::new(
            inst,
            DecompositionSpec::new(k, r, TermOrdering::Grouped).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn plan_validation() {
        assert_eq!(
            SamplingPlan::new(SamplingScheme::AroundSuzuki, vec![1.0], 0).unwrap_err(),
            SamplerError::NoSamples
        );
        assert_eq!(
            SamplingPlan::new(SamplingScheme::AroundSuzuki, vec![], 3).unwrap_err(),
            SamplerError::NoScales
        );
        assert_eq!(
            SamplingPlan::new(SamplingScheme::AroundSuzuki, vec![1e-3, -1.0], 3).unwrap_err(),
            SamplerError::BadScale(-1.0)
        );
        let d = SamplingPlan::with_defaults(SamplingScheme::AroundUniform);
        assert_eq!(d.samples_per_scale, 100);
        assert_eq!(d.scales.len(), 10);
        assert_eq!(d.scales[0], 1e-9);
        assert_eq!(d.scales[9], 1.0);
    }

    #[test]
    fn uniform_center_is_one_fifth() {
        let plan = SamplingPlan::with_defaults(SamplingScheme::AroundUniform);
        assert_eq!(plan.center(2).unwrap(), vec![0.2; 5]);
        assert!(plan.center(3).unwrap().iter().all(|&c| c == 0.1));
    }

    #[test]
    fn uniform_center_matches_plain_s2_with_more_slices() {
        let inst = ChainInstance::generate(3, None, 5).unwrap();
        let k2 = FitnessContext::new(
            inst.clone(),
            DecompositionSpec::new(2, 4, TermOrdering::Grouped).unwrap(),
        )
        .unwrap();
        let k1 = FitnessContext::new(
            inst,
            DecompositionSpec::new(1, 20, TermOrdering::Grouped).unwrap(),
        )
        .unwrap();
        let a = k2.evaluate(&[0.2; 5]).unwrap();
        let b = k1.evaluate_p(&PVector::zeros(1).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12 * b.max(1e-3), "{a} vs {b}");
    }

    #[test]
    fn vanishing_scale_returns_seed_fitness() {
        let c = ctx(3, 2, 5);
        let plan = SamplingPlan::new(SamplingScheme::AroundSuzuki, vec![1e-300], 4).unwrap();
        let rows = run_sampling(&c, &plan, 1, false).unwrap();
        let seed = c.evaluate_p(&suzuki_seed(2).unwrap()).unwrap();
        assert_eq!(rows[0].mean, seed);
        assert_eq!(rows[0].min, seed);
        assert_eq!(rows[0].max, seed);
    }

    #[test]
    fn parallel_and_serial_agree_and_stay_in_range() {
        let c = ctx(3, 2, 3);
        let plan =
            SamplingPlan::new(SamplingScheme::AroundUniform, vec![1e-2, 1.0, 10.0], 6).unwrap();
        let a = run_sampling(&c, &plan, 9, false).unwrap();
        let b = run_sampling(&c, &plan, 9, true).unwrap();
        assert_eq!(a, b);
        for row in &a {
            assert!(row.min >= 0.0 && row.max <= 2.0 + 1e-12);
            assert!(row.min <= row.mean && row.mean <= row.max);
        }
    }
}
