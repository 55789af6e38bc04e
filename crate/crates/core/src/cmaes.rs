//! (μ/μ_w, λ)-CMA-ES with cumulative step-size adaptation and rank-one plus
//! rank-μ covariance updates.
//!
//! Strategy constants follow Hansen's defaults as shipped by DEAP's
//! `cma.Strategy`:
//!
//! ```text
//! λ = 4 + ⌊3 ln d⌋          μ = ⌊λ/2⌋          w_i ∝ ln(μ + ½) − ln i
//! c_σ = (μ_eff + 2) / (d + μ_eff + 3)
//! d_σ = 1 + 2 max(0, √((μ_eff − 1)/(d + 1)) − 1) + c_σ
//! c_c = 4 / (d + 4)
//! c_1 = 2 / ((d + 1.3)² + μ_eff)
//! c_μ = min(1 − c_1, 2 (μ_eff − 2 + 1/μ_eff) / ((d + 2)² + μ_eff))
//! ```
//!
//! The covariance is re-decomposed every generation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eig, ComplexMatrix};
use crate::rng::{standard_normal, stream_rng, streams, Rng64};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CmaError {
    #[error("search space must have at least one dimension")]
    EmptySeed,
    #[error("initial step size must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("seed vector has non-finite components")]
    NonFiniteSeed,
    #[error("generation budget must be at least 1")]
    NoGenerations,
}

/// Smallest eigenvalue kept in the covariance.
const EIGEN_FLOOR: f64 = 1e-20;

/// Full state of a run, including its random stream.
#[derive(Debug, Clone)]
pub struct CmaState {
    pub dim: usize,
    pub mean: Vec<f64>,
    pub sigma: f64,
    /// Row-major `dim x dim`.
    pub cov: Vec<f64>,
    /// Eigenvectors of `cov`, row-major, column `j` for `axis_lengths[j]`.
    pub basis: Vec<f64>,
    /// Square roots of the eigenvalues of `cov`.
    pub axis_lengths: Vec<f64>,
    pub path_sigma: Vec<f64>,
    pub path_cov: Vec<f64>,
    pub generation: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
    /// Times the covariance needed symmetrization or an eigenvalue floor.
    pub repairs: usize,
    pub evaluations: usize,
    rng: Rng64,
}

/// Per-generation outcome of [`CmaState::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Candidates whose objective was not finite.
    pub invalid: usize,
}

pub fn cma_init(seed_vector: &[f64], sigma0: f64, rng_seed: u64) -> Result<CmaState, CmaError> {
    cma_init_stream(seed_vector, sigma0, rng_seed, streams::CMA)
}

/// As [`cma_init`], drawing from an explicit stream of `rng_seed`.
pub fn cma_init_stream(
    seed_vector: &[f64],
    sigma0: f64,
    rng_seed: u64,
    stream: u64,
) -> Result<CmaState, CmaError> {
    let d = seed_vector.len();
    if d == 0 {
        return Err(CmaError::EmptySeed);
    }
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(CmaError::BadSigma(sigma0));
    }
    if seed_vector.iter().any(|x| !x.is_finite()) {
        return Err(CmaError::NonFiniteSeed);
    }
    let df = d as f64;
    let lambda = 4 + (3.0 * df.ln()).floor() as usize;
    let mu = lambda / 2;
    let raw: Vec<f64> = (1..=mu)
        .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let c_sigma = (mu_eff + 2.0) / (df + mu_eff + 3.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (df + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = 4.0 / (df + 4.0);
    let c_1 = 2.0 / ((df + 1.3).powi(2) + mu_eff);
    let c_mu = (2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((df + 2.0).powi(2) + mu_eff)).min(1.0 - c_1);
    let chi_n = df.sqrt() * (1.0 - 1.0 / (4.0 * df) + 1.0 / (21.0 * df * df));

    Ok(CmaState {
        dim: d,
        mean: seed_vector.to_vec(),
        sigma: sigma0,
        cov: identity(d),
        basis: identity(d),
        axis_lengths: vec![1.0; d],
        path_sigma: vec![0.0; d],
        path_cov: vec![0.0; d],
        generation: 0,
        lambda,
        mu,
        weights,
        mu_eff,
        c_sigma,
        d_sigma,
        c_c,
        c_1,
        c_mu,
        chi_n,
        repairs: 0,
        evaluations: 0,
        rng: stream_rng(rng_seed, stream),
    })
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

impl CmaState {
    /// Draws the next population: `mean + σ B D z`, `z ~ N(0, I)`.
    pub fn sample(&mut self) -> Vec<Vec<f64>> {
        let d = self.dim;
        (0..self.lambda)
            .map(|_| {
                let z: Vec<f64> = (0..d).map(|_| standard_normal(&mut self.rng)).collect();
                (0..d)
                    .map(|i| {
                        let y: f64 = (0..d)
                            .map(|j| self.basis[i * d + j] * self.axis_lengths[j] * z[j])
                            .sum();
                        self.mean[i] + self.sigma * y
                    })
                    .collect()
            })
            .collect()
    }

    /// One generation: sample, evaluate, rank and update the distribution.
    ///
    /// Non-finite objective values rank last and are counted in
    /// [`Generation::invalid`].
    pub fn step<F>(&mut self, objective: &F, parallel: bool) -> Generation
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let population = self.sample();
        let fitness: Vec<f64> = if parallel {
            population.par_iter().map(|x| objective(x)).collect()
        } else {
            population.iter().map(|x| objective(x)).collect()
        };
        self.evaluations += population.len();
        self.tell(&population, &fitness)
    }

    /// Updates the distribution from an evaluated population.
    pub fn tell(&mut self, population: &[Vec<f64>], fitness: &[f64]) -> Generation {
        let d = self.dim;
        let invalid = fitness.iter().filter(|f| !f.is_finite()).count();
        let key = |f: f64| if f.is_finite() { f } else { f64::INFINITY };
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| key(fitness[a]).total_cmp(&key(fitness[b])));

        let old_mean = self.mean.clone();
        // steps y_i = (x_i - m) / σ of the selected parents
        let steps: Vec<Vec<f64>> = order[..self.mu]
            .iter()
            .map(|&i| {
                population[i]
                    .iter()
                    .zip(&old_mean)
                    .map(|(x, m)| (x - m) / self.sigma)
                    .collect()
            })
            .collect();
        let mut step_w = vec![0.0; d];
        for (w, y) in self.weights.iter().zip(&steps) {
            for (acc, yi) in step_w.iter_mut().zip(y) {
                *acc += w * yi;
            }
        }
        for (i, m) in self.mean.iter_mut().enumerate() {
            let recombined: f64 = self
                .weights
                .iter()
                .zip(&order[..self.mu])
                .map(|(w, &k)| w * population[k][i])
                .sum();
            *m = recombined;
        }

        // C^{-1/2} step_w = B D^{-1} B^T step_w
        let bt_y: Vec<f64> = (0..d)
            .map(|j| {
                (0..d)
                    .map(|i| self.basis[i * d + j] * step_w[i])
                    .sum::<f64>()
                    / self.axis_lengths[j]
            })
            .collect();
        let whitened: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| self.basis[i * d + j] * bt_y[j]).sum())
            .collect();

        let cs = self.c_sigma;
        let ps_scale = (cs * (2.0 - cs) * self.mu_eff).sqrt();
        for (p, w) in self.path_sigma.iter_mut().zip(&whitened) {
            *p = (1.0 - cs) * *p + ps_scale * w;
        }
        let ps_norm = norm(&self.path_sigma);
        let gen = self.generation as f64 + 1.0;
        let h_sigma = ps_norm / (1.0 - (1.0 - cs).powf(2.0 * gen)).sqrt() / self.chi_n
            < 1.4 + 2.0 / (d as f64 + 1.0);
        let h = if h_sigma { 1.0 } else { 0.0 };

        let cc = self.c_c;
        let pc_scale = h * (cc * (2.0 - cc) * self.mu_eff).sqrt();
        for (p, y) in self.path_cov.iter_mut().zip(&step_w) {
            *p = (1.0 - cc) * *p + pc_scale * y;
        }

        let decay = 1.0 - self.c_1 - self.c_mu + (1.0 - h) * self.c_1 * cc * (2.0 - cc);
        for i in 0..d {
            for j in i..d {
                let rank_mu: f64 = self
                    .weights
                    .iter()
                    .zip(&steps)
                    .map(|(w, y)| w * y[i] * y[j])
                    .sum();
                let c = decay * self.cov[i * d + j]
                    + self.c_1 * self.path_cov[i] * self.path_cov[j]
                    + self.c_mu * rank_mu;
                self.cov[i * d + j] = c;
                self.cov[j * d + i] = c;
            }
        }

        self.sigma *= ((ps_norm / self.chi_n - 1.0) * cs / self.d_sigma).exp();
        self.refresh_eigensystem();
        self.generation += 1;

        let best = order[0];
        Generation {
            best_x: population[best].clone(),
            best_f: fitness[best],
            invalid,
        }
    }

    fn refresh_eigensystem(&mut self) {
        let d = self.dim;
        let mut asymmetric = false;
        for i in 0..d {
            for j in i + 1..d {
                let (a, b) = (self.cov[i * d + j], self.cov[j * d + i]);
                if a != b {
                    asymmetric = true;
                    let s = 0.5 * (a + b);
                    self.cov[i * d + j] = s;
                    self.cov[j * d + i] = s;
                }
            }
        }
        let c = ComplexMatrix::from_fn(d, |i, j| C64::new(self.cov[i * d + j], 0.0));
        let eig = hermitian_eig(&c).expect("covariance is finite and symmetric");
        let floored = eig.eigenvalues.iter().any(|&w| w < EIGEN_FLOOR);
        let values: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&w| w.max(EIGEN_FLOOR))
            .collect();
        let v = &eig.eigenvectors;
        self.basis = (0..d * d).map(|k| v[(k / d, k % d)].re).collect();
        self.axis_lengths = values.iter().map(|w| w.sqrt()).collect();
        if floored {
            for i in 0..d {
                for j in i..d {
                    let c = (0..d)
                        .map(|m| self.basis[i * d + m] * values[m] * self.basis[j * d + m])
                        .sum();
                    self.cov[i * d + j] = c;
                    self.cov[j * d + i] = c;
                }
            }
        }
        if asymmetric || floored {
            self.repairs += 1;
        }
    }

    /// Smallest and largest covariance eigenvalue.
    pub fn cov_spectrum(&self) -> (f64, f64) {
        let sq = self.axis_lengths.iter().map(|a| a * a);
        sq.fold((f64::INFINITY, 0.0), |(lo, hi), w| (lo.min(w), hi.max(w)))
    }

    pub fn cov_is_symmetric(&self) -> bool {
        let d = self.dim;
        (0..d).all(|i| (0..d).all(|j| self.cov[i * d + j] == self.cov[j * d + i]))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// One row of a run's trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub generation: usize,
    pub best_so_far: f64,
    pub generation_best: f64,
    pub centroid_fitness: f64,
    pub sigma: f64,
    pub invalid: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrajectory(pub Vec<TrajectoryPoint>);

impl RunTrajectory {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn best_is_monotone(&self) -> bool {
        self.0
            .windows(2)
            .all(|w| w[1].best_so_far <= w[0].best_so_far)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmaConfig {
    pub generations: usize,
    pub sigma0: f64,
    pub rng_seed: u64,
    /// Index of an experiment cell sharing `rng_seed`; each cell samples
    /// from its own stream.
    pub cell: u64,
    /// Evaluate each population with rayon. Sampling order and results are
    /// unaffected.
    pub parallel: bool,
}

impl CmaConfig {
    pub fn new(generations: usize, sigma0: f64, rng_seed: u64) -> Self {
        Self {
            generations,
            sigma0,
            rng_seed,
            cell: 0,
            parallel: false,
        }
    }

    pub fn stream(&self) -> u64 {
        streams::CMA + streams::CELLS * self.cell
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CmaOutcome {
    /// Best point ever evaluated (sampled candidates and centroids).
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub initial_f: f64,
    pub final_mean: Vec<f64>,
    pub final_mean_f: f64,
    pub trajectory: RunTrajectory,
    pub evaluations: usize,
    pub repairs: usize,
    /// Lowest and highest covariance eigenvalue seen over the run.
    pub cov_extremes: (f64, f64),
}

/// Runs a fixed budget of generations from `seed_vector`.
///
/// The centroid is scored before the first generation and after every
/// generation; those scores feed the trajectory and the all-time best.
pub fn cma_run<F>(
    seed_vector: &[f64],
    objective: F,
    config: &CmaConfig,
) -> Result<CmaOutcome, CmaError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if config.generations == 0 {
        return Err(CmaError::NoGenerations);
    }
    let mut state = cma_init_stream(seed_vector, config.sigma0, config.rng_seed, config.stream())?;
    let initial_f = objective(seed_vector);
    let mut evaluations = 1;
    let mut best_x = seed_vector.to_vec();
    let mut best_f = if initial_f.is_finite() {
        initial_f
    } else {
        f64::INFINITY
    };
    let mut trajectory = Vec::with_capacity(config.generations);
    let mut cov_extremes = state.cov_spectrum();
    let mut mean_f = initial_f;

    for _ in 0..config.generations {
        let gen = state.step(&objective, config.parallel);
        if gen.best_f < best_f {
            best_f = gen.best_f;
            best_x = gen.best_x.clone();
        }
        mean_f = objective(&state.mean);
        evaluations += 1;
        if mean_f < best_f {
            best_f = mean_f;
            best_x = state.mean.clone();
        }
        let (lo, hi) = state.cov_spectrum();
        cov_extremes = (cov_extremes.0.min(lo), cov_extremes.1.max(hi));
        trajectory.push(TrajectoryPoint {
            generation: state.generation,
            best_so_far: best_f,
            generation_best: gen.best_f,
            centroid_fitness: mean_f,
            sigma: state.sigma,
            invalid: gen.invalid,
        });
    }

    Ok(CmaOutcome {
        best_x,
        best_f,
        initial_f,
        final_mean: state.mean.clone(),
        final_mean_f: mean_f,
        trajectory: RunTrajectory(trajectory),
        evaluations: evaluations + state.evaluations,
        repairs: state.repairs,
        cov_extremes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(target: &[f64]) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        move |x| x.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum()
    }

    #[test]
    fn default_population_sizes() {
        assert_eq!(cma_init(&[0.0; 5], 1.0, 0).unwrap().lambda, 8);
        assert_eq!(cma_init(&[0.0; 10], 1.0, 0).unwrap().lambda, 10);
        let s = cma_init(&[0.0; 5], 1.0, 0).unwrap();
        assert_eq!(s.mu, 4);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.weights.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn init_errors() {
        assert_eq!(cma_init(&[], 1.0, 0).unwrap_err(), CmaError::EmptySeed);
        assert_eq!(
            cma_init(&[0.0], 0.0, 0).unwrap_err(),
            CmaError::BadSigma(0.0)
        );
        assert_eq!(
            cma_init(&[f64::NAN], 1.0, 0).unwrap_err(),
            CmaError::NonFiniteSeed
        );
        let cfg = CmaConfig::new(0, 1.0, 0);
        assert_eq!(
            cma_run(&[0.0], |_| 0.0, &cfg).unwrap_err(),
            CmaError::NoGenerations
        );
    }

    #[test]
    fn constant_objective_inflates_sigma_without_crashing() {
        let cfg = CmaConfig::new(50, 0.1, 3);
        let out = cma_run(&[0.0; 5], |_| 1.0, &cfg).unwrap();
        assert_eq!(out.trajectory.len(), 50);
        assert!(out.trajectory.0.last().unwrap().sigma > 0.1);
    }

    #[test]
    fn sphere_d5() {
        // pycma and DEAP reach 1e-10 from this start in 750-950 samples
        let target = [1.0, -2.0, 0.5, 3.0, 0.0];
        let f = sphere(&target);
        let mut state = cma_init(&[0.0; 5], 0.5, 7).unwrap();
        let mut best = f64::INFINITY;
        while state.evaluations < 1000 && best >= 1e-10 {
            best = best.min(state.step(&f, false).best_f);
            let (lo, _) = state.cov_spectrum();
            assert!(lo > 0.0 && state.cov_is_symmetric());
        }
        assert!(best < 1e-10, "{best} after {}", state.evaluations);
    }

    #[test]
    fn rosenbrock_d5() {
        let rosen = |x: &[f64]| {
            x.windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum::<f64>()
        };
        let cfg = CmaConfig::new(6000 / 9, 0.5, 11);
        let out = cma_run(&[0.0; 5], rosen, &cfg).unwrap();
        assert!(out.evaluations <= 6000);
        assert!(out.best_f < 1e-6, "{}", out.best_f);
    }

    #[test]
    fn determinism_and_single_generation() {
        let target = [0.3, -0.1, 0.7];
        let cfg = CmaConfig::new(1, 0.2, 5);
        assert_eq!(
            cma_run(&[0.0; 3], sphere(&target), &cfg)
                .unwrap()
                .trajectory
                .len(),
            1
        );
        let cfg = CmaConfig {
            generations: 40,
            ..cfg
        };
        let a = cma_run(&[0.0; 3], sphere(&target), &cfg).unwrap();
        let b = cma_run(
            &[0.0; 3],
            sphere(&target),
            &CmaConfig {
                parallel: true,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.best_x, b.best_x);
        let c = cma_run(
            &[0.0; 3],
            sphere(&target),
            &CmaConfig { rng_seed: 6, ..cfg },
        )
        .unwrap();
        let d = cma_run(&[0.0; 3], sphere(&target), &CmaConfig { cell: 1, ..cfg }).unwrap();
        assert_ne!(a.trajectory, d.trajectory);
        assert_ne!(a.trajectory, c.trajectory);
    }

    #[test]
    fn vanishing_sigma_stays_on_seed() {
        let seed = [0.41, 0.41, -0.65, 0.41, 0.41];
        let cfg = CmaConfig::new(5, 1e-300, 1);
        let f = |x: &[f64]| x.iter().map(|v| v.sin()).sum::<f64>();
        let out = cma_run(&seed, f, &cfg).unwrap();
        assert_eq!(out.best_x, seed.to_vec());
        assert_eq!(out.best_f, f(&seed));
        assert!(out
            .trajectory
            .0
            .iter()
            .all(|p| p.generation_best == f(&seed)));
    }

    #[test]
    fn non_finite_candidates_rank_last() {
        let cfg = CmaConfig::new(30, 0.5, 2);
        let f = |x: &[f64]| {
            if x[0] > 0.0 {
                f64::NAN
            } else {
                x.iter().map(|v| v * v).sum()
            }
        };
        let out = cma_run(&[-1.0, 1.0], f, &cfg).unwrap();
        assert!(out.best_f.is_finite());
        assert!(out.trajectory.0.iter().map(|p| p.invalid).sum::<usize>() > 0);
        assert!(out.trajectory.best_is_monotone());
    }
}
