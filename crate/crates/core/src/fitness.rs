//! Spectral-norm error of a product formula against the exact propagator.

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::{expm_scaled_hermitian, spectral_norm, LinalgError};
use crate::model::{hamiltonian, ChainInstance};
use crate::trotter::{check_p, ExpPath, PVector, ProductFormula, TrotterError};
use crate::Matrix;

pub use crate::trotter::DecompositionSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitnessError {
    #[error("p-vector has {found} components, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("p-vector component {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("baseline error must be positive, got {0}")]
    BadBaseline(f64),
    #[error(transparent)]
    Trotter(#[from] TrotterError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `exp(-i t H)`.
pub fn exact_propagator(instance: &ChainInstance) -> Result<Matrix, FitnessError> {
    let h = hamiltonian::<f64>(instance);
    Ok(expm_scaled_hermitian(&h, Complex::new(0.0, -instance.t))?)
}

/// Everything needed to score p-vectors for one (instance, decomposition).
///
/// The exact propagator is computed once here. `evaluate` takes `&self` and
/// may be called from many threads; cached S2 blocks are bit-identical to
/// freshly computed ones, so results do not depend on cache state.
#[derive(Debug)]
pub struct FitnessContext {
    instance: ChainInstance,
    spec: DecompositionSpec,
    exact: Matrix,
    formula: ProductFormula<f64>,
}

impl FitnessContext {
    pub fn new(instance: ChainInstance, spec: DecompositionSpec) -> Result<Self, FitnessError> {
        Self::with_path(instance, spec, ExpPath::Fast)
    }

    pub fn with_path(
        instance: ChainInstance,
        spec: DecompositionSpec,
        path: ExpPath,
    ) -> Result<Self, FitnessError> {
        let exact = exact_propagator(&instance)?;
        let formula = ProductFormula::new(&instance, &spec.ordering, path)?;
        Ok(Self {
            instance,
            spec,
            exact,
            formula,
        })
    }

    pub fn instance(&self) -> &ChainInstance {
        &self.instance
    }

    pub fn spec(&self) -> &DecompositionSpec {
        &self.spec
    }

    pub fn exact(&self) -> &Matrix {
        &self.exact
    }

    pub fn dim(&self) -> usize {
        self.spec.p_len()
    }

    pub fn clear_cache(&self) {
        self.formula.clear_cache();
    }

    /// Approximate propagator for raw components.
    pub fn approximation(&self, components: &[f64]) -> Result<Matrix, FitnessError> {
        let p = self.pvector(components)?;
        check_p(&self.spec, &p)?;
        Ok(self.formula.approximation(&p, self.spec.r)?)
    }

    fn pvector(&self, components: &[f64]) -> Result<PVector, FitnessError> {
        if components.len() != self.dim() {
            return Err(FitnessError::Length {
                expected: self.dim(),
                found: components.len(),
            });
        }
        if let Some((index, &value)) = components.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(FitnessError::NonFinite { index, value });
        }
        Ok(PVector::new(self.spec.k, components.to_vec())?)
    }

    /// `‖exp(-itH) - [∏_j S2(-i t x_j / r)]^r‖₂`.
    pub fn evaluate(&self, components: &[f64]) -> Result<f64, FitnessError> {
        let approx = self.approximation(components)?;
        Ok(spectral_norm(&self.exact.sub(&approx)?))
    }

    pub fn evaluate_p(&self, p: &PVector) -> Result<f64, FitnessError> {
        self.evaluate(p.as_slice())
    }
}

/// `100 (baseline - optimized) / baseline`.
pub fn error_reduction_pct(baseline: f64, optimized: f64) -> Result<f64, FitnessError> {
    if baseline.is_nan() || baseline <= 0.0 {
        return Err(FitnessError::BadBaseline(baseline));
    }
    Ok(100.0 * (baseline - optimized) / baseline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, matmul, ComplexMatrix};
    use crate::model::TermOrdering;
    use crate::trotter::suzuki_seed;

    fn spec(k: usize, r: usize) -> DecompositionSpec {
        DecompositionSpec::new(k, r, TermOrdering::Grouped).unwrap()
    }

    #[test]
    fn propagator_at_zero_time_is_identity() {
        let inst = ChainInstance::generate(3, Some(0.0), 1).unwrap();
        let u = exact_propagator(&inst).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(8)).unwrap() < 1e-15);
    }

    #[test]
    fn propagator_is_unitary_with_expected_phases() {
        let inst = ChainInstance::new(3, vec![0.0; 3], 1.7).unwrap();
        let u = exact_propagator(&inst).unwrap();
        let uu = matmul(&u.adjoint(), &u).unwrap();
        assert!(uu.max_abs_diff(&ComplexMatrix::identity(8)).unwrap() < 1e-9);

        let eig = hermitian_eig(&hamiltonian::<f64>(&inst)).unwrap();
        let tr: Complex<f64> = eig
            .eigenvalues
            .iter()
            .map(|&w| Complex::new(0.0, -1.7 * w).exp())
            .sum();
        assert!((u.trace() - tr).norm() < 1e-10);
    }

    #[test]
    fn seed_error_small_at_large_r() {
        let inst = ChainInstance::generate(3, Some(6.0), 2).unwrap();
        let seed = suzuki_seed(2).unwrap();
        let e64 = FitnessContext::new(inst.clone(), spec(2, 64))
            .unwrap()
            .evaluate_p(&seed)
            .unwrap();
        let e128 = FitnessContext::new(inst, spec(2, 128))
            .unwrap()
            .evaluate_p(&seed)
            .unwrap();
        assert!(e64 < 1e-2, "{e64}");
        assert!(e128 < e64);
    }

    #[test]
    fn zero_vector_error_is_distance_to_identity() {
        let inst = ChainInstance::generate(3, None, 4).unwrap();
        let ctx = FitnessContext::new(inst, spec(2, 3)).unwrap();
        let e = ctx.evaluate(&[0.0; 5]).unwrap();
        let want = spectral_norm(&ctx.exact().sub(&ComplexMatrix::identity(8)).unwrap());
        assert!((e - want).abs() < 1e-12);
        assert!(e > 1.0 && e <= 2.0 + 1e-12, "{e}");
    }

    #[test]
    fn rejects_bad_vectors() {
        let ctx =
            FitnessContext::new(ChainInstance::generate(3, None, 4).unwrap(), spec(2, 1)).unwrap();
        assert_eq!(
            ctx.evaluate(&[0.1; 4]),
            Err(FitnessError::Length {
                expected: 5,
                found: 4
            })
        );
        assert!(matches!(
            ctx.evaluate(&[0.1, f64::NAN, 0.1, 0.1, 0.1]),
            Err(FitnessError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn reduction_pct() {
        assert!((error_reduction_pct(1.0, 0.4).unwrap() - 60.0).abs() < 1e-12);
        assert_eq!(error_reduction_pct(0.3, 0.3).unwrap(), 0.0);
        assert!((error_reduction_pct(1e-3, 4.62e-4).unwrap() - 53.8).abs() < 1e-9);
        assert_eq!(
            error_reduction_pct(0.0, 0.1),
            Err(FitnessError::BadBaseline(0.0))
        );
        assert!(error_reduction_pct(-1.0, 0.1).is_err());
    }

    #[test]
    fn cache_state_does_not_change_value() {
        let inst = ChainInstance::generate(4, None, 9).unwrap();
        let ctx = FitnessContext::new(inst, spec(2, 7)).unwrap();
        let seed = suzuki_seed(2).unwrap();
        let cold = ctx.evaluate_p(&seed).unwrap();
        let warm = ctx.evaluate_p(&seed).unwrap();
        ctx.clear_cache();
        let again = ctx.evaluate_p(&seed).unwrap();
        assert_eq!(cold.to_bits(), warm.to_bits());
        assert_eq!(cold.to_bits(), again.to_bits());
    }

    #[test]
    fn ordering_changes_error() {
        let inst = ChainInstance::generate(4, None, 9).unwrap();
        let seed = suzuki_seed(2).unwrap();
        let g = FitnessContext::new(inst.clone(), spec(2, 5))
            .unwrap()
            .evaluate_p(&seed)
            .unwrap();
        let c = FitnessContext::new(
            inst,
            DecompositionSpec::new(2, 5, TermOrdering::Canonical).unwrap(),
        )
        .unwrap()
        .evaluate_p(&seed)
        .unwrap();
        assert!((g - c).abs() > 1e-6 * g.max(c), "{g} vs {c}");
    }
}
