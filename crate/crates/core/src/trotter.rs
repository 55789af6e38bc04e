//! Suzuki coefficients, phase expansion and construction of product-formula
//! propagators for the chain.
//!
//! Phases are real fractions of the total evolution: a phase `x` stands for
//! the exponent `-i t x`. The `-i t` factor is applied only when a local
//! exponential is formed.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    expm_scaled_hermitian, hermitian_eig, kron, matmul, matrix_power, ComplexMatrix, HermitianEig,
    LinalgError,
};
use crate::model::{
    merged_count, ordered_terms, pauli, term_matrix, ChainInstance, LocalTerm, ModelError,
    TermKind, TermOrdering,
};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrotterError {
    #[error("Suzuki order parameter k must be at least {min}, got {k}")]
    BadOrder { k: usize, min: usize },
    #[error("p-vector for k = {k} needs {expected} components, got {found}")]
    PVectorLength {
        k: usize,
        expected: usize,
        found: usize,
    },
    #[error("time-slice count r must be at least 1")]
    ZeroSlices,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `p_k = 1 / (4 - 4^(1/(2k-1)))`.
pub fn suzuki_pk(k: usize) -> Result<f64, TrotterError> {
    if k < 2 {
        return Err(TrotterError::BadOrder { k, min: 2 });
    }
    let e = 1.0 / (2.0 * k as f64 - 1.0);
    Ok(1.0 / (4.0 - 4f64.powf(e)))
}

/// Suzuki recurrence coefficients, one 5-block per level `2..=k`.
///
/// `k = 1` is allowed and has no components: it denotes the plain symmetric
/// second-order formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PVector {
    k: usize,
    components: Vec<f64>,
}

impl PVector {
    pub fn new(k: usize, components: Vec<f64>) -> Result<Self, TrotterError> {
        if k < 1 {
            return Err(TrotterError::BadOrder { k, min: 1 });
        }
        let expected = Self::len_for(k);
        if components.len() != expected {
            return Err(TrotterError::PVectorLength {
                k,
                expected,
                found: components.len(),
            });
        }
        Ok(Self { k, components })
    }

    pub fn len_for(k: usize) -> usize {
        5 * (k - 1)
    }

    pub fn zeros(k: usize) -> Result<Self, TrotterError> {
        Self::new(k, vec![0.0; Self::len_for(k.max(1))])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.components
    }

    /// The 5 coefficients of recurrence level `level` (2..=k).
    pub fn block(&self, level: usize) -> &[f64] {
        let start = 5 * (level - 2);
        &self.components[start..start + 5]
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|x| x.is_finite())
    }
}

pub fn suzuki_seed(k: usize) -> Result<PVector, TrotterError> {
    if k < 1 {
        return Err(TrotterError::BadOrder { k, min: 1 });
    }
    let mut components = Vec::with_capacity(PVector::len_for(k));
    for level in 2..=k {
        let p = suzuki_pk(level)?;
        components.extend_from_slice(&[p, p, 1.0 - 4.0 * p, p, p]);
    }
    PVector::new(k, components)
}

/// Phases of the `5^(k-1)` S2 blocks making up one `S_2k` slice.
///
/// Level 2's block is the base pattern; every higher level multiplies the
/// whole lower-level expansion by each of its own five entries in turn.
pub fn slice_phases(p: &PVector) -> Vec<f64> {
    if p.k() == 1 {
        return vec![1.0];
    }
    let mut phases = p.block(2).to_vec();
    for level in 3..=p.k() {
        phases = p
            .block(level)
            .iter()
            .flat_map(|&outer| phases.iter().map(move |&inner| outer * inner))
            .collect();
    }
    phases
}

/// The fully expanded list of `r * 5^(k-1)` S2 phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub fn expand_phases(p: &PVector, r: usize) -> Result<PhaseVector, TrotterError> {
    if r == 0 {
        return Err(TrotterError::ZeroSlices);
    }
    let slice: Vec<f64> = slice_phases(p).into_iter().map(|x| x / r as f64).collect();
    Ok(PhaseVector(
        slice
            .iter()
            .copied()
            .cycle()
            .take(slice.len() * r)
            .collect(),
    ))
}

/// Circuit shape: order parameter, slice count and term ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSpec {
    pub k: usize,
    pub r: usize,
    pub ordering: TermOrdering,
}

impl DecompositionSpec {
    pub fn new(k: usize, r: usize, ordering: TermOrdering) -> Result<Self, TrotterError> {
        if k < 1 {
            return Err(TrotterError::BadOrder { k, min: 1 });
        }
        if r == 0 {
            return Err(TrotterError::ZeroSlices);
        }
        Ok(Self { k, r, ordering })
    }

    pub fn p_len(&self) -> usize {
        PVector::len_for(self.k)
    }
}

/// Flat gate list of `S_2k(λ/r)^r`; each gate is `exp(-i t phase H_term)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub gates: Vec<(LocalTerm, f64)>,
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub ordering: TermOrdering,
}

impl Circuit {
    pub fn build(
        instance: &ChainInstance,
        spec: &DecompositionSpec,
        p: &PVector,
    ) -> Result<Self, TrotterError> {
        let terms = ordered_terms(instance, &spec.ordering)?;
        let phases = expand_phases(p, spec.r)?;
        let mut gates = Vec::with_capacity(2 * terms.len() * phases.len());
        for &x in &phases.0 {
            let half = 0.5 * x;
            gates.extend(terms.iter().map(|&t| (t, half)));
            gates.extend(terms.iter().rev().map(|&t| (t, half)));
        }
        Ok(Self {
            gates,
            n: instance.n,
            k: spec.k,
            r: spec.r,
            ordering: spec.ordering.clone(),
        })
    }

    pub fn unmerged_len(&self) -> usize {
        self.gates.len()
    }

    pub fn merged_len(&self) -> usize {
        merged_count(self.gates.iter().map(|(t, _)| t), self.n)
    }

    /// Dense product of all gates, left to right.
    pub fn to_matrix<T: Real>(&self, t: f64) -> Result<ComplexMatrix<T>, TrotterError> {
        let mut acc = ComplexMatrix::identity(1 << self.n);
        for (term, phase) in &self.gates {
            let c = Complex::new(T::zero(), T::lit(-t * phase));
            let g = expm_scaled_hermitian(&term_matrix::<T>(term, self.n), c)?;
            acc = matmul(&acc, &g)?;
        }
        Ok(acc)
    }
}

/// How single-term exponentials are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpPath {
    /// Exponentiate the 2x2/4x4 local block and act on its qubits only;
    /// ring-closing couplings fall back to the full matrix.
    #[default]
    Fast,
    /// Exponentiate the full `2^n` term matrix.
    Full,
}

/// A single-term exponential, either as a local block or as a full matrix.
#[derive(Debug, Clone)]
pub enum Gate<T> {
    /// `I ⊗ block ⊗ I` with the block on qubits `first..first+width` (1-based).
    Local {
        block: ComplexMatrix<T>,
        first: usize,
        width: usize,
    },
    Dense(ComplexMatrix<T>),
}

impl<T: Real> Gate<T> {
    pub fn to_dense(&self, n: usize) -> ComplexMatrix<T> {
        match self {
            Gate::Dense(m) => m.clone(),
            Gate::Local {
                block,
                first,
                width,
            } => {
                let left = ComplexMatrix::identity(1 << (first - 1));
                let right = ComplexMatrix::identity(1 << (n + 1 - first - width));
                kron(&kron(&left, block), &right)
            }
        }
    }

    /// `acc <- acc * gate` on an `n`-qubit matrix.
    pub fn apply_right(&self, acc: &mut ComplexMatrix<T>, n: usize) {
        match self {
            Gate::Dense(m) => *acc = matmul(acc, m).expect("same dimension"),
            Gate::Local {
                block,
                first,
                width,
            } => {
                let dim = acc.dim();
                let bsize = 1usize << width;
                let stride = 1usize << (n + 1 - first - width);
                let span = bsize * stride;
                let b = block.as_slice();
                let data = acc.as_mut_slice();
                let zero = Complex::new(T::zero(), T::zero());
                let mut gathered = [zero; 4];
                for row in data.chunks_exact_mut(dim) {
                    for hi in (0..dim).step_by(span) {
                        for lo in 0..stride {
                            let base = hi + lo;
                            for (l, g) in gathered.iter_mut().enumerate().take(bsize) {
                                *g = row[base + l * stride];
                            }
                            for col in 0..bsize {
                                let mut s = zero;
                                for (l, g) in gathered.iter().enumerate().take(bsize) {
                                    s += *g * b[l * bsize + col];
                                }
                                row[base + col * stride] = s;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Eigendecomposition of one term's generator, reused across phases.
#[derive(Debug, Clone)]
enum TermExp<T> {
    Local {
        eig: HermitianEig<T>,
        first: usize,
        width: usize,
    },
    Full(HermitianEig<T>),
}

impl<T: Real> TermExp<T> {
    fn new(term: &LocalTerm, n: usize, path: ExpPath) -> Result<Self, TrotterError> {
        if path == ExpPath::Full || term.wraps(n) {
            return Ok(TermExp::Full(hermitian_eig(&term_matrix::<T>(term, n))?));
        }
        let p = pauli::<T>(term.kind.pauli());
        let coef = Complex::new(T::lit(term.coefficient), T::zero());
        let (block, width) = if term.kind == TermKind::ZField {
            (p.scale(coef), 1)
        } else {
            (kron(&p, &p).scale(coef), 2)
        };
        Ok(TermExp::Local {
            eig: hermitian_eig(&block)?,
            first: term.site,
            width,
        })
    }

    fn gate(&self, c: Complex<T>) -> Gate<T> {
        match self {
            TermExp::Local { eig, first, width } => Gate::Local {
                block: eig.map_spectrum(|w| (c * w).exp()),
                first: *first,
                width: *width,
            },
            TermExp::Full(eig) => Gate::Dense(eig.map_spectrum(|w| (c * w).exp())),
        }
    }
}

/// `exp(c * H_term)` by exponentiating only the local block and padding it
/// with identities (`e^(A ⊗ I) = e^A ⊗ I`). The ring-closing coupling is not a
/// contiguous block and is exponentiated at full dimension.
pub fn fast_local_expm<T: Real>(
    term: &LocalTerm,
    n: usize,
    c: Complex<T>,
) -> Result<ComplexMatrix<T>, TrotterError> {
    Ok(TermExp::new(term, n, ExpPath::Fast)?.gate(c).to_dense(n))
}

/// Most S2 blocks kept per formula before the cache is flushed.
const S2_CACHE_CAPACITY: usize = 256;

/// Product-formula propagators for one chain, term ordering and exponential
/// path. Term eigendecompositions are computed once; S2 blocks are cached by
/// the exact bits of their phase.
#[derive(Debug)]
pub struct ProductFormula<T> {
    n: usize,
    t: f64,
    exps: Vec<TermExp<T>>,
    cache: Mutex<HashMap<u64, Arc<ComplexMatrix<T>>>>,
}

impl<T: Real> ProductFormula<T> {
    pub fn new(
        instance: &ChainInstance,
        ordering: &TermOrdering,
        path: ExpPath,
    ) -> Result<Self, TrotterError> {
        let terms = ordered_terms(instance, ordering)?;
        let exps = terms
            .iter()
            .map(|term| TermExp::new(term, instance.n, path))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            n: instance.n,
            t: instance.t,
            exps,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn exponent(&self, phase: f64) -> Complex<T> {
        Complex::new(T::zero(), T::lit(-self.t * phase))
    }

    /// `S1(-i t phase)`: one forward pass.
    pub fn s1(&self, phase: f64) -> ComplexMatrix<T> {
        let c = self.exponent(phase);
        let mut acc = ComplexMatrix::identity(1 << self.n);
        for e in &self.exps {
            e.gate(c).apply_right(&mut acc, self.n);
        }
        acc
    }

    /// `S2(-i t phase)`: forward pass then reverse pass, each at half phase.
    pub fn s2_uncached(&self, phase: f64) -> ComplexMatrix<T> {
        let c = self.exponent(0.5 * phase);
        let gates: Vec<Gate<T>> = self.exps.iter().map(|e| e.gate(c)).collect();
        let mut acc = ComplexMatrix::identity(1 << self.n);
        for g in gates.iter().chain(gates.iter().rev()) {
            g.apply_right(&mut acc, self.n);
        }
        acc
    }

    pub fn s2(&self, phase: f64) -> Arc<ComplexMatrix<T>> {
        let key = phase.to_bits();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Arc::clone(hit);
        }
        let block = Arc::new(self.s2_uncached(phase));
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= S2_CACHE_CAPACITY {
            cache.clear();
        }
        cache.entry(key).or_insert_with(|| Arc::clone(&block));
        block
    }

    pub fn clear_cache(&self) {
        self.cache.lock().expect("cache lock").clear();
    }

    /// `[∏_j S2(-i t x_j / r)]^r` for the slice phases of `p`.
    pub fn approximation(&self, p: &PVector, r: usize) -> Result<ComplexMatrix<T>, TrotterError> {
        if r == 0 {
            return Err(TrotterError::ZeroSlices);
        }
        let mut slice = ComplexMatrix::identity(1 << self.n);
        let mut first = true;
        for x in slice_phases(p) {
            let block = self.s2(x / r as f64);
            if first {
                slice = (*block).clone();
                first = false;
            } else {
                slice = matmul(&slice, &block)?;
            }
        }
        Ok(matrix_power(&slice, r as u64))
    }
}

pub fn build_s1<T: Real>(
    instance: &ChainInstance,
    ordering: &TermOrdering,
    phase: f64,
    path: ExpPath,
) -> Result<ComplexMatrix<T>, TrotterError> {
    Ok(ProductFormula::new(instance, ordering, path)?.s1(phase))
}

pub fn build_s2<T: Real>(
    instance: &ChainInstance,
    ordering: &TermOrdering,
    phase: f64,
    path: ExpPath,
) -> Result<ComplexMatrix<T>, TrotterError> {
    Ok(ProductFormula::new(instance, ordering, path)?.s2_uncached(phase))
}

/// `[∏_j S2(-i t x_j / r)]^r`; for the Suzuki seed this is `S_2k(λ/r)^r`.
pub fn build_approximation<T: Real>(
    instance: &ChainInstance,
    spec: &DecompositionSpec,
    p: &PVector,
    path: ExpPath,
) -> Result<ComplexMatrix<T>, TrotterError> {
    check_p(spec, p)?;
    ProductFormula::new(instance, &spec.ordering, path)?.approximation(p, spec.r)
}

pub(crate) fn check_p(spec: &DecompositionSpec, p: &PVector) -> Result<(), TrotterError> {
    if p.k() != spec.k {
        return Err(TrotterError::PVectorLength {
            k: spec.k,
            expected: spec.p_len(),
            found: p.len(),
        });
    }
    Ok(())
}
