//! Dense complex linear algebra for small (at most a few hundred rows)
//! operators: Kronecker products, Hermitian eigendecomposition by cyclic
//! Jacobi rotations, exponentials of scalar multiples of Hermitian matrices,
//! spectral norms and integer matrix powers.
//!
//! Matrices are square and stored row-major. All functions are pure.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix must have at least one row")]
    Empty,
    #[error("rows have inconsistent lengths (expected {expected}, found {found})")]
    Ragged { expected: usize, found: usize },
    #[error("matrix is not Hermitian (max |a - a^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// Square dense matrix of complex scalars.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::Ragged {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    /// Builds from real entries given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&x| Complex::new(T::lit(x), T::zero()))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn from_diag(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let diag: Vec<_> = diag
            .iter()
            .map(|&x| Complex::new(T::lit(x), T::zero()))
            .collect();
        Self::from_diag(&diag)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), LinalgError> {
        check_dims(self, other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self, LinalgError> {
        check_dims(self, other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim)
            .map(|i| self[(i, i)])
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T, LinalgError> {
        check_dims(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).norm())))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Converts every entry into another scalar type.
    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy())))
                .collect(),
        }
    }
}

fn check_dims<T>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<(), LinalgError> {
    if a.dim != b.dim {
        return Err(LinalgError::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(())
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for z in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(f, "({:?}, {:?})  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`: block `(i, j)` of the result is `a[i, j] * b`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (da, db) = (a.dim, b.dim);
    let mut out = ComplexMatrix::zeros(da * db);
    for ai in 0..da {
        for aj in 0..da {
            let s = a[(ai, aj)];
            if s.re.is_zero() && s.im.is_zero() {
                continue;
            }
            for bi in 0..db {
                let row = (ai * db + bi) * da * db + aj * db;
                for bj in 0..db {
                    out.data[row + bj] = s * b[(bi, bj)];
                }
            }
        }
    }
    out
}

pub fn matmul<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>, LinalgError> {
    check_dims(a, b)?;
    let n = a.dim;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for k in 0..n {
            let s = a.data[i * n + k];
            if s.re.is_zero() && s.im.is_zero() {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, &x) in out_row.iter_mut().zip(b_row) {
                *o += s * x;
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix: `h = V diag(w) V^H`.
#[derive(Clone, Debug)]
pub struct HermitianEig<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Unitary; column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Real> HermitianEig<T> {
    /// `V diag(f(w)) V^H`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> Complex<T>) -> ComplexMatrix<T> {
        let v = &self.eigenvectors;
        let n = v.dim();
        let fw: Vec<Complex<T>> = self.eigenvalues.iter().map(|&w| f(w)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (m, &fm) in fw.iter().enumerate() {
                    acc += v[(i, m)] * fm * v[(j, m)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.map_spectrum(|w| Complex::new(w, T::zero()))
    }
}

const MAX_SWEEPS: usize = 64;

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first rotates the phase of the pivot so the 2x2 subproblem
/// is real symmetric, then applies the classic Jacobi rotation.
pub fn hermitian_eig<T: Real>(h: &ComplexMatrix<T>) -> Result<HermitianEig<T>, LinalgError> {
    if !h.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = h.dim;
    let scale = h.frobenius_norm();
    let deviation = h.hermitian_deviation();
    if deviation > T::tol(1e-12) * scale.max(T::one()) {
        return Err(LinalgError::NotHermitian {
            deviation: deviation.to_f64_lossy(),
        });
    }

    let zero = Complex::new(T::zero(), T::zero());
    let half = T::lit(0.5);
    // Exact Hermitian copy.
    let mut a = ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex::new(h[(i, i)].re, T::zero())
        } else {
            (h[(i, j)] + h[(j, i)].conj()) * half
        }
    });
    let mut v = ComplexMatrix::identity(n);

    let stop = T::epsilon() * scale;
    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<T>()
            .sqrt();
        if off <= stop || off.is_zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag.is_zero() {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (mag + mag);
                let t = if theta.is_infinite() {
                    T::zero()
                } else {
                    let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    if theta < T::zero() {
                        -t
                    } else {
                        t
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // J = [[c, s], [-s conj(phase), c conj(phase)]] on (p, q).
                let jqp = phase.conj() * (-s);
                let jqq = phase.conj() * c;
                let jpp = Complex::new(c, T::zero());
                let jpq = Complex::new(s, T::zero());

                // A <- A J, V <- V J
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
                // A <- J^H A
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * jpp.conj() + aqk * jqp.conj();
                    a[(q, k)] = apk * jpq.conj() + aqk * jqq.conj();
                }
                a[(p, q)] = zero;
                a[(q, p)] = zero;
                a[(p, p)].im = T::zero();
                a[(q, q)].im = T::zero();
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .expect("finite eigenvalues")
    });
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |row, col| v[(row, order[col])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(c * h)` for Hermitian `h`, via `V diag(exp(c w)) V^H`.
pub fn expm_scaled_hermitian<T: Real>(
    h: &ComplexMatrix<T>,
    c: Complex<T>,
) -> Result<ComplexMatrix<T>, LinalgError> {
    let eig = hermitian_eig(h)?;
    Ok(eig.map_spectrum(|w| (c * w).exp()))
}

/// Largest singular value, `sqrt(max eig(a^H a))`.
pub fn spectral_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    if a.max_abs().is_zero() {
        return T::zero();
    }
    let gram = matmul(&a.adjoint(), a).expect("square operands");
    let eig = hermitian_eig(&gram).expect("gram matrix is Hermitian and finite");
    eig.eigenvalues
        .last()
        .copied()
        .unwrap_or_else(T::zero)
        .max(T::zero())
        .sqrt()
}

/// `a^r` by binary exponentiation; `r = 0` yields the identity.
pub fn matrix_power<T: Real>(a: &ComplexMatrix<T>, r: u64) -> ComplexMatrix<T> {
    let mut result: Option<ComplexMatrix<T>> = None;
    let mut base = a.clone();
    let mut e = r;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(acc) => matmul(&acc, &base).expect("same dimension"),
            });
        }
        e >>= 1;
        if e > 0 {
            base = matmul(&base, &base).expect("same dimension");
        }
    }
    result.unwrap_or_else(|| ComplexMatrix::identity(a.dim))
}
