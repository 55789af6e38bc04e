use num_complex::Complex;
use proptest::prelude::*;

use trotter_core::linalg::{
    expm_scaled_hermitian, hermitian_eig, kron, matmul, matrix_power, spectral_norm, ComplexMatrix,
};
use trotter_core::Matrix;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn square(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_dim).prop_flat_map(|d| {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), d * d)
            .prop_map(move |e| ComplexMatrix::from_fn(d, |i, j| c(e[i * d + j].0, e[i * d + j].1)))
    })
}

fn hermitian(max_dim: usize) -> impl Strategy<Value = Matrix> {
    square(max_dim).prop_map(|a| {
        let h = a.add(&a.adjoint()).unwrap();
        h.scale(c(0.5, 0.0))
    })
}

fn same_dim_pair(max_dim: usize) -> impl Strategy<Value = (Matrix, Matrix)> {
    (1..=max_dim).prop_flat_map(|d| {
        let entries = prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), d * d);
        (entries.clone(), entries).prop_map(move |(a, b)| {
            (
                ComplexMatrix::from_fn(d, |i, j| c(a[i * d + j].0, a[i * d + j].1)),
                ComplexMatrix::from_fn(d, |i, j| c(b[i * d + j].0, b[i * d + j].1)),
            )
        })
    })
}

/// Largest singular value by power iteration on `A†A`, with a Rayleigh
/// quotient read-out.
fn power_norm(a: &Matrix) -> f64 {
    let d = a.dim();
    let ata = matmul(&a.adjoint(), a).unwrap();
    let mut x: Vec<Complex<f64>> = (0..d)
        .map(|i| c(1.0 + i as f64 * 0.37, 0.1 * i as f64))
        .collect();
    let mut rq = 0.0;
    for _ in 0..3000 {
        let y: Vec<Complex<f64>> = (0..d)
            .map(|i| (0..d).map(|j| ata[(i, j)] * x[j]).sum())
            .collect();
        let xx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        rq = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
            / xx;
        let ny = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if ny == 0.0 {
            return 0.0;
        }
        x = y.iter().map(|v| v / ny).collect();
    }
    rq.max(0.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs_and_is_orthonormal(h in hermitian(8)) {
        let eig = hermitian_eig(&h).unwrap();
        let scale = spectral_norm(&h).max(1.0);
        prop_assert!(eig.reconstruct().max_abs_diff(&h).unwrap() <= 1e-10 * scale);
        let v = &eig.eigenvectors;
        let vv = matmul(&v.adjoint(), v).unwrap();
        prop_assert!(vv.max_abs_diff(&ComplexMatrix::identity(h.dim())).unwrap() <= 1e-10);
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = eig.eigenvalues.iter().sum();
        prop_assert!((tr - h.trace().re).abs() <= 1e-10 * scale * h.dim() as f64);
    }

    #[test]
    fn unitary_exponential_is_unitary_and_additive(h in hermitian(6), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let ua = expm_scaled_hermitian(&h, c(0.0, a)).unwrap();
        let ub = expm_scaled_hermitian(&h, c(0.0, b)).unwrap();
        let uab = expm_scaled_hermitian(&h, c(0.0, a + b)).unwrap();
        let id = ComplexMatrix::identity(h.dim());
        prop_assert!(matmul(&ua.adjoint(), &ua).unwrap().max_abs_diff(&id).unwrap() < 1e-10);
        prop_assert!(matmul(&ua, &ub).unwrap().max_abs_diff(&uab).unwrap() < 1e-9);
        prop_assert!((spectral_norm(&ua) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_norm_matches_power_iteration(a in square(6)) {
        let s = spectral_norm(&a);
        let p = power_norm(&a);
        prop_assert!((s - p).abs() <= 1e-6 * s.max(1e-12), "{} vs {}", s, p);
        prop_assert!(s <= a.frobenius_norm() * (1.0 + 1e-12));
        prop_assert!(s >= a.max_abs() * (1.0 - 1e-12));
    }

    #[test]
    fn spectral_norm_is_subadditive_and_submultiplicative((a, b) in same_dim_pair(5)) {
        let (na, nb) = (spectral_norm(&a), spectral_norm(&b));
        prop_assert!(spectral_norm(&a.add(&b).unwrap()) <= (na + nb) * (1.0 + 1e-10));
        prop_assert!(spectral_norm(&matmul(&a, &b).unwrap()) <= na * nb * (1.0 + 1e-10));
    }

    #[test]
    fn matrix_power_matches_repeated_products(a in square(4), r in 0u64..14) {
        let a = a.scale(c(0.4, 0.0));
        let mut want = ComplexMatrix::identity(a.dim());
        for _ in 0..r {
            want = matmul(&want, &a).unwrap();
        }
        let got = matrix_power(&a, r);
        prop_assert!(got.max_abs_diff(&want).unwrap() <= 1e-10 * want.max_abs().max(1.0));
    }

    #[test]
    fn kron_is_associative_and_mixes_products(
        (a, c1) in same_dim_pair(3),
        (b, d1) in same_dim_pair(3),
        e in square(2),
    ) {
        let left = kron(&kron(&a, &b), &e);
        let right = kron(&a, &kron(&b, &e));
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
        let lhs = matmul(&kron(&a, &b), &kron(&c1, &d1)).unwrap();
        let rhs = kron(&matmul(&a, &c1).unwrap(), &matmul(&b, &d1).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-10);
        prop_assert_eq!(left.dim(), a.dim() * b.dim() * e.dim());
    }
}
