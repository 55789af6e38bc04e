//! Pauli operators, the periodic disordered Heisenberg chain and its local
//! terms, term orderings, and gate counting after merging.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kron, ComplexMatrix};
use crate::rng::{stream_rng, streams};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("chain needs at least 3 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("disorder vector has length {found}, expected {expected}")]
    DisorderLength { expected: usize, found: usize },
    #[error("disorder strength v[{index}] = {value} outside [-1, 1]")]
    DisorderRange { index: usize, value: f64 },
    #[error("simulation time must be finite and non-negative, got {0}")]
    BadTime(f64),
    #[error("site {site} out of range for a {n}-qubit operator of width {width}")]
    SiteOutOfRange { site: usize, n: usize, width: usize },
    #[error("embedded operator must be 2x2 or 4x4, got {0}x{0}")]
    BadOperatorSize(usize),
    #[error("invalid permutation: {0}")]
    BadPermutation(String),
    #[error("cannot extend a chain without a generation seed")]
    NoSeed,
    #[error("cannot shrink a chain from {from} to {to} qubits")]
    Shrink { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Y,
    Z,
}

pub fn pauli<T: Real>(kind: PauliKind) -> ComplexMatrix<T> {
    let o = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let rows = match kind {
        PauliKind::X => vec![vec![o, one], vec![one, o]],
        PauliKind::Y => vec![vec![o, -i], vec![i, o]],
        PauliKind::Z => vec![vec![one, o], vec![o, -one]],
    };
    ComplexMatrix::from_rows(rows).expect("2x2")
}

/// The four term families of the chain Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermKind {
    XX,
    YY,
    ZZ,
    ZField,
}

impl TermKind {
    pub const ALL: [TermKind; 4] = [TermKind::XX, TermKind::YY, TermKind::ZZ, TermKind::ZField];

    pub fn pauli(self) -> PauliKind {
        match self {
            TermKind::XX => PauliKind::X,
            TermKind::YY => PauliKind::Y,
            TermKind::ZZ | TermKind::ZField => PauliKind::Z,
        }
    }

    pub fn is_coupling(self) -> bool {
        self != TermKind::ZField
    }
}

/// One summand `H_j` of the chain Hamiltonian.
///
/// Couplings act on `site` and `site % n + 1` (1-based) with coefficient 1;
/// the Z field acts on `site` alone with coefficient `v[site]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTerm {
    pub kind: TermKind,
    pub site: usize,
    pub coefficient: f64,
}

impl LocalTerm {
    /// Qubits (1-based) carrying a non-identity Pauli factor.
    pub fn support(&self, n: usize) -> Vec<usize> {
        if self.kind.is_coupling() {
            vec![self.site, self.site % n + 1]
        } else {
            vec![self.site]
        }
    }

    /// Couplings that close the ring (`X_n X_1` etc).
    pub fn wraps(&self, n: usize) -> bool {
        self.kind.is_coupling() && self.site == n
    }

    /// Identity of the generator, ignoring its coefficient.
    pub fn key(&self) -> (TermKind, usize) {
        (self.kind, self.site)
    }

    /// Pauli-string terms commute iff they anticommute on an even number of qubits.
    pub fn commutes_with(&self, other: &LocalTerm, n: usize) -> bool {
        let (p, q) = (self.kind.pauli(), other.kind.pauli());
        if p == q {
            return true;
        }
        let theirs = other.support(n);
        let overlap = self
            .support(n)
            .iter()
            .filter(|s| theirs.contains(s))
            .count();
        overlap % 2 == 0
    }
}

impl fmt::Display for LocalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TermKind::ZField => write!(f, "{}*Z{}", self.coefficient, self.site),
            k => write!(f, "{:?}{}", k, self.site),
        }
    }
}

/// A disordered periodic Heisenberg chain of `n` qubits, simulated for time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainInstance {
    pub n: usize,
    pub v: Vec<f64>,
    pub t: f64,
    /// Generation seed; `None` for hand-built instances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ChainInstance {
    pub fn new(n: usize, v: Vec<f64>, t: f64) -> Result<Self, ModelError> {
        let inst = Self {
            n,
            v,
            t,
            seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Draws `v` i.i.d. uniform on `[-1, 1]`. `t` defaults to `2n`.
    ///
    /// Draws are prefix-stable: the first `m` components for a given seed
    /// do not depend on `n`.
    pub fn generate(n: usize, t: Option<f64>, seed: u64) -> Result<Self, ModelError> {
        if n < 3 {
            return Err(ModelError::TooFewQubits(n));
        }
        let mut rng = stream_rng(seed, streams::DISORDER);
        let v = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let inst = Self {
            n,
            v,
            t: t.unwrap_or(2.0 * n as f64),
            seed: Some(seed),
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Same chain with further disorder components appended from the seed's stream.
    pub fn extended(&self, n: usize) -> Result<Self, ModelError> {
        if n < self.n {
            return Err(ModelError::Shrink {
                from: self.n,
                to: n,
            });
        }
        let seed = self.seed.ok_or(ModelError::NoSeed)?;
        let grown = Self::generate(n, Some(self.t), seed)?;
        let mut v = self.v.clone();
        v.extend_from_slice(&grown.v[self.n..]);
        Ok(Self {
            n,
            v,
            t: self.t,
            seed: self.seed,
        })
    }

    pub fn with_time(&self, t: f64) -> Result<Self, ModelError> {
        let inst = Self { t, ..self.clone() };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n < 3 {
            return Err(ModelError::TooFewQubits(self.n));
        }
        if self.v.len() != self.n {
            return Err(ModelError::DisorderLength {
                expected: self.n,
                found: self.v.len(),
            });
        }
        if let Some((index, &value)) = self
            .v
            .iter()
            .enumerate()
            .find(|(_, x)| x.is_nan() || x.abs() > 1.0)
        {
            return Err(ModelError::DisorderRange { index, value });
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(ModelError::BadTime(self.t));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of local terms, `4n`.
    pub fn num_terms(&self) -> usize {
        4 * self.n
    }

    /// Terms in reading order: for each site, XX, YY, ZZ, then the Z field.
    pub fn terms(&self) -> Vec<LocalTerm> {
        (1..=self.n)
            .flat_map(|site| {
                TermKind::ALL.into_iter().map(move |kind| LocalTerm {
                    kind,
                    site,
                    coefficient: if kind.is_coupling() {
                        1.0
                    } else {
                        self.v[site - 1]
                    },
                })
            })
            .collect()
    }
}

/// Order in which local exponentials appear in the forward half of each S2 block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "permutation", rename_all = "kebab-case")]
pub enum TermOrdering {
    /// Reading order of the Hamiltonian sum.
    Canonical,
    /// All XX, then all YY, then all ZZ, then all Z-field terms.
    Grouped,
    /// Position `i` holds the canonical index (0-based) of the `i`-th term.
    Explicit(Vec<usize>),
}

impl TermOrdering {
    /// Fisher-Yates shuffle of `0..num_terms`.
    pub fn random<R: Rng + ?Sized>(num_terms: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..num_terms).collect();
        perm.shuffle(rng);
        TermOrdering::Explicit(perm)
    }

    pub fn label(&self) -> &'static str {
        match self {
            TermOrdering::Canonical => "canonical",
            TermOrdering::Grouped => "grouped",
            TermOrdering::Explicit(_) => "explicit",
        }
    }
}

/// Embeds a one-qubit (2x2) or adjacent two-qubit (4x4) operator at `site`.
pub fn embed<T: Real>(
    p: &ComplexMatrix<T>,
    site: usize,
    n: usize,
) -> Result<ComplexMatrix<T>, ModelError> {
    let width = match p.dim() {
        2 => 1,
        4 => 2,
        d => return Err(ModelError::BadOperatorSize(d)),
    };
    if site == 0 || site + width - 1 > n {
        return Err(ModelError::SiteOutOfRange { site, n, width });
    }
    let left = ComplexMatrix::identity(1 << (site - 1));
    let right = ComplexMatrix::identity(1 << (n + 1 - site - width));
    Ok(kron(&kron(&left, p), &right))
}

/// `coefficient * P_site Q_{site+1}` or `v_site * Z_site` as a `2^n` matrix.
pub fn term_matrix<T: Real>(term: &LocalTerm, n: usize) -> ComplexMatrix<T> {
    let p = pauli::<T>(term.kind.pauli());
    let coef = Complex::new(T::lit(term.coefficient), T::zero());
    let m = if !term.kind.is_coupling() {
        embed(&p, term.site, n)
    } else if term.site < n {
        embed(&kron(&p, &p), term.site, n)
    } else {
        // ring closure: P on qubit n and on qubit 1
        let middle = ComplexMatrix::identity(1 << (n - 2));
        Ok(kron(&kron(&p, &middle), &p))
    };
    m.expect("term sites are in range").scale(coef)
}

pub fn hamiltonian<T: Real>(instance: &ChainInstance) -> ComplexMatrix<T> {
    terms_sum(&instance.terms(), instance.n)
}

/// Sum of the given terms' matrices, in list order.
pub fn terms_sum<T: Real>(terms: &[LocalTerm], n: usize) -> ComplexMatrix<T> {
    let mut h = ComplexMatrix::zeros(1 << n);
    for term in terms {
        h.add_assign(&term_matrix(term, n)).expect("same dimension");
    }
    h
}

pub fn ordered_terms(
    instance: &ChainInstance,
    ordering: &TermOrdering,
) -> Result<Vec<LocalTerm>, ModelError> {
    let canonical = instance.terms();
    match ordering {
        TermOrdering::Canonical => Ok(canonical),
        TermOrdering::Grouped => {
            let mut terms = canonical;
            // stable: sites stay ascending within each kind
            terms.sort_by_key(|t| t.kind);
            Ok(terms)
        }
        TermOrdering::Explicit(perm) => {
            check_permutation(perm, canonical.len())?;
            Ok(perm.iter().map(|&i| canonical[i]).collect())
        }
    }
}

fn check_permutation(perm: &[usize], len: usize) -> Result<(), ModelError> {
    if perm.len() != len {
        return Err(ModelError::BadPermutation(format!(
            "length {} but the chain has {len} terms",
            perm.len()
        )));
    }
    let mut seen = vec![false; len];
    for &i in perm {
        if i >= len {
            return Err(ModelError::BadPermutation(format!(
                "index {i} out of range 0..{len}"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(ModelError::BadPermutation(format!("index {i} repeated")));
        }
    }
    Ok(())
}

/// Number of S2 blocks in `S_2k(λ/r)^r`, `r * 5^(k-1)`.
pub fn s2_block_count(k: usize, r: usize) -> usize {
    r * 5usize.pow((k.max(1) - 1) as u32)
}

/// Exponentials in `S_2k(λ/r)^r` before any merging, `2 L r 5^(k-1)`.
pub fn unmerged_gate_count(instance: &ChainInstance, k: usize, r: usize) -> usize {
    2 * instance.num_terms() * s2_block_count(k, r)
}

/// Exponentials in `S_2k(λ/r)^r` after merging.
///
/// The circuit is cut greedily into maximal runs of consecutive, pairwise
/// commuting exponentials. Inside a run any two exponentials of the same
/// generator can be brought together and their phases added, so a run costs
/// one gate per distinct generator.
pub fn merged_gate_count(
    instance: &ChainInstance,
    ordering: &TermOrdering,
    k: usize,
    r: usize,
) -> Result<usize, ModelError> {
    let terms = ordered_terms(instance, ordering)?;
    let sequence: Vec<LocalTerm> = terms.iter().chain(terms.iter().rev()).copied().collect();
    let blocks = s2_block_count(k, r);
    Ok(merged_count(
        (0..blocks).flat_map(|_| sequence.iter()),
        instance.n,
    ))
}

/// Merged gate count of an arbitrary exponential sequence.
pub fn merged_count<'a>(gates: impl IntoIterator<Item = &'a LocalTerm>, n: usize) -> usize {
    let mut total = 0;
    let mut run: Vec<LocalTerm> = Vec::new();
    let mut keys: HashSet<(TermKind, usize)> = HashSet::new();
    for gate in gates {
        if keys.contains(&gate.key()) {
            continue;
        }
        if run.iter().all(|g| g.commutes_with(gate, n)) {
            run.push(*gate);
            keys.insert(gate.key());
        } else {
            total += run.len();
            run.clear();
            keys.clear();
            run.push(*gate);
            keys.insert(gate.key());
        }
    }
    total + run.len()
}

/// Random orderings drawn from `(seed, stream)`.
pub fn random_orderings(
    num_terms: usize,
    count: usize,
    seed: u64,
    stream: u64,
) -> Vec<TermOrdering> {
    let mut rng = stream_rng(seed, stream);
    (0..count)
        .map(|_| TermOrdering::random(num_terms, &mut rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, spectral_norm};

    type M = ComplexMatrix<f64>;

    fn inst(v: &[f64]) -> ChainInstance {
        ChainInstance::new(v.len(), v.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn pauli_matrices() {
        let c = |re, im| Complex::new(re, im);
        let x: M = pauli(PauliKind::X);
        assert_eq!(x.as_slice(), &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let y: M = pauli(PauliKind::Y);
        assert_eq!(y.as_slice(), &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
        let z: M = pauli(PauliKind::Z);
        assert_eq!(z.as_slice(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    }

    #[test]
    fn embed_examples() {
        let x: M = pauli(PauliKind::X);
        assert_eq!(embed(&x, 1, 1).unwrap(), x);
        let z: M = pauli(PauliKind::Z);
        assert_eq!(
            embed(&z, 2, 2).unwrap(),
            M::from_real_diag(&[1., -1., 1., -1.])
        );
        for j in 1..=4 {
            assert_eq!(embed(&M::identity(2), j, 4).unwrap(), M::identity(16));
        }
        assert!(matches!(
            embed(&x, 0, 3),
            Err(ModelError::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            embed(&x, 4, 3),
            Err(ModelError::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            embed(&kron(&x, &x), 3, 3),
            Err(ModelError::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            embed(&M::identity(3), 1, 3),
            Err(ModelError::BadOperatorSize(3))
        ));
    }

    #[test]
    fn term_matrix_examples() {
        let x: M = pauli(PauliKind::X);
        let i2 = M::identity(2);
        let zero_field = LocalTerm {
            kind: TermKind::ZField,
            site: 1,
            coefficient: 0.0,
        };
        assert_eq!(term_matrix::<f64>(&zero_field, 3).max_abs(), 0.0);

        let xx1 = LocalTerm {
            kind: TermKind::XX,
            site: 1,
            coefficient: 1.0,
        };
        assert_eq!(term_matrix::<f64>(&xx1, 3), kron(&kron(&x, &x), &i2));
        let xx3 = LocalTerm {
            kind: TermKind::XX,
            site: 3,
            coefficient: 1.0,
        };
        assert_eq!(term_matrix::<f64>(&xx3, 3), kron(&kron(&x, &i2), &x));
    }

    #[test]
    fn hamiltonian_examples() {
        let h: M = hamiltonian(&inst(&[0., 0., 0.]));
        assert_eq!(h.trace(), Complex::new(0.0, 0.0));

        let i = inst(&[0.3, -0.9, 0.5]);
        let h: M = hamiltonian(&i);
        assert_eq!(h, h.adjoint());

        let h: M = hamiltonian(&inst(&[1., 1., 1.]));
        assert_eq!(h[(0, 0)], Complex::new(6.0, 0.0));
    }

    #[test]
    fn ordering_examples() {
        let i = inst(&[0.1, 0.2, 0.3]);
        let canon = ordered_terms(&i, &TermOrdering::Canonical).unwrap();
        let labels: Vec<_> = canon.iter().map(|t| (t.kind, t.site)).collect();
        use TermKind::*;
        assert_eq!(
            labels,
            vec![
                (XX, 1),
                (YY, 1),
                (ZZ, 1),
                (ZField, 1),
                (XX, 2),
                (YY, 2),
                (ZZ, 2),
                (ZField, 2),
                (XX, 3),
                (YY, 3),
                (ZZ, 3),
                (ZField, 3),
            ]
        );
        let grouped = ordered_terms(&i, &TermOrdering::Grouped).unwrap();
        let labels: Vec<_> = grouped.iter().map(|t| (t.kind, t.site)).collect();
        assert_eq!(
            labels,
            vec![
                (XX, 1),
                (XX, 2),
                (XX, 3),
                (YY, 1),
                (YY, 2),
                (YY, 3),
                (ZZ, 1),
                (ZZ, 2),
                (ZZ, 3),
                (ZField, 1),
                (ZField, 2),
                (ZField, 3),
            ]
        );
        let ident = TermOrdering::Explicit((0..12).collect());
        assert_eq!(ordered_terms(&i, &ident).unwrap(), canon);

        for bad in [vec![0; 12], (0..11).collect(), (1..13).collect::<Vec<_>>()] {
            assert!(matches!(
                ordered_terms(&i, &TermOrdering::Explicit(bad)),
                Err(ModelError::BadPermutation(_))
            ));
        }
    }

    #[test]
    fn gate_counts() {
        let i = ChainInstance::generate(5, None, 3).unwrap();
        assert_eq!(unmerged_gate_count(&i, 2, 125), 25000);
        assert_eq!(
            merged_gate_count(&i, &TermOrdering::Grouped, 2, 125).unwrap(),
            15630
        );
        // one S2 block
        for n in 3..7 {
            let i = ChainInstance::generate(n, None, 1).unwrap();
            assert_eq!(
                merged_gate_count(&i, &TermOrdering::Grouped, 1, 1).unwrap(),
                6 * n
            );
        }
    }

    #[test]
    fn identical_adjacent_exponentials_merge() {
        let x1 = LocalTerm {
            kind: TermKind::XX,
            site: 1,
            coefficient: 1.0,
        };
        let z1 = LocalTerm {
            kind: TermKind::ZField,
            site: 1,
            coefficient: 0.5,
        };
        assert_eq!(merged_count(&[x1, x1], 3), 1);
        assert_eq!(merged_count(&[x1, z1, x1], 3), 3);
    }

    #[test]
    fn commutation_rule_matches_matrices() {
        let i = inst(&[0.4, -0.2, 0.7, 0.1]);
        let terms = i.terms();
        for a in &terms {
            for b in &terms {
                let ma: M = term_matrix(a, 4);
                let mb: M = term_matrix(b, 4);
                let comm = matmul(&ma, &mb)
                    .unwrap()
                    .sub(&matmul(&mb, &ma).unwrap())
                    .unwrap();
                let norm = spectral_norm(&comm);
                if a.commutes_with(b, 4) {
                    assert!(norm <= 1e-12, "{a} {b} {norm}");
                } else {
                    assert!(norm >= 0.1, "{a} {b} {norm}");
                }
            }
        }
    }

    #[test]
    fn instance_validation() {
        assert_eq!(
            ChainInstance::new(2, vec![0.0; 2], 1.0),
            Err(ModelError::TooFewQubits(2))
        );
        assert!(matches!(
            ChainInstance::new(3, vec![0.0; 4], 1.0),
            Err(ModelError::DisorderLength { .. })
        ));
        assert!(matches!(
            ChainInstance::new(3, vec![0.0, 1.5, 0.0], 1.0),
            Err(ModelError::DisorderRange { index: 1, .. })
        ));
        assert!(matches!(
            ChainInstance::new(3, vec![0.0, f64::NAN, 0.0], 1.0),
            Err(ModelError::DisorderRange { .. })
        ));
        assert_eq!(
            ChainInstance::new(3, vec![0.0; 3], f64::INFINITY),
            Err(ModelError::BadTime(f64::INFINITY))
        );
    }

    #[test]
    fn generation_is_seeded_and_prefix_stable() {
        let a = ChainInstance::generate(5, None, 1).unwrap();
        let b = ChainInstance::generate(5, None, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.t, 10.0);
        assert!(a.v.iter().all(|x| x.abs() <= 1.0));
        let c = ChainInstance::generate(5, None, 2).unwrap();
        assert_ne!(a.v, c.v);

        let grown = a.extended(7).unwrap();
        assert_eq!(&grown.v[..5], &a.v[..]);
        assert_eq!(grown.t, a.t);
        assert_eq!(grown.v.len(), 7);
        assert_eq!(grown.v, ChainInstance::generate(7, None, 1).unwrap().v);
    }

    #[test]
    fn four_kinds_each_n_times() {
        let i = ChainInstance::generate(6, None, 9).unwrap();
        for kind in TermKind::ALL {
            assert_eq!(i.terms().iter().filter(|t| t.kind == kind).count(), 6);
        }
    }

    #[test]
    fn ordering_round_trips_through_json() {
        for o in [
            TermOrdering::Canonical,
            TermOrdering::Grouped,
            TermOrdering::Explicit(vec![2, 0, 1]),
        ] {
            let s = serde_json::to_string(&o).unwrap();
            assert_eq!(serde_json::from_str::<TermOrdering>(&s).unwrap(), o);
        }
        assert_eq!(
            serde_json::to_string(&TermOrdering::Grouped).unwrap(),
            r#"{"mode":"grouped"}"#
        );
    }
}
