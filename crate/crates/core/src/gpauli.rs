//! Generalized Pauli group, Bell basis and mutually unbiased bases.
//!
//! Conventions: `ω = e^{2πi/d}`, `X|k⟩ = |k+1⟩`, `Z|k⟩ = ω^k |k⟩`,
//! `U_{r,s} = X^r Z^s`, and `|U_{r,s}⟩ = (U_{r,s} ⊗ 𝟙)|Φ⁺⟩` with the first
//! tensor factor belonging to Alice.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, cr, CMatrix, CVector, C64, STRUCT_TOL};

/// Hilbert-space dimension of a single system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        Ok(Self(d))
    }

    /// Like [`Dimension::new`] but also rejects composite `d`.
    pub fn prime(d: usize) -> Result<Self> {
        let dim = Self::new(d)?;
        if !dim.is_prime() {
            return Err(Error::NotPrime(d));
        }
        Ok(dim)
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    pub fn is_prime(self) -> bool {
        let d = self.0;
        d >= 2 && (2..).take_while(|k| k * k <= d).all(|k| d % k != 0)
    }

    /// `log2 d`
    pub fn log2(self) -> f64 {
        (self.0 as f64).log2()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index `(r, s)` of the Pauli operator `X^r Z^s`, reduced modulo `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliIndex {
    pub r: usize,
    pub s: usize,
}

impl PauliIndex {
    pub fn new(d: Dimension, r: i64, s: i64) -> Self {
        let m = d.get() as i64;
        Self {
            r: r.rem_euclid(m) as usize,
            s: s.rem_euclid(m) as usize,
        }
    }

    /// All `d²` indices in row-major order `(0,0), (0,1), …`.
    pub fn all(d: Dimension) -> impl Iterator<Item = PauliIndex> {
        let n = d.get();
        (0..n).flat_map(move |r| (0..n).map(move |s| PauliIndex { r, s }))
    }

    /// Position in the row-major ordering of [`PauliIndex::all`].
    pub fn flat(self, d: Dimension) -> usize {
        self.r * d.get() + self.s
    }
}

/// Label of a basis in the prime-dimension MUB family: the standard basis `Z`
/// or the eigenbasis of `X Z^β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisLabel {
    Z,
    Beta(usize),
}

impl BasisLabel {
    pub fn beta(d: Dimension, beta: i64) -> Self {
        BasisLabel::Beta(beta.rem_euclid(d.get() as i64) as usize)
    }

    /// `Z, 0, 1, …, d-1`
    pub fn all(d: Dimension) -> Vec<BasisLabel> {
        std::iter::once(BasisLabel::Z)
            .chain((0..d.get()).map(BasisLabel::Beta))
            .collect()
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Z => write!(f, "Z"),
            BasisLabel::Beta(b) => write!(f, "{b}"),
        }
    }
}

/// Ordered list of `d` orthonormal vectors in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    vectors: Vec<CVector>,
}

impl OrthonormalBasis {
    pub fn new(vectors: Vec<CVector>) -> Result<Self> {
        let d = vectors.len();
        if d == 0 {
            return Err(Error::InvalidParameter("empty basis".into()));
        }
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let g = a.dotc(b);
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - cr(target)).norm() > STRUCT_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "basis vectors {i}, {j} have overlap {g} (expected {target})"
                    )));
                }
            }
        }
        Ok(Self { vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> &CVector {
        &self.vectors[k]
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        self.vectors.iter().map(|v| v * v.adjoint()).collect()
    }

    pub fn into_vectors(self) -> Vec<CVector> {
        self.vectors
    }
}

/// `ω^k` with `ω = e^{2πi/d}`; `k` may be negative.
pub fn omega_pow(d: Dimension, k: i64) -> C64 {
    let n = d.get() as i64;
    let e = k.rem_euclid(n) as f64;
    C64::from_polar(1.0, 2.0 * PI * e / n as f64)
}

/// `U_{r,s} = Σ_k ω^{ks} |k+r⟩⟨k|`
pub fn pauli_matrix(d: Dimension, idx: PauliIndex) -> CMatrix {
    let n = d.get();
    let mut m = CMatrix::zeros(n, n);
    for k in 0..n {
        m[((k + idx.r) % n, k)] = omega_pow(d, (k * idx.s) as i64);
    }
    m
}

/// `|U_{r,s}⟩ = (1/√d) Σ_k ω^{ks} |k+r⟩|k⟩`
pub fn bell_vector(d: Dimension, idx: PauliIndex) -> CVector {
    let n = d.get();
    let norm = 1.0 / (n as f64).sqrt();
    let mut v = CVector::zeros(n * n);
    for k in 0..n {
        v[((k + idx.r) % n) * n + k] = omega_pow(d, (k * idx.s) as i64) * norm;
    }
    v
}

/// The standard basis `Z` or the eigenbasis of `X Z^β` for prime `d`.
///
/// For odd `d` the vectors are
/// `|ψ_k^β⟩ = (1/√d) Σ_j ω^{-kj} ω^{-β s_j} |j⟩` with `s_j = (d-j)(d+j-1)/2`.
/// At `d = 2` that formula makes `β = 0` and `β = 1` coincide up to a global
/// phase (`s_0 = s_1 = 1`), so the `X` and `Y` eigenbases are hardcoded.
pub fn mub_basis(d: Dimension, label: BasisLabel) -> Result<OrthonormalBasis> {
    if !d.is_prime() {
        return Err(Error::NotPrime(d.get()));
    }
    let n = d.get();
    let vectors = match label {
        BasisLabel::Z => (0..n)
            .map(|k| {
                let mut v = CVector::zeros(n);
                v[k] = cr(1.0);
                v
            })
            .collect(),
        BasisLabel::Beta(beta) if n == 2 => {
            let h = FRAC_1_SQRT_2;
            match beta % 2 {
                0 => vec![
                    CVector::from_vec(vec![cr(h), cr(h)]),
                    CVector::from_vec(vec![cr(h), cr(-h)]),
                ],
                _ => vec![
                    CVector::from_vec(vec![cr(h), c(0.0, h)]),
                    CVector::from_vec(vec![cr(h), c(0.0, -h)]),
                ],
            }
        }
        BasisLabel::Beta(beta) => {
            let norm = 1.0 / (n as f64).sqrt();
            (0..n)
                .map(|k| {
                    CVector::from_fn(n, |j, _| {
                        // (d-j)(d+j-1) is always even
                        let s_j = ((n - j) * (n + j - 1) / 2) as i64;
                        let e = -((k * j) as i64) - (beta as i64) * s_j;
                        omega_pow(d, e) * norm
                    })
                })
                .collect()
        }
    };
    OrthonormalBasis::new(vectors)
}

/// The unitary whose eigenbasis is labelled by `label`: `Z` or `X Z^β`.
pub fn basis_operator(d: Dimension, label: BasisLabel) -> CMatrix {
    match label {
        BasisLabel::Z => pauli_matrix(d, PauliIndex { r: 0, s: 1 }),
        BasisLabel::Beta(b) => pauli_matrix(d, PauliIndex::new(d, 1, b as i64)),
    }
}

/// Finds the integer `m` with `a = ω^m b`, if one exists within `tol`.
pub fn omega_phase_between(d: Dimension, a: &CMatrix, b: &CMatrix, tol: f64) -> Option<i64> {
    (0..d.get() as i64).find(|&m| {
        let w = omega_pow(d, m);
        a.iter().zip(b.iter()).all(|(x, y)| (x - w * y).norm() <= tol)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, max_abs_diff};

    const PRIMES: [usize; 6] = [2, 3, 5, 7, 11, 13];

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    #[test]
    fn dimension_validation() {
        assert!(Dimension::new(1).is_err());
        assert!(matches!(Dimension::prime(4), Err(Error::NotPrime(4))));
        assert!(Dimension::prime(13).is_ok());
        assert!(mub_basis(dim(6), BasisLabel::Z).is_err());
    }

    #[test]
    fn pauli_examples() {
        let d2 = dim(2);
        assert!(max_abs_diff(&pauli_matrix(d2, PauliIndex { r: 0, s: 0 }), &CMatrix::identity(2, 2)) < 1e-15);
        // XZ: ⟨1|XZ|0⟩ = 1, ⟨0|XZ|1⟩ = -1
        let xz = pauli_matrix(d2, PauliIndex { r: 1, s: 1 });
        let expected = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(-1.0), cr(1.0), cr(0.0)]);
        assert!(max_abs_diff(&xz, &expected) < 1e-15);

        let d3 = dim(3);
        let x = pauli_matrix(d3, PauliIndex { r: 1, s: 0 });
        let z = pauli_matrix(d3, PauliIndex { r: 0, s: 1 });
        let u12 = pauli_matrix(d3, PauliIndex { r: 1, s: 2 });
        assert!(max_abs_diff(&u12, &(&x * &z * &z)) < 1e-12);
    }

    #[test]
    fn pauli_unitarity_and_closure() {
        for &n in &PRIMES {
            let d = dim(n);
            let all: Vec<_> = PauliIndex::all(d).collect();
            for &i in &all {
                assert!(is_unitary(&pauli_matrix(d, i), 1e-12));
            }
            if n > 7 {
                continue;
            }
            for &i in &all {
                for &j in &all {
                    let prod = pauli_matrix(d, i) * pauli_matrix(d, j);
                    let sum = pauli_matrix(d, PauliIndex::new(d, (i.r + j.r) as i64, (i.s + j.s) as i64));
                    assert!(omega_phase_between(d, &prod, &sum, 1e-12).is_some());
                }
            }
        }
    }

    #[test]
    fn bell_examples() {
        let d2 = dim(2);
        let h = FRAC_1_SQRT_2;
        let phi = bell_vector(d2, PauliIndex { r: 0, s: 0 });
        let expected = CVector::from_vec(vec![cr(h), cr(0.0), cr(0.0), cr(h)]);
        assert!((phi - expected).norm() < 1e-15);
        // (|10⟩ + |01⟩)/√2
        let psi = bell_vector(d2, PauliIndex { r: 1, s: 0 });
        let expected = CVector::from_vec(vec![cr(0.0), cr(h), cr(h), cr(0.0)]);
        assert!((psi - expected).norm() < 1e-15);
    }

    #[test]
    fn bell_basis_is_orthonormal() {
        for n in [2, 3, 5] {
            let d = dim(n);
            let vecs: Vec<_> = PauliIndex::all(d).map(|i| bell_vector(d, i)).collect();
            for (a, va) in vecs.iter().enumerate() {
                for (b, vb) in vecs.iter().enumerate() {
                    let t = if a == b { 1.0 } else { 0.0 };
                    assert!((va.dotc(vb) - cr(t)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn qubit_y_basis_is_special_cased() {
        let b = mub_basis(dim(2), BasisLabel::Beta(1)).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((b.vector(0) - CVector::from_vec(vec![cr(h), c(0.0, h)])).norm() < 1e-15);
        assert!((b.vector(1) - CVector::from_vec(vec![cr(h), c(0.0, -h)])).norm() < 1e-15);
    }

    #[test]
    fn mub_bases_are_eigenbases() {
        for &n in &PRIMES {
            let d = dim(n);
            for label in BasisLabel::all(d) {
                let op = basis_operator(d, label);
                let basis = mub_basis(d, label).unwrap();
                for v in basis.vectors() {
                    let ev = v.dotc(&(&op * v));
                    assert!((ev.norm() - 1.0).abs() < 1e-10, "d={n} {label}");
                }
            }
        }
    }

    #[test]
    fn mub_unbiasedness() {
        for &n in &PRIMES {
            let d = dim(n);
            let bases: Vec<_> = BasisLabel::all(d).into_iter().map(|l| mub_basis(d, l).unwrap()).collect();
            let target = 1.0 / (n as f64).sqrt();
            for (i, a) in bases.iter().enumerate() {
                for b in bases.iter().skip(i + 1) {
                    for va in a.vectors() {
                        for vb in b.vectors() {
                            assert!((va.dotc(vb).norm() - target).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn paulis_permute_each_mub() {
        for n in [2, 3, 5, 7] {
            let d = dim(n);
            for label in BasisLabel::all(d) {
                let basis = mub_basis(d, label).unwrap();
                for idx in PauliIndex::all(d) {
                    let u = pauli_matrix(d, idx);
                    for v in basis.vectors() {
                        let w = &u * v;
                        let hits = basis
                            .vectors()
                            .iter()
                            .filter(|b| (b.dotc(&w).norm() - 1.0).abs() < 1e-10)
                            .count();
                        assert_eq!(hits, 1, "d={n} {label} {idx:?}");
                    }
                }
            }
        }
    }
}
