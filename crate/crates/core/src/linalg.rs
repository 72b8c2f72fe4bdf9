//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The only non-trivial routine is
//! a cyclic Jacobi eigensolver for Hermitian matrices; every spectral quantity
//! (entropies, square roots, inverse square roots) goes through it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance for structural identities (Hermiticity, traces, unitarity).
pub const STRUCT_TOL: f64 = 1e-12;
/// Tolerance for quantities derived from eigendecompositions.
pub const EIGEN_TOL: f64 = 1e-10;
/// Eigenvalues below this are treated as zero when inverting.
pub const RANK_FLOOR: f64 = 1e-12;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// `values` are sorted in ascending order and `vectors` holds the matching
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `V f(Λ) V†`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let w = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigensolver for a Hermitian matrix.
///
/// Each rotation removes the phase of the pivot `a_pq` first, then applies the
/// real symmetric Jacobi rotation to the resulting 2x2 block. Sweeps continue
/// until the off-diagonal Frobenius norm drops below `1e-13` (scaled by the
/// matrix norm when that exceeds one).
pub fn eigh(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh requires a square matrix");
    // symmetrize to remove rounding asymmetry
    let mut a = (m + m.adjoint()) * cr(0.5);
    let mut v = CMatrix::identity(n, n);
    let scale = a.norm().max(1.0);
    let tol = JACOBI_OFF_TOL * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let phase = apq / mag; // e^{iφ}
                let alpha = a[(p, p)].re;
                let gamma = a[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // V restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                let vpp = cr(cs);
                let vpq = cr(sn);
                let vqp = -phase.conj() * sn;
                let vqq = phase.conj() * cs;

                // A <- A V
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * vpp + akq * vqp;
                    a[(k, q)] = akp * vpq + akq * vqq;
                }
                // A <- V† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
                    a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                // W <- W V
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * vpp + vkq * vqp;
                    v[(k, q)] = vkp * vpq + vkq * vqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| v[(r, order[col])]);
    HermitianEigen { values, vectors }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).values
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// `|v⟩⟨v|`
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Componentwise complex conjugate in the computational basis.
pub fn conj_vec(v: &CVector) -> CVector {
    v.map(|z| z.conj())
}

pub fn conj_mat(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    m.is_square() && max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(n, n)) <= tol
}

/// Hilbert-Schmidt inner product `tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Square root of a positive semidefinite matrix.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    eigh(m).map(|x| x.max(0.0).sqrt())
}

/// Inverse square root on the support of a PSD matrix.
///
/// Returns the pseudo-inverse square root together with the rank; eigenvalues
/// below [`RANK_FLOOR`] are dropped.
pub fn inv_sqrt_psd(m: &CMatrix) -> (CMatrix, usize) {
    let eig = eigh(m);
    let rank = eig.values.iter().filter(|&&x| x > RANK_FLOOR).count();
    let inv = eig.map(|x| if x > RANK_FLOOR { 1.0 / x.sqrt() } else { 0.0 });
    (inv, rank)
}

/// Shannon entropy in bits; zero entries contribute nothing.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> f64 {
    shannon_entropy(&[x, 1.0 - x])
}

/// `x log2 x` with the convention `0 log 0 = 0`.
pub fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Partial trace of a bipartite operator with factor dimensions `(m, n)`.
///
/// `keep_first` selects which factor survives.
pub fn partial_trace_raw(rho: &CMatrix, m: usize, n: usize, keep_first: bool) -> Result<CMatrix> {
    if rho.nrows() != m * n || rho.ncols() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            found: rho.nrows(),
        });
    }
    Ok(if keep_first {
        CMatrix::from_fn(m, m, |i, k| (0..n).map(|j| rho[(i * n + j, k * n + j)]).sum())
    } else {
        CMatrix::from_fn(n, n, |j, l| (0..m).map(|i| rho[(i * n + j, i * n + l)]).sum())
    })
}

/// `Tr_A[(op ⊗ 𝟙) ρ]` for `ρ` on `m ⊗ n` and `op` on the first factor.
pub fn apply_and_trace_first(op: &CMatrix, rho: &CMatrix, m: usize, n: usize) -> CMatrix {
    // [(op⊗1)ρ]_{(i,j),(k,l)} = Σ_a op_{ia} ρ_{(a,j),(k,l)}; trace over i = k
    CMatrix::from_fn(n, n, |j, l| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..m {
            for a in 0..m {
                let o = op[(i, a)];
                if o != C64::new(0.0, 0.0) {
                    acc += o * rho[(a * n + j, i * n + l)];
                }
            }
        }
        acc
    })
}

/// Orthonormalizes `v` against the (already orthonormal) `basis` using
/// modified Gram-Schmidt. Returns `None` if the remainder norm is below `tol`.
pub fn gram_schmidt_step(basis: &[CVector], v: &CVector, tol: f64) -> Option<CVector> {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
    }
    let norm = w.norm();
    if norm < tol {
        None
    } else {
        Some(w / cr(norm))
    }
}
