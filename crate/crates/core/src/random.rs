//! Seeded random states and unitaries for the property suites.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::gpauli::Dimension;
use crate::linalg::{c, cr, gram_schmidt_step, inv_sqrt_psd, kron, partial_trace_raw, CMatrix, CVector};
use crate::states::{BellDiagonalState, DensityOperator};

/// Default seed for the randomized checks; `QKD_SEED` overrides it.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// Reads `QKD_SEED` (decimal or `0x` hex), falling back to [`DEFAULT_SEED`].
pub fn seed_from_env() -> u64 {
    std::env::var("QKD_SEED")
        .ok()
        .and_then(|s| {
            let s = s.trim();
            match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(hex, 16).ok(),
                None => s.parse().ok(),
            }
        })
        .unwrap_or(DEFAULT_SEED)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c(gaussian(rng), gaussian(rng)))
}

/// Haar-random pure state.
pub fn pure_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| c(gaussian(rng), gaussian(rng)));
    let norm = v.norm();
    v / cr(norm)
}

/// Haar-random unitary (Gram-Schmidt on a Ginibre matrix).
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = ginibre(n, n, rng);
        let mut cols: Vec<CVector> = Vec::with_capacity(n);
        for j in 0..n {
            match gram_schmidt_step(&cols, &g.column(j).into_owned(), 1e-8) {
                Some(v) => cols.push(v),
                None => break,
            }
        }
        if cols.len() == n {
            return CMatrix::from_columns(&cols);
        }
    }
}

/// Full-rank random density operator (Hilbert-Schmidt measure).
pub fn density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(n, n, rng);
    let m = &g * g.adjoint();
    DensityOperator::from_unnormalized(m).expect("Ginibre product is positive definite")
}

/// Random two-qudit state whose first-factor marginal is `𝟙/d`.
pub fn density_with_uniform_marginal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityOperator {
    let rho = density(d * d, rng);
    let rho_a = partial_trace_raw(rho.matrix(), d, d, true).expect("square");
    let (k, _) = inv_sqrt_psd(&rho_a);
    let filter = kron(&k, &CMatrix::identity(d, d));
    DensityOperator::from_unnormalized(&filter * rho.matrix() * filter.adjoint()).expect("filtered state")
}

/// Random Bell-diagonal weights drawn uniformly from the simplex.
pub fn bell_diagonal<R: Rng + ?Sized>(d: Dimension, rng: &mut R) -> BellDiagonalState {
    let n = d.get() * d.get();
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    BellDiagonalState::new(d, raw.into_iter().map(|x| x / total).collect()).expect("simplex sample")
}
