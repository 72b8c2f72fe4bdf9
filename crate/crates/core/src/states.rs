//! Density operators, Bell-diagonal states and their purifications.

use crate::error::{Error, Result};
use crate::gpauli::{bell_vector, Dimension, PauliIndex};
use crate::linalg::{
    apply_and_trace_first, cr, eigh, is_hermitian, partial_trace_raw, projector, CMatrix, CVector, C64,
    EIGEN_TOL, STRUCT_TOL,
};
use crate::source::SignalEnsemble;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        if !is_hermitian(&matrix, STRUCT_TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr - cr(1.0)).norm() > STRUCT_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let matrix = (&matrix + matrix.adjoint()) * cr(0.5);
        let min = eigh(&matrix).values[0];
        if min < -EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Normalizes a PSD matrix by its trace first.
    pub fn from_unnormalized(matrix: CMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= 0.0 {
            return Err(Error::ZeroProbability(tr));
        }
        Self::new(matrix / cr(tr))
    }

    pub fn pure(v: &CVector) -> Result<Self> {
        Self::new(projector(&(v / cr(v.norm()))))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) / cr(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Eigenvalues (ascending), with round-off negatives clipped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix).values.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()
    }

    /// Convex combination `λ self + (1-λ) other`.
    pub fn mix(&self, other: &DensityOperator, lambda: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Self::new(&self.matrix * cr(lambda) + &other.matrix * cr(1.0 - lambda))
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        Self::new(u * &self.matrix * u.adjoint())
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (op * &self.matrix).trace()
    }
}

/// Probability table `u[r][s]` over the `d²` Bell states, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BellDiagonalState {
    d: Dimension,
    u: Vec<f64>,
}

impl BellDiagonalState {
    pub fn new(d: Dimension, u: Vec<f64>) -> Result<Self> {
        let n = d.get();
        if u.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: u.len() });
        }
        if let Some(x) = u.iter().find(|&&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidState(format!("negative Bell weight {x}")));
        }
        let total: f64 = u.iter().sum();
        if (total - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidState(format!("Bell weights sum to {total}")));
        }
        Ok(Self { d, u })
    }

    /// Builds from a `d x d` table indexed `[r][s]`.
    pub fn from_table(d: Dimension, table: &[Vec<f64>]) -> Result<Self> {
        Self::new(d, table.iter().flatten().copied().collect())
    }

    /// Weight 1 on a single Bell state.
    pub fn delta(d: Dimension, idx: PauliIndex) -> Self {
        let mut u = vec![0.0; d.get() * d.get()];
        u[idx.flat(d)] = 1.0;
        Self { d, u }
    }

    pub fn uniform(d: Dimension) -> Self {
        let n = d.get() * d.get();
        Self { d, u: vec![1.0 / n as f64; n] }
    }

    pub fn dim(&self) -> Dimension {
        self.d
    }

    /// `u[r][s]` with indices taken modulo `d`.
    pub fn get(&self, r: i64, s: i64) -> f64 {
        self.u[PauliIndex::new(self.d, r, s).flat(self.d)]
    }

    pub fn weights(&self) -> &[f64] {
        &self.u
    }

    pub fn table(&self) -> Vec<Vec<f64>> {
        self.u.chunks(self.d.get()).map(|row| row.to_vec()).collect()
    }

    /// Shannon entropy of the weights, which equals `S(ρ_AB)`.
    pub fn entropy(&self) -> f64 {
        crate::linalg::shannon_entropy(&self.u)
    }
}

/// Reads the Bell weights `⟨U_{r,s}|ρ|U_{r,s}⟩` of a two-qudit operator.
pub fn bell_weights(d: Dimension, rho: &CMatrix) -> Vec<f64> {
    PauliIndex::all(d)
        .map(|idx| {
            let v = bell_vector(d, idx);
            v.dotc(&(rho * &v)).re
        })
        .collect()
}

/// `Σ_{r,s} u[r][s] |U_{r,s}⟩⟨U_{r,s}|`
pub fn bell_diag_to_density(state: &BellDiagonalState) -> DensityOperator {
    let d = state.d;
    let n = d.get() * d.get();
    let mut m = CMatrix::zeros(n, n);
    for idx in PauliIndex::all(d) {
        let w = state.u[idx.flat(d)];
        if w != 0.0 {
            let v = bell_vector(d, idx);
            m += projector(&v) * cr(w);
        }
    }
    DensityOperator { matrix: m }
}

/// Pure state on `AB ⊗ E`, stored with the `AB` index major.
#[derive(Debug, Clone, PartialEq)]
pub struct Purification {
    vector: CVector,
    dim_ab: usize,
    dim_e: usize,
}

impl Purification {
    pub fn new(vector: CVector, dim_ab: usize, dim_e: usize) -> Result<Self> {
        if vector.len() != dim_ab * dim_e {
            return Err(Error::DimensionMismatch { expected: dim_ab * dim_e, found: vector.len() });
        }
        if (vector.norm() - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidState(format!("purification norm {}", vector.norm())));
        }
        Ok(Self { vector, dim_ab, dim_e })
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn partition(&self) -> (usize, usize) {
        (self.dim_ab, self.dim_e)
    }

    /// `Tr_E |Ψ⟩⟨Ψ|`
    pub fn reduced_ab(&self) -> Result<DensityOperator> {
        let m = CMatrix::from_fn(self.dim_ab, self.dim_e, |i, j| self.vector[i * self.dim_e + j]);
        DensityOperator::new(&m * m.adjoint())
    }
}

/// `|Ψ⟩ = Σ_{r,s} √u[r][s] |U_{r,s}⟩_{AB} |U_{r,-s}⟩_{CD}`
///
/// The four factors `A, B, C, D` are each `d`-dimensional; Eve holds `CD`.
pub fn purify_bell_diagonal(state: &BellDiagonalState) -> Purification {
    let d = state.d;
    let n2 = d.get() * d.get();
    let mut psi = CVector::zeros(n2 * n2);
    for idx in PauliIndex::all(d) {
        let w = state.u[idx.flat(d)];
        if w == 0.0 {
            continue;
        }
        let ab = bell_vector(d, idx);
        let cd = bell_vector(d, PauliIndex::new(d, idx.r as i64, -(idx.s as i64)));
        psi += ab.kronecker(&cd) * cr(w.sqrt());
    }
    Purification { vector: psi, dim_ab: n2, dim_e: n2 }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    crate::linalg::shannon_entropy(&rho.eigenvalues())
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

pub fn partial_trace(rho: &DensityOperator, partition: (usize, usize), keep: Keep) -> Result<DensityOperator> {
    let (m, n) = partition;
    let reduced = partial_trace_raw(&rho.matrix, m, n, keep == Keep::First)?;
    DensityOperator::new(reduced)
}

/// Probabilities below this are treated as zero-probability branches.
pub const ZERO_PROB: f64 = 1e-14;

/// Projects Alice's half of `ρ_AB` onto `|v⟩` and returns the outcome
/// probability together with Bob's normalized conditional state.
pub fn conditional_state(rho_ab: &DensityOperator, alice_vector: &CVector) -> Result<(f64, DensityOperator)> {
    let d = alice_vector.len();
    if d * d != rho_ab.dim() {
        return Err(Error::DimensionMismatch { expected: rho_ab.dim(), found: d * d });
    }
    if (alice_vector.norm() - 1.0).abs() > STRUCT_TOL {
        return Err(Error::InvalidParameter("alice_vector must have unit norm".into()));
    }
    let unnormalized = apply_and_trace_first(&projector(alice_vector), &rho_ab.matrix, d, d);
    let p = unnormalized.trace().re;
    if p < ZERO_PROB {
        return Err(Error::ZeroProbability(p));
    }
    Ok((p, DensityOperator::new(unnormalized / cr(p))?))
}

/// Average single-clone fidelities `(F_B, F_C)` of a four-factor purification.
///
/// Alice's half is projected onto `|φ_x*⟩` for each signal; the conditional
/// states of `B` and of `C` are compared with `|φ_x⟩` and the results are
/// averaged uniformly over the signal set. `C` is taken to be Eve's clone.
pub fn clone_fidelities(psi: &Purification, ensemble: &SignalEnsemble) -> Result<(f64, f64)> {
    let d = ensemble.dim();
    if psi.dim_ab != d * d || psi.dim_e != d * d {
        return Err(Error::DimensionMismatch { expected: d.pow(4), found: psi.vector.len() });
    }
    let d3 = d * d * d;
    let mut fb = 0.0;
    let mut fc = 0.0;
    let mut counted = 0usize;
    for phi in ensemble.states() {
        // (⟨φ*| ⊗ 𝟙)|Ψ⟩, where ⟨φ*| has components φ_a
        let w = CVector::from_fn(d3, |bcd, _| (0..d).map(|a| phi[a] * psi.vector[a * d3 + bcd]).sum());
        let p = w.norm_squared();
        if p < ZERO_PROB {
            log::warn!("skipping zero-probability signal in clone_fidelities");
            continue;
        }
        let idx = |b: usize, cc: usize, dd: usize| b * d * d + cc * d + dd;
        let rho_b = CMatrix::from_fn(d, d, |b, b2| {
            let mut acc = C64::new(0.0, 0.0);
            for cc in 0..d {
                for dd in 0..d {
                    acc += w[idx(b, cc, dd)] * w[idx(b2, cc, dd)].conj();
                }
            }
            acc
        });
        let rho_c = CMatrix::from_fn(d, d, |cc, c2| {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..d {
                for dd in 0..d {
                    acc += w[idx(b, cc, dd)] * w[idx(b, c2, dd)].conj();
                }
            }
            acc
        });
        fb += phi.dotc(&(rho_b * phi)).re / p;
        fc += phi.dotc(&(rho_c * phi)).re / p;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::ZeroProbability(0.0));
    }
    Ok((fb / counted as f64, fc / counted as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpauli::{mub_basis, BasisLabel};
    use crate::linalg::{conj_vec, kron, max_abs_diff};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn sample_u() -> BellDiagonalState {
        BellDiagonalState::new(dim(2), vec![0.7, 0.1, 0.1, 0.1]).unwrap()
    }

    #[test]
    fn rejects_invalid_operators() {
        let not_unit = CMatrix::identity(2, 2);
        assert!(DensityOperator::new(not_unit).is_err());
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.5), cr(-0.5)]));
        assert!(DensityOperator::new(negative).is_err());
        assert!(BellDiagonalState::new(dim(2), vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(BellDiagonalState::new(dim(2), vec![0.5, 0.5, 0.1]).is_err());
    }

    #[test]
    fn bell_diagonal_examples() {
        let d2 = dim(2);
        let pure = bell_diag_to_density(&BellDiagonalState::delta(d2, PauliIndex { r: 0, s: 0 }));
        let phi = bell_vector(d2, PauliIndex { r: 0, s: 0 });
        assert!(max_abs_diff(pure.matrix(), &projector(&phi)) < 1e-15);

        for n in [2, 3, 5] {
            let rho = bell_diag_to_density(&BellDiagonalState::uniform(dim(n)));
            let mm = CMatrix::identity(n * n, n * n) / cr((n * n) as f64);
            assert!(max_abs_diff(rho.matrix(), &mm) < 1e-12);
        }

        let rho = bell_diag_to_density(&sample_u());
        for keep in [Keep::First, Keep::Second] {
            let r = partial_trace(&rho, (2, 2), keep).unwrap();
            assert!(max_abs_diff(r.matrix(), &(CMatrix::identity(2, 2) * cr(0.5))) < 1e-12);
        }
    }

    #[test]
    fn bell_weights_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 5] {
            let u = random::bell_diagonal(dim(n), &mut rng);
            let back = bell_weights(dim(n), bell_diag_to_density(&u).matrix());
            for (a, b) in back.iter().zip(u.weights()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_examples() {
        let d2 = dim(2);
        let pure = bell_diag_to_density(&BellDiagonalState::delta(d2, PauliIndex { r: 0, s: 0 }));
        assert!(von_neumann_entropy(&pure).abs() < 1e-12);
        for n in [2, 3, 5] {
            let mm = DensityOperator::maximally_mixed(n);
            assert!((von_neumann_entropy(&mm) - (n as f64).log2()).abs() < 1e-12);
        }
        let diag = DensityOperator::new(CMatrix::from_diagonal(&CVector::from_vec(vec![
            cr(0.5),
            cr(0.5),
            cr(0.0),
            cr(0.0),
        ])))
        .unwrap();
        assert!((von_neumann_entropy(&diag) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_bounds_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 3, 4, 9] {
            for _ in 0..20 {
                let rho = random::density(n, &mut rng);
                let s = von_neumann_entropy(&rho);
                assert!(s >= -1e-12 && s <= (n as f64).log2() + 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sigma = random::density(2, &mut rng);
        let tau = random::density(3, &mut rng);
        let prod = DensityOperator::new(kron(sigma.matrix(), tau.matrix())).unwrap();
        let back = partial_trace(&prod, (2, 3), Keep::First).unwrap();
        assert!(max_abs_diff(back.matrix(), sigma.matrix()) < 1e-12);

        let bell = DensityOperator::pure(&bell_vector(dim(2), PauliIndex { r: 0, s: 0 })).unwrap();
        let b = partial_trace(&bell, (2, 2), Keep::Second).unwrap();
        assert!(max_abs_diff(b.matrix(), &(CMatrix::identity(2, 2) * cr(0.5))) < 1e-12);

        let rho = random::density(6, &mut rng);
        let r = partial_trace(&rho, (2, 3), Keep::Second).unwrap();
        assert!((r.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(matches!(
            partial_trace(&rho, (2, 2), Keep::First),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conditional_state_examples() {
        let d2 = dim(2);
        let bell = DensityOperator::pure(&bell_vector(d2, PauliIndex { r: 0, s: 0 })).unwrap();
        let zero = CVector::from_vec(vec![cr(1.0), cr(0.0)]);
        let (p, rho_b) = conditional_state(&bell, &zero).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!(max_abs_diff(rho_b.matrix(), &projector(&zero)) < 1e-12);

        let rho = bell_diag_to_density(&sample_u());
        let (_, rho_b) = conditional_state(&rho, &zero).unwrap();
        let spec = rho_b.eigenvalues();
        assert!((spec[0] - 0.2).abs() < 1e-12 && (spec[1] - 0.8).abs() < 1e-12);

        let one = CVector::from_vec(vec![cr(0.0), cr(1.0)]);
        let prod = DensityOperator::new(kron(&projector(&zero), &projector(&zero))).unwrap();
        assert!(matches!(conditional_state(&prod, &one), Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn conditional_probability_is_uniform_for_bell_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [2, 3, 5] {
            let d = dim(n);
            let rho = bell_diag_to_density(&random::bell_diagonal(d, &mut rng));
            for label in BasisLabel::all(d) {
                for v in mub_basis(d, label).unwrap().vectors() {
                    let (p, _) = conditional_state(&rho, &conj_vec(v)).unwrap();
                    assert!((p - 1.0 / n as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn purification_contract() {
        let d2 = dim(2);
        let psi = purify_bell_diagonal(&BellDiagonalState::delta(d2, PauliIndex { r: 0, s: 0 }));
        let phi = bell_vector(d2, PauliIndex { r: 0, s: 0 });
        assert!((psi.vector() - phi.kronecker(&phi)).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [2, 3, 5] {
            for _ in 0..100 {
                let u = random::bell_diagonal(dim(n), &mut rng);
                let psi = purify_bell_diagonal(&u);
                let reduced = psi.reduced_ab().unwrap();
                assert!(max_abs_diff(reduced.matrix(), bell_diag_to_density(&u).matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn noiseless_clone_fidelities() {
        for n in [2, 3] {
            let d = dim(n);
            let ens = SignalEnsemble::from_bases(
                &[mub_basis(d, BasisLabel::Z).unwrap(), mub_basis(d, BasisLabel::Beta(0)).unwrap()],
                None,
            )
            .unwrap();
            let psi = purify_bell_diagonal(&BellDiagonalState::delta(d, PauliIndex { r: 0, s: 0 }));
            let (fb, fc) = clone_fidelities(&psi, &ens).unwrap();
            assert!((fb - 1.0).abs() < 1e-12);
            assert!((fc - 1.0 / n as f64).abs() < 1e-12);
        }
    }
}
