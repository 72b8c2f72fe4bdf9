//! Source-replacement description of prepare-and-measure protocols.
//!
//! A signal ensemble `{p(x), |φ_x⟩}` is replaced by the entangled source
//! `|Φ⟩_AS = Σ_i √κ_i |i⟩_A |b_i⟩_S`, where `κ_i, |b_i⟩` diagonalize
//! `Σ_x p(x)|φ_x⟩⟨φ_x|`. Alice's half is written in the coordinates
//! `|i⟩ ↔ |b_i⟩`, so her reduced state is `diag(κ)` and complex conjugation
//! is taken with respect to the Schmidt basis. When an eigenvalue is
//! degenerate the Schmidt vectors of that eigenspace are fixed by projecting
//! the computational basis onto it; in particular `ρ_A = 𝟙/d` gives the
//! computational basis itself.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpauli::OrthonormalBasis;
use crate::linalg::{
    c, conj_mat, cr, eigh, gram_schmidt_step, inv_sqrt_psd, is_hermitian, kron, max_abs_diff, projector,
    sqrt_psd, CMatrix, CVector, EIGEN_TOL, RANK_FLOOR, STRUCT_TOL,
};
use crate::states::{DensityOperator, ZERO_PROB};
use crate::symmetry::GroupRep;

/// Pure signal states with their a-priori probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalEnsemble {
    states: Vec<CVector>,
    probs: Vec<f64>,
}

impl SignalEnsemble {
    pub fn new(states: Vec<CVector>, probs: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidParameter("empty signal ensemble".into()));
        }
        if states.len() != probs.len() {
            return Err(Error::DimensionMismatch { expected: states.len(), found: probs.len() });
        }
        let d = states[0].len();
        for s in &states {
            if s.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: s.len() });
            }
            if (s.norm() - 1.0).abs() > STRUCT_TOL {
                return Err(Error::InvalidState(format!("signal state has norm {}", s.norm())));
            }
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParameter("negative signal probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidParameter(format!("signal probabilities sum to {total}")));
        }
        Ok(Self { states, probs })
    }

    pub fn uniform(states: Vec<CVector>) -> Result<Self> {
        let n = states.len();
        Self::new(states, vec![1.0 / n as f64; n])
    }

    /// All vectors of the given bases, in order; uniform unless `probs` is given.
    pub fn from_bases(bases: &[OrthonormalBasis], probs: Option<Vec<f64>>) -> Result<Self> {
        let states: Vec<CVector> = bases.iter().flat_map(|b| b.vectors().iter().cloned()).collect();
        match probs {
            Some(p) => Self::new(states, p),
            None => Self::uniform(states),
        }
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Σ_x p(x) |φ_x⟩⟨φ_x|`
    pub fn average_state(&self) -> CMatrix {
        let d = self.dim();
        self.states
            .iter()
            .zip(&self.probs)
            .fold(CMatrix::zeros(d, d), |acc, (s, &p)| acc + projector(s) * cr(p))
    }

    pub fn is_uniform(&self) -> bool {
        let target = 1.0 / self.len() as f64;
        self.probs.iter().all(|&p| (p - target).abs() <= STRUCT_TOL)
    }
}

/// Schmidt data of the compressed source state.
#[derive(Debug, Clone)]
pub struct SourceState {
    dim: usize,
    kappa: Vec<f64>,
    schmidt_basis: CMatrix,
    rho_a: DensityOperator,
}

impl SourceState {
    /// Schmidt coefficients squared, `κ_i`, in descending order (support only).
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Schmidt coefficients `√κ_i`.
    pub fn schmidt_coeffs(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| k.sqrt()).collect()
    }

    /// Columns are the Schmidt vectors `|b_i⟩` of the signal system.
    pub fn schmidt_basis(&self) -> &CMatrix {
        &self.schmidt_basis
    }

    /// Alice's reduced state in her Schmidt coordinates, `diag(κ)`.
    pub fn rho_a(&self) -> &DensityOperator {
        &self.rho_a
    }

    pub fn rank(&self) -> usize {
        self.kappa.len()
    }

    pub fn signal_dim(&self) -> usize {
        self.dim
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank() < self.dim
    }

    /// `|Φ⟩_AS = Σ_i √κ_i |i⟩_A |b_i⟩_S`
    pub fn state_vector(&self) -> CVector {
        let r = self.rank();
        let mut v = CVector::zeros(r * self.dim);
        for i in 0..r {
            let mut e = CVector::zeros(r);
            e[i] = cr(1.0);
            v += kron_vec(&e, &self.schmidt_basis.column(i).into_owned()) * cr(self.kappa[i].sqrt());
        }
        v
    }

    /// `|φ*⟩ = Σ_i |i⟩⟨φ|b_i⟩`
    pub fn conjugate_signal(&self, phi: &CVector) -> CVector {
        CVector::from_fn(self.rank(), |i, _| phi.dotc(&self.schmidt_basis.column(i).into_owned()))
    }

    /// Expresses a signal-space operator in the Schmidt coordinates.
    pub fn to_schmidt_coords(&self, op: &CMatrix) -> CMatrix {
        self.schmidt_basis.adjoint() * op * &self.schmidt_basis
    }
}

fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

const EIGENSPACE_TOL: f64 = 1e-10;

pub fn build_source(ensemble: &SignalEnsemble) -> Result<SourceState> {
    let d = ensemble.dim();
    let rho_s = ensemble.average_state();
    let eig = eigh(&rho_s);

    // group eigenvalues, largest first
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.values[j].total_cmp(&eig.values[i]));
    let mut kappa = Vec::new();
    let mut columns: Vec<CVector> = Vec::new();
    let mut start = 0;
    while start < d {
        let lead = eig.values[order[start]];
        let mut end = start + 1;
        while end < d && (eig.values[order[end]] - lead).abs() < EIGENSPACE_TOL {
            end += 1;
        }
        if lead > RANK_FLOOR {
            let space: Vec<CVector> = order[start..end].iter().map(|&k| eig.vectors.column(k).into_owned()).collect();
            let proj = space.iter().fold(CMatrix::zeros(d, d), |acc, v| acc + projector(v));
            let mean = order[start..end].iter().map(|&k| eig.values[k]).sum::<f64>() / (end - start) as f64;
            let mut fixed: Vec<CVector> = Vec::new();
            for j in 0..d {
                if fixed.len() == space.len() {
                    break;
                }
                let mut e = CVector::zeros(d);
                e[j] = cr(1.0);
                let candidate = &proj * e;
                if let Some(v) = gram_schmidt_step(&fixed, &candidate, 1e-8) {
                    fixed.push(v);
                }
            }
            for v in fixed {
                kappa.push(mean);
                columns.push(v);
            }
        }
        start = end;
    }
    let total: f64 = kappa.iter().sum();
    for k in &mut kappa {
        *k /= total;
    }
    let rank = kappa.len();
    if rank < d {
        log::warn!("source reduced state is rank deficient (rank {rank} of {d}); working on its support");
    }
    let rho_a = DensityOperator::new(CMatrix::from_diagonal(&CVector::from_iterator(
        rank,
        kappa.iter().map(|&k| cr(k)),
    )))?;
    Ok(SourceState {
        dim: d,
        kappa,
        schmidt_basis: CMatrix::from_columns(&columns),
        rho_a,
    })
}

/// Positive operator-valued measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let n = elements.first().map(|e| e.nrows()).ok_or_else(|| Error::InvalidPovm("empty POVM".into()))?;
        let mut sum = CMatrix::zeros(n, n);
        for (x, e) in elements.iter().enumerate() {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::InvalidPovm(format!("element {x} has shape {:?}", e.shape())));
            }
            if !is_hermitian(e, STRUCT_TOL) {
                return Err(Error::InvalidPovm(format!("element {x} is not Hermitian")));
            }
            if eigh(e).values[0] < -EIGEN_TOL {
                return Err(Error::InvalidPovm(format!("element {x} is not positive")));
            }
            sum += e;
        }
        let dev = max_abs_diff(&sum, &CMatrix::identity(n, n));
        if dev > STRUCT_TOL {
            return Err(Error::InvalidPovm(format!("elements sum to identity only within {dev:e}")));
        }
        Ok(Self { elements })
    }

    /// Projective measurement onto an orthonormal basis.
    pub fn from_basis(basis: &OrthonormalBasis) -> Result<Self> {
        Self::new(basis.projectors())
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// `{U† E U}`
    pub fn rotated(&self, u: &CMatrix) -> Result<Self> {
        Self::new(self.elements.iter().map(|e| u.adjoint() * e * u).collect())
    }

    /// Returns `(c, |v⟩)` with `E = c |v⟩⟨v|` for every element, or `None` if
    /// some element has rank above one.
    pub fn rank_one_decomposition(&self) -> Option<Vec<(f64, CVector)>> {
        self.elements
            .iter()
            .map(|e| {
                let eig = eigh(e);
                let n = eig.values.len();
                let top = eig.values[n - 1];
                if n > 1 && eig.values[n - 2] > EIGEN_TOL * top.max(1.0) {
                    return None;
                }
                Some((top.max(0.0), eig.vectors.column(n - 1).into_owned()))
            })
            .collect()
    }
}

/// `A_x = p(x) √ρ_A⁻¹ |φ_x*⟩⟨φ_x*| √ρ_A⁻¹` on the support of `ρ_A`.
pub fn alice_povm(ensemble: &SignalEnsemble, source: &SourceState) -> Result<Povm> {
    let r = source.rank();
    let inv_sqrt = CMatrix::from_diagonal(&CVector::from_iterator(r, source.kappa.iter().map(|&k| cr(1.0 / k.sqrt()))));
    let elements = ensemble
        .states()
        .iter()
        .zip(ensemble.probs())
        .map(|(phi, &p)| {
            let star = source.conjugate_signal(phi);
            &inv_sqrt * projector(&star) * &inv_sqrt * cr(p)
        })
        .collect();
    Povm::new(elements)
}

/// Bob's measurement for a complete-basis protocol with a uniform basis
/// choice: `B_{(β,k)} = |φ_{β,k}⟩⟨φ_{β,k}| / |𝓛|`.
pub fn bob_povm(bases: &[OrthonormalBasis]) -> Result<Povm> {
    let weight = cr(1.0 / bases.len() as f64);
    Povm::new(bases.iter().flat_map(|b| b.projectors()).map(|p| p * weight).collect())
}

/// Maps each POVM element to a public announcement; only `kept` labels
/// survive postselection, and only when both parties announce the same label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiftingPlan {
    announcement_of: Vec<usize>,
    kept: BTreeSet<usize>,
}

impl SiftingPlan {
    pub fn new(announcement_of: Vec<usize>, kept: BTreeSet<usize>) -> Result<Self> {
        if announcement_of.is_empty() {
            return Err(Error::InvalidParameter("empty sifting plan".into()));
        }
        Ok(Self { announcement_of, kept })
    }

    /// Announce the basis index; keep every basis.
    pub fn basis_sifting(basis_sizes: &[usize]) -> Self {
        let announcement_of = basis_sizes
            .iter()
            .enumerate()
            .flat_map(|(u, &n)| std::iter::repeat_n(u, n))
            .collect();
        Self {
            announcement_of,
            kept: (0..basis_sizes.len()).collect(),
        }
    }

    pub fn label(&self, element: usize) -> usize {
        self.announcement_of[element]
    }

    pub fn kept(&self) -> &BTreeSet<usize> {
        &self.kept
    }

    pub fn elements_with(&self, label: usize) -> Vec<usize> {
        (0..self.announcement_of.len()).filter(|&x| self.announcement_of[x] == label).collect()
    }
}

/// One postselected branch.
#[derive(Debug, Clone)]
pub struct SiftBranch {
    pub label: usize,
    /// Joint probability `p̃(u)` that both parties announce `u`.
    pub weight: f64,
    /// `p(u)`: weight renormalized over the kept branches.
    pub prob: f64,
    pub rho_ab: DensityOperator,
    pub alice: Povm,
    pub bob: Povm,
    /// Original POVM indices making up this branch.
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Sifted {
    pub branches: Vec<SiftBranch>,
    /// Probability of events dropped by postselection.
    pub discarded: f64,
}

fn filter_for(povm: &Povm, idx: &[usize]) -> Result<(CMatrix, CMatrix)> {
    let n = povm.dim();
    let sum = idx.iter().fold(CMatrix::zeros(n, n), |acc, &x| acc + &povm.elements[x]);
    let k = sqrt_psd(&sum);
    let (k_inv, rank) = inv_sqrt_psd(&sum);
    if rank < n {
        return Err(Error::Unsupported(format!(
            "sifting filter has rank {rank} < {n}; only invertible filters are supported"
        )));
    }
    Ok((k, k_inv))
}

/// Postselection by public announcement.
///
/// For each kept label `u` the filters `K_u = √(Σ_{x→u} A_x)` and `L_u`
/// produce `ρ^u = (K_u⊗L_u) ρ (K_u⊗L_u)† / p̃(u)` and the conditional
/// measurements `K_u⁻¹ A_x K_u⁻¹`.
pub fn sift(rho: &DensityOperator, povm_a: &Povm, povm_b: &Povm, plan: &SiftingPlan) -> Result<Sifted> {
    let (da, db) = (povm_a.dim(), povm_b.dim());
    if da * db != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: da * db });
    }
    if povm_a.len() != plan.announcement_of.len() || povm_b.len() != plan.announcement_of.len() {
        return Err(Error::InvalidParameter("sifting plan does not cover every POVM element".into()));
    }
    let mut raw = Vec::new();
    let mut total = 0.0;
    for &u in &plan.kept {
        let idx = plan.elements_with(u);
        if idx.is_empty() {
            continue;
        }
        let (k, k_inv) = filter_for(povm_a, &idx)?;
        let (l, l_inv) = filter_for(povm_b, &idx)?;
        let filter = kron(&k, &l);
        let filtered = &filter * rho.matrix() * filter.adjoint();
        let weight = filtered.trace().re;
        total += weight;
        if weight < ZERO_PROB {
            log::warn!("dropping zero-probability sifting branch {u} (p = {weight:e})");
            continue;
        }
        let alice = Povm::new(idx.iter().map(|&x| &k_inv * &povm_a.elements[x] * &k_inv).collect())?;
        let bob = Povm::new(idx.iter().map(|&x| &l_inv * &povm_b.elements[x] * &l_inv).collect())?;
        raw.push((u, weight, DensityOperator::new(filtered / cr(weight))?, alice, bob, idx));
    }
    let kept: f64 = raw.iter().map(|r| r.1).sum();
    let branches = raw
        .into_iter()
        .map(|(label, weight, rho_ab, alice, bob, elements)| SiftBranch {
            label,
            weight,
            prob: weight / kept,
            rho_ab,
            alice,
            bob,
            elements,
        })
        .collect();
    Ok(Sifted { branches, discarded: (1.0 - total).max(0.0) })
}

/// Outcome of [`check_gstar_invariance`].
#[derive(Debug, Clone, Default)]
pub struct InvarianceReport {
    pub checked: usize,
    /// `(group element, POVM element)` pairs whose image is not in the POVM.
    pub povm_violations: Vec<(usize, usize)>,
    /// Group elements that do not fix `ρ_A`.
    pub rho_a_violations: Vec<usize>,
    pub note: Option<String>,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.povm_violations.is_empty() && self.rho_a_violations.is_empty() && self.note.is_none()
    }
}

/// Checks `U_g* A_x U_gᵀ ∈ {A_x}` and `U_g* ρ_A U_gᵀ = ρ_A` for every group
/// element, with conjugation taken in the Schmidt basis.
pub fn check_gstar_invariance(ensemble: &SignalEnsemble, group: &GroupRep) -> Result<InvarianceReport> {
    let source = build_source(ensemble)?;
    let mut report = InvarianceReport::default();
    if source.is_rank_deficient() {
        report.note = Some("reduced state is rank deficient".into());
        return Ok(report);
    }
    if group.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch { expected: ensemble.dim(), found: group.dim() });
    }
    let povm = alice_povm(ensemble, &source)?;
    let rho_a = source.rho_a().matrix();
    for (g, u) in group.elements().iter().enumerate() {
        let u_s = source.to_schmidt_coords(u);
        let u_star = conj_mat(&u_s);
        let u_t = u_s.transpose();
        for (x, a) in povm.elements().iter().enumerate() {
            let image = &u_star * a * &u_t;
            if !povm.elements().iter().any(|b| max_abs_diff(&image, b) <= EIGEN_TOL) {
                report.povm_violations.push((g, x));
            }
        }
        if max_abs_diff(&(&u_star * rho_a * &u_t), rho_a) > EIGEN_TOL {
            report.rho_a_violations.push(g);
        }
        report.checked += 1;
    }
    Ok(report)
}

/// On-disk protocol description.
///
/// ```json
/// { "d": 2, "bases": [[[[1,0],[0,0]], [[0,0],[1,0]]], …], "probs": null, "sifting": "basis" }
/// ```
/// Each basis is a list of `d` vectors, each vector a list of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProtocolFile {
    pub d: usize,
    pub bases: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default = "default_sifting")]
    pub sifting: String,
}

fn default_sifting() -> String {
    "basis".into()
}

impl ProtocolFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_bases(bases: &[OrthonormalBasis]) -> Self {
        Self {
            d: bases.first().map(|b| b.dim()).unwrap_or(0),
            bases: bases
                .iter()
                .map(|b| b.vectors().iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect())
                .collect(),
            probs: None,
            sifting: default_sifting(),
        }
    }

    /// Validated bases.
    pub fn bases(&self) -> Result<Vec<OrthonormalBasis>> {
        if self.sifting != "basis" {
            return Err(Error::ProtocolFile(format!("unsupported sifting '{}'", self.sifting)));
        }
        if self.bases.len() < 2 {
            return Err(Error::ProtocolFile("at least two bases are required".into()));
        }
        self.bases
            .iter()
            .enumerate()
            .map(|(i, basis)| {
                if basis.len() != self.d || basis.iter().any(|v| v.len() != self.d) {
                    return Err(Error::ProtocolFile(format!("basis {i} is not {0}x{0}", self.d)));
                }
                let vectors = basis
                    .iter()
                    .map(|v| CVector::from_iterator(self.d, v.iter().map(|&[re, im]| c(re, im))))
                    .collect();
                OrthonormalBasis::new(vectors).map_err(|e| Error::ProtocolFile(format!("basis {i}: {e}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpauli::{mub_basis, BasisLabel, Dimension};
    use crate::linalg::apply_and_trace_first;
    use crate::random;
    use crate::states::bell_diag_to_density;
    use crate::symmetry::{pauli_group, point_group, PointGroup};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bb84_bases() -> Vec<OrthonormalBasis> {
        let d = Dimension::new(2).unwrap();
        vec![mub_basis(d, BasisLabel::Z).unwrap(), mub_basis(d, BasisLabel::Beta(0)).unwrap()]
    }

    fn bb84() -> SignalEnsemble {
        SignalEnsemble::from_bases(&bb84_bases(), None).unwrap()
    }

    fn all_mub_bases(n: usize) -> Vec<OrthonormalBasis> {
        let d = Dimension::new(n).unwrap();
        BasisLabel::all(d).into_iter().map(|l| mub_basis(d, l).unwrap()).collect()
    }

    fn all_mubs(n: usize) -> SignalEnsemble {
        SignalEnsemble::from_bases(&all_mub_bases(n), None).unwrap()
    }

    #[test]
    fn source_examples() {
        let src = build_source(&bb84()).unwrap();
        assert!(max_abs_diff(src.rho_a().matrix(), &(CMatrix::identity(2, 2) * cr(0.5))) < 1e-12);
        assert!(max_abs_diff(src.schmidt_basis(), &CMatrix::identity(2, 2)) < 1e-12);

        let zero = CVector::from_vec(vec![cr(1.0), cr(0.0)]);
        let single = SignalEnsemble::uniform(vec![zero]).unwrap();
        let src = build_source(&single).unwrap();
        assert_eq!(src.kappa(), &[1.0]);
        assert!(src.is_rank_deficient());
        let povm = alice_povm(&single, &src).unwrap();
        assert_eq!(povm.len(), 1);
        assert!((povm.elements()[0][(0, 0)] - cr(1.0)).norm() < 1e-12);

        // 3-MUB qutrit ensemble
        let d = Dimension::new(3).unwrap();
        let bases: Vec<_> = [BasisLabel::Z, BasisLabel::Beta(0), BasisLabel::Beta(1)]
            .into_iter()
            .map(|l| mub_basis(d, l).unwrap())
            .collect();
        let ens = SignalEnsemble::from_bases(&bases, None).unwrap();
        let src = build_source(&ens).unwrap();
        assert!(max_abs_diff(src.rho_a().matrix(), &(CMatrix::identity(3, 3) / cr(3.0))) < 1e-12);
    }

    #[test]
    fn complete_basis_povm_reduces_to_projectors() {
        let ens = bb84();
        let povm = alice_povm(&ens, &build_source(&ens).unwrap()).unwrap();
        for (a, phi) in povm.elements().iter().zip(ens.states()) {
            let expected = projector(&phi.map(|z| z.conj())) * cr(0.5);
            assert!(max_abs_diff(a, &expected) < 1e-12);
        }
    }

    #[test]
    fn naimark_consistency_random_ensembles() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for n in [2, 3, 4] {
            for _ in 0..10 {
                let states: Vec<_> = (0..n + 2).map(|_| random::pure_vector(n, &mut rng)).collect();
                let raw: Vec<f64> = (0..n + 2).map(|i| 1.0 + i as f64).collect();
                let total: f64 = raw.iter().sum();
                let ens = SignalEnsemble::new(states, raw.iter().map(|x| x / total).collect()).unwrap();
                let src = build_source(&ens).unwrap();
                assert!(!src.is_rank_deficient());
                let povm = alice_povm(&ens, &src).unwrap();
                let phi = projector(&src.state_vector());
                for ((a, s), &p) in povm.elements().iter().zip(ens.states()).zip(ens.probs()) {
                    let reduced = apply_and_trace_first(a, &phi, n, n);
                    assert!(max_abs_diff(&reduced, &(projector(s) * cr(p))) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn basis_sifting_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random::density(4, &mut rng);
        for bases in [bb84_bases(), all_mub_bases(2)] {
            let nb = bases.len();
            let ens = SignalEnsemble::from_bases(&bases, None).unwrap();
            let povm_a = alice_povm(&ens, &build_source(&ens).unwrap()).unwrap();
            let povm_b = bob_povm(&bases).unwrap();
            let plan = SiftingPlan::basis_sifting(&vec![2; nb]);
            let sifted = sift(&rho, &povm_a, &povm_b, &plan).unwrap();
            assert_eq!(sifted.branches.len(), nb);
            let kept: f64 = sifted.branches.iter().map(|b| b.weight).sum();
            assert!((kept + sifted.discarded - 1.0).abs() < 1e-12);
            for b in &sifted.branches {
                assert!((b.prob - 1.0 / nb as f64).abs() < 1e-12);
                assert!((b.weight - 1.0 / (nb * nb) as f64).abs() < 1e-12);
                assert!(max_abs_diff(b.rho_ab.matrix(), rho.matrix()) < 1e-12);
                let sum = b.alice.elements().iter().fold(CMatrix::zeros(2, 2), |acc, e| acc + e);
                assert!(max_abs_diff(&sum, &CMatrix::identity(2, 2)) < 1e-12);
                for (&x, e) in b.elements.iter().zip(b.alice.elements()) {
                    assert!(max_abs_diff(e, &(&povm_a.elements()[x] * cr(nb as f64))) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sifting_preserves_measurement_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ens = all_mubs(3);
        let povm_a = alice_povm(&ens, &build_source(&ens).unwrap()).unwrap();
        let povm_b = bob_povm(&all_mub_bases(3)).unwrap();
        let plan = SiftingPlan::basis_sifting(&[3, 3, 3, 3]);
        let rho = bell_diag_to_density(&random::bell_diagonal(Dimension::new(3).unwrap(), &mut rng));
        let sifted = sift(&rho, &povm_a, &povm_b, &plan).unwrap();
        for b in &sifted.branches {
            for (i, &x) in b.elements.iter().enumerate() {
                for (j, &y) in b.elements.iter().enumerate() {
                    let after = b.rho_ab.expectation(&kron(&b.alice.elements()[i], &b.bob.elements()[j])).re * b.weight;
                    let before = rho.expectation(&kron(&povm_a.elements()[x], &povm_b.elements()[y])).re;
                    assert!((after - before).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gstar_invariance_examples() {
        let d4 = point_group(PointGroup::Dihedral(2)).unwrap();
        assert!(check_gstar_invariance(&bb84(), &d4).unwrap().passed());
        let pauli = pauli_group(Dimension::new(2).unwrap());
        assert!(check_gstar_invariance(&all_mubs(2), &pauli).unwrap().passed());

        let skewed = SignalEnsemble::new(bb84().states().to_vec(), vec![0.4, 0.1, 0.25, 0.25]).unwrap();
        assert!(!check_gstar_invariance(&skewed, &d4).unwrap().passed());
    }

    #[test]
    fn protocol_file_round_trip() {
        let d = Dimension::new(3).unwrap();
        let bases = vec![mub_basis(d, BasisLabel::Z).unwrap(), mub_basis(d, BasisLabel::Beta(2)).unwrap()];
        let file = ProtocolFile::from_bases(&bases);
        let parsed = ProtocolFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.bases().unwrap().len(), 2);

        let bad = r#"{"d": 2, "bases": [[[[1,0],[0,0]],[[1,0],[0,0]]],[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#;
        assert!(ProtocolFile::from_json(bad).unwrap().bases().is_err());
        let wrong_sifting = r#"{"d": 1, "bases": [], "sifting": "lossy"}"#;
        assert!(ProtocolFile::from_json(wrong_sifting).unwrap().bases().is_err());
    }
}
