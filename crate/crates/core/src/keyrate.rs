//! Devetak-Winter rate engine: joint distributions, mutual information,
//! Holevo quantity and the sifted effective key rate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::ProtocolSpec;
use crate::linalg::{kron, projector, shannon_entropy, CMatrix, STRUCT_TOL};
use crate::source::{alice_povm, bob_povm, build_source, sift, Povm, SiftingPlan, SourceState};
use crate::states::{conditional_state, von_neumann_entropy, DensityOperator, ZERO_PROB};

const CLIP: f64 = 1e-12;
const NEGATIVE_TOL: f64 = 1e-10;

/// Classical joint distribution `p(x, y)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    table: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, table: Vec<f64>) -> Result<Self> {
        if table.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: table.len() });
        }
        if let Some(&bad) = table.iter().find(|&&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!("probability {bad} out of range")));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidParameter(format!("joint distribution sums to {total}")));
        }
        Ok(Self { rows, cols, table })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.table[x * self.cols + y]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.table.chunks(self.cols).map(|row| row.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.cols).map(|y| (0..self.rows).map(|x| self.get(x, y)).sum()).collect()
    }

    /// `Σ_{x≠y} p(x, y)`
    pub fn mismatch(&self) -> f64 {
        let mut acc = 0.0;
        for x in 0..self.rows {
            for y in 0..self.cols {
                if x != y {
                    acc += self.get(x, y);
                }
            }
        }
        acc
    }
}

/// `p(x, y) = tr{(A_x ⊗ B_y) ρ}`, clipped at `-1e-12` and renormalized.
pub fn joint_distribution(rho: &DensityOperator, povm_a: &Povm, povm_b: &Povm) -> Result<JointDistribution> {
    let (da, db) = (povm_a.dim(), povm_b.dim());
    if da * db != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: da * db });
    }
    let mut table = Vec::with_capacity(povm_a.len() * povm_b.len());
    for a in povm_a.elements() {
        for b in povm_b.elements() {
            let p = rho.expectation(&kron(a, b)).re;
            if p < -NEGATIVE_TOL {
                return Err(Error::InvalidParameter(format!("negative probability {p:e}")));
            }
            table.push(if p < CLIP { p.max(0.0) } else { p });
        }
    }
    let total: f64 = table.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbability(total));
    }
    table.iter_mut().for_each(|p| *p /= total);
    JointDistribution::new(povm_a.len(), povm_b.len(), table)
}

/// `I(X:Y) = H(X) + H(Y) − H(X,Y)` in bits.
pub fn mutual_information(p: &JointDistribution) -> f64 {
    (shannon_entropy(&p.marginal_x()) + shannon_entropy(&p.marginal_y()) - shannon_entropy(p.table())).max(0.0)
}

/// `χ = S(ρ_AB) − Σ_x p(x) S(ρ_B^x)` for rank-one `A_x`.
pub fn holevo_ab(rho: &DensityOperator, povm_a: &Povm) -> Result<f64> {
    let decomposition = povm_a
        .rank_one_decomposition()
        .ok_or_else(|| Error::UnsupportedMeasurement("Alice's POVM elements must be rank one".into()))?;
    let db = rho.dim() / povm_a.dim();
    if povm_a.dim() * db != rho.dim() || db != povm_a.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: povm_a.dim() * povm_a.dim() });
    }
    let mut conditional = 0.0;
    for (weight, v) in decomposition {
        if weight < ZERO_PROB {
            continue;
        }
        match conditional_state(rho, &v) {
            Ok((p, rho_b)) => conditional += weight * p * von_neumann_entropy(&rho_b),
            Err(Error::ZeroProbability(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(von_neumann_entropy(rho) - conditional)
}

/// Contribution of one announcement `u`.
#[derive(Debug, Clone, Serialize)]
pub struct BranchRate {
    pub label: usize,
    /// Renormalized `p(u)`.
    pub prob: f64,
    pub mutual_information: f64,
    pub holevo: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub per_branch: Vec<BranchRate>,
    /// `Ī`
    pub mutual_information: f64,
    /// `χ̄`
    pub holevo: f64,
    /// `r̄ = Ī − χ̄`
    pub rate: f64,
    pub q: f64,
    pub f_b: f64,
    /// Probability of events dropped by sifting.
    pub discarded: f64,
}

/// Precomputed measurements of a basis-sifting protocol; evaluate many
/// states against the same protocol without rebuilding the source.
#[derive(Debug, Clone)]
pub struct RateEngine {
    source: SourceState,
    alice: Povm,
    bob: Povm,
    plan: SiftingPlan,
    /// Per basis: Alice's `|φ*⟩⟨φ*|` and Bob's `|φ⟩⟨φ|`.
    projectors: Vec<(Vec<CMatrix>, Vec<CMatrix>)>,
}

impl RateEngine {
    pub fn new(protocol: &ProtocolSpec) -> Result<Self> {
        let ensemble = protocol.ensemble()?;
        let source = build_source(&ensemble)?;
        if source.is_rank_deficient() {
            return Err(Error::RankDeficient { rank: source.rank(), dim: source.signal_dim() });
        }
        let alice = alice_povm(&ensemble, &source)?;
        let bob = bob_povm(protocol.bases())?;
        let plan = SiftingPlan::basis_sifting(&protocol.bases().iter().map(|b| b.dim()).collect::<Vec<_>>());
        let projectors = protocol
            .bases()
            .iter()
            .map(|basis| {
                let a = basis.vectors().iter().map(|v| projector(&source.conjugate_signal(v))).collect();
                let b = basis.vectors().iter().map(projector).collect();
                (a, b)
            })
            .collect();
        Ok(Self { source, alice, bob, plan, projectors })
    }

    pub fn source(&self) -> &SourceState {
        &self.source
    }

    pub fn alice(&self) -> &Povm {
        &self.alice
    }

    pub fn bob(&self) -> &Povm {
        &self.bob
    }

    /// `(Q, F_B)`: probability that Bob's outcome differs from (matches)
    /// Alice's within a basis, averaged uniformly over bases.
    pub fn error_rate_and_fidelity(&self, rho: &DensityOperator) -> (f64, f64) {
        let mut q = 0.0;
        let mut f = 0.0;
        for (alice, bob) in &self.projectors {
            for (k, a) in alice.iter().enumerate() {
                for (k2, b) in bob.iter().enumerate() {
                    let p = rho.expectation(&kron(a, b)).re;
                    if k == k2 {
                        f += p;
                    } else {
                        q += p;
                    }
                }
            }
        }
        let n = self.projectors.len() as f64;
        (q / n, f / n)
    }

    pub fn evaluate(&self, rho: &DensityOperator) -> Result<RateReport> {
        let sifted = sift(rho, &self.alice, &self.bob, &self.plan)?;
        let mut per_branch = Vec::with_capacity(sifted.branches.len());
        for branch in &sifted.branches {
            let joint = joint_distribution(&branch.rho_ab, &branch.alice, &branch.bob)?;
            let i = mutual_information(&joint);
            let chi = holevo_ab(&branch.rho_ab, &branch.alice)?;
            per_branch.push(BranchRate {
                label: branch.label,
                prob: branch.prob,
                mutual_information: i,
                holevo: chi,
                rate: i - chi,
            });
        }
        let mutual_information: f64 = per_branch.iter().map(|b| b.prob * b.mutual_information).sum();
        let holevo: f64 = per_branch.iter().map(|b| b.prob * b.holevo).sum();
        let (q, f_b) = self.error_rate_and_fidelity(rho);
        Ok(RateReport {
            per_branch,
            mutual_information,
            holevo,
            rate: mutual_information - holevo,
            q,
            f_b,
            discarded: sifted.discarded,
        })
    }
}

/// Effective key rate of a basis-sifting protocol on `ρ_AB`, with keys
/// extracted from each announcement branch independently.
pub fn sifted_rate(rho: &DensityOperator, protocol: &ProtocolSpec) -> Result<RateReport> {
    RateEngine::new(protocol)?.evaluate(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpauli::{bell_vector, mub_basis, BasisLabel, Dimension, PauliIndex};
    use crate::linalg::{binary_entropy, cr, CVector};
    use crate::states::{bell_diag_to_density, BellDiagonalState};

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn z_povm(d: usize) -> Povm {
        Povm::from_basis(&mub_basis(dim(d), BasisLabel::Z).unwrap()).unwrap()
    }

    #[test]
    fn joint_distribution_examples() {
        let phi = DensityOperator::pure(&bell_vector(dim(2), PauliIndex { r: 0, s: 0 })).unwrap();
        let p = joint_distribution(&phi, &z_povm(2), &z_povm(2)).unwrap();
        assert_eq!(p.table().len(), 4);
        assert!((p.get(0, 0) - 0.5).abs() < 1e-12 && (p.get(1, 1) - 0.5).abs() < 1e-12);
        assert!(p.mismatch().abs() < 1e-12);

        let mixed = DensityOperator::maximally_mixed(4);
        let p = joint_distribution(&mixed, &z_povm(2), &z_povm(2)).unwrap();
        assert!(p.table().iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn mutual_information_examples() {
        for d in [2usize, 3, 5] {
            let mut t = vec![0.0; d * d];
            for k in 0..d {
                t[k * d + k] = 1.0 / d as f64;
            }
            let p = JointDistribution::new(d, d, t).unwrap();
            assert!((mutual_information(&p) - (d as f64).log2()).abs() < 1e-12);
        }
        let product = JointDistribution::new(2, 3, vec![0.1, 0.2, 0.1, 0.15, 0.3, 0.15]).unwrap();
        assert!(mutual_information(&product).abs() < 1e-12);
        let bsc = JointDistribution::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        assert!((mutual_information(&bsc) - 0.278_071_905_112_638).abs() < 1e-12);
        assert!((mutual_information(&bsc) - (1.0 - binary_entropy(0.2))).abs() < 1e-14);
    }

    #[test]
    fn holevo_examples() {
        let v = CVector::from_vec(vec![cr(0.6), cr(0.8)]);
        let product = DensityOperator::pure(&v.kronecker(&v)).unwrap();
        assert!(holevo_ab(&product, &z_povm(2)).unwrap().abs() < 1e-10);

        let mixed = DensityOperator::maximally_mixed(4);
        assert!((holevo_ab(&mixed, &z_povm(2)).unwrap() - 1.0).abs() < 1e-10);

        let noiseless = bell_diag_to_density(&BellDiagonalState::delta(dim(2), PauliIndex { r: 0, s: 0 }));
        assert!(holevo_ab(&noiseless, &z_povm(2)).unwrap().abs() < 1e-10);
    }

    #[test]
    fn holevo_rejects_higher_rank_elements() {
        let trivial = Povm::new(vec![CMatrix::identity(2, 2)]).unwrap();
        let err = holevo_ab(&DensityOperator::maximally_mixed(4), &trivial).unwrap_err();
        assert!(matches!(err, Error::UnsupportedMeasurement(_)));
    }

    #[test]
    fn joint_distribution_validation() {
        assert!(JointDistribution::new(2, 2, vec![0.5, 0.6, -0.1, 0.0]).is_err());
        assert!(JointDistribution::new(2, 2, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(JointDistribution::new(2, 1, vec![0.5, 0.5, 0.0]).is_err());
    }

    #[test]
    fn sifted_rate_examples() {
        let bb84 = ProtocolSpec::mub(dim(2), &[BasisLabel::Z, BasisLabel::Beta(0)]).unwrap();
        let u = BellDiagonalState::new(dim(2), vec![0.81, 0.09, 0.09, 0.01]).unwrap();
        let report = sifted_rate(&bell_diag_to_density(&u), &bb84).unwrap();
        assert!((report.q - 0.1).abs() < 1e-12);
        assert!((report.rate - (1.0 - 2.0 * binary_entropy(0.1))).abs() < 1e-9);
        assert!((report.rate - (report.mutual_information - report.holevo)).abs() < 1e-12);
        assert!((report.f_b - (1.0 - report.q)).abs() < 1e-12);
        assert_eq!(report.per_branch.len(), 2);

        for d in [2usize, 3, 5] {
            let labels = BasisLabel::all(dim(d));
            let spec = ProtocolSpec::mub(dim(d), &labels).unwrap();
            let noiseless = bell_diag_to_density(&BellDiagonalState::delta(dim(d), PauliIndex { r: 0, s: 0 }));
            let report = sifted_rate(&noiseless, &spec).unwrap();
            assert!((report.rate - (d as f64).log2()).abs() < 1e-9);
            assert!(report.q.abs() < 1e-12);
        }
    }
}
