//! Finite unitary groups, twirling and commutants of `{U_g* ⊗ U_g}`.
//!
//! Point groups enter through their spin-1/2 representations, which are
//! projective; elements are stored once per global phase class.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gpauli::{pauli_matrix, Dimension, PauliIndex};
use crate::linalg::{c, conj_mat, cr, is_hermitian, is_unitary, kron, max_abs_diff, CMatrix, CVector, C64};
use crate::states::{DensityOperator, Purification};

const PHASE_TOL: f64 = 1e-9;
/// Generated groups may not exceed this many elements.
pub const MAX_GROUP_ORDER: usize = 10_000;

/// `true` when `a = e^{iθ} b` for some `θ`.
pub fn equal_up_to_phase(a: &CMatrix, b: &CMatrix) -> bool {
    let d = a.nrows() as f64;
    let overlap: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    (overlap.norm() - d).abs() < PHASE_TOL
}

/// Unitary representation of a finite group, modulo global phases.
#[derive(Debug, Clone)]
pub struct GroupRep {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl GroupRep {
    /// Validates unitarity, presence of the identity and closure.
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let dim = elements.first().map(|u| u.nrows()).ok_or_else(|| Error::InvalidParameter("empty group".into()))?;
        for u in &elements {
            if u.nrows() != dim || !is_unitary(u, 1e-10) {
                return Err(Error::InvalidParameter("group elements must be unitary and of equal size".into()));
            }
        }
        let rep = Self { dim, elements };
        if !rep.contains(&CMatrix::identity(dim, dim)) {
            return Err(Error::InvalidParameter("group does not contain the identity".into()));
        }
        if !rep.is_closed() {
            return Err(Error::InvalidParameter("elements are not closed under multiplication".into()));
        }
        Ok(rep)
    }

    /// Closure of the generators under multiplication.
    pub fn from_generators(generators: &[CMatrix]) -> Result<Self> {
        let dim = generators.first().map(|g| g.nrows()).ok_or_else(|| Error::InvalidParameter("no generators".into()))?;
        let mut elements = vec![CMatrix::identity(dim, dim)];
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier].clone();
            for g in generators {
                let product = g * &current;
                if !elements.iter().any(|e| equal_up_to_phase(e, &product)) {
                    if elements.len() >= MAX_GROUP_ORDER {
                        return Err(Error::GroupTooLarge(MAX_GROUP_ORDER));
                    }
                    elements.push(product);
                }
            }
            frontier += 1;
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn contains(&self, u: &CMatrix) -> bool {
        self.elements.iter().any(|e| equal_up_to_phase(e, u))
    }

    /// Closure under products and inverses, up to phase.
    pub fn is_closed(&self) -> bool {
        self.elements.iter().all(|a| {
            self.contains(&a.adjoint()) && self.elements.iter().all(|b| self.contains(&(a * b)))
        })
    }

    /// The operators `U_g* ⊗ U_g`.
    pub fn conjugate_tensor_actions(&self) -> Vec<CMatrix> {
        self.elements.iter().map(|u| kron(&conj_mat(u), u)).collect()
    }
}

/// `{U_{r,s}}`, `d²` elements.
pub fn pauli_group(d: Dimension) -> GroupRep {
    GroupRep {
        dim: d.get(),
        elements: PauliIndex::all(d).map(|idx| pauli_matrix(d, idx)).collect(),
    }
}

/// Named rotation groups acting on a qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointGroup {
    /// Rotations of the cube/octahedron, 24 elements.
    Octahedral,
    /// Rotations of the icosahedron/dodecahedron, 60 elements.
    Icosahedral,
    /// Symmetries of a regular 2n-gon in the x-z plane: rotations about `y`
    /// by `πk/n` and π-rotations about in-plane axes; `4n` elements.
    Dihedral(usize),
    /// Symmetries of the rectangular cuboid protocol: a 4-fold `y` axis and
    /// a 2-fold `x` axis.
    Cuboid,
}

impl fmt::Display for PointGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointGroup::Octahedral => write!(f, "octahedral"),
            PointGroup::Icosahedral => write!(f, "icosahedral"),
            PointGroup::Dihedral(n) => write!(f, "dihedral({n})"),
            PointGroup::Cuboid => write!(f, "cuboid"),
        }
    }
}

impl FromStr for PointGroup {
    type Err = Error;

    /// Accepts `octahedral`, `icosahedral`, `cuboid`, `dihedral(n)` and `dihedral:n`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "octahedral" | "o" => return Ok(PointGroup::Octahedral),
            "icosahedral" | "i" => return Ok(PointGroup::Icosahedral),
            "cuboid" => return Ok(PointGroup::Cuboid),
            _ => {}
        }
        let arg = s
            .strip_prefix("dihedral")
            .map(|rest| rest.trim_start_matches([':', '(']).trim_end_matches(')'))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown point group '{s}'")))?;
        let n: usize = arg.parse().map_err(|_| Error::InvalidParameter(format!("bad dihedral order '{arg}'")))?;
        if n < 1 {
            return Err(Error::InvalidParameter("dihedral order must be positive".into()));
        }
        Ok(PointGroup::Dihedral(n))
    }
}

/// `cos(φ/2) 𝟙 − i sin(φ/2) n·σ`
pub fn spin_half_rotation(axis: [f64; 3], angle: f64) -> CMatrix {
    let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [x, y, z] = axis.map(|v| v / norm);
    let (s, co) = (angle / 2.0).sin_cos();
    CMatrix::from_row_slice(
        2,
        2,
        &[c(co, -s * z), c(-s * y, -s * x), c(s * y, -s * x), c(co, s * z)],
    )
}

pub fn point_group(group: PointGroup) -> Result<GroupRep> {
    use std::f64::consts::PI;
    let gens = match group {
        PointGroup::Octahedral => vec![
            spin_half_rotation([0.0, 0.0, 1.0], PI / 2.0),
            spin_half_rotation([1.0, 0.0, 0.0], PI / 2.0),
        ],
        PointGroup::Icosahedral => {
            let phi = (1.0 + 5f64.sqrt()) / 2.0;
            vec![
                spin_half_rotation([0.0, 1.0, phi], 2.0 * PI / 5.0),
                spin_half_rotation([1.0, 1.0, 1.0], 2.0 * PI / 3.0),
            ]
        }
        PointGroup::Dihedral(n) => {
            if n == 0 {
                return Err(Error::InvalidParameter("dihedral order must be positive".into()));
            }
            vec![
                spin_half_rotation([0.0, 1.0, 0.0], PI / n as f64),
                spin_half_rotation([0.0, 0.0, 1.0], PI),
            ]
        }
        PointGroup::Cuboid => vec![
            spin_half_rotation([0.0, 1.0, 0.0], PI / 2.0),
            spin_half_rotation([1.0, 0.0, 0.0], PI),
        ],
    };
    GroupRep::from_generators(&gens)
}

/// Bloch vector `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` of a qubit state.
pub fn bloch_vector(v: &CVector) -> [f64; 3] {
    let (a, b) = (v[0], v[1]);
    let off = a.conj() * b;
    [2.0 * off.re, 2.0 * off.im, a.norm_sqr() - b.norm_sqr()]
}

/// Qubit state with the given unit Bloch vector, phase fixed so that the
/// `|0⟩` amplitude is real and non-negative.
pub fn bloch_state(n: [f64; 3]) -> CVector {
    let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [x, y, z] = n.map(|v| v / norm);
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    CVector::from_vec(vec![cr((theta / 2.0).cos()), C64::from_polar((theta / 2.0).sin(), phi)])
}

/// `(1/|G|) Σ_g (U_g*⊗U_g) M (U_g*⊗U_g)†`
pub fn twirl_operator(m: &CMatrix, group: &GroupRep) -> CMatrix {
    let n = m.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for w in group.conjugate_tensor_actions() {
        acc += &w * m * w.adjoint();
    }
    acc / cr(group.order() as f64)
}

pub fn twirl(rho: &DensityOperator, group: &GroupRep) -> Result<DensityOperator> {
    let d = group.dim();
    if rho.dim() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, found: rho.dim() });
    }
    DensityOperator::new(twirl_operator(rho.matrix(), group))
}

/// Hilbert-Schmidt orthonormal Hermitian basis of the commutant of
/// `{U_g* ⊗ U_g}` on the `d²`-dimensional two-party space.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    dim: usize,
    ops: Vec<CMatrix>,
}

const COMMUTANT_TOL: f64 = 1e-8;

fn flatten(m: &CMatrix) -> CVector {
    CVector::from_iterator(m.len(), m.iter().cloned())
}

impl CommutantBasis {
    /// Dimension of the commutant.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Single-system dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// Orthogonal projector onto the span, acting on flattened operators.
    pub fn projector(&self) -> CMatrix {
        let n = self.ops.first().map(|m| m.len()).unwrap_or(0);
        let mut p = CMatrix::zeros(n, n);
        for op in &self.ops {
            let v = flatten(op);
            p += &v * v.adjoint();
        }
        p
    }

    /// Hilbert-Schmidt distance of `m` from the span.
    pub fn residual(&self, m: &CMatrix) -> f64 {
        let mut r = m.clone();
        for op in &self.ops {
            let coeff: C64 = op.iter().zip(m.iter()).map(|(a, b)| a.conj() * b).sum();
            r -= op * coeff;
        }
        r.norm()
    }

    /// Largest `‖[B_i, U_g*⊗U_g]‖` over basis ops and group elements.
    pub fn max_commutator(&self, group: &GroupRep) -> f64 {
        let mut worst = 0.0f64;
        for w in group.conjugate_tensor_actions() {
            for op in &self.ops {
                worst = worst.max(max_abs_diff(&(&w * op), &(op * &w)));
            }
        }
        worst
    }
}

/// Twirls the Hermitian matrix units of the two-party operator space and
/// Gram-Schmidt orthonormalizes the results.
pub fn commutant_basis(group: &GroupRep) -> CommutantBasis {
    let n = group.dim() * group.dim();
    let actions = group.conjugate_tensor_actions();
    let order = cr(group.order() as f64);
    // T(E_ij) = (1/|G|) Σ_g W_g[:,i] W_g[:,j]†
    let twirl_unit = |i: usize, j: usize| {
        let mut acc = CMatrix::zeros(n, n);
        for w in &actions {
            let (ci, cj) = (w.column(i), w.column(j));
            acc += ci * cj.adjoint();
        }
        acc / order
    };
    let mut ops: Vec<CMatrix> = Vec::new();
    let push = |candidate: CMatrix, ops: &mut Vec<CMatrix>| {
        let mut r = candidate;
        for _ in 0..2 {
            for op in ops.iter() {
                let coeff: f64 = op.iter().zip(r.iter()).map(|(a, b)| (a.conj() * b).re).sum();
                r -= op * cr(coeff);
            }
        }
        let norm = r.norm();
        if norm > COMMUTANT_TOL {
            let mut unit = r / cr(norm);
            // restore exact Hermiticity
            unit = (&unit + unit.adjoint()) * cr(0.5);
            ops.push(unit);
        }
    };
    let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        push(twirl_unit(i, i), &mut ops);
        for j in (i + 1)..n {
            let t = twirl_unit(i, j);
            let t_dag = t.adjoint();
            push((&t + &t_dag) * cr(sqrt_half), &mut ops);
            push((&t - &t_dag) * c(0.0, sqrt_half), &mut ops);
        }
    }
    debug_assert!(ops.iter().all(|op| is_hermitian(op, 1e-10)));
    CommutantBasis { dim: group.dim(), ops }
}

/// Compares the projectors onto the two commutants within `1e-9`.
pub fn commutant_equal(g1: &GroupRep, g2: &GroupRep) -> bool {
    if g1.dim() != g2.dim() {
        return false;
    }
    let (a, b) = (commutant_basis(g1), commutant_basis(g2));
    a.len() == b.len() && max_abs_diff(&a.projector(), &b.projector()) < 1e-9
}

/// Outcome of [`check_strong_covariance`].
#[derive(Debug, Clone, Default)]
pub struct CovarianceReport {
    pub checked: usize,
    pub failures: Vec<usize>,
    pub max_deviation: f64,
}

impl CovarianceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `(U_g* ⊗ U_g ⊗ U_g ⊗ U_g*)|Ψ⟩ = |Ψ⟩` for every group element, the
/// four factors being `A, B, C, D`.
pub fn check_strong_covariance(psi: &Purification, group: &GroupRep) -> Result<CovarianceReport> {
    let d = group.dim();
    let (ab, e) = psi.partition();
    if ab != d * d || e != d * d {
        return Err(Error::DimensionMismatch { expected: d.pow(4), found: ab * e });
    }
    let mut report = CovarianceReport::default();
    for (g, u) in group.elements().iter().enumerate() {
        let u_star = conj_mat(u);
        let op = kron(&kron(&u_star, u), &kron(u, &u_star));
        let moved = &op * psi.vector();
        let dev = (moved - psi.vector()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        report.max_deviation = report.max_deviation.max(dev);
        if dev > 1e-10 {
            report.failures.push(g);
        }
        report.checked += 1;
    }
    Ok(report)
}
