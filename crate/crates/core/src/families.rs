//! Protocol catalog and symmetrized attack families.
//!
//! MUB protocols are described by label sets `𝓛 ⊆ {Z, 0, …, d−1}`. For a
//! Bell-diagonal state `u[r][s]` the conditional error spectra are
//!
//! ```text
//! λ_y^Z = Σ_s u[y][s]          λ_y^β = Σ_r u[r][(y − βr) mod d]
//! ```
//!
//! and all rate quantities follow from them. Attack families are unions of
//! Bell-index classes sharing one weight; the error rate is linear in the
//! class weights.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpauli::{bell_vector, mub_basis, BasisLabel, Dimension, OrthonormalBasis, PauliIndex};
use crate::keyrate::RateEngine;
use crate::linalg::{conj_mat, cr, kron, projector, shannon_entropy, xlog2x, CMatrix};
use crate::source::{build_source, check_gstar_invariance, ProtocolFile, SignalEnsemble};
use crate::states::{bell_diag_to_density, BellDiagonalState};
use crate::symmetry::{
    bloch_state, commutant_basis, pauli_group, point_group, spin_half_rotation, CommutantBasis, GroupRep,
    PointGroup,
};

/// A basis-sifting protocol: orthonormal bases chosen uniformly, with
/// uniform signal probabilities.
#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    name: String,
    d: Dimension,
    bases: Vec<OrthonormalBasis>,
    labels: Vec<String>,
}

impl ProtocolSpec {
    pub fn new(name: impl Into<String>, bases: Vec<OrthonormalBasis>, labels: Vec<String>) -> Result<Self> {
        if bases.len() < 2 {
            return Err(Error::InvalidParameter("a protocol needs at least two bases".into()));
        }
        if labels.len() != bases.len() {
            return Err(Error::DimensionMismatch { expected: bases.len(), found: labels.len() });
        }
        let n = bases[0].dim();
        if let Some(b) = bases.iter().find(|b| b.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
        }
        Ok(Self {
            name: name.into(),
            d: Dimension::new(n)?,
            bases,
            labels,
        })
    }

    /// MUB protocol with the given labels in canonical order (`Z` first).
    pub fn mub(d: Dimension, labels: &[BasisLabel]) -> Result<Self> {
        let mut labels = labels.to_vec();
        labels.sort();
        labels.dedup();
        let bases = labels.iter().map(|&l| mub_basis(d, l)).collect::<Result<Vec<_>>>()?;
        let names: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        Self::new(format!("mub{{{}}}", names.join(",")), bases, names)
    }

    pub fn from_file(file: &ProtocolFile) -> Result<Self> {
        if file.probs.as_ref().is_some_and(|p| {
            let target = 1.0 / p.len().max(1) as f64;
            p.iter().any(|&x| (x - target).abs() > 1e-12)
        }) {
            return Err(Error::Unsupported("only uniform signal probabilities are supported".into()));
        }
        let bases = file.bases()?;
        let labels = (0..bases.len()).map(|i| i.to_string()).collect();
        Self::new("custom", bases, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> Dimension {
        self.d
    }

    pub fn bases(&self) -> &[OrthonormalBasis] {
        &self.bases
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ensemble(&self) -> Result<SignalEnsemble> {
        SignalEnsemble::from_bases(&self.bases, None)
    }

    /// Operator `E` with `Q(ρ) = tr(E ρ)`:
    /// `E = (1/|𝓛|) Σ_β Σ_{k≠k'} |φ*_k⟩⟨φ*_k| ⊗ |φ_k'⟩⟨φ_k'|`, conjugation taken
    /// in Alice's Schmidt basis.
    pub fn error_operator(&self) -> Result<CMatrix> {
        let source = build_source(&self.ensemble()?)?;
        if source.is_rank_deficient() {
            return Err(Error::RankDeficient { rank: source.rank(), dim: source.signal_dim() });
        }
        let n = self.d.get();
        let mut e = CMatrix::zeros(n * n, n * n);
        for basis in &self.bases {
            for (k, a) in basis.vectors().iter().enumerate() {
                let pa = projector(&source.conjugate_signal(a));
                for (k2, b) in basis.vectors().iter().enumerate() {
                    if k != k2 {
                        e += kron(&pa, &projector(b));
                    }
                }
            }
        }
        Ok(e / cr(self.bases.len() as f64))
    }

    /// `Q(ρ)`, linear in `ρ`.
    pub fn error_rate(&self, rho: &CMatrix) -> Result<f64> {
        Ok((self.error_operator()? * rho).trace().re)
    }
}

/// Conditional error spectra `Λ^α` per basis label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub entries: Vec<(BasisLabel, Vec<f64>)>,
}

impl SpectrumTable {
    pub fn get(&self, label: BasisLabel) -> Option<&[f64]> {
        self.entries.iter().find(|(l, _)| *l == label).map(|(_, v)| v.as_slice())
    }
}

pub fn conditional_spectrum(u: &BellDiagonalState, label: BasisLabel) -> Vec<f64> {
    let d = u.dim().get() as i64;
    (0..d)
        .map(|y| match label {
            BasisLabel::Z => (0..d).map(|s| u.get(y, s)).sum(),
            BasisLabel::Beta(beta) => (0..d).map(|r| u.get(r, y - beta as i64 * r)).sum(),
        })
        .collect()
}

pub fn spectrum_table(u: &BellDiagonalState, labels: &[BasisLabel]) -> SpectrumTable {
    SpectrumTable {
        entries: labels.iter().map(|&l| (l, conditional_spectrum(u, l))).collect(),
    }
}

/// `(Q, Ī, χ̄, r̄)` of a MUB protocol on a Bell-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormRates {
    pub q: f64,
    pub mutual_information: f64,
    pub holevo: f64,
    pub rate: f64,
}

pub fn mub_rate_closed_form(u: &BellDiagonalState, labels: &[BasisLabel]) -> Result<ClosedFormRates> {
    if labels.is_empty() {
        return Err(Error::InvalidParameter("empty label set".into()));
    }
    let d = u.dim();
    if let Some(l) = labels.iter().find(|l| matches!(l, BasisLabel::Beta(b) if *b >= d.get())) {
        return Err(Error::InvalidParameter(format!("basis label {l} out of range for d = {d}")));
    }
    let n = labels.len() as f64;
    let spectra: Vec<Vec<f64>> = labels.iter().map(|&l| conditional_spectrum(u, l)).collect();
    let q = 1.0 - spectra.iter().map(|s| s[0]).sum::<f64>() / n;
    let avg_h = spectra.iter().map(|s| shannon_entropy(s)).sum::<f64>() / n;
    let s_u = u.entropy();
    Ok(ClosedFormRates {
        q,
        mutual_information: d.log2() - avg_h,
        holevo: s_u - avg_h,
        rate: d.log2() - s_u,
    })
}

/// Bell indices sharing one weight, with the per-index error contribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenClass {
    pub name: String,
    pub members: Vec<PauliIndex>,
    pub error: f64,
}

/// Named class weights of a family point; absent classes are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FamilyParams {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

impl FamilyParams {
    pub fn as_vec(&self) -> Vec<f64> {
        [self.a, self.b, self.c].into_iter().flatten().collect()
    }

    /// Euclidean distance over the parameters present in both.
    pub fn distance(&self, other: &FamilyParams) -> f64 {
        let pairs = [(self.a, other.a), (self.b, other.b), (self.c, other.c)];
        pairs
            .iter()
            .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).powi(2)))
            .sum::<f64>()
            .sqrt()
    }
}

const FEAS_TOL: f64 = 1e-12;

/// Bell-diagonal states `Σ_c w_c Σ_{i∈c} |U_i⟩⟨U_i|` with `Σ_c m_c w_c = 1`
/// and `Σ_c m_c e_c w_c = Q`.
///
/// With two classes the state is fixed; with three, the weight of the last
/// class is the free parameter `t` and `w = base + t·direction`.
#[derive(Debug, Clone, Serialize)]
pub struct AttackFamily {
    d: Dimension,
    q: f64,
    classes: Vec<EigenClass>,
    base: Vec<f64>,
    direction: Vec<f64>,
    interval: (f64, f64),
}

impl AttackFamily {
    pub fn from_classes(d: Dimension, classes: Vec<EigenClass>, q: f64) -> Result<Self> {
        let n = d.get() * d.get();
        let mut seen = vec![false; n];
        for class in &classes {
            if class.members.is_empty() {
                return Err(Error::InfeasibleFamily(format!("class {} is empty", class.name)));
            }
            for idx in &class.members {
                let f = idx.flat(d);
                if f >= n || seen[f] {
                    return Err(Error::InfeasibleFamily("classes must partition the Bell indices".into()));
                }
                seen[f] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InfeasibleFamily("classes must cover every Bell index".into()));
        }
        if !(2..=3).contains(&classes.len()) {
            return Err(Error::Unsupported(format!(
                "families with {} classes (more than one free parameter)",
                classes.len()
            )));
        }
        let (lo, hi) = classes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.error), hi.max(c.error)));
        if !q.is_finite() || q < lo - FEAS_TOL || q > hi + FEAS_TOL {
            return Err(Error::InfeasibleQ { q, lo, hi });
        }
        let m: Vec<f64> = classes.iter().map(|c| c.members.len() as f64).collect();
        let e: Vec<f64> = classes.iter().map(|c| c.error).collect();
        let gap = e[1] - e[0];
        if gap.abs() < 1e-12 {
            return Err(Error::InfeasibleFamily("first two classes have equal error".into()));
        }
        let mut base = vec![(e[1] - q) / (m[0] * gap), (q - e[0]) / (m[1] * gap)];
        let mut direction = vec![0.0, 0.0];
        let mut interval = (0.0, 0.0);
        if classes.len() == 3 {
            direction[0] = m[2] * (e[2] - e[1]) / (m[0] * gap);
            direction[1] = m[2] * (e[0] - e[2]) / (m[1] * gap);
            base.push(0.0);
            direction.push(1.0);
            let (mut t_lo, mut t_hi) = (0.0f64, f64::INFINITY);
            for (&b0, &dir) in base.iter().zip(&direction) {
                if dir > 0.0 {
                    t_lo = t_lo.max(-b0 / dir);
                } else if dir < 0.0 {
                    t_hi = t_hi.min(-b0 / dir);
                } else if b0 < -FEAS_TOL {
                    t_hi = -1.0;
                }
            }
            if t_lo > t_hi + FEAS_TOL || !t_hi.is_finite() {
                return Err(Error::InfeasibleQ { q, lo, hi });
            }
            interval = (t_lo, t_hi.max(t_lo));
        } else if base.iter().any(|&w| w < -FEAS_TOL) {
            return Err(Error::InfeasibleQ { q, lo, hi });
        }
        Ok(Self { d, q, classes, base, direction, interval })
    }

    pub fn dim(&self) -> Dimension {
        self.d
    }

    pub fn target_q(&self) -> f64 {
        self.q
    }

    pub fn classes(&self) -> &[EigenClass] {
        &self.classes
    }

    pub fn n_free(&self) -> usize {
        self.classes.len() - 2
    }

    /// Feasible range of the free parameter; `(0, 0)` when there is none.
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Name of the free parameter, if any.
    pub fn free_parameter(&self) -> Option<&str> {
        (self.n_free() == 1).then(|| self.classes[2].name.as_str())
    }

    /// Class weights at `t`, with round-off negatives clamped.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.direction)
            .map(|(b, dir)| {
                let w = b + dir * t;
                if w < 0.0 && w > -1e-9 {
                    0.0
                } else {
                    w
                }
            })
            .collect()
    }

    pub fn state(&self, t: f64) -> Result<BellDiagonalState> {
        let weights = self.weights(t);
        let mut u = vec![0.0; self.d.get() * self.d.get()];
        for (class, &w) in self.classes.iter().zip(&weights) {
            for idx in &class.members {
                u[idx.flat(self.d)] = w;
            }
        }
        let total: f64 = u.iter().sum();
        if (total - 1.0).abs() < 1e-9 {
            u.iter_mut().for_each(|x| *x /= total);
        }
        BellDiagonalState::new(self.d, u)
    }

    pub fn params(&self, t: f64) -> FamilyParams {
        let weights = self.weights(t);
        let find = |name: &str| self.classes.iter().position(|c| c.name == name).map(|i| weights[i]);
        FamilyParams { a: find("a"), b: find("b"), c: find("c") }
    }

    /// Error rate of the family point, `Σ_c m_c e_c w_c`.
    pub fn error_rate(&self, t: f64) -> f64 {
        self.classes
            .iter()
            .zip(self.weights(t))
            .map(|(c, w)| c.members.len() as f64 * c.error * w)
            .sum()
    }

    /// `log₂ d − S(u)`: the rate of every MUB protocol on the family point.
    pub fn mub_rate(&self, t: f64) -> f64 {
        let weights = self.weights(t);
        let entropy: f64 = self
            .classes
            .iter()
            .zip(&weights)
            .map(|(c, &w)| -(c.members.len() as f64) * xlog2x(w))
            .sum();
        self.d.log2() - entropy
    }
}

fn class(name: &str, members: Vec<PauliIndex>, error: f64) -> EigenClass {
    EigenClass { name: name.into(), members, error }
}

fn identity_class() -> EigenClass {
    class("a", vec![PauliIndex { r: 0, s: 0 }], 0.0)
}

/// Two MUBs `{Z, 0}`: `a` on `(0,0)`, `b` on `(r,0),(0,r)`, `c` on `r,s ≥ 1`.
/// `Q = (d−1)b + (d−1)²c`; `c` is free.
pub fn family_2mubs(d: Dimension, q: f64) -> Result<AttackFamily> {
    let all: Vec<PauliIndex> = PauliIndex::all(d).collect();
    let b = all.iter().copied().filter(|i| (i.r == 0) != (i.s == 0)).collect();
    let c = all.iter().copied().filter(|i| i.r != 0 && i.s != 0).collect();
    AttackFamily::from_classes(d, vec![identity_class(), class("b", b, 0.5), class("c", c, 1.0)], q)
}

/// All `d+1` MUBs: `a` on `(0,0)`, `b` elsewhere; no free parameter.
pub fn family_d1mubs(d: Dimension, q: f64) -> Result<AttackFamily> {
    let n = d.get() as f64;
    let b = PauliIndex::all(d).filter(|i| i.r != 0 || i.s != 0).collect();
    AttackFamily::from_classes(d, vec![identity_class(), class("b", b, n / (n + 1.0))], q)
}

/// The `d` MUBs `{0, …, d−1}`: `a` on `(0,0)`, `b` on `r ≥ 1` (any `s`),
/// `c` on `(0, s ≥ 1)`. `Q = (d−1)²b + (d−1)c`; `c` is free.
pub fn family_dmubs(d: Dimension, q: f64) -> Result<AttackFamily> {
    let n = d.get() as f64;
    let b = PauliIndex::all(d).filter(|i| i.r != 0).collect();
    let c = PauliIndex::all(d).filter(|i| i.r == 0 && i.s != 0).collect();
    AttackFamily::from_classes(
        d,
        vec![identity_class(), class("b", b, (n - 1.0) / n), class("c", c, 1.0)],
        q,
    )
}

/// Closed-form optimum of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalAttack {
    pub params: FamilyParams,
    pub r_min: f64,
}

fn check_range(q: f64, hi: f64) -> Result<()> {
    if !q.is_finite() || q < 0.0 || q > hi + FEAS_TOL {
        return Err(Error::InfeasibleQ { q, lo: 0.0, hi });
    }
    Ok(())
}

/// `a = (1−Q)²`, `b = Q(1−Q)/(d−1)`, `c = Q²/(d−1)²`,
/// `r_min = log₂d + 2(1−Q)log₂(1−Q) + 2Q log₂(Q/(d−1))`.
///
/// `c` carries `(d−1)²`: it is the only choice that satisfies the
/// normalization with `(d−1)²` copies of `c` and reproduces `r_min`.
pub fn optimal_2mubs(d: Dimension, q: f64) -> Result<OptimalAttack> {
    let n = d.get() as f64;
    check_range(q, (n - 1.0) / n)?;
    let m = n - 1.0;
    let r_min = d.log2() + 2.0 * xlog2x(1.0 - q) + 2.0 * (xlog2x(q) - q * m.log2());
    Ok(OptimalAttack {
        params: FamilyParams {
            a: Some((1.0 - q).powi(2)),
            b: Some(q * (1.0 - q) / m),
            c: Some(q * q / (m * m)),
        },
        r_min,
    })
}

/// `a = 1 − (d+1)Q/d`, `b = Q/(d(d−1))`,
/// `r_min = log₂d + a log₂a + ((d+1)Q/d) log₂(Q/(d(d−1)))`.
pub fn optimal_d1mubs(d: Dimension, q: f64) -> Result<OptimalAttack> {
    let n = d.get() as f64;
    check_range(q, n / (n + 1.0))?;
    let a = (1.0 - (n + 1.0) * q / n).max(0.0);
    let scale = (n + 1.0) / n;
    let r_min = d.log2() + xlog2x(a) + scale * (xlog2x(q) - q * (n * (n - 1.0)).log2());
    Ok(OptimalAttack {
        params: FamilyParams { a: Some(a), b: Some(q / (n * (n - 1.0))), c: None },
        r_min,
    })
}

/// Qubit protocols built from antipodal pairs of Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QubitProtocol {
    SixState,
    Bb84,
    Cube,
    Icosahedron,
    Dodecahedron,
    /// `2n` states `(sin πx/n, 0, cos πx/n)`, `n` bases.
    Ngon(usize),
    /// Vertices `(±sinθ, ±cosθ, 0)` and `(0, ±cosθ, ±sinθ)`.
    Cuboid(f64),
}

impl fmt::Display for QubitProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QubitProtocol::SixState => write!(f, "sixstate"),
            QubitProtocol::Bb84 => write!(f, "bb84"),
            QubitProtocol::Cube => write!(f, "cube"),
            QubitProtocol::Icosahedron => write!(f, "icosahedron"),
            QubitProtocol::Dodecahedron => write!(f, "dodecahedron"),
            QubitProtocol::Ngon(n) => write!(f, "ngon({n})"),
            QubitProtocol::Cuboid(t) => write!(f, "cuboid({t})"),
        }
    }
}

impl QubitProtocol {
    /// Looks a protocol up by name; `ngon` needs `n`, `cuboid` needs `θ`.
    pub fn from_name(name: &str, n: Option<usize>, theta: Option<f64>) -> Result<Self> {
        let p = match name.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sixstate" | "6state" => QubitProtocol::SixState,
            "bb84" => QubitProtocol::Bb84,
            "cube" => QubitProtocol::Cube,
            "icosahedron" => QubitProtocol::Icosahedron,
            "dodecahedron" => QubitProtocol::Dodecahedron,
            "ngon" => QubitProtocol::Ngon(n.ok_or_else(|| Error::InvalidParameter("ngon needs n".into()))?),
            "cuboid" => {
                QubitProtocol::Cuboid(theta.ok_or_else(|| Error::InvalidParameter("cuboid needs theta".into()))?)
            }
            other => return Err(Error::InvalidParameter(format!("unknown qubit protocol '{other}'"))),
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            QubitProtocol::Ngon(n) if n < 2 => Err(Error::InvalidParameter("ngon needs n >= 2".into())),
            QubitProtocol::Cuboid(t) if !(t > 0.0 && t <= PI / 2.0 + 1e-12) => {
                Err(Error::InvalidParameter("cuboid needs theta in (0, pi/2]".into()))
            }
            _ => Ok(()),
        }
    }

    /// One Bloch vector per basis; the basis is `{|n⟩, |−n⟩}`.
    ///
    /// Orders: cube `(s₁, s₂, 1)/√3` for `(s₁,s₂) = (+,+), (+,−), (−,+), (−,−)`;
    /// icosahedron `(0,±1,φ), (1,±φ,0)… ` as listed in the code; cuboid
    /// `(sinθ, ±cosθ, 0)` then `(0, ±cosθ, sinθ)`.
    pub fn basis_directions(&self) -> Vec<[f64; 3]> {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        match *self {
            QubitProtocol::SixState => vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            QubitProtocol::Bb84 => QubitProtocol::Ngon(2).basis_directions(),
            QubitProtocol::Cube => vec![[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, 1.0]],
            QubitProtocol::Icosahedron => vec![
                [0.0, 1.0, phi],
                [0.0, -1.0, phi],
                [1.0, phi, 0.0],
                [-1.0, phi, 0.0],
                [phi, 0.0, 1.0],
                [phi, 0.0, -1.0],
            ],
            QubitProtocol::Dodecahedron => {
                let ip = 1.0 / phi;
                vec![
                    [1.0, 1.0, 1.0],
                    [1.0, -1.0, 1.0],
                    [-1.0, 1.0, 1.0],
                    [-1.0, -1.0, 1.0],
                    [0.0, phi, ip],
                    [0.0, phi, -ip],
                    [ip, 0.0, phi],
                    [-ip, 0.0, phi],
                    [phi, ip, 0.0],
                    [phi, -ip, 0.0],
                ]
            }
            QubitProtocol::Ngon(n) => (0..n)
                .map(|x| {
                    let t = PI * x as f64 / n as f64;
                    [t.sin(), 0.0, t.cos()]
                })
                .collect(),
            QubitProtocol::Cuboid(theta) => {
                let (s, c) = theta.sin_cos();
                vec![[s, c, 0.0], [s, -c, 0.0], [0.0, c, s], [0.0, -c, s]]
            }
        }
    }

    pub fn spec(&self) -> Result<ProtocolSpec> {
        self.validate()?;
        if *self == QubitProtocol::SixState {
            let d = Dimension::new(2)?;
            let mut spec = ProtocolSpec::mub(d, &BasisLabel::all(d))?;
            spec.name = self.to_string();
            return Ok(spec);
        }
        let dirs = self.basis_directions();
        let bases = dirs
            .iter()
            .map(|&n| OrthonormalBasis::new(vec![bloch_state(n), bloch_state(n.map(|x| -x))]))
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..dirs.len()).map(|i| i.to_string()).collect();
        ProtocolSpec::new(self.to_string(), bases, labels)
    }

    pub fn symmetry_group(&self) -> PointGroup {
        match *self {
            QubitProtocol::SixState | QubitProtocol::Cube => PointGroup::Octahedral,
            QubitProtocol::Icosahedron | QubitProtocol::Dodecahedron => PointGroup::Icosahedral,
            QubitProtocol::Bb84 => PointGroup::Dihedral(2),
            QubitProtocol::Ngon(n) => PointGroup::Dihedral(n),
            QubitProtocol::Cuboid(_) => PointGroup::Cuboid,
        }
    }

    /// Error rate in terms of the family weights: `2b` for the octahedral
    /// and icosahedral protocols, `b + c` for 2n-gons and
    /// `½(3b + c + (b − c)cos 2θ)` for the cuboid.
    pub fn printed_error_rate(&self, params: &FamilyParams) -> f64 {
        let b = params.b.unwrap_or(0.0);
        let c = params.c.unwrap_or(0.0);
        match *self {
            QubitProtocol::SixState | QubitProtocol::Cube | QubitProtocol::Icosahedron | QubitProtocol::Dodecahedron => {
                2.0 * b
            }
            QubitProtocol::Bb84 | QubitProtocol::Ngon(_) => b + c,
            QubitProtocol::Cuboid(theta) => 0.5 * (3.0 * b + c + (b - c) * (2.0 * theta).cos()),
        }
    }
}

/// Partitions the Bell indices into the classes spanned by a commutant that
/// is diagonal in the Bell basis.
pub fn bell_classes(d: Dimension, basis: &CommutantBasis) -> Result<Vec<Vec<PauliIndex>>> {
    let indices: Vec<PauliIndex> = PauliIndex::all(d).collect();
    let vectors: Vec<_> = indices.iter().map(|&i| bell_vector(d, i)).collect();
    let mut signatures = vec![Vec::with_capacity(basis.len()); indices.len()];
    for op in basis.ops() {
        for (i, vi) in vectors.iter().enumerate() {
            let w = op * vi;
            for (j, vj) in vectors.iter().enumerate() {
                let m = vj.dotc(&w);
                if i == j {
                    signatures[i].push(m.re);
                } else if m.norm() > 1e-9 {
                    return Err(Error::Unsupported("commutant is not diagonal in the Bell basis".into()));
                }
            }
        }
    }
    let mut classes: Vec<(Vec<f64>, Vec<PauliIndex>)> = Vec::new();
    for (idx, sig) in indices.into_iter().zip(signatures) {
        match classes
            .iter_mut()
            .find(|(s, _)| s.iter().zip(&sig).all(|(x, y)| (x - y).abs() < 1e-9))
        {
            Some((_, members)) => members.push(idx),
            None => classes.push((sig, vec![idx])),
        }
    }
    if classes.len() != basis.len() {
        return Err(Error::Unsupported(format!(
            "commutant of dimension {} does not split into Bell classes ({} found)",
            basis.len(),
            classes.len()
        )));
    }
    Ok(classes.into_iter().map(|(_, m)| m).collect())
}

/// Builds the attack family of a protocol from the commutant of `group`:
/// one class per minimal projection, with per-class error coefficients
/// read off the protocol's error functional. Classes are named `a` (the one
/// containing `(0,0)`), then `b`, `c` by smallest member index.
pub fn commutant_family(protocol: &ProtocolSpec, group: &GroupRep, q: f64) -> Result<AttackFamily> {
    let d = protocol.dim();
    if group.dim() != d.get() {
        return Err(Error::DimensionMismatch { expected: d.get(), found: group.dim() });
    }
    let mut classes = bell_classes(d, &commutant_basis(group))?;
    classes.sort_by_key(|members| members.iter().map(|i| i.flat(d)).min().unwrap_or(usize::MAX));
    let e = protocol.error_operator()?;
    let names = ["a", "b", "c", "d", "e", "f"];
    let mut out = Vec::with_capacity(classes.len());
    for (k, members) in classes.into_iter().enumerate() {
        let errors: Vec<f64> = members
            .iter()
            .map(|&i| {
                let v = bell_vector(d, i);
                v.dotc(&(&e * &v)).re
            })
            .collect();
        if errors.iter().any(|x| (x - errors[0]).abs() > 1e-9) {
            return Err(Error::Unsupported("error rate is not uniform on a commutant class".into()));
        }
        let name = names.get(k).copied().unwrap_or("x");
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        // round-off around the exact values 0 and 1
        let error = if mean.abs() < 1e-12 { 0.0 } else if (mean - 1.0).abs() < 1e-12 { 1.0 } else { mean };
        out.push(class(name, members, error));
    }
    AttackFamily::from_classes(d, out, q)
}

/// A protocol together with its symmetry-reduced family and a rate oracle.
#[derive(Debug, Clone)]
pub struct SymmetricProtocol {
    pub protocol: ProtocolSpec,
    pub group: GroupRep,
    pub group_name: String,
    engine: RateEngine,
}

impl SymmetricProtocol {
    pub fn new(protocol: ProtocolSpec, group: GroupRep, group_name: impl Into<String>) -> Result<Self> {
        let engine = RateEngine::new(&protocol)?;
        Ok(Self { protocol, group, group_name: group_name.into(), engine })
    }

    pub fn qubit(p: QubitProtocol) -> Result<Self> {
        let g = p.symmetry_group();
        Self::new(p.spec()?, point_group(g)?, g.to_string())
    }

    /// Picks, among candidate groups leaving the signal set invariant, the
    /// one with the smallest commutant.
    pub fn custom(protocol: ProtocolSpec) -> Result<Self> {
        let d = protocol.dim();
        let ensemble = protocol.ensemble()?;
        let mut candidates: Vec<(String, GroupRep)> = Vec::new();
        if d.get() == 2 {
            let mut names = vec![PointGroup::Icosahedral, PointGroup::Octahedral, PointGroup::Cuboid];
            names.extend((1..=8).map(PointGroup::Dihedral));
            for g in names {
                candidates.push((g.to_string(), point_group(g)?));
            }
        }
        candidates.push((format!("pauli({d})"), pauli_group(d)));
        let mut best: Option<(usize, String, GroupRep)> = None;
        for (name, g) in candidates {
            if !check_gstar_invariance(&ensemble, &g)?.passed() {
                continue;
            }
            let dim = commutant_basis(&g).len();
            if best.as_ref().is_none_or(|(bd, _, _)| dim < *bd) {
                best = Some((dim, name, g));
            }
        }
        let (_, name, group) =
            best.ok_or_else(|| Error::Unsupported("no candidate symmetry group leaves the signal set invariant".into()))?;
        Self::new(protocol, group, name)
    }

    pub fn family(&self, q: f64) -> Result<AttackFamily> {
        commutant_family(&self.protocol, &self.group, q)
    }

    /// Engine rate `r̄` of a Bell-diagonal state.
    pub fn rate(&self, u: &BellDiagonalState) -> Result<f64> {
        Ok(self.engine.evaluate(&bell_diag_to_density(u))?.rate)
    }

    pub fn engine(&self) -> &RateEngine {
        &self.engine
    }
}

/// Witness unitary mapping basis `from` of one protocol onto basis `to` of
/// another.
#[derive(Debug, Clone)]
pub struct Witness {
    pub from: usize,
    pub to: usize,
    pub unitary: CMatrix,
}

/// y-rotations taking each basis of `ngon(n)` onto a BB84 basis.
pub fn ngon_to_bb84_witnesses(n: usize) -> Vec<Witness> {
    (0..n)
        .map(|j| {
            let to = usize::from(j != 0);
            let angle = PI / 2.0 * to as f64 - PI * j as f64 / n as f64;
            Witness { from: j, to, unitary: spin_half_rotation([0.0, 1.0, 0.0], angle) }
        })
        .collect()
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SameAttackReport {
    /// Condition I: equal commutants.
    pub commutants_equal: bool,
    /// Condition II: equal error functionals on the commutant.
    pub error_functionals_equal: bool,
    pub max_error_gap: f64,
    /// Condition III: each witness preserves the commutant and maps
    /// `|𝓛| A_x` onto some `|𝓛'| A'_x'`; every basis on both sides is covered.
    pub witnesses_valid: bool,
    pub failures: Vec<String>,
}

impl SameAttackReport {
    pub fn passed(&self) -> bool {
        self.commutants_equal && self.error_functionals_equal && self.witnesses_valid
    }
}

/// Checks the three conditions under which two protocols share their optimal
/// attack.
pub fn check_same_attack(
    p: &SymmetricProtocol,
    p2: &SymmetricProtocol,
    witnesses: &[Witness],
) -> Result<SameAttackReport> {
    let mut report = SameAttackReport::default();
    let basis = commutant_basis(&p.group);
    let basis2 = commutant_basis(&p2.group);
    report.commutants_equal =
        basis.len() == basis2.len() && crate::linalg::max_abs_diff(&basis.projector(), &basis2.projector()) < 1e-9;

    let (e, e2) = (p.protocol.error_operator()?, p2.protocol.error_operator()?);
    report.max_error_gap = basis
        .ops()
        .iter()
        .map(|op| ((&e * op).trace() - (&e2 * op).trace()).norm())
        .fold(0.0, f64::max);
    report.error_functionals_equal = report.max_error_gap < 1e-9;

    let src = build_source(&p.protocol.ensemble()?)?;
    let src2 = build_source(&p2.protocol.ensemble()?)?;
    let mut covered = vec![false; p.protocol.bases().len()];
    let mut covered2 = vec![false; p2.protocol.bases().len()];
    for w in witnesses {
        let (Some(from), Some(to)) = (p.protocol.bases().get(w.from), p2.protocol.bases().get(w.to)) else {
            report.failures.push(format!("witness {}->{} references a missing basis", w.from, w.to));
            continue;
        };
        let w_star = conj_mat(&w.unitary);
        let action = kron(&w_star, &w.unitary);
        if basis.ops().iter().any(|op| basis.residual(&(&action * op * action.adjoint())) > 1e-9) {
            report.failures.push(format!("witness {}->{} does not preserve the commutant", w.from, w.to));
        }
        let targets: Vec<CMatrix> = to.vectors().iter().map(|v| projector(&src2.conjugate_signal(v))).collect();
        for (k, v) in from.vectors().iter().enumerate() {
            let image = &w_star * projector(&src.conjugate_signal(v)) * w.unitary.transpose();
            if !targets.iter().any(|t| crate::linalg::max_abs_diff(&image, t) < 1e-9) {
                report.failures.push(format!("witness {}->{} does not map element {k}", w.from, w.to));
            }
        }
        covered[w.from] = true;
        covered2[w.to] = true;
    }
    if covered.iter().chain(&covered2).any(|c| !c) {
        report.failures.push("witnesses do not cover every basis".into());
    }
    report.witnesses_valid = report.failures.is_empty();
    Ok(report)
}
