//! Seeded property suites behind `symqkd verify`.
//!
//! Every check runs on its own generator derived from the suite seed, so a
//! single failing check can be replayed without running the others.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{mub_rate_closed_form, ProtocolSpec, QubitProtocol, SymmetricProtocol};
use crate::gpauli::{
    basis_operator, bell_vector, mub_basis, omega_phase_between, pauli_matrix, BasisLabel, Dimension, OrthonormalBasis,
    PauliIndex,
};
use crate::keyrate::{holevo_ab, joint_distribution, mutual_information, sifted_rate};
use crate::linalg::{kron, max_abs_diff, projector, CMatrix};
use crate::optimize::{minimize_rate, Scheme};
use crate::random;
use crate::source::{alice_povm, bob_povm, build_source, check_gstar_invariance, sift, Povm, SiftingPlan};
use crate::states::{bell_diag_to_density, purify_bell_diagonal, von_neumann_entropy, DensityOperator};
use crate::symmetry::{check_strong_covariance, commutant_basis, pauli_group, point_group, twirl, GroupRep, PointGroup};

/// Random instances per randomized check.
pub const INSTANCES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Gpauli,
    Rates,
    Symmetry,
    Theorems,
}

impl Suite {
    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Gpauli, Suite::Rates, Suite::Symmetry, Suite::Theorems],
            s => vec![s],
        }
    }

    fn salt(self) -> u64 {
        match self {
            Suite::All => 0,
            Suite::Gpauli => 1,
            Suite::Rates => 2,
            Suite::Symmetry => 3,
            Suite::Theorems => 4,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::All => "all",
            Suite::Gpauli => "gpauli",
            Suite::Rates => "rates",
            Suite::Symmetry => "symmetry",
            Suite::Theorems => "theorems",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(Suite::All),
            "gpauli" => Ok(Suite::Gpauli),
            "rates" => Ok(Suite::Rates),
            "symmetry" => Ok(Suite::Symmetry),
            "theorems" => Ok(Suite::Theorems),
            other => Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
        }
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.instances > 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn instances(&self) -> usize {
        self.checks.iter().map(|c| c.instances).sum()
    }

    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, s: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|r| r.suite == s)
    }
}

/// Accumulates deviations against a tolerance.
struct Tally {
    name: &'static str,
    tolerance: f64,
    instances: usize,
    violations: usize,
    max_deviation: f64,
    detail: Option<String>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally { name, tolerance, instances: 0, violations: 0, max_deviation: 0.0, detail: None }
    }

    fn record(&mut self, deviation: f64) {
        self.instances += 1;
        if deviation.is_nan() || deviation > self.tolerance {
            self.violations += 1;
        }
        if deviation.is_nan() {
            self.max_deviation = f64::NAN;
        } else if !self.max_deviation.is_nan() {
            self.max_deviation = self.max_deviation.max(deviation);
        }
    }

    /// Records an `Err` as a violation instead of aborting the suite.
    fn record_result(&mut self, deviation: Result<f64>) {
        match deviation {
            Ok(x) => self.record(x),
            Err(e) => {
                log::warn!("{}: {e}", self.name);
                self.record(f64::INFINITY);
            }
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name.into(),
            instances: self.instances,
            violations: self.violations,
            max_deviation: self.max_deviation,
            tolerance: self.tolerance,
            detail: self.detail,
        }
    }
}

fn dim(d: usize) -> Dimension {
    Dimension::new(d).expect("suite dimensions are valid")
}

fn check_rng(seed: u64, suite: Suite, check: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (suite.salt() << 56) ^ check.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs the requested suites with the given seed.
pub fn run(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let mut suites = Vec::new();
    for s in suite.expand() {
        let checks = match s {
            Suite::Gpauli => gpauli_suite(),
            Suite::Rates => rates_suite(seed)?,
            Suite::Symmetry => symmetry_suite(seed)?,
            Suite::Theorems => theorems_suite(seed)?,
            Suite::All => unreachable!(),
        };
        suites.push(SuiteReport { suite: s, checks });
    }
    Ok(VerifyReport { seed, suites })
}

/// [`run`] with the seed taken from `QKD_SEED`.
pub fn run_default(suite: Suite) -> Result<VerifyReport> {
    run(suite, random::seed_from_env())
}

// ---------------------------------------------------------------- gpauli

fn gpauli_suite() -> Vec<CheckOutcome> {
    let mut unitarity = Tally::new("unitarity", 1e-12);
    for d in [2, 3, 5, 7, 11, 13] {
        let d = dim(d);
        let id = CMatrix::identity(d.get(), d.get());
        for idx in PauliIndex::all(d) {
            let u = pauli_matrix(d, idx);
            unitarity.record(max_abs_diff(&(u.adjoint() * &u), &id));
        }
    }

    let mut closure = Tally::new("closure up to phase", 0.0);
    for d in [2, 3, 5, 7] {
        let d = dim(d);
        let all: Vec<PauliIndex> = PauliIndex::all(d).collect();
        for &a in &all {
            let ua = pauli_matrix(d, a);
            for &b in &all {
                let prod = &ua * pauli_matrix(d, b);
                let target = pauli_matrix(d, PauliIndex::new(d, (a.r + b.r) as i64, (a.s + b.s) as i64));
                closure.record(if omega_phase_between(d, &prod, &target, 1e-12).is_some() { 0.0 } else { 1.0 });
            }
        }
    }

    let mut bell = Tally::new("bell basis orthonormal", 1e-12);
    for d in [2, 3, 5, 7] {
        let d = dim(d);
        let vecs: Vec<_> = PauliIndex::all(d).map(|i| bell_vector(d, i)).collect();
        let gram = CMatrix::from_fn(vecs.len(), vecs.len(), |i, j| vecs[i].dotc(&vecs[j]));
        bell.record(max_abs_diff(&gram, &CMatrix::identity(vecs.len(), vecs.len())));
    }

    let mut unbiased = Tally::new("mutual unbiasedness", 1e-12);
    let mut eigen = Tally::new("eigenbasis property", 1e-10);
    let mut permute = Tally::new("pauli permutes basis", 1e-10);
    for d in [2, 3, 5, 7] {
        let d = dim(d);
        let labels = BasisLabel::all(d);
        let bases: Vec<OrthonormalBasis> = labels.iter().map(|&l| mub_basis(d, l).expect("prime d")).collect();
        let target = 1.0 / (d.get() as f64).sqrt();
        for i in 0..bases.len() {
            for j in (i + 1)..bases.len() {
                let mut worst: f64 = 0.0;
                for u in bases[i].vectors() {
                    for v in bases[j].vectors() {
                        worst = worst.max((u.dotc(v).norm() - target).abs());
                    }
                }
                unbiased.record(worst);
            }
        }
        for (l, b) in labels.iter().zip(&bases) {
            let op = basis_operator(d, *l);
            for v in b.vectors() {
                eigen.record((v.dotc(&(&op * v)).norm() - 1.0).abs());
            }
        }
        for idx in PauliIndex::all(d) {
            let u = pauli_matrix(d, idx);
            for b in &bases {
                for v in b.vectors() {
                    let moved = &u * v;
                    let best = b.vectors().iter().map(|w| w.dotc(&moved).norm()).fold(0.0, f64::max);
                    permute.record((1.0 - best).abs());
                }
            }
        }
    }

    vec![unitarity.finish(), closure.finish(), bell.finish(), unbiased.finish(), eigen.finish(), permute.finish()]
}

// ---------------------------------------------------------------- rates

fn rates_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let mut closed = Tally::new("closed form vs engine", 1e-9);
    let mut emergence = Tally::new("full-set rate = log d - S", 1e-9);
    let mut rng = check_rng(seed, Suite::Rates, 0);
    let cases: Vec<(usize, Scheme)> = [2usize, 3, 5]
        .iter()
        .flat_map(|&d| [Scheme::TwoMubs, Scheme::DMubs, Scheme::D1Mubs].map(|s| (d, s)))
        .collect();
    let protocols: Vec<ProtocolSpec> =
        cases.iter().map(|&(d, s)| s.protocol(dim(d))).collect::<Result<Vec<_>>>()?;
    for i in 0..INSTANCES {
        let k = i % cases.len();
        let (d, scheme) = cases[k];
        let d = dim(d);
        let u = random::bell_diagonal(d, &mut rng);
        let rho = bell_diag_to_density(&u);
        let report = sifted_rate(&rho, &protocols[k]);
        let cf = mub_rate_closed_form(&u, &scheme.labels(d));
        closed.record_result(report.as_ref().map_err(clone_err).and_then(|r| {
            let cf = cf.as_ref().map_err(clone_err)?;
            Ok((r.rate - cf.rate).abs().max((r.q - cf.q).abs()).max((r.mutual_information - cf.mutual_information).abs()))
        }));
        if scheme == Scheme::D1Mubs {
            emergence.record_result(
                report.as_ref().map_err(clone_err).map(|r| (r.rate - (d.log2() - u.entropy())).abs()),
            );
        }
    }
    out.push(closed.finish());
    out.push(emergence.finish());

    let mut identities = Tally::new("report identities", 1e-12);
    let mut conservation = Tally::new("sifting conservation", 1e-12);
    let mut equivalence = Tally::new("measurement equivalence", 1e-10);
    let mut rng = check_rng(seed, Suite::Rates, 1);
    let qubits = [QubitProtocol::Bb84, QubitProtocol::SixState, QubitProtocol::Ngon(3), QubitProtocol::Cube];
    let specs: Vec<ProtocolSpec> = qubits.iter().map(|p| p.spec()).collect::<Result<Vec<_>>>()?;
    let mub3 = Scheme::TwoMubs.protocol(dim(3))?;
    for i in 0..INSTANCES {
        let spec = if i % 5 == 4 { &mub3 } else { &specs[i % 4] };
        let n = spec.dim().get();
        let rho = random::density_with_uniform_marginal(n, &mut rng);
        identities.record_result(sifted_rate(&rho, spec).map(|r| {
            (r.rate - (r.mutual_information - r.holevo)).abs().max((r.f_b - (1.0 - r.q)).abs())
        }));
        let res = (|| -> Result<(f64, f64)> {
            let src = build_source(&spec.ensemble()?)?;
            let a = alice_povm(&spec.ensemble()?, &src)?;
            let b = bob_povm(spec.bases())?;
            let plan = SiftingPlan::basis_sifting(&spec.bases().iter().map(|b| b.dim()).collect::<Vec<_>>());
            let sifted = sift(&rho, &a, &b, &plan)?;
            let total: f64 = sifted.branches.iter().map(|br| br.weight).sum::<f64>() + sifted.discarded;
            let mut worst: f64 = 0.0;
            for br in &sifted.branches {
                for (ia, &xa) in br.elements.iter().enumerate() {
                    for (ib, &yb) in br.elements.iter().enumerate() {
                        let lhs = br.weight
                            * br.rho_ab.expectation(&kron(&br.alice.elements()[ia], &br.bob.elements()[ib])).re;
                        let rhs = rho.expectation(&kron(&a.elements()[xa], &b.elements()[yb])).re;
                        worst = worst.max((lhs - rhs).abs());
                    }
                }
            }
            Ok(((total - 1.0).abs(), worst))
        })();
        match res {
            Ok((c, e)) => {
                conservation.record(c);
                equivalence.record(e);
            }
            Err(e) => {
                conservation.record_result(Err(clone_err(&e)));
                equivalence.record_result(Err(e));
            }
        }
    }
    out.push(identities.finish());
    out.push(conservation.finish());
    out.push(equivalence.finish());

    let mut sound = Tally::new("optimizer soundness", 1e-9);
    let mut rng = check_rng(seed, Suite::Rates, 2);
    for i in 0..INSTANCES {
        let scheme = [Scheme::TwoMubs, Scheme::DMubs][i % 2];
        let d = dim([2usize, 3, 5][(i / 2) % 3]);
        let q = rng.random_range(0.0..0.9 * scheme.max_q(d));
        let res = (|| -> Result<f64> {
            let f = scheme.family(d, q)?;
            let rate = |u: &crate::states::BellDiagonalState| Ok(d.log2() - u.entropy());
            let opt = minimize_rate(&f, rate)?;
            let (lo, hi) = f.interval();
            let mut worst: f64 = 0.0;
            for _ in 0..5 {
                let t = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                worst = worst.max(opt.r_min - rate(&f.state(t)?)?);
            }
            Ok(worst.max(0.0))
        })();
        sound.record_result(res);
    }
    out.push(sound.finish());

    Ok(out)
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidParameter(e.to_string())
}

// ---------------------------------------------------------------- symmetry

fn symmetry_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let mut dims = Tally::new("commutant dimensions", 0.0);
    let mut text = Vec::new();
    let expected: [(&str, GroupRep, usize); 5] = [
        ("pauli(2)", pauli_group(dim(2)), 4),
        ("pauli(3)", pauli_group(dim(3)), 9),
        ("octahedral", point_group(PointGroup::Octahedral)?, 2),
        ("icosahedral", point_group(PointGroup::Icosahedral)?, 2),
        ("dihedral(2)", point_group(PointGroup::Dihedral(2))?, 3),
    ];
    for (name, g, want) in &expected {
        let got = commutant_basis(g).len();
        dims.record(if got == *want { 0.0 } else { 1.0 });
        text.push(format!("{name}={got}"));
    }
    dims.detail = Some(text.join(" "));
    out.push(dims.finish());

    // Lemma 4 on the signal sets themselves, plus its consequence for rates:
    // rates are constant on G*-orbits and the twirl never increases them.
    let cases: Vec<(SymmetricProtocol, GroupRep)> = [
        QubitProtocol::Bb84,
        QubitProtocol::SixState,
        QubitProtocol::Ngon(3),
        QubitProtocol::Cube,
        QubitProtocol::Cuboid(0.6),
    ]
    .into_iter()
    .map(|p| {
        let sp = SymmetricProtocol::qubit(p)?;
        let g = point_group(p.symmetry_group())?;
        Ok((sp, g))
    })
    .chain([Scheme::D1Mubs, Scheme::TwoMubs].into_iter().map(|s| {
        let spec = s.protocol(dim(3))?;
        let sp = SymmetricProtocol::new(spec, pauli_group(dim(3)), "pauli(3)")?;
        Ok((sp, pauli_group(dim(3))))
    }))
    .collect::<Result<Vec<_>>>()?;

    let mut gstar = Tally::new("G* invariance of Alice POVM", 0.0);
    for (sp, g) in &cases {
        let ens = sp.protocol.ensemble()?;
        let rep = check_gstar_invariance(&ens, g)?;
        gstar.record(if rep.passed() { 0.0 } else { 1.0 });
    }
    let skewed = {
        let spec = QubitProtocol::Bb84.spec()?;
        let states: Vec<_> = spec.bases().iter().flat_map(|b| b.vectors().to_vec()).collect();
        crate::source::SignalEnsemble::new(states, vec![0.4, 0.1, 0.25, 0.25])?
    };
    let neg = check_gstar_invariance(&skewed, &point_group(PointGroup::Dihedral(2))?)?;
    gstar.record(if neg.passed() { 1.0 } else { 0.0 });
    gstar.detail = Some("includes skewed-probability negative control".into());
    out.push(gstar.finish());

    let mut orbit = Tally::new("rate constant on G* orbits", 1e-9);
    let mut reduce = Tally::new("twirl does not raise rate", 1e-9);
    let mut idem = Tally::new("twirl idempotent", 1e-12);
    let mut commute = Tally::new("twirl commutes with group", 1e-12);
    let mut rng = check_rng(seed, Suite::Symmetry, 0);
    let actions: Vec<Vec<CMatrix>> = cases.iter().map(|(_, g)| g.conjugate_tensor_actions()).collect();
    for i in 0..INSTANCES {
        let k = i % cases.len();
        let (sp, g) = &cases[k];
        let n = sp.protocol.dim().get();
        let rho = random::density_with_uniform_marginal(n, &mut rng);
        let w = &actions[k][rng.random_range(0..actions[k].len())];
        let res = (|| -> Result<(f64, f64, f64, f64)> {
            let r0 = sp.engine().evaluate(&rho)?.rate;
            let r1 = sp.engine().evaluate(&rho.conjugate_by(w)?)?.rate;
            let tw = twirl(&rho, g)?;
            let rt = sp.engine().evaluate(&tw)?.rate;
            let tw2 = twirl(&tw, g)?;
            let comm = actions[k]
                .iter()
                .map(|w| max_abs_diff(&(w * tw.matrix()), &(tw.matrix() * w)))
                .fold(0.0, f64::max);
            Ok(((r0 - r1).abs(), (rt - r0).max(0.0), max_abs_diff(tw.matrix(), tw2.matrix()), comm))
        })();
        match res {
            Ok((a, b, c, e)) => {
                orbit.record(a);
                reduce.record(b);
                idem.record(c);
                commute.record(e);
            }
            Err(e) => {
                let msg = e.to_string();
                for t in [&mut orbit, &mut reduce, &mut idem, &mut commute] {
                    t.record_result(Err(Error::InvalidParameter(msg.clone())));
                }
            }
        }
    }
    out.extend([orbit.finish(), reduce.finish(), idem.finish(), commute.finish()]);

    let mut cov = Tally::new("strong covariance", 1e-10);
    let mut rng = check_rng(seed, Suite::Symmetry, 1);
    let groups: Vec<(Dimension, GroupRep)> = [2usize, 3].iter().map(|&d| (dim(d), pauli_group(dim(d)))).collect();
    for i in 0..INSTANCES {
        let (d, g) = &groups[i % groups.len()];
        let u = random::bell_diagonal(*d, &mut rng);
        let psi = purify_bell_diagonal(&u);
        cov.record_result(check_strong_covariance(&psi, g).map(|r| r.max_deviation));
    }
    out.push(cov.finish());

    Ok(out)
}

// ---------------------------------------------------------------- theorems

/// Two measurement settings with rank-one Alice elements.
fn random_povms<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<(Povm, Povm)> {
    let ua = random::unitary(d, rng);
    let ub = random::unitary(d, rng);
    let a = Povm::new((0..d).map(|k| projector(&ua.column(k).into_owned())).collect())?;
    let b = Povm::new((0..d).map(|k| projector(&ub.column(k).into_owned())).collect())?;
    Ok((a, b))
}

fn info_pair(rho: &DensityOperator, a: &Povm, b: &Povm) -> Result<(f64, f64)> {
    Ok((mutual_information(&joint_distribution(rho, a, b)?), holevo_ab(rho, a)?))
}

fn theorems_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut convex = Tally::new("weak convexity of I", 1e-10);
    let mut concave = Tally::new("concavity of chi", 1e-10);
    let mut rng = check_rng(seed, Suite::Theorems, 0);
    for i in 0..INSTANCES {
        let d = [2usize, 3][i % 2];
        let res = (|| -> Result<(f64, f64)> {
            let (a, b) = random_povms(d, &mut rng)?;
            let rho = random::density_with_uniform_marginal(d, &mut rng);
            let sigma = random::density_with_uniform_marginal(d, &mut rng);
            let lambda: f64 = rng.random_range(0.0..=1.0);
            let mix = rho.mix(&sigma, lambda)?;
            let (i_r, x_r) = info_pair(&rho, &a, &b)?;
            let (i_s, x_s) = info_pair(&sigma, &a, &b)?;
            let (i_m, x_m) = info_pair(&mix, &a, &b)?;
            let conv = i_m - (lambda * i_r + (1.0 - lambda) * i_s);
            let conc = (lambda * x_r + (1.0 - lambda) * x_s) - x_m;
            Ok((conv.max(0.0), conc.max(0.0)))
        })();
        match res {
            Ok((a, b)) => {
                convex.record(a);
                concave.record(b);
            }
            Err(e) => {
                convex.record_result(Err(clone_err(&e)));
                concave.record_result(Err(e));
            }
        }
    }

    let mut unitary = Tally::new("unitary transform invariance", 1e-10);
    let mut rng = check_rng(seed, Suite::Theorems, 1);
    for i in 0..INSTANCES {
        let d = [2usize, 3][i % 2];
        let res = (|| -> Result<f64> {
            let (a, b) = random_povms(d, &mut rng)?;
            let rho = random::density(d * d, &mut rng);
            let ua = random::unitary(d, &mut rng);
            let ub = random::unitary(d, &mut rng);
            let moved = rho.conjugate_by(&kron(&ua, &ub))?;
            // rotated(u) gives U† E U, so pass U† to get U E U†
            let a2 = a.rotated(&ua.adjoint())?;
            let b2 = b.rotated(&ub.adjoint())?;
            let (i0, x0) = info_pair(&rho, &a, &b)?;
            let (i1, x1) = info_pair(&moved, &a2, &b2)?;
            Ok((i0 - i1).abs().max((x0 - x1).abs()))
        })();
        unitary.record_result(res);
    }

    let mut noiseless = Tally::new("noiseless holevo vanishes", 1e-10);
    for d in [2usize, 3, 5] {
        let dd = dim(d);
        let u = crate::states::BellDiagonalState::delta(dd, PauliIndex::new(dd, 0, 0));
        let rho = bell_diag_to_density(&u);
        let a = Povm::from_basis(&mub_basis(dd, BasisLabel::Z)?)?;
        noiseless.record_result(holevo_ab(&rho, &a).map(f64::abs));
        noiseless.record(von_neumann_entropy(&rho).abs());
    }

    Ok(vec![convex.finish(), concave.finish(), unitary.finish(), noiseless.finish()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::All, Suite::Gpauli, Suite::Rates, Suite::Symmetry, Suite::Theorems] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn gpauli_suite_passes() {
        let r = run(Suite::Gpauli, 1).unwrap();
        assert!(r.passed(), "{:#?}", r);
    }

    #[test]
    fn tally_counts_errors_as_violations() {
        let mut t = Tally::new("x", 1e-3);
        t.record(1e-4);
        t.record_result(Err(Error::InvalidParameter("boom".into())));
        let c = t.finish();
        assert_eq!((c.instances, c.violations), (2, 1));
        assert!(!c.passed());
    }

    #[test]
    fn all_suites_pass_with_default_seed() {
        let r = run(Suite::All, random::DEFAULT_SEED).unwrap();
        for s in &r.suites {
            for c in &s.checks {
                assert!(c.passed(), "{}/{}: {:?}", s.suite, c.name, c);
            }
        }
        let sym = r.suite(Suite::Symmetry).unwrap();
        assert!(sym.check("strong covariance").unwrap().instances >= INSTANCES);
    }
}
