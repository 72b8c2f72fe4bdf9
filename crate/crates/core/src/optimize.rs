//! Rate minimization over attack families and zero-rate thresholds.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{
    family_2mubs, family_d1mubs, family_dmubs, optimal_2mubs, optimal_d1mubs, AttackFamily, FamilyParams,
    ProtocolSpec,
};
use crate::gpauli::{BasisLabel, Dimension};
use crate::keyrate::RateEngine;
use crate::states::{bell_diag_to_density, BellDiagonalState};

pub const PARAM_TOL: f64 = 1e-10;
pub const COARSE_POINTS: usize = 64;
const BOUNDARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Converged,
    Boundary,
    Infeasible,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::Boundary => "boundary",
            Status::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    /// Free parameter at the optimum; empty for fully constrained families.
    pub theta_star: Vec<f64>,
    pub r_min: f64,
    #[serde(skip)]
    pub state: BellDiagonalState,
    pub params: FamilyParams,
    pub iterations: usize,
    pub status: Status,
}

/// Golden-section minimization of `f` on `[lo, hi]`.
///
/// Returns `(x, f(x), iterations)`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iterations = 0;
    while b - a > tol && iterations < 200 {
        // ties move towards the smaller parameter
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        iterations += 1;
    }
    if f1 <= f2 {
        (x1, f1, iterations)
    } else {
        (x2, f2, iterations)
    }
}

/// Minimizes `rate` over the family.
///
/// With a free parameter, a 64-point grid locates the best bracket and
/// golden-section search refines it to `1e-10`.
pub fn minimize_rate<F>(family: &AttackFamily, rate: F) -> Result<OptimizationResult>
where
    F: Fn(&BellDiagonalState) -> Result<f64>,
{
    let (lo, hi) = family.interval();
    let eval = |t: f64| -> Result<f64> { rate(&family.state(t)?) };
    if family.n_free() == 0 || hi - lo < PARAM_TOL {
        let t = lo;
        let state = family.state(t)?;
        return Ok(OptimizationResult {
            theta_star: if family.n_free() == 0 { vec![] } else { vec![t] },
            r_min: rate(&state)?,
            state,
            params: family.params(t),
            iterations: 0,
            status: Status::Converged,
        });
    }

    let grid: Vec<f64> = (0..COARSE_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (COARSE_POINTS - 1) as f64)
        .collect();
    let values = grid.iter().map(|&t| eval(t)).collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(COARSE_POINTS - 1)];
    let mut failure = None;
    let (mut t, mut r, iterations) = golden_section(
        |t| match eval(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        a,
        b,
        PARAM_TOL,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if values[best] <= r {
        t = grid[best];
        r = values[best];
    }
    let status = if t - lo < BOUNDARY_TOL || hi - t < BOUNDARY_TOL {
        Status::Boundary
    } else {
        Status::Converged
    };
    Ok(OptimizationResult {
        theta_star: vec![t],
        r_min: r,
        state: family.state(t)?,
        params: family.params(t),
        iterations: iterations + COARSE_POINTS,
        status,
    })
}

/// Smallest `Q` in `(lo, hi]` with `rate(Q) = 0`: a 200-point scan locates
/// the first sign change, bisection refines it to `1e-8`.
pub fn threshold_q<F: Fn(f64) -> Result<f64>>(rate: F, lo: f64, hi: f64) -> Result<f64> {
    const SCAN: usize = 200;
    let r0 = rate(lo)?;
    if r0 <= 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut prev = lo;
    for k in 1..=SCAN {
        let q = lo + (hi - lo) * k as f64 / SCAN as f64;
        if rate(q)? <= 0.0 {
            let (mut a, mut b) = (prev, q);
            while b - a > 1e-8 {
                let m = 0.5 * (a + b);
                if rate(m)? > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev = q;
    }
    Err(Error::NoSignChange { lo, hi })
}

/// MUB protocol schemes: two bases `{Z, 0}`, the `d` bases `{0, …, d−1}`, or
/// all `d+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    #[serde(rename = "2")]
    TwoMubs,
    #[serde(rename = "d")]
    DMubs,
    #[serde(rename = "d+1")]
    D1Mubs,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::TwoMubs => "2",
            Scheme::DMubs => "d",
            Scheme::D1Mubs => "d+1",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2" => Ok(Scheme::TwoMubs),
            "d" => Ok(Scheme::DMubs),
            "d+1" => Ok(Scheme::D1Mubs),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}' (expected 2, d or d+1)"))),
        }
    }
}

impl Scheme {
    pub fn labels(&self, d: Dimension) -> Vec<BasisLabel> {
        match self {
            Scheme::TwoMubs => vec![BasisLabel::Z, BasisLabel::Beta(0)],
            Scheme::DMubs => (0..d.get()).map(BasisLabel::Beta).collect(),
            Scheme::D1Mubs => BasisLabel::all(d),
        }
    }

    pub fn family(&self, d: Dimension, q: f64) -> Result<AttackFamily> {
        match self {
            Scheme::TwoMubs => family_2mubs(d, q),
            Scheme::DMubs => family_dmubs(d, q),
            Scheme::D1Mubs => family_d1mubs(d, q),
        }
    }

    /// Largest `Q` at which the analytic optimum is defined.
    pub fn max_q(&self, d: Dimension) -> f64 {
        let n = d.get() as f64;
        match self {
            Scheme::TwoMubs | Scheme::DMubs => (n - 1.0) / n,
            Scheme::D1Mubs => n / (n + 1.0),
        }
    }

    pub fn protocol(&self, d: Dimension) -> Result<ProtocolSpec> {
        ProtocolSpec::mub(d, &self.labels(d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Closed-form optimum where one exists, numeric otherwise.
    Analytic,
    /// Numeric minimization of `log₂d − S(u)`.
    Numeric,
    /// Numeric minimization of the density-matrix engine rate.
    Engine,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::Numeric => "numeric",
            Method::Engine => "engine",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "analytic" => Ok(Method::Analytic),
            "numeric" => Ok(Method::Numeric),
            "engine" => Ok(Method::Engine),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// One evaluated point of a rate curve.
#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub q: f64,
    pub rate: f64,
    pub params: FamilyParams,
    pub status: Status,
    /// Computed by a closed-form optimum rather than a search.
    pub analytic: bool,
}

impl RatePoint {
    pub fn infeasible(q: f64) -> Self {
        Self { q, rate: f64::NAN, params: FamilyParams::default(), status: Status::Infeasible, analytic: false }
    }
}

/// Optimal rate of a MUB scheme at one error rate.
pub fn scheme_rate(scheme: Scheme, d: Dimension, q: f64, method: Method) -> Result<RatePoint> {
    if method == Method::Analytic {
        let optimum = match scheme {
            Scheme::TwoMubs => Some(optimal_2mubs(d, q)?),
            Scheme::D1Mubs => Some(optimal_d1mubs(d, q)?),
            Scheme::DMubs => None,
        };
        if let Some(o) = optimum {
            return Ok(RatePoint { q, rate: o.r_min, params: o.params, status: Status::Converged, analytic: true });
        }
    }
    let family = scheme.family(d, q)?;
    let result = if method == Method::Engine {
        let engine = RateEngine::new(&scheme.protocol(d)?)?;
        minimize_rate(&family, |u| Ok(engine.evaluate(&bell_diag_to_density(u))?.rate))?
    } else {
        minimize_rate(&family, |u| Ok(d.log2() - u.entropy()))?
    };
    Ok(RatePoint { q, rate: result.r_min, params: result.params, status: result.status, analytic: false })
}

/// Rates over a `Q` grid, computed in parallel and returned in ascending `Q`.
/// Infeasible points are recorded rather than failing the sweep.
pub fn sweep(scheme: Scheme, d: Dimension, grid: &[f64], method: Method) -> Vec<RatePoint> {
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.par_iter()
        .map(|&q| scheme_rate(scheme, d, q, method).unwrap_or_else(|_| RatePoint::infeasible(q)))
        .collect()
}

/// Zero-rate threshold of a MUB scheme.
pub fn scheme_threshold(scheme: Scheme, d: Dimension, method: Method) -> Result<f64> {
    threshold_q(|q| Ok(scheme_rate(scheme, d, q, method)?.rate), 0.0, scheme.max_q(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::binary_entropy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn mub_rate(d: Dimension) -> impl Fn(&BellDiagonalState) -> Result<f64> {
        move |u| Ok(d.log2() - u.entropy())
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx, _) = golden_section(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9 && fx < 1e-18);
    }

    #[test]
    fn fully_constrained_family() {
        let f = family_d1mubs(dim(3), 0.1).unwrap();
        let r = minimize_rate(&f, mub_rate(dim(3))).unwrap();
        assert!((r.r_min - optimal_d1mubs(dim(3), 0.1).unwrap().r_min).abs() < 1e-14);
        assert!(r.theta_star.is_empty());
    }

    #[test]
    fn two_mub_optimum() {
        let f = family_2mubs(dim(2), 0.1).unwrap();
        let r = minimize_rate(&f, mub_rate(dim(2))).unwrap();
        assert!((r.r_min - 0.062_009).abs() < 1e-5);
        assert!((r.r_min - (1.0 - 2.0 * binary_entropy(0.1))).abs() < 1e-12);
        assert!(r.params.distance(&FamilyParams { a: Some(0.81), b: Some(0.09), c: Some(0.01) }) < 1e-6);
        assert_eq!(r.status, Status::Converged);

        let f = family_2mubs(dim(3), 0.05).unwrap();
        let r = minimize_rate(&f, mub_rate(dim(3))).unwrap();
        assert!((r.r_min - optimal_2mubs(dim(3), 0.05).unwrap().r_min).abs() < 1e-7);
    }

    #[test]
    fn optimizer_is_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (scheme, d, q) in [(Scheme::TwoMubs, 3, 0.08), (Scheme::DMubs, 3, 0.05), (Scheme::DMubs, 5, 0.12)] {
            let f = scheme.family(dim(d), q).unwrap();
            let rate = mub_rate(dim(d));
            let r = minimize_rate(&f, &rate).unwrap();
            let (lo, hi) = f.interval();
            for _ in 0..1000 {
                let t = rng.random_range(lo..=hi);
                assert!(rate(&f.state(t).unwrap()).unwrap() >= r.r_min - 1e-9);
            }
        }
    }

    #[test]
    fn dmubs_optimum_location_is_reported() {
        let f = family_dmubs(dim(3), 0.05).unwrap();
        let rate = mub_rate(dim(3));
        let r = minimize_rate(&f, &rate).unwrap();
        let (lo, hi) = f.interval();
        match r.status {
            Status::Converged => {
                assert!(r.r_min < rate(&f.state(lo).unwrap()).unwrap());
                assert!(r.r_min < rate(&f.state(hi).unwrap()).unwrap());
            }
            Status::Boundary => {}
            Status::Infeasible => panic!("feasible family"),
        }
    }

    #[test]
    fn thresholds() {
        let q2 = scheme_threshold(Scheme::TwoMubs, dim(2), Method::Analytic).unwrap();
        assert!((q2 - 0.110_028).abs() < 1e-5);
        let q6 = scheme_threshold(Scheme::D1Mubs, dim(2), Method::Analytic).unwrap();
        assert!((q6 - 0.126_193).abs() < 1e-5);
        let q3 = scheme_threshold(Scheme::D1Mubs, dim(3), Method::Analytic).unwrap();
        assert!(q3 > q6);
        assert!(matches!(threshold_q(|_| Ok(-1.0), 0.0, 1.0), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn sweep_examples() {
        let rows = sweep(Scheme::TwoMubs, dim(2), &[0.11, 0.0, 0.05], Method::Numeric);
        let qs: Vec<f64> = rows.iter().map(|r| r.q).collect();
        assert_eq!(qs, vec![0.0, 0.05, 0.11]);
        let expected = [1.0, 0.427_206, 0.000_168];
        for (row, e) in rows.iter().zip(expected) {
            assert!((row.rate - e).abs() < 1e-5);
            assert!((row.rate - (1.0 - 2.0 * binary_entropy(row.q))).abs() < 1e-9);
        }
        for scheme in [Scheme::TwoMubs, Scheme::DMubs, Scheme::D1Mubs] {
            for d in [2usize, 3, 5] {
                let row = &sweep(scheme, dim(d), &[0.0], Method::Numeric)[0];
                assert!((row.rate - dim(d).log2()).abs() < 1e-12);
            }
        }
        let d_rows = sweep(Scheme::DMubs, dim(2), &[0.02, 0.06, 0.1], Method::Numeric);
        let two_rows = sweep(Scheme::TwoMubs, dim(2), &[0.02, 0.06, 0.1], Method::Numeric);
        for (a, b) in d_rows.iter().zip(&two_rows) {
            assert!((a.rate - b.rate).abs() < 1e-8);
        }
        let bad = sweep(Scheme::D1Mubs, dim(2), &[0.1, 0.9], Method::Analytic);
        assert_eq!(bad[1].status, Status::Infeasible);
    }

    #[test]
    fn parse_scheme_and_method() {
        assert_eq!("d+1".parse::<Scheme>().unwrap(), Scheme::D1Mubs);
        assert_eq!("2".parse::<Scheme>().unwrap(), Scheme::TwoMubs);
        assert!("3".parse::<Scheme>().is_err());
        assert_eq!("engine".parse::<Method>().unwrap(), Method::Engine);
    }
}
