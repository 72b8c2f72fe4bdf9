//! Python bindings: `import symqkd`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use symqkd::families::{self, FamilyParams, QubitProtocol as CoreQubit, SymmetricProtocol};
use symqkd::gpauli::{Dimension, PauliIndex};
use symqkd::keyrate::sifted_rate;
use symqkd::optimize::{self, Method, OptimizationResult, RatePoint as CoreRatePoint, Scheme};
use symqkd::states::{bell_diag_to_density, BellDiagonalState as CoreBell};
use symqkd::symmetry::{commutant_basis, pauli_group, point_group, PointGroup};
use symqkd::verify::{self, Suite};

fn err(e: symqkd::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dim(d: usize) -> PyResult<Dimension> {
    Dimension::new(d).map_err(err)
}

fn prime(d: usize) -> PyResult<Dimension> {
    Dimension::prime(d).map_err(err)
}

fn parse<T: std::str::FromStr<Err = symqkd::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Bell-diagonal state `Σ u[r][s] |U_rs⟩⟨U_rs|`, weights row-major in `(r, s)`.
#[pyclass(name = "BellDiagonalState", frozen, module = "symqkd")]
pub struct BellDiagonalState {
    inner: CoreBell,
}

#[pymethods]
impl BellDiagonalState {
    #[new]
    fn new(d: usize, weights: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: CoreBell::new(dim(d)?, weights).map_err(err)? })
    }

    #[staticmethod]
    fn uniform(d: usize) -> PyResult<Self> {
        Ok(Self { inner: CoreBell::uniform(dim(d)?) })
    }

    #[staticmethod]
    fn delta(d: usize, r: i64, s: i64) -> PyResult<Self> {
        let d = dim(d)?;
        Ok(Self { inner: CoreBell::delta(d, PauliIndex::new(d, r, s)) })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dim().get()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn table(&self) -> Vec<Vec<f64>> {
        self.inner.table()
    }

    fn entropy(&self) -> f64 {
        self.inner.entropy()
    }

    fn __repr__(&self) -> String {
        format!("BellDiagonalState(d={}, weights={:?})", self.d(), self.inner.weights())
    }
}

/// Key-rate quantities of one state: `Q`, `Ī`, `χ̄` and `r̄ = Ī − χ̄`.
#[pyclass(name = "Rates", frozen, get_all, module = "symqkd")]
pub struct Rates {
    q: f64,
    mutual_information: f64,
    holevo: f64,
    rate: f64,
}

#[pymethods]
impl Rates {
    fn __repr__(&self) -> String {
        format!(
            "Rates(q={}, mutual_information={}, holevo={}, rate={})",
            self.q, self.mutual_information, self.holevo, self.rate
        )
    }
}

/// Optimal attack: rate plus family weights `a`, `b`, `c`.
#[pyclass(name = "Optimum", frozen, get_all, module = "symqkd")]
pub struct Optimum {
    q: f64,
    rate: f64,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    status: String,
    method: String,
}

impl Optimum {
    fn new(q: f64, rate: f64, p: &FamilyParams, status: impl ToString, method: impl ToString) -> Self {
        Self { q, rate, a: p.a, b: p.b, c: p.c, status: status.to_string(), method: method.to_string() }
    }

    fn from_point(p: &CoreRatePoint, requested: Method) -> Self {
        let method = if p.analytic {
            Method::Analytic
        } else if requested == Method::Engine {
            Method::Engine
        } else {
            Method::Numeric
        };
        Self::new(p.q, p.rate, &p.params, p.status, method)
    }

    fn from_result(q: f64, r: &OptimizationResult, method: Method) -> Self {
        Self::new(q, r.r_min, &r.params, r.status, method)
    }
}

#[pymethods]
impl Optimum {
    fn params(&self) -> Vec<f64> {
        [self.a, self.b, self.c].into_iter().flatten().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Optimum(q={}, rate={}, a={}, b={}, c={}, status='{}', method='{}')",
            self.q,
            self.rate,
            py_opt(self.a),
            py_opt(self.b),
            py_opt(self.c),
            self.status,
            self.method
        )
    }
}

fn py_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "None".into(), |v| v.to_string())
}

/// Symmetry-reduced attack family at fixed `Q`.
#[pyclass(name = "AttackFamily", frozen, module = "symqkd")]
pub struct AttackFamily {
    inner: families::AttackFamily,
}

#[pymethods]
impl AttackFamily {
    #[getter]
    fn target_q(&self) -> f64 {
        self.inner.target_q()
    }

    #[getter]
    fn n_free(&self) -> usize {
        self.inner.n_free()
    }

    /// Feasible interval of the free parameter.
    fn interval(&self) -> (f64, f64) {
        self.inner.interval()
    }

    /// `(name, members, error)` per eigenvalue class.
    fn classes(&self) -> Vec<(String, Vec<(usize, usize)>, f64)> {
        self.inner
            .classes()
            .iter()
            .map(|c| (c.name.clone(), c.members.iter().map(|m| (m.r, m.s)).collect(), c.error))
            .collect()
    }

    fn state(&self, t: f64) -> PyResult<BellDiagonalState> {
        Ok(BellDiagonalState { inner: self.inner.state(t).map_err(err)? })
    }

    fn params(&self, t: f64) -> Vec<f64> {
        self.inner.params(t).as_vec()
    }

    fn error_rate(&self, t: f64) -> f64 {
        self.inner.error_rate(t)
    }

    /// `log₂d − S(u)` along the family.
    fn mub_rate(&self, t: f64) -> f64 {
        self.inner.mub_rate(t)
    }

    /// Minimizes `log₂d − S(u)` over the family.
    fn minimize(&self) -> PyResult<Optimum> {
        let d = self.inner.dim();
        let r = optimize::minimize_rate(&self.inner, |u| Ok(d.log2() - u.entropy())).map_err(err)?;
        Ok(Optimum::from_result(self.inner.target_q(), &r, Method::Numeric))
    }
}

/// Qubit protocol with its point-group symmetry and a density-matrix engine.
#[pyclass(name = "QubitProtocol", frozen, module = "symqkd")]
pub struct QubitProtocol {
    kind: CoreQubit,
    inner: SymmetricProtocol,
}

#[pymethods]
impl QubitProtocol {
    /// `name` is one of sixstate, bb84, cube, icosahedron, dodecahedron,
    /// ngon (needs `n`) or cuboid (needs `theta`).
    #[new]
    #[pyo3(signature = (name, n=None, theta=None))]
    fn new(name: &str, n: Option<usize>, theta: Option<f64>) -> PyResult<Self> {
        let kind = CoreQubit::from_name(name, n, theta).map_err(err)?;
        Ok(Self { kind, inner: SymmetricProtocol::qubit(kind).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.kind.to_string()
    }

    #[getter]
    fn group(&self) -> String {
        self.inner.group_name.clone()
    }

    #[getter]
    fn n_bases(&self) -> usize {
        self.inner.protocol.bases().len()
    }

    /// Bloch vectors of one state per basis.
    fn basis_directions(&self) -> Vec<[f64; 3]> {
        self.kind.basis_directions()
    }

    fn commutant_dimension(&self) -> usize {
        commutant_basis(&self.inner.group).len()
    }

    fn family(&self, q: f64) -> PyResult<AttackFamily> {
        Ok(AttackFamily { inner: self.inner.family(q).map_err(err)? })
    }

    /// Engine rates of a Bell-diagonal state.
    fn evaluate(&self, state: &BellDiagonalState) -> PyResult<Rates> {
        let r = self.inner.engine().evaluate(&bell_diag_to_density(&state.inner)).map_err(err)?;
        Ok(Rates { q: r.q, mutual_information: r.mutual_information, holevo: r.holevo, rate: r.rate })
    }

    /// Minimum engine rate over the symmetry-reduced family at `q`.
    fn optimize(&self, q: f64) -> PyResult<Optimum> {
        let family = self.inner.family(q).map_err(err)?;
        let r = optimize::minimize_rate(&family, |u| self.inner.rate(u)).map_err(err)?;
        Ok(Optimum::from_result(q, &r, Method::Engine))
    }

    fn __repr__(&self) -> String {
        format!("QubitProtocol('{}', group='{}')", self.kind, self.inner.group_name)
    }
}

/// Optimal rate of a MUB scheme (`"2"`, `"d"` or `"d+1"`) at error rate `q`.
#[pyfunction]
#[pyo3(signature = (scheme, d, q, method="analytic"))]
fn scheme_rate(scheme: &str, d: usize, q: f64, method: &str) -> PyResult<Optimum> {
    let method: Method = parse(method)?;
    let p = optimize::scheme_rate(parse(scheme)?, prime(d)?, q, method).map_err(err)?;
    Ok(Optimum::from_point(&p, method))
}

/// Rates over a grid, sorted by `q`; infeasible points have status
/// `"infeasible"` and a NaN rate.
#[pyfunction]
#[pyo3(signature = (scheme, d, grid, method="analytic"))]
fn sweep(scheme: &str, d: usize, grid: Vec<f64>, method: &str) -> PyResult<Vec<Optimum>> {
    let method: Method = parse(method)?;
    let rows = optimize::sweep(parse(scheme)?, prime(d)?, &grid, method);
    Ok(rows.iter().map(|p| Optimum::from_point(p, method)).collect())
}

/// Error rate at which the optimal rate of a MUB scheme reaches zero.
#[pyfunction]
#[pyo3(signature = (scheme, d, method="analytic"))]
fn threshold(scheme: &str, d: usize, method: &str) -> PyResult<f64> {
    optimize::scheme_threshold(parse(scheme)?, prime(d)?, parse(method)?).map_err(err)
}

/// Attack family of a MUB scheme at error rate `q`.
#[pyfunction]
fn attack_family(scheme: &str, d: usize, q: f64) -> PyResult<AttackFamily> {
    let scheme: Scheme = parse(scheme)?;
    Ok(AttackFamily { inner: scheme.family(prime(d)?, q).map_err(err)? })
}

/// Closed-form rates of a Bell-diagonal state under a MUB scheme.
#[pyfunction]
fn closed_form_rates(state: &BellDiagonalState, scheme: &str) -> PyResult<Rates> {
    let scheme: Scheme = parse(scheme)?;
    let r = families::mub_rate_closed_form(&state.inner, &scheme.labels(state.inner.dim())).map_err(err)?;
    Ok(Rates { q: r.q, mutual_information: r.mutual_information, holevo: r.holevo, rate: r.rate })
}

/// Same quantities through the full density-matrix engine.
#[pyfunction]
fn engine_rates(state: &BellDiagonalState, scheme: &str) -> PyResult<Rates> {
    let scheme: Scheme = parse(scheme)?;
    let protocol = scheme.protocol(state.inner.dim()).map_err(err)?;
    let r = sifted_rate(&bell_diag_to_density(&state.inner), &protocol).map_err(err)?;
    Ok(Rates { q: r.q, mutual_information: r.mutual_information, holevo: r.holevo, rate: r.rate })
}

/// Commutant dimension of `pauli` (in dimension `d`) or a named point group.
#[pyfunction]
#[pyo3(signature = (group, d=2))]
fn commutant_dimension(group: &str, d: usize) -> PyResult<usize> {
    let rep = if group.trim().eq_ignore_ascii_case("pauli") {
        pauli_group(prime(d)?)
    } else {
        point_group(parse::<PointGroup>(group)?).map_err(err)?
    };
    Ok(commutant_basis(&rep).len())
}

/// Runs a property suite; returns `(passed, {suite: (instances, violations)})`.
#[pyfunction]
#[pyo3(signature = (suite="all", seed=None))]
fn run_verify(suite: &str, seed: Option<u64>) -> PyResult<(bool, Vec<(String, usize, usize)>)> {
    let suite: Suite = parse(suite)?;
    let report = match seed {
        Some(s) => verify::run(suite, s),
        None => verify::run_default(suite),
    }
    .map_err(err)?;
    let counts = report.suites.iter().map(|s| (s.suite.to_string(), s.instances(), s.violations())).collect();
    Ok((report.passed(), counts))
}

/// Registers all classes and functions on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<BellDiagonalState>()?;
    m.add_class::<Rates>()?;
    m.add_class::<Optimum>()?;
    m.add_class::<AttackFamily>()?;
    m.add_class::<QubitProtocol>()?;
    m.add_function(wrap_pyfunction!(scheme_rate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(attack_family, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_rates, m)?)?;
    m.add_function(wrap_pyfunction!(engine_rates, m)?)?;
    m.add_function(wrap_pyfunction!(commutant_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "symqkd")]
fn symqkd_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
