use pyo3::prelude::*;
use pyo3::types::PyModule;

fn with_module<F: FnOnce(&Bound<'_, PyModule>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "symqkd").unwrap();
        symqkd_py::register(&m).unwrap();
        f(&m);
    });
}

fn h2(q: f64) -> f64 {
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

#[test]
fn scheme_rate_matches_closed_form() {
    with_module(|m| {
        let opt = m.getattr("scheme_rate").unwrap().call1(("2", 2, 0.05)).unwrap();
        let rate: f64 = opt.getattr("rate").unwrap().extract().unwrap();
        assert!((rate - (1.0 - 2.0 * h2(0.05))).abs() < 1e-9);
        let status: String = opt.getattr("status").unwrap().extract().unwrap();
        assert_eq!(status, "converged");
    });
}

#[test]
fn thresholds_and_commutants() {
    with_module(|m| {
        let q: f64 = m.getattr("threshold").unwrap().call1(("d+1", 2)).unwrap().extract().unwrap();
        assert!((q - 0.126193).abs() < 1e-6);
        let dim: usize = m.getattr("commutant_dimension").unwrap().call1(("octahedral",)).unwrap().extract().unwrap();
        assert_eq!(dim, 2);
        let dim: usize = m.getattr("commutant_dimension").unwrap().call1(("pauli", 3)).unwrap().extract().unwrap();
        assert_eq!(dim, 9);
    });
}

#[test]
fn engine_agrees_with_closed_form() {
    with_module(|m| {
        let fam = m.getattr("attack_family").unwrap().call1(("d+1", 3, 0.1)).unwrap();
        let state = fam.call_method1("state", (0.0,)).unwrap();
        let cf = m.getattr("closed_form_rates").unwrap().call1((&state, "d+1")).unwrap();
        let en = m.getattr("engine_rates").unwrap().call1((&state, "d+1")).unwrap();
        for k in ["q", "mutual_information", "holevo", "rate"] {
            let a: f64 = cf.getattr(k).unwrap().extract().unwrap();
            let b: f64 = en.getattr(k).unwrap().extract().unwrap();
            assert!((a - b).abs() < 1e-8, "{k}: {a} vs {b}");
        }
    });
}

#[test]
fn qubit_protocol_optimum() {
    with_module(|m| {
        let p = m.getattr("QubitProtocol").unwrap().call1(("bb84",)).unwrap();
        assert_eq!(p.getattr("n_bases").unwrap().extract::<usize>().unwrap(), 2);
        let opt = p.call_method1("optimize", (0.05,)).unwrap();
        let rate: f64 = opt.getattr("rate").unwrap().extract().unwrap();
        assert!((rate - (1.0 - 2.0 * h2(0.05))).abs() < 1e-6);
    });
}

#[test]
fn errors_become_value_error() {
    with_module(|m| {
        let py = m.py();
        let e = m.getattr("scheme_rate").unwrap().call1(("2", 4, 0.1)).unwrap_err();
        assert!(e.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let e = m.getattr("BellDiagonalState").unwrap().call1((2, vec![0.5, 0.5])).unwrap_err();
        assert!(e.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}

#[test]
fn verify_runs() {
    with_module(|m| {
        let (passed, counts): (bool, Vec<(String, usize, usize)>) =
            m.getattr("run_verify").unwrap().call1(("gpauli", 7u64)).unwrap().extract().unwrap();
        assert!(passed);
        assert_eq!(counts[0].0, "gpauli");
        assert_eq!(counts[0].2, 0);
    });
}
