//! Output rendering and the exit-code contract.

use std::fmt;

use serde::Serialize;
use symqkd::verify::VerifyReport;

use crate::Row;

pub const CSV_HEADER: [&str; 8] = ["scheme", "d", "Q", "rate", "a", "b", "c", "status"];

/// Failure classes, mapped to exit codes 1 (usage), 2 (infeasible) and
/// 3 (verification).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Infeasible(String),
    Verification(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) | Failure::Verification(m) => f.write_str(m),
        }
    }
}

impl From<symqkd::Error> for Failure {
    fn from(e: symqkd::Error) -> Self {
        match e {
            symqkd::Error::InfeasibleQ { .. } | symqkd::Error::InfeasibleFamily(_) => Failure::Infeasible(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// `%.12g`-style rendering: 12 significant digits, trailing zeros dropped,
/// exponent form outside `1e-5 ..= 1e12`.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

pub fn rows_csv(rows: &[Row]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.d.to_string(),
            sig12(r.q),
            opt(r.rate),
            opt(r.params.a),
            opt(r.params.b),
            opt(r.params.c),
            r.status.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Usage(e.to_string()))
}

pub fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn rate_text(r: &Row) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<8} {v}\n"));
    line("scheme", r.scheme.clone());
    line("d", r.d.to_string());
    line("Q", sig12(r.q));
    line("rate", opt(r.rate));
    for (k, v) in [("a", r.params.a), ("b", r.params.b), ("c", r.params.c)] {
        if v.is_some() {
            line(k, opt(v));
        }
    }
    line("status", r.status.to_string());
    line("method", r.method.to_string());
    if let Some(delta) = r.closed_form_delta {
        line("delta", format!("{} (engine minus closed form)", sig12(delta)));
    }
    s
}

pub fn rows_text(rows: &[Row]) -> String {
    let mut s = format!("{:<8} {:>3} {:>8} {:>16} {:>16} {:>16} {:>16}  status\n", "scheme", "d", "Q", "rate", "a", "b", "c");
    for r in rows {
        s.push_str(&format!(
            "{:<8} {:>3} {:>8} {:>16} {:>16} {:>16} {:>16}  {}\n",
            r.scheme,
            r.d,
            sig12(r.q),
            opt(r.rate),
            opt(r.params.a),
            opt(r.params.b),
            opt(r.params.c),
            r.status
        ));
    }
    s
}

pub fn verify_text(report: &VerifyReport) -> String {
    let mut s = format!("seed {:#x}\n", report.seed);
    for suite in &report.suites {
        s.push_str(&format!(
            "{}: {} checks, {} instances, {} violations - {}\n",
            suite.suite,
            suite.checks.len(),
            suite.instances(),
            suite.violations(),
            if suite.passed() { "PASS" } else { "FAIL" }
        ));
        for c in &suite.checks {
            s.push_str(&format!(
                "  {:<34} {:>5}/{:<5} max dev {:.2e} (tol {:.0e})",
                c.name,
                c.instances - c.violations,
                c.instances,
                c.max_deviation,
                c.tolerance
            ));
            if let Some(d) = &c.detail {
                s.push_str(&format!("  [{d}]"));
            }
            s.push('\n');
        }
    }
    s.push_str(if report.passed() { "all suites passed\n" } else { "FAILED\n" });
    s
}
