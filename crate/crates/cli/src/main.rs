use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use symqkd::families::{
    commutant_family, optimal_2mubs, optimal_d1mubs, FamilyParams, ProtocolSpec, QubitProtocol, SymmetricProtocol,
};
use symqkd::gpauli::Dimension;
use symqkd::optimize::{minimize_rate, scheme_rate, scheme_threshold, threshold_q, Method, Scheme, Status};
use symqkd::source::ProtocolFile;
use symqkd::symmetry::{commutant_basis, pauli_group, point_group, GroupRep, PointGroup};
use symqkd::verify::{self, Suite};

mod format;

use format::{sig12, Failure};

#[derive(Parser, Debug)]
#[command(name = "symqkd", version, about = "Optimal collective-attack key rates for symmetric QKD protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal key rate at one error rate
    Rate {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value = "analytic", value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        out: Output,
    },
    /// Key rate over a grid of error rates
    Sweep {
        #[command(flatten)]
        target: Target,
        /// Comma-separated Q values
        #[arg(long, value_delimiter = ',', conflicts_with = "q_range")]
        q: Vec<f64>,
        /// `start:stop:count`, endpoints included
        #[arg(long, value_parser = parse_range)]
        q_range: Option<QRange>,
        #[arg(long, default_value = "analytic", value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        out: Output,
    },
    /// Error rate at which the optimal key rate reaches zero
    Threshold {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "analytic", value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        out: Output,
    },
    /// Run the seeded property suites (seed from QKD_SEED)
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
        #[command(flatten)]
        out: Output,
    },
    /// Commutant dimension and Bell classes of a symmetry group
    Commutant {
        /// octahedral, icosahedral, cuboid, dihedral(n) or pauli
        #[arg(long, conflicts_with_all = ["qubit", "protocol"])]
        group: Option<String>,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        qubit: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        protocol: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

/// Which protocol to evaluate.
#[derive(Args, Debug, Clone)]
struct Target {
    /// MUB scheme: 2, d or d+1
    #[arg(long, value_parser = parse_scheme, conflicts_with_all = ["qubit", "protocol"])]
    scheme: Option<Scheme>,
    /// Prime dimension for MUB schemes
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Qubit protocol: sixstate, bb84, cube, icosahedron, dodecahedron, ngon, cuboid
    #[arg(long, conflicts_with = "protocol")]
    qubit: Option<String>,
    /// Number of bases for ngon
    #[arg(long)]
    n: Option<usize>,
    /// Cuboid angle in radians
    #[arg(long)]
    theta: Option<f64>,
    /// Protocol JSON file
    #[arg(long)]
    protocol: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write to a file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Text,
    Csv,
    Json,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: symqkd::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: symqkd::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: symqkd::Error| e.to_string())
}

#[derive(Debug, Clone)]
struct QRange(Vec<f64>);

fn parse_range(s: &str) -> Result<QRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err("expected start:stop:count".into());
    };
    let start: f64 = start.parse().map_err(|_| format!("bad start '{start}'"))?;
    let stop: f64 = stop.parse().map_err(|_| format!("bad stop '{stop}'"))?;
    let count: usize = count.parse().map_err(|_| format!("bad count '{count}'"))?;
    match count {
        0 => Err("count must be positive".into()),
        1 => Ok(QRange(vec![start])),
        _ => Ok(QRange((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect())),
    }
}

enum Resolved {
    Mub { scheme: Scheme, d: Dimension },
    Symmetric { name: String, qubit: Option<QubitProtocol>, sp: Box<SymmetricProtocol> },
}

impl Target {
    fn resolve(&self) -> Result<Resolved, Failure> {
        if let Some(name) = &self.qubit {
            let p = QubitProtocol::from_name(name, self.n, self.theta)?;
            return Ok(Resolved::Symmetric {
                name: p.to_string(),
                qubit: Some(p),
                sp: Box::new(SymmetricProtocol::qubit(p)?),
            });
        }
        if let Some(path) = &self.protocol {
            let spec = read_protocol(path)?;
            return Ok(Resolved::Symmetric {
                name: spec.name().to_string(),
                qubit: None,
                sp: Box::new(SymmetricProtocol::custom(spec)?),
            });
        }
        let scheme = self.scheme.ok_or_else(|| Failure::Usage("one of --scheme, --qubit, --protocol is required".into()))?;
        Ok(Resolved::Mub { scheme, d: Dimension::prime(self.d)? })
    }
}

fn read_protocol(path: &PathBuf) -> Result<ProtocolSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(ProtocolSpec::from_file(&ProtocolFile::from_json(&text)?)?)
}

/// One evaluated `(protocol, Q)` point.
#[derive(Debug, Clone, Serialize)]
struct Row {
    scheme: String,
    d: usize,
    q: f64,
    rate: Option<f64>,
    params: FamilyParams,
    status: Status,
    method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_delta: Option<f64>,
}

impl Resolved {
    fn label(&self) -> String {
        match self {
            Resolved::Mub { scheme, .. } => scheme.to_string(),
            Resolved::Symmetric { name, .. } => name.clone(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Resolved::Mub { d, .. } => d.get(),
            Resolved::Symmetric { sp, .. } => sp.protocol.dim().get(),
        }
    }

    fn rate(&self, q: f64, method: Method) -> symqkd::Result<Row> {
        let (rate, params, status, used) = match self {
            Resolved::Mub { scheme, d } => {
                let p = scheme_rate(*scheme, *d, q, method)?;
                let used = if p.analytic { Method::Analytic } else if method == Method::Engine { Method::Engine } else { Method::Numeric };
                (p.rate, p.params, p.status, used)
            }
            Resolved::Symmetric { sp, .. } => {
                let family = sp.family(q)?;
                let r = minimize_rate(&family, |u| sp.rate(u))?;
                (r.r_min, r.params, r.status, Method::Engine)
            }
        };
        Ok(Row { scheme: self.label(), d: self.dim(), q, rate: Some(rate), params, status, method: used, closed_form_delta: None })
    }

    /// Closed-form optimum to compare an engine run against, where one exists.
    fn reference(&self, q: f64) -> symqkd::Result<Option<f64>> {
        match self {
            Resolved::Mub { scheme, d } => Ok(Some(scheme_rate(*scheme, *d, q, Method::Analytic)?.rate)),
            Resolved::Symmetric { qubit: Some(QubitProtocol::SixState), .. } => {
                Ok(Some(optimal_d1mubs(Dimension::new(2)?, q)?.r_min))
            }
            Resolved::Symmetric { qubit: Some(QubitProtocol::Bb84), .. } => Ok(Some(optimal_2mubs(Dimension::new(2)?, q)?.r_min)),
            Resolved::Symmetric { .. } => Ok(None),
        }
    }

    fn threshold(&self, method: Method) -> symqkd::Result<f64> {
        match self {
            Resolved::Mub { scheme, d } => scheme_threshold(*scheme, *d, method),
            Resolved::Symmetric { sp, .. } => {
                let family = sp.family(0.0)?;
                let max_error = family.classes().iter().map(|c| c.error).fold(0.0, f64::max);
                threshold_q(|q| Ok(minimize_rate(&sp.family(q)?, |u| sp.rate(u))?.r_min), 0.0, 0.5 * max_error)
            }
        }
    }
}

fn emit(out: &Output, body: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => fs::write(path, body).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn cmd_rate(target: &Target, q: f64, method: Method, out: &Output) -> Result<(), Failure> {
    let resolved = target.resolve()?;
    let mut row = resolved.rate(q, method)?;
    if method == Method::Engine {
        if let (Some(r), Some(reference)) = (row.rate, resolved.reference(q)?) {
            row.closed_form_delta = Some(r - reference);
        }
    }
    let body = match out.format {
        Format::Text => format::rate_text(&row),
        Format::Csv => format::rows_csv(std::slice::from_ref(&row))?,
        Format::Json => format::json(&row)?,
    };
    emit(out, &body)
}

fn cmd_sweep(target: &Target, q: &[f64], q_range: Option<&[f64]>, method: Method, out: &Output) -> Result<(), Failure> {
    let resolved = target.resolve()?;
    let grid: Vec<f64> = match (q_range, q.is_empty()) {
        (Some(r), _) => r.to_vec(),
        (None, false) => q.to_vec(),
        (None, true) => (0..=15).map(|i| i as f64 / 100.0).collect(),
    };
    let rows: Vec<Row> = match &resolved {
        Resolved::Mub { scheme, d } => symqkd::optimize::sweep(*scheme, *d, &grid, method)
            .into_iter()
            .map(|p| Row {
                scheme: scheme.to_string(),
                d: d.get(),
                q: p.q,
                rate: (p.status != Status::Infeasible).then_some(p.rate),
                params: p.params,
                status: p.status,
                method: if p.analytic { Method::Analytic } else if method == Method::Engine { Method::Engine } else { Method::Numeric },
                closed_form_delta: None,
            })
            .collect(),
        Resolved::Symmetric { .. } => {
            let mut sorted = grid.clone();
            sorted.sort_by(f64::total_cmp);
            sorted
                .iter()
                .map(|&q| {
                    resolved.rate(q, method).unwrap_or_else(|_| Row {
                        scheme: resolved.label(),
                        d: resolved.dim(),
                        q,
                        rate: None,
                        params: FamilyParams::default(),
                        status: Status::Infeasible,
                        method: Method::Engine,
                        closed_form_delta: None,
                    })
                })
                .collect()
        }
    };
    let body = match out.format {
        Format::Text => format::rows_text(&rows),
        Format::Csv => format::rows_csv(&rows)?,
        Format::Json => format::json(&rows)?,
    };
    emit(out, &body)?;
    if rows.iter().any(|r| r.status == Status::Infeasible) {
        return Err(Failure::Infeasible("some grid points are outside the feasible error range".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ThresholdReport {
    scheme: String,
    d: usize,
    threshold: f64,
    method: Method,
}

fn cmd_threshold(target: &Target, method: Method, out: &Output) -> Result<(), Failure> {
    let resolved = target.resolve()?;
    let q = resolved.threshold(method)?;
    let report = ThresholdReport { scheme: resolved.label(), d: resolved.dim(), threshold: q, method };
    let body = match out.format {
        Format::Text => format!("{q:.6}\n"),
        Format::Csv => format!("scheme,d,threshold,method\n{},{},{},{}\n", report.scheme, report.d, sig12(q), method),
        Format::Json => format::json(&report)?,
    };
    emit(out, &body)
}

fn cmd_verify(suite: Suite, out: &Output) -> Result<(), Failure> {
    let report = verify::run_default(suite)?;
    let body = match out.format {
        Format::Json => format::json(&report)?,
        _ => format::verify_text(&report),
    };
    emit(out, &body)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("property suite violations".into()))
    }
}

#[derive(Serialize)]
struct CommutantReport {
    group: String,
    order: usize,
    dimension: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    classes: Vec<ClassReport>,
}

#[derive(Serialize)]
struct ClassReport {
    name: String,
    members: Vec<(usize, usize)>,
    error: f64,
}

fn named_group(name: &str, d: usize) -> Result<(String, GroupRep), Failure> {
    if name.trim().eq_ignore_ascii_case("pauli") {
        let d = Dimension::prime(d)?;
        return Ok((format!("pauli({d})"), pauli_group(d)));
    }
    let g: PointGroup = name.parse()?;
    Ok((g.to_string(), point_group(g)?))
}

fn cmd_commutant(
    group: Option<&str>,
    d: usize,
    target: &Target,
    out: &Output,
) -> Result<(), Failure> {
    let (name, rep, protocol) = match group {
        Some(g) => {
            let (name, rep) = named_group(g, d)?;
            (name, rep, None)
        }
        None => match target.resolve() {
            Ok(Resolved::Symmetric { sp, .. }) => (sp.group_name.clone(), sp.group.clone(), Some(sp.protocol.clone())),
            Ok(Resolved::Mub { .. }) | Err(_) => {
                return Err(Failure::Usage("commutant needs --group, --qubit or --protocol".into()));
            }
        },
    };
    let basis = commutant_basis(&rep);
    let classes = match protocol {
        Some(p) => commutant_family(&p, &rep, 0.0)?
            .classes()
            .iter()
            .map(|c| ClassReport {
                name: c.name.clone(),
                members: c.members.iter().map(|m| (m.r, m.s)).collect(),
                error: c.error,
            })
            .collect(),
        None => Vec::new(),
    };
    let report = CommutantReport { group: name, order: rep.order(), dimension: basis.len(), classes };
    let body = match out.format {
        Format::Json => format::json(&report)?,
        _ => {
            let mut s = format!("group      {} (order {})\ndimension  {}\n", report.group, report.order, report.dimension);
            for c in &report.classes {
                let members: Vec<String> = c.members.iter().map(|(r, s)| format!("({r},{s})")).collect();
                s.push_str(&format!("class {}    {} error {}\n", c.name, members.join(" "), sig12(c.error)));
            }
            s
        }
    };
    emit(out, &body)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Rate { target, q, method, out } => cmd_rate(&target, q, method, &out),
        Command::Sweep { target, q, q_range, method, out } => cmd_sweep(&target, &q, q_range.as_ref().map(|r| r.0.as_slice()), method, &out),
        Command::Threshold { target, method, out } => cmd_threshold(&target, method, &out),
        Command::Verify { suite, out } => cmd_verify(suite, &out),
        Command::Commutant { group, d, qubit, n, theta, protocol, out } => {
            let target = Target { scheme: None, d, qubit, n, theta, protocol };
            cmd_commutant(group.as_deref(), d, &target, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
