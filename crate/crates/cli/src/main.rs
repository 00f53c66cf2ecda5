use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bilinhull::envelopes::{envelope, lb_relax_solution, sample_points, verify_extension, Bound};
use bilinhull::experiments::{run_gap_study, StudyConfig};
use bilinhull::inequalities::{
    build_relaxation, cycle_system, kn_minus_system, mccormick_system, necessity_point,
    wheel_system, wheel_triangle_system, Family, RelaxClass,
};
use bilinhull::lp::{solve, Direction};
use bilinhull::lpfile::{system_to_lp, write_lp};
use bilinhull::qp::{
    build_qp_linearization, curve_csv, emit_qp_convexification, triangle_sampling_curve, QpInstance,
};
use bilinhull::scalar::{fraction, parse_rational};
use bilinhull::zuckerberg::{
    certificate_value, clique_construction, cycle_construction, kn_minus_construction,
    parse_certificate, point_of, write_certificate,
};
use bilinhull::{
    EnvelopeError, ExperimentError, Graph, GraphError, InequalityError, IntervalError, LpError,
    ParseError, Rational, System,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const EXIT_CODES: &str =
    "Exit codes: 0 success, 1 other failure, 2 unreadable input or bad usage, \
3 instance above the enumeration cap, 4 counterexample or failed check.";

#[derive(Parser)]
#[command(
    name = "bilinhull",
    version,
    about = "Exact relaxations and envelopes of bilinear functions on [0,1]^n"
)]
#[command(after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output format for reports.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Convex and concave envelope values at a point, with vertex witnesses.
    Envelope {
        #[arg(long)]
        graph: PathBuf,
        /// Coordinates separated by spaces or commas, e.g. "1/2 0.3 1".
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[command(flatten)]
        common: Common,
    },
    /// Checks LB = vex and UB = cav for a system at random points.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        /// mccormick, cycle-theorem, kn-minus, wheel (with triangles), wheel-bare, or a class tag such as MT or MQ4.
        #[arg(long)]
        system: String,
        /// Remove rows first: "family<f>:s=<s>" for the almost complete graph.
        #[arg(long)]
        drop: Vec<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Denominator bound of the sampled coordinates.
        #[arg(long, default_value_t = 12)]
        max_den: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Lists the rows of a system, or with --point the rows binding at the LB minimiser.
    Cuts {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        system: String,
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Checks an interval certificate, or builds one for a point.
    Certify {
        #[arg(long)]
        graph: PathBuf,
        /// Certificate file to check.
        #[arg(long, conflicts_with = "point")]
        certificate: Option<PathBuf>,
        /// Build a certificate at this point (cycles, unit cliques, almost complete graphs).
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the random-graph gap study described by a TOML file.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Also write a gnuplot data file.
        #[arg(long)]
        dat: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Writes a relaxation as an LP file.
    Relax {
        /// Graph whose class relaxation is written (needs --system).
        #[arg(long, conflicts_with = "qp", requires = "system")]
        graph: Option<PathBuf>,
        #[arg(long)]
        system: Option<String>,
        /// QP instance file; writes its linearisation.
        #[arg(long)]
        qp: Option<PathBuf>,
        /// Write the convex relaxation instead (keeps positive squares).
        #[arg(long, requires = "qp")]
        convex: bool,
        /// Solve the linearisation with nested triangle subsets of these sizes, e.g. "0,0.5,1".
        #[arg(long, requires = "qp", value_delimiter = ',')]
        curve: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

/// A failed check rather than an error.
#[derive(Debug)]
struct Counterexample;

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("check failed")
    }
}

impl std::error::Error for Counterexample {}

fn graph_code(e: &GraphError) -> Option<u8> {
    match e {
        GraphError::NotACycle | GraphError::InvalidProbability(_) => None,
        _ => Some(2),
    }
}

fn envelope_code(e: &EnvelopeError) -> Option<u8> {
    match e {
        EnvelopeError::TooLarge { .. } => Some(3),
        EnvelopeError::Graph(g) => graph_code(g),
        EnvelopeError::Lp(LpError::Parse(_)) => Some(2),
        _ => None,
    }
}

fn inequality_code(e: &InequalityError) -> Option<u8> {
    match e {
        InequalityError::BadClass(_) => Some(2),
        InequalityError::Graph(g) => graph_code(g),
        _ => None,
    }
}

/// Maps the first recognised cause to the documented exit code. Wrapper
/// variants are transparent, so the inner error never shows up in the
/// chain on its own and has to be unpacked here.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let code = if cause.is::<Counterexample>() {
            Some(4)
        } else if cause.is::<ParseError>() {
            Some(2)
        } else if let Some(e) = cause.downcast_ref::<GraphError>() {
            graph_code(e)
        } else if let Some(e) = cause.downcast_ref::<EnvelopeError>() {
            envelope_code(e)
        } else if let Some(e) = cause.downcast_ref::<InequalityError>() {
            inequality_code(e)
        } else if let Some(e) = cause.downcast_ref::<IntervalError>() {
            match e {
                IntervalError::Graph(g) => graph_code(g),
                IntervalError::BadInterval(..) => Some(2),
                _ => None,
            }
        } else if let Some(e) = cause.downcast_ref::<ExperimentError>() {
            match e {
                ExperimentError::MalformedInstance(_)
                | ExperimentError::BadConfig(_)
                | ExperimentError::Parse(_) => Some(2),
                ExperimentError::Envelope(e) => envelope_code(e),
                ExperimentError::Inequality(e) => inequality_code(e),
                ExperimentError::Graph(g) => graph_code(g),
                _ => None,
            }
        } else {
            None
        };
        if let Some(c) = code {
            return c;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.is::<Counterexample>() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Envelope {
            graph,
            point,
            common,
        } => cmd_envelope(&graph, &point, &common),
        Command::Verify {
            graph,
            system,
            drop,
            samples,
            seed,
            max_den,
            common,
        } => cmd_verify(&graph, &system, &drop, samples, seed, max_den, &common),
        Command::Cuts {
            graph,
            system,
            point,
            common,
        } => cmd_cuts(&graph, &system, point.as_deref(), &common),
        Command::Certify {
            graph,
            certificate,
            point,
            common,
        } => cmd_certify(&graph, certificate.as_deref(), point.as_deref(), &common),
        Command::Study {
            config,
            dat,
            common,
        } => cmd_study(&config, dat.as_deref(), &common),
        Command::Relax {
            graph,
            system,
            qp,
            convex,
            curve,
            seed,
            common,
        } => cmd_relax(
            graph.as_deref(),
            system.as_deref(),
            qp.as_deref(),
            convex,
            &curve,
            seed,
            &common,
        ),
    }
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn set_jobs(common: &Common) -> Result<()> {
    if let Some(j) = common.jobs {
        if j == 0 {
            return Err(ExperimentError::BadConfig("--jobs must be positive".into()).into());
        }
        // a second call fails harmlessly when the pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global();
    }
    Ok(())
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Graph::parse_edge_list(&text, true).with_context(|| format!("parsing {}", path.display()))
}

fn parse_point(text: &str, g: &Graph) -> Result<Vec<Rational>> {
    let x = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(parse_rational)
        .collect::<Result<Vec<_>, _>>()?;
    g.check_point(&x)?;
    Ok(x)
}

fn resolve_system(g: &Graph, tag: &str) -> Result<System> {
    let sys = match tag.to_ascii_lowercase().as_str() {
        "mccormick" => mccormick_system(g),
        "cycle" | "cycle-theorem" => cycle_system(g, Default::default())?,
        "kn-minus" => {
            let n = g.n();
            if n < 2 || g.m() != n * (n - 1) / 2 - 1 || g.has_edge(n - 1, n) {
                bail!(ExperimentError::MalformedInstance(format!(
                    "kn-minus needs K_{n} without the edge ({}, {n})",
                    n.saturating_sub(1)
                )));
            }
            kn_minus_system(n)?
        }
        "wheel" => wheel_triangle_system(g)?,
        "wheel-bare" => wheel_system(g)?,
        _ => build_relaxation(g, tag.parse::<RelaxClass>()?)?.system,
    };
    Ok(sys)
}

/// `family<f>:s=<s>`
fn parse_drop(text: &str) -> Result<(u8, usize)> {
    let bad = || ParseError::Number(format!("drop spec {text:?}, expected family<f>:s=<s>"));
    let (fam, s) = text.split_once(':').ok_or_else(bad)?;
    let family = fam
        .strip_prefix("family")
        .and_then(|f| f.parse().ok())
        .ok_or_else(bad)?;
    let s = s
        .strip_prefix("s=")
        .and_then(|s| s.parse().ok())
        .ok_or_else(bad)?;
    Ok((family, s))
}

fn witness_json(b: &Bound) -> Value {
    Value::Array(
        b.witness
            .vertex_strings()
            .into_iter()
            .map(|(v, l)| json!({ "vertex": v, "weight": fraction(&l) }))
            .collect(),
    )
}

fn cmd_envelope(graph: &Path, point: &str, common: &Common) -> Result<()> {
    let g = read_graph(graph)?;
    let x = parse_point(point, &g)?;
    let env = envelope(&g, &x)?;
    let vex = Bound {
        value: env.vex.clone(),
        witness: env.vex_witness.clone(),
    };
    let cav = Bound {
        value: env.cav.clone(),
        witness: env.cav_witness.clone(),
    };
    let text = match common.format {
        Format::Text => {
            let mut out = format!(
                "vex={} cav={}\n",
                fraction(&vex.value),
                fraction(&cav.value)
            );
            for (name, b) in [("vex", &vex), ("cav", &cav)] {
                for (v, l) in b.witness.vertex_strings() {
                    out.push_str(&format!("  {name} {v} {}\n", fraction(&l)));
                }
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("bound,value,vertex,weight\n");
            for (name, b) in [("vex", &vex), ("cav", &cav)] {
                for (v, l) in b.witness.vertex_strings() {
                    out.push_str(&format!(
                        "{name},{},{v},{}\n",
                        fraction(&b.value),
                        fraction(&l)
                    ));
                }
            }
            out
        }
        Format::Json => {
            let v = json!({
                "x": x.iter().map(fraction).collect::<Vec<_>>(),
                "vex": { "value": fraction(&vex.value), "witness": witness_json(&vex) },
                "cav": { "value": fraction(&cav.value), "witness": witness_json(&cav) },
            });
            format!("{v:#}\n")
        }
    };
    emit(common, &text)
}

fn cmd_verify(
    graph: &Path,
    tag: &str,
    drops: &[String],
    samples: usize,
    seed: u64,
    max_den: u32,
    common: &Common,
) -> Result<()> {
    set_jobs(common)?;
    let g = read_graph(graph)?;
    let mut sys = resolve_system(&g, tag)?;
    let mut points = Vec::new();
    for d in drops {
        let (family, s) = parse_drop(d)?;
        let removed = sys.remove_where(|l| {
            l.family == Family::CliqueMinus && l.variant == family && l.param == Some(s as i64)
        });
        if removed == 0 {
            bail!(ExperimentError::BadConfig(format!("no row matches {d:?}")));
        }
        if let Some(x) = necessity_point::<Rational>(g.n(), family, s)? {
            points.push(x);
        }
    }
    points.extend(sample_points(g.n(), samples, max_den, seed));
    let report = verify_extension(&g, &sys, &points)?;
    let passed = report.passed();
    let text = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            String::from_utf8(buf)?
        }
        Format::Json => {
            let cx = report.counterexample().map(|r| {
                json!({
                    "x": r.x.iter().map(fraction).collect::<Vec<_>>(),
                    "vex": fraction(&r.vex), "cav": fraction(&r.cav),
                    "lb": fraction(&r.lb), "ub": fraction(&r.ub),
                })
            });
            let v = json!({
                "system": report.system,
                "samples": report.records.len(),
                "passed": passed,
                "infeasible": report.infeasible,
                "counterexample": cx,
            });
            format!("{v:#}\n")
        }
        Format::Text => {
            let mut out = format!(
                "{} on {} samples: {}\n",
                report.system,
                points.len(),
                if passed { "pass" } else { "FAIL" }
            );
            if let Some(r) = report.counterexample() {
                let x: Vec<String> = r.x.iter().map(fraction).collect();
                out.push_str(&format!(
                    "  x = ({})\n  vex = {}  lb = {}\n  cav = {}  ub = {}\n",
                    x.join(", "),
                    fraction(&r.vex),
                    fraction(&r.lb),
                    fraction(&r.cav),
                    fraction(&r.ub)
                ));
            }
            if !report.infeasible.is_empty() {
                out.push_str(&format!(
                    "  x rejected at samples {:?}\n",
                    report.infeasible
                ));
            }
            out
        }
    };
    emit(common, &text)?;
    if passed {
        Ok(())
    } else {
        Err(Counterexample.into())
    }
}

fn cmd_cuts(graph: &Path, tag: &str, point: Option<&str>, common: &Common) -> Result<()> {
    let g = read_graph(graph)?;
    let sys = resolve_system(&g, tag)?;
    let rows: Vec<String> = match point {
        None => sys.constraints().iter().map(|c| c.to_string()).collect(),
        Some(p) => {
            let x = parse_point(p, &g)?;
            let sol = lb_relax_solution(&sys, &g, &x)?;
            let y = sol.y();
            sys.constraints()
                .iter()
                .filter(|c| {
                    c.excess(&x, |i, j| {
                        sys.y_index(i, j)
                            .map_or_else(Default::default, |k| y[k].clone())
                    }) == Default::default()
                })
                .map(|c| c.to_string())
                .collect()
        }
    };
    let text = match common.format {
        Format::Json => format!("{:#}\n", json!({ "system": sys.name(), "rows": rows })),
        Format::Csv => {
            let mut out = String::from("row\n");
            for r in &rows {
                out.push_str(&format!("\"{}\"\n", r.replace('"', "\"\"")));
            }
            out
        }
        Format::Text => rows.iter().map(|r| format!("{r}\n")).collect(),
    };
    emit(common, &text)
}

fn cmd_certify(
    graph: &Path,
    certificate: Option<&Path>,
    point: Option<&str>,
    common: &Common,
) -> Result<()> {
    let g = read_graph(graph)?;
    let sets = match (certificate, point) {
        (Some(path), _) => parse_certificate(&fs::read_to_string(path)?)?,
        (None, Some(p)) => {
            let x = parse_point(p, &g)?;
            let n = g.n();
            let unit = g
                .edges()
                .iter()
                .all(|e| e.weight == Rational::from_integer(1.into()));
            if g.cycle_weights().is_ok() {
                cycle_construction(&g, &x)?.sets
            } else if unit && g.m() == n * (n - 1) / 2 {
                clique_construction(&x)
            } else if unit && n >= 3 && g.m() == n * (n - 1) / 2 - 1 && !g.has_edge(n - 1, n) {
                kn_minus_construction(&x).sets
            } else {
                bail!(ExperimentError::MalformedInstance(
                    "certificates are built only for cycles, unit cliques and unit almost complete graphs".into()
                ));
            }
        }
        (None, None) => bail!(ExperimentError::BadConfig(
            "give --certificate or --point".into()
        )),
    };
    let x = point_of(&sets);
    g.check_point(&x)?;
    let value = certificate_value(&sets, &g).map_err(|e: IntervalError| anyhow!(e))?;
    let env = envelope(&g, &x)?;
    let tight = if value == env.vex {
        "vex"
    } else if value == env.cav {
        "cav"
    } else {
        "neither"
    };
    let xs: Vec<String> = x.iter().map(fraction).collect();
    let text = match common.format {
        Format::Json => format!(
            "{:#}\n",
            json!({
                "x": xs, "value": fraction(&value), "vex": fraction(&env.vex),
                "cav": fraction(&env.cav), "attains": tight, "certificate": write_certificate(&sets),
            })
        ),
        Format::Csv => format!(
            "x,value,vex,cav,attains\n{},{},{},{},{tight}\n",
            xs.join(" "),
            fraction(&value),
            fraction(&env.vex),
            fraction(&env.cav)
        ),
        Format::Text => format!(
            "{}# x = ({})\n# value = {}, vex = {}, cav = {}, attains {tight}\n",
            write_certificate(&sets),
            xs.join(", "),
            fraction(&value),
            fraction(&env.vex),
            fraction(&env.cav)
        ),
    };
    emit(common, &text)
}

fn cmd_study(config: &Path, dat: Option<&Path>, common: &Common) -> Result<()> {
    let mut cfg = StudyConfig::load(config)?;
    if common.jobs.is_some() {
        cfg.jobs = common.jobs;
    }
    let report = run_gap_study(&cfg)?;
    if let Some(path) = dat {
        fs::write(path, report.to_dat())?;
    }
    let text = match common.format {
        Format::Json => {
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "class": r.class.to_string(), "mu_minus_1_pct": r.excess_pct,
                        "sigma_pct": r.sigma_pct, "c_p": r.sources, "graphs": r.graphs,
                    })
                })
                .collect();
            format!(
                "{:#}\n",
                json!({
                    "rows": rows,
                    "degenerate_samples": report.degenerate_samples(),
                    "sandwich_violations": report.sandwich_violations(),
                })
            )
        }
        Format::Csv | Format::Text => report.to_csv(),
    };
    emit(common, &text)?;
    if report.sandwich_violations() > 0 {
        eprintln!(
            "{} samples broke the class ordering",
            report.sandwich_violations()
        );
        return Err(Counterexample.into());
    }
    Ok(())
}

fn cmd_relax(
    graph: Option<&Path>,
    system: Option<&str>,
    qp: Option<&Path>,
    convex: bool,
    curve: &[f64],
    seed: u64,
    common: &Common,
) -> Result<()> {
    match (graph, qp) {
        (Some(path), None) => {
            let g = read_graph(path)?;
            let sys = resolve_system(&g, system.expect("required by clap"))?;
            let objective = bilinhull::envelopes::aligned_objective(&sys, &g)?;
            let p = system_to_lp(&sys, Some((Direction::Minimize, &objective)));
            emit(common, &write_lp(&p))
        }
        (None, Some(path)) => {
            let inst = QpInstance::parse(&fs::read_to_string(path)?)?;
            if !curve.is_empty() {
                let points = triangle_sampling_curve(&inst, curve, seed)?;
                return emit(common, &curve_csv(&points));
            }
            if convex {
                let out = common
                    .out
                    .as_ref()
                    .ok_or_else(|| ExperimentError::BadConfig("--convex needs --out".into()))?;
                emit_qp_convexification(&inst, out)?;
                return Ok(());
            }
            let p = build_qp_linearization(&inst)?;
            let sol = solve(&p).map_err(|e: LpError| anyhow!(e))?;
            let mut text = write_lp(&p);
            if let Some(v) = sol.value {
                text = format!("\\ optimal value {}\n{text}", fraction(&v));
            }
            emit(common, &text)
        }
        _ => bail!(ExperimentError::BadConfig(
            "give either --graph with --system, or --qp".into()
        )),
    }
}
