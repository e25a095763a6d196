//! The `qsphere` command line.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qsphere_core::mkdist::probe_suite;
use qsphere_core::specnorm::{gram_precision, lip_norm, lip_norm_gram_oracle};
use qsphere_core::uq_actions::{Actions, Gen, Label};
use qsphere_core::{expr, Element, Exact, Float, SuQ2};

use crate::codec::{self, Codec, SCHEMA};
use crate::config::{Format, ScalarMode, SessionConfig};
use crate::driver::{self, SweepSpec};
use crate::session::{Session, SessionError};
use crate::suites::{self, VerificationReport};

#[derive(Parser, Debug)]
#[command(name = "qsphere", version, about = "Berezin transform, Lip-norms and distance estimates on the quantum sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// Deformation parameter: p/r, integer or decimal in (0, 1].
    #[arg(long, global = true)]
    pub q: Option<String>,
    /// Algebra element in the expression grammar.
    #[arg(long, global = true)]
    pub expr: Option<String>,
    /// Berezin level: a number, a range `a..b` or a list `a,b,c`.
    #[arg(long = "N", global = true)]
    pub n: Option<String>,
    /// Fuzzy-basis search level.
    #[arg(long = "M", global = true)]
    pub m: Option<u32>,
    #[arg(long, global = true)]
    pub trunc: Option<usize>,
    #[arg(long = "theta-grid", global = true)]
    pub theta_grid: Option<usize>,
    #[arg(long, global = true)]
    pub doublings: Option<u32>,
    /// certified or heuristic.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long = "max-iters", global = true)]
    pub max_iters: Option<usize>,
    /// Significant digits in float mode.
    #[arg(long, global = true)]
    pub precision: Option<usize>,
    #[arg(long = "scalar-mode", global = true, value_enum)]
    pub scalar_mode: Option<ScalarMode>,
    #[arg(long = "pairing-table", global = true)]
    pub pairing_table: Option<String>,
    #[arg(long = "basis-cache", global = true)]
    pub basis_cache: Option<String>,
    /// Start from a configuration recorded in an earlier report (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long = "print-config", global = true)]
    pub print_config: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Include wall-clock timings in verification reports.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normal-ordered form of an expression.
    Expand,
    /// Haar state of an expression.
    Haar,
    /// Coproduct of an expression.
    Coproduct,
    /// Apply an action: delta1..delta4, deltaK, deltaKinv, partialE, partialF, partialK, or a
    /// generator k, kinv, e, f, h (left action).
    Act {
        #[arg(long)]
        op: String,
    },
    /// Berezin transform of an expression and the spectrum at level N.
    Berezin {
        #[arg(long = "max-spin")]
        max_spin: Option<u32>,
        /// Also write the spectrum table as CSV to this file.
        #[arg(long = "csv-out")]
        csv_out: Option<PathBuf>,
    },
    /// Berezin spectrum c_{N,n}.
    Spectrum {
        #[arg(long = "max-spin")]
        max_spin: Option<u32>,
    },
    /// Lip-norm estimate of an expression.
    Lipnorm {
        /// Also run the Gram-matrix oracle.
        #[arg(long)]
        gram: bool,
    },
    /// Lower bound for the distance between h_N and the counit.
    Dist,
    /// Run a verification suite, or the distance harness over a range of N.
    Verify {
        /// hopf, derivations, projections, berezin, lip, gram, slice or classical.
        #[arg(long)]
        suite: Option<String>,
        /// Number of random instances (suite-specific default).
        #[arg(long)]
        count: Option<usize>,
        /// Degree bound of the instances (suite-specific default).
        #[arg(long)]
        degree: Option<u32>,
        /// Highest compression level (projections) or level N (classical).
        #[arg(long)]
        level: Option<u32>,
    },
    /// Grid evaluation over q, N and M as CSV; resumable through the cache directory.
    Sweep {
        #[arg(long = "q-list")]
        q_list: String,
        #[arg(long = "N-range")]
        n_range: String,
        #[arg(long = "M-range")]
        m_range: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or input: exit code 1.
    Usage(String),
    /// A verification check failed: exit code 2.
    CheckFailed,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::CheckFailed => f.write_str("verification failed"),
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// `3`, `1..5` (inclusive) or `1,2,4`.
pub fn parse_levels(s: &str) -> Result<Vec<u32>, String> {
    let bad = || format!("cannot read level list \"{s}\"");
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let v: Result<Vec<u32>, _> = s.split(',').map(|p| p.trim().parse::<u32>()).collect();
    v.map_err(|_| bad()).and_then(|v| if v.is_empty() { Err(bad()) } else { Ok(v) })
}

fn single_level(s: &str) -> Result<u32, CliError> {
    match parse_levels(s) {
        Ok(v) if v.len() == 1 => Ok(v[0]),
        Ok(_) => usage("--N must be a single level for this command"),
        Err(e) => usage(e),
    }
}

/// Effective configuration: defaults (or `--config`), then command-line overrides.
pub fn build_config(c: &Common) -> Result<SessionConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            // a whole report is accepted as well as a bare configuration
            let inner = v.get("config").cloned().unwrap_or(v);
            serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => SessionConfig::default(),
    };
    if let Some(q) = &c.q {
        cfg.q = q.trim().to_string();
    }
    if let Some(n) = &c.n {
        if let Ok(v) = parse_levels(n) {
            cfg.n = v[0];
        }
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = &c.$field { cfg.$field = v.clone(); } )* };
    }
    set!(m, trunc, theta_grid, doublings, seed, restarts, max_iters, precision, scalar_mode, format);
    if let Some(mode) = &c.mode {
        cfg.mode = mode.clone();
    }
    if c.pairing_table.is_some() {
        cfg.pairing_table = c.pairing_table.clone();
    }
    if c.basis_cache.is_some() {
        cfg.basis_cache = c.basis_cache.clone();
    }
    cfg.q_rational().map_err(CliError::Usage)?;
    cfg.search_mode().map_err(CliError::Usage)?;
    if cfg.theta_grid == 0 || cfg.trunc < 2 {
        return usage("--theta-grid must be positive and --trunc at least 2");
    }
    Ok(cfg)
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(CliError::CheckFailed) => {
            let _ = writeln!(err, "error: verification failed");
            2
        }
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = build_config(&cli.common)?;
    if cli.common.print_config {
        let v = json!({ "schema": SCHEMA, "config": cfg.to_json() });
        return emit_json(out, &v);
    }
    if let Command::Sweep { q_list, n_range, m_range } = &cli.command {
        return sweep(&cfg, q_list, n_range, m_range, out);
    }
    match cfg.scalar_mode {
        ScalarMode::Exact => dispatch(&Session::exact(cfg)?, cli, out),
        ScalarMode::Float => dispatch(&Session::float(cfg)?, cli, out),
    }
}

fn emit_json(out: &mut dyn Write, v: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).expect("report serializes");
    writeln!(out, "{text}").map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

fn emit_text(out: &mut dyn Write, s: &str) -> Result<(), CliError> {
    out.write_all(s.as_bytes()).map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

fn expression<F: Codec>(s: &Session<F>, cli: &Cli) -> Result<Element<F::E>, CliError> {
    let Some(src) = &cli.common.expr else { return usage("--expr is required for this command") };
    s.parse(src).map_err(|e| CliError::Usage(format!("expression: {e}")))
}

fn level<F: Codec>(s: &Session<F>, cli: &Cli) -> Result<u32, CliError> {
    match &cli.common.n {
        Some(n) => single_level(n),
        None => Ok(s.config.n),
    }
}

fn element_result<F: Codec>(s: &Session<F>, x: &Element<F::E>) -> Value {
    json!({ "element": codec::element_to_json(s.field(), x), "text": s.field().element_text(x) })
}

fn element_csv<F: Codec>(f: &F, x: &Element<F::E>) -> String {
    let mut out = String::from("aExp,bExp,bStarExp,coeff\n");
    for (m, c) in x.iter() {
        out.push_str(&format!("{},{},{},{}\n", m.a, m.b, m.bs, f.scalar_text(c)));
    }
    out
}

fn spectrum_csv<F: Codec>(f: &F, c: &[F::E]) -> String {
    let mut out = String::from("n,c\n");
    for (k, v) in c.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", f.to_c64(v).re));
    }
    out
}

fn spectrum_json<F: Codec>(f: &F, c: &[F::E]) -> Value {
    Value::Array(
        c.iter().enumerate().map(|(k, v)| json!({ "n": k, "c": codec::scalar_to_json(f, v) })).collect(),
    )
}

fn dispatch<F: Codec>(s: &Session<F>, cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let f = s.field();
    let csv = s.config.format == Format::Csv;
    let name = command_name(&cli.command);
    match &cli.command {
        Command::Expand => {
            let x = expression(s, cli)?;
            if csv {
                return emit_text(out, &element_csv(f, &x));
            }
            emit_json(out, &s.report(name, element_result(s, &x)))
        }
        Command::Haar => {
            let x = expression(s, cli)?;
            let h = s.alg().haar(&x);
            if csv {
                return emit_text(out, &format!("value\n{}\n", f.scalar_text(&h)));
            }
            emit_json(out, &s.report(name, json!({ "value": codec::scalar_to_json(f, &h) })))
        }
        Command::Coproduct => {
            let x = expression(s, cli)?;
            let t = s.alg().coproduct(&x);
            if csv {
                let mut text = String::from("leftA,leftB,leftBStar,rightA,rightB,rightBStar,coeff\n");
                for ((l, r), c) in t.iter() {
                    text.push_str(&format!("{},{},{},{},{},{},{}\n", l.a, l.b, l.bs, r.a, r.b, r.bs, f.scalar_text(c)));
                }
                return emit_text(out, &text);
            }
            emit_json(out, &s.report(name, json!({ "terms": t.len(), "tensor": codec::tensor_to_json(f, &t) })))
        }
        Command::Act { op } => {
            let x = expression(s, cli)?;
            let y = if let Some(l) = Label::from_name(op) {
                s.acts.try_apply(l, &x).map_err(|_| CliError::Usage(format!("{op} needs classical limit data at q = 1")))?
            } else if let Some(g) = Gen::from_name(op) {
                s.acts.try_left_action(g, &x).ok_or_else(|| CliError::Usage(format!("generator {op} has no pairing data")))?
            } else {
                return usage(format!("unknown operator \"{op}\""));
            };
            if csv {
                return emit_text(out, &element_csv(f, &y));
            }
            let mut r = element_result(s, &y);
            r["op"] = json!(op);
            emit_json(out, &s.report(name, r))
        }
        Command::Berezin { max_spin, csv_out } => {
            let x = expression(s, cli)?;
            let n = level(s, cli)?;
            let y = s.berezin.via_coproduct(&x, n).map_err(|e| CliError::Usage(e.to_string()))?;
            let spectral = s.berezin.via_spectrum(&x, n).map_err(|e| CliError::Usage(e.to_string()))?;
            let top = max_spin.unwrap_or(n + 2).max(x.degree());
            let sp = s.berezin.spectrum(n, top).map_err(|e| CliError::Usage(e.to_string()))?;
            s.persist_basis(top)?;
            let table = spectrum_csv(f, &sp.eigenvalues);
            if let Some(p) = csv_out {
                fs::write(p, &table).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            }
            if csv {
                return emit_text(out, &table);
            }
            let mut r = element_result(s, &y);
            r["N"] = json!(n);
            r["extrapolated"] = json!(n == 0);
            r["routesAgree"] = json!(s.alg().eq(&y, &spectral));
            r["spectrum"] = spectrum_json(f, &sp.eigenvalues);
            emit_json(out, &s.report(name, r))
        }
        Command::Spectrum { max_spin } => {
            let n = level(s, cli)?;
            let top = max_spin.unwrap_or(n + 2);
            let sp = s.berezin.spectrum(n, top).map_err(|e| CliError::Usage(e.to_string()))?;
            s.persist_basis(top)?;
            if csv {
                return emit_text(out, &spectrum_csv(f, &sp.eigenvalues));
            }
            emit_json(out, &s.report(name, json!({ "N": n, "extrapolated": n == 0, "spectrum": spectrum_json(f, &sp.eigenvalues) })))
        }
        Command::Lipnorm { gram } => {
            let x = expression(s, cli)?;
            let opts = s.config.norm_options_for(x.degree());
            let l = lip_norm(&s.acts, &x, &opts).map_err(|e| CliError::Usage(e.to_string()))?;
            let comps: Vec<Vec<Value>> = l
                .components
                .iter()
                .map(|row| row.iter().map(|e| codec::element_to_json(f, e)).collect())
                .collect();
            let mut r = json!({ "lip": driver::norm_json(&l.value), "components": comps });
            if *gram {
                r["gram"] = gram_json(s, &x)?;
            }
            if csv {
                let e = &l.value;
                return emit_text(
                    out,
                    &format!("lower,upper,converged,M_used\n{},{},{},{}\n", e.lower, e.upper, e.converged, e.m_used),
                );
            }
            emit_json(out, &s.report(name, r))
        }
        Command::Dist => {
            let n = level(s, cli)?;
            let mode = s.config.search_mode().map_err(CliError::Usage)?;
            let p = s.config.problem(n, s.config.m, mode);
            let d = driver::estimate_distance(&s.acts, &s.berezin, &p, None).map_err(|e| CliError::Usage(e.to_string()))?;
            s.persist_basis(s.config.m)?;
            if csv {
                return emit_text(out, &format!("N,M,mode,value,degraded\n{},{},{},{:e},{}\n", n, p.m, mode.name(), d.value, d.degraded));
            }
            let mut r = driver::distance_json(f, &d);
            r["extrapolated"] = json!(n == 0);
            emit_json(out, &s.report(name, r))
        }
        Command::Verify { suite, count, degree, level: lvl } => verify(s, cli, suite.as_deref(), *count, *degree, *lvl, out),
        Command::Sweep { .. } => unreachable!("handled before dispatch"),
    }
}

fn gram_json<F: Codec>(s: &Session<F>, x: &Element<F::E>) -> Result<Value, CliError> {
    let g = s.config.gram_options();
    let fl = Float::new(&s.q, gram_precision(s.field().q_f64(), g.degree_cap));
    let acts = Actions::new(SuQ2::new(fl));
    let xf = expr::parse(acts.alg(), &s.field().element_text(x)).map_err(|e| CliError::Usage(e.to_string()))?;
    let est = lip_norm_gram_oracle(&acts, &xf, &g).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(json!({
        "lowerBound": est.lower,
        "partial1": est.partial1,
        "partial2": est.partial2,
        "converged": est.converged,
        "minPivot": est.min_pivot,
        "ladder": est.ladder.iter().map(|(c, v)| json!({"degreeCap": c, "lowerBound": v})).collect::<Vec<_>>(),
    }))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Expand => "expand",
        Command::Haar => "haar",
        Command::Coproduct => "coproduct",
        Command::Act { .. } => "act",
        Command::Berezin { .. } => "berezin",
        Command::Spectrum { .. } => "spectrum",
        Command::Lipnorm { .. } => "lipnorm",
        Command::Dist => "dist",
        Command::Verify { .. } => "verify",
        Command::Sweep { .. } => "sweep",
    }
}

fn verify<F: Codec>(
    s: &Session<F>,
    cli: &Cli,
    suite: Option<&str>,
    count: Option<usize>,
    degree: Option<u32>,
    lvl: Option<u32>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let csv = s.config.format == Format::Csv;
    let levels = |default: &[u32]| -> Result<Vec<u32>, CliError> {
        match &cli.common.n {
            Some(n) => parse_levels(n).map_err(CliError::Usage),
            None => Ok(default.to_vec()),
        }
    };
    let Some(suite) = suite else {
        // the distance harness over N
        let ns = levels(&[1, 2, 3, 4, 5])?;
        if ns.contains(&0) {
            return usage("levels must be at least 1");
        }
        let lv = driver::harness(&s.acts, &s.berezin, &s.config, &ns).map_err(|e| CliError::Usage(e.to_string()))?;
        s.persist_basis(s.config.m)?;
        let rows: Vec<_> = lv.iter().map(|l| l.row.clone()).collect();
        let rep = driver::trend_report(&rows, s.config.trend_tol);
        if csv {
            emit_text(out, &driver::harness_csv(&rows))?;
        } else {
            let levels: Vec<Value> = lv
                .iter()
                .map(|l| {
                    json!({
                        "N": l.row.n,
                        "distLb": l.row.dist_lb,
                        "distHeuristic": l.row.dist_heuristic,
                        "maxProbeRatio": l.row.max_probe_ratio,
                        "meanLipSlack": l.row.mean_lip_slack,
                        "qualityEvents": l.row.quality_events,
                        "degraded": l.row.degraded,
                        "certified": driver::distance_json(s.field(), &l.certified),
                        "heuristic": driver::distance_json(s.field(), &l.heuristic),
                    })
                })
                .collect();
            let mut r = rep.to_json(cli.common.timings);
            r["levels"] = Value::Array(levels);
            emit_json(out, &s.report("verify", r))?;
        }
        return if rep.passed() { Ok(()) } else { Err(CliError::CheckFailed) };
    };
    let seed = s.config.seed;
    let norm = s.config.norm_options();
    let rep: VerificationReport = match suite {
        "hopf" => suites::hopf(s.alg(), degree.unwrap_or(5)),
        "derivations" => suites::derivations(&s.acts, count.unwrap_or(100), degree.unwrap_or(3), seed),
        "projections" => {
            let top = lvl.unwrap_or(5);
            let b = s.basis(top).map_err(|e| CliError::Usage(e.to_string()))?;
            s.persist_basis(top)?;
            suites::projections(&s.acts, &b)
        }
        "berezin" => {
            let xs = suites::element_suite(s.alg(), count.unwrap_or(50), degree.unwrap_or(4), seed);
            suites::berezin(&s.berezin, &xs, &levels(&[1, 2, 3])?)
        }
        "lip" => {
            let xs = suites::element_suite(s.alg(), count.unwrap_or(50), degree.unwrap_or(4), seed);
            suites::lip_contraction(&s.acts, &s.berezin, &xs, &levels(&[1, 2, 3, 4, 5])?, &norm, s.config.lip_tol)
        }
        "gram" => {
            let probes = probe_suite(s.alg());
            suites::gram(&s.acts, &s.q, &probes, &norm, &s.config.gram_options(), 1e-4)
        }
        "slice" => suites::slice(
            &s.acts,
            &s.berezin,
            count.unwrap_or(20),
            degree.unwrap_or(2),
            seed,
            &norm,
            s.config.slice_tol,
        ),
        "classical" => suites::classical(lvl.unwrap_or(8), 2, s.config.trend_tol),
        other => return usage(format!("unknown suite \"{other}\" (one of {})", suites::SUITES.join(", "))),
    };
    if csv {
        emit_text(out, &rep.to_csv())?;
    } else {
        emit_json(out, &s.report("verify", rep.to_json(cli.common.timings)))?;
    }
    if rep.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn sweep(cfg: &SessionConfig, q_list: &str, n_range: &str, m_range: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let qs: Vec<String> = q_list.split(',').map(|q| q.trim().to_string()).filter(|q| !q.is_empty()).collect();
    if qs.is_empty() {
        return usage("--q-list is empty");
    }
    for q in &qs {
        SessionConfig { q: q.clone(), ..cfg.clone() }.q_rational().map_err(CliError::Usage)?;
    }
    let ns = parse_levels(n_range).map_err(CliError::Usage)?;
    let ms = parse_levels(m_range).map_err(CliError::Usage)?;
    if ns.contains(&0) || ms.contains(&0) {
        return usage("levels must be at least 1");
    }
    let spec = SweepSpec { qs, ns, ms };
    let rows = match cfg.scalar_mode {
        ScalarMode::Exact => driver::sweep(cfg, &spec, Session::<Exact>::exact)?,
        ScalarMode::Float => driver::sweep(cfg, &spec, Session::<Float>::float)?,
    };
    let table = driver::sweep_csv(&spec, &rows);
    if cfg.format == Format::Json {
        let v = json!({
            "schema": SCHEMA,
            "command": "sweep",
            "config": cfg.to_json(),
            "result": { "rows": rows, "csv": table },
        });
        return emit_json(out, &v);
    }
    emit_text(out, &table)
}
