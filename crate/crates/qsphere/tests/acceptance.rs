//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time budgets are
//! pinned here rather than read from the session defaults.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_rational::BigRational;

use qsphere::config::SessionConfig;
use qsphere::driver;
use qsphere::suites::{self, Status, VerificationReport};
use qsphere_core::berezin::Berezin;
use qsphere_core::mkdist::probe_suite;
use qsphere_core::specnorm::{GramOptions, NormOptions};
use qsphere_core::uq_actions::Actions;
use qsphere_core::{Exact, SuQ2};

const LIP_TOL: f64 = 1e-6;
const GRAM_TOL: f64 = 1e-4;
const TREND_TOL: f64 = 1e-3;
const SLICE_TOL: f64 = 1e-4;
const GRID_TOL: f64 = 1e-3;
const SEED: u64 = 0;

struct Outcome {
    pass: bool,
    summary: String,
}

fn acts(num: i64, den: i64) -> Actions<Exact> {
    Actions::new(SuQ2::new(Exact::from_ratio(num, den)))
}

fn norm_200() -> NormOptions {
    NormOptions { trunc: 200, ..NormOptions::default() }
}

fn describe(rep: &VerificationReport) -> String {
    rep.checks
        .iter()
        .map(|c| {
            let mut s = format!("{} {} r={:.3e} n={}", c.name, c.status.name(), c.residual, c.count);
            if c.status != Status::Pass {
                if let Some(d) = &c.detail {
                    s.push_str(&format!(" [{d}]"));
                }
            }
            s
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// No failing check, every residual exactly zero, and within the budget if one is given.
fn exact(reps: &[VerificationReport], elapsed: Duration, budget: Option<Duration>) -> Outcome {
    let zero = reps.iter().all(|r| r.passed() && r.checks.iter().all(|c| c.residual == 0.0));
    timed(reps, zero, elapsed, budget)
}

fn timed(reps: &[VerificationReport], ok: bool, elapsed: Duration, budget: Option<Duration>) -> Outcome {
    let in_time = budget.map_or(true, |b| elapsed < b);
    let mut summary = reps.iter().map(describe).collect::<Vec<_>>().join(" | ");
    summary.push_str(&format!(" | {:.1} s", elapsed.as_secs_f64()));
    if let Some(b) = budget {
        summary.push_str(&format!(" (budget {} s)", b.as_secs()));
    }
    Outcome { pass: ok && in_time, summary }
}

fn hopf() -> Outcome {
    let t = Instant::now();
    let rep = suites::hopf(acts(1, 2).alg(), 5);
    exact(&[rep], t.elapsed(), Some(Duration::from_secs(60)))
}

fn derivations() -> Outcome {
    let t = Instant::now();
    let rep = suites::derivations(&acts(1, 2), 100, 3, SEED);
    exact(&[rep], t.elapsed(), Some(Duration::from_secs(120)))
}

fn projections() -> Outcome {
    let t = Instant::now();
    let a = acts(1, 2);
    let b = Berezin::new(a.alg().clone()).basis(5).expect("fuzzy basis");
    let rep = suites::projections(&a, &b);
    exact(&[rep], t.elapsed(), None)
}

fn berezin() -> Outcome {
    let t = Instant::now();
    let a = acts(1, 2);
    let b = Berezin::new(a.alg().clone());
    let xs = suites::element_suite(a.alg(), 50, 4, SEED);
    let rep = suites::berezin(&b, &xs, &[1, 2, 3]);
    exact(&[rep], t.elapsed(), None)
}

fn lip() -> Outcome {
    let t = Instant::now();
    let reps: Vec<VerificationReport> = [(1, 2), (9, 10)]
        .iter()
        .map(|&(n, d)| {
            let a = acts(n, d);
            let b = Berezin::new(a.alg().clone());
            let xs = suites::element_suite(a.alg(), 50, 4, SEED);
            let mut rep = suites::lip_contraction(&a, &b, &xs, &[1, 2, 3, 4, 5], &norm_200(), LIP_TOL);
            rep.suite = format!("q={n}/{d}");
            rep
        })
        .collect();
    let ok = reps.iter().all(VerificationReport::passed);
    let labelled: Vec<VerificationReport> = reps
        .into_iter()
        .map(|mut r| {
            let tag = r.suite.clone();
            r.checks.iter_mut().for_each(|c| c.name = format!("{tag} {}", c.name));
            r
        })
        .collect();
    timed(&labelled, ok, t.elapsed(), Some(Duration::from_secs(600)))
}

fn gram() -> Outcome {
    let t = Instant::now();
    let a = acts(1, 2);
    let q = BigRational::new(1.into(), 2.into());
    let rep = suites::gram(&a, &q, &probe_suite(a.alg()), &norm_200(), &GramOptions::default(), GRAM_TOL);
    let ok = rep.check("gram-agreement").is_some_and(|c| c.status == Status::Pass);
    timed(&[rep], ok, t.elapsed(), None)
}

fn trend() -> Outcome {
    let t = Instant::now();
    let a = acts(1, 2);
    let b = Berezin::new(a.alg().clone());
    let config = SessionConfig { q: "1/2".into(), trend_tol: TREND_TOL, ..SessionConfig::default() };
    let levels = match driver::harness(&a, &b, &config, &[1, 2, 3, 4, 5]) {
        Ok(l) => l,
        Err(e) => return Outcome { pass: false, summary: format!("harness failed: {e}") },
    };
    let rows: Vec<_> = levels.into_iter().map(|l| l.row).collect();
    let rep = driver::trend_report(&rows, TREND_TOL);
    let mut out = timed(&[rep.clone()], rep.passed(), t.elapsed(), Some(Duration::from_secs(1200)));
    let series: Vec<String> = rows.iter().map(|r| format!("N={} d_lb={:.4e} r_max={:.4e}", r.n, r.dist_lb, r.max_probe_ratio)).collect();
    out.summary = format!("{} | {}", series.join(", "), out.summary);
    out
}

fn slice() -> Outcome {
    let t = Instant::now();
    let a = acts(1, 2);
    let b = Berezin::new(a.alg().clone());
    let rep = suites::slice(&a, &b, 20, 2, SEED, &NormOptions::default(), SLICE_TOL);
    timed(&[rep.clone()], rep.passed(), t.elapsed(), None)
}

fn classical() -> Outcome {
    let t = Instant::now();
    let rep = suites::classical(8, 2, GRID_TOL);
    timed(&[rep.clone()], rep.status() == Status::Pass, t.elapsed(), None)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Hopf/Haar identities, q=1/2, degree <= 5", hopf),
        ("derivation identities, 100 pairs, degree <= 3", derivations),
        ("adjoint patterns and commutation, M <= 5", projections),
        ("Berezin routes and spectrum, 50 elements, N in 1..3", berezin),
        ("Lip-contraction, q in {1/2, 9/10}, N in 1..5, M = 200", lip),
        ("Lip-norm vs Gram oracle, probe suite, M = 200, rel 1e-4", gram),
        ("distance trend, q=1/2, N in 1..5", trend),
        ("slice estimate, 20 triples, degree <= 2, rel 1e-4", slice),
        ("classical spectrum at q=1", classical),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {}: {title}: {}", k + 1, o.summary);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
