//! Parallel scheduling of distance searches, the approximation harness and sweeps.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use qsphere_core::berezin::Berezin;
use qsphere_core::mkdist::{
    harness_row, probe_suite, berezin_approximant, approx_inequality_check, DistError, DistanceEstimate,
    DistanceSearch, HarnessRow, Mode, OptimizationProblem,
};
use qsphere_core::specnorm::NormEstimate;
use qsphere_core::uq_actions::Actions;
use qsphere_core::{Element, Field};

use crate::codec::{self, Codec};
use crate::config::SessionConfig;
use crate::session::{Session, SessionError};
use crate::suites::{Check, Status, VerificationReport};

/// Restarts run as parallel tasks; the reduction in `finish` is order-independent.
pub fn estimate_distance<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    problem: &OptimizationProblem,
    warm: Option<&Element<F::E>>,
) -> Result<DistanceEstimate<F::E>, DistError> {
    let search = DistanceSearch::new(acts, berezin, problem.clone())?;
    let starts = search.starts(warm);
    let results = starts.par_iter().enumerate().map(|(i, s)| search.descend(i, s)).collect();
    search.finish(results)
}

pub fn norm_json(e: &NormEstimate) -> Value {
    json!({
        "lowerBound": e.lower,
        "upperBound": e.upper,
        "converged": e.converged,
        "mUsed": e.m_used,
        "thetaGridSize": e.theta_grid_size,
        "solverConverged": e.solver_converged,
        "ladder": e.ladder.iter().map(|(m, v)| json!({"M": m, "lowerBound": v})).collect::<Vec<_>>(),
        "perTheta": e.per_theta.iter().map(|(t, v)| json!({"theta": t, "value": v})).collect::<Vec<_>>(),
    })
}

pub fn distance_json<F: Codec>(f: &F, d: &DistanceEstimate<F::E>) -> Value {
    json!({
        "value": d.value,
        "mode": d.mode.name(),
        "N": d.n,
        "M": d.m,
        "normTruncation": d.norm_trunc,
        "defect": d.defect,
        "witness": codec::element_to_json(f, &d.witness),
        "witnessText": f.element_text(&d.witness),
        "lip": norm_json(&d.lip),
        "trace": d.trace,
        "restartValues": d.restart_values,
        "bestRestart": d.best_restart,
        "degraded": d.degraded,
    })
}

/// Certified and heuristic estimates plus the probe harness for one `N`.
pub struct HarnessLevel<E> {
    pub row: HarnessRow,
    pub certified: DistanceEstimate<E>,
    pub heuristic: DistanceEstimate<E>,
}

pub fn harness_level<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    config: &SessionConfig,
    n: u32,
) -> Result<HarnessLevel<F::E>, DistError> {
    let cp = config.problem(n, config.m, Mode::Certified);
    let hp = config.problem(n, config.m, Mode::Heuristic);
    let certified = estimate_distance(acts, berezin, &cp, None)?;
    let heuristic = estimate_distance(acts, berezin, &hp, None)?;
    let row = harness_row(acts, berezin, &certified, &heuristic, config.gap, &config.norm_options())?;
    Ok(HarnessLevel { row, certified, heuristic })
}

/// Levels in order; each level's restarts run in parallel.
pub fn harness<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    config: &SessionConfig,
    ns: &[u32],
) -> Result<Vec<HarnessLevel<F::E>>, DistError> {
    ns.iter().map(|&n| harness_level(acts, berezin, config, n)).collect()
}

/// Decreasing trends of `d_lb` and `r_max` within `tol`, and no probe ratio above the
/// heuristic estimate plus its gap.
pub fn trend_report(rows: &[HarnessRow], tol: f64) -> VerificationReport {
    let mut checks = Vec::new();
    let series: [(&str, fn(&HarnessRow) -> f64); 2] =
        [("dist-lb-decreasing", |r| r.dist_lb), ("probe-ratio-decreasing", |r| r.max_probe_ratio)];
    for (name, get) in series {
        let mut worst = 0.0f64;
        let mut detail = None;
        for w in rows.windows(2) {
            let rise = get(&w[1]) - get(&w[0]);
            worst = worst.max(rise);
            if rise > tol && detail.is_none() {
                detail = Some(format!("N = {} to {}: {} then {}", w[0].n, w[1].n, get(&w[0]), get(&w[1])));
            }
        }
        checks.push(Check {
            name: name.into(),
            status: if detail.is_some() { Status::Fail } else { Status::Pass },
            residual: worst.max(0.0),
            count: rows.len().saturating_sub(1),
            elapsed: Default::default(),
            detail,
        });
    }
    let events: Vec<String> =
        rows.iter().flat_map(|r| r.quality_events.iter().map(move |p| format!("N = {}: {p}", r.n))).collect();
    checks.push(Check {
        name: "probe-within-gap".into(),
        status: if events.is_empty() { Status::Pass } else { Status::Fail },
        residual: rows.iter().map(|r| (r.max_probe_ratio - r.dist_heuristic).max(0.0)).fold(0.0, f64::max),
        count: rows.len(),
        elapsed: Default::default(),
        detail: if events.is_empty() { None } else { Some(events.join("; ")) },
    });
    let degraded: Vec<String> = rows.iter().filter(|r| r.degraded).map(|r| r.n.to_string()).collect();
    checks.push(Check {
        name: "search-quality".into(),
        status: Status::Pass,
        residual: 0.0,
        count: rows.len(),
        elapsed: Default::default(),
        detail: if degraded.is_empty() {
            None
        } else {
            Some(format!("probe A optimal at N = {}", degraded.join(", ")))
        },
    });
    VerificationReport { suite: "distance-trend".into(), checks }
}

pub fn harness_csv(rows: &[HarnessRow]) -> String {
    let mut out = String::from("N,dist_lb,max_probe_ratio,mean_lipSlack\n");
    for r in rows {
        out.push_str(&format!("{},{:e},{:e},{:e}\n", r.n, r.dist_lb, r.max_probe_ratio, r.mean_lip_slack));
    }
    out
}

// --- sweeps ------------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub q: String,
    pub n: u32,
    pub m: u32,
    /// `ok`, or `error: …` for a failed cell.
    pub status: String,
    pub dist_lb: Option<f64>,
    pub degraded: Option<bool>,
    pub max_probe_ratio: Option<f64>,
    pub mean_lip_slack: Option<f64>,
    /// `c_{N,n}` for `n = 0..=spin_cols`.
    pub spectrum: Vec<Option<f64>>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub qs: Vec<String>,
    pub ns: Vec<u32>,
    pub ms: Vec<u32>,
}

impl SweepSpec {
    pub fn spin_cols(&self) -> u32 {
        self.ns.iter().copied().max().unwrap_or(0) + 1
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    config: Value,
    row: SweepRow,
}

fn cache_config(config: &SessionConfig) -> Value {
    let mut c = config.clone();
    c.q = String::new();
    c.n = 0;
    c.m = 0;
    c.cache_dir = None;
    c.basis_cache = None;
    c.format = Default::default();
    c.to_json()
}

fn sweep_cache_path(config: &SessionConfig) -> Option<PathBuf> {
    config.cache_dir.as_ref().map(|d| PathBuf::from(d).join("sweep-rows.jsonl"))
}

fn load_cache(path: &PathBuf, key: &Value) -> BTreeMap<(String, u32, u32), SweepRow> {
    let mut out = BTreeMap::new();
    let Ok(text) = fs::read_to_string(path) else { return out };
    for line in text.lines() {
        if let Ok(c) = serde_json::from_str::<CacheLine>(line) {
            if &c.config == key && c.row.ok() {
                out.insert((c.row.q.clone(), c.row.n, c.row.m), c.row);
            }
        }
    }
    out
}

/// Per-`(q, N)` data shared by every `M`.
struct LevelData {
    probe: Result<(f64, f64), String>,
    spectrum: Vec<Option<f64>>,
}

fn level_data<F: Field>(s: &Session<F>, n: u32, cols: u32) -> LevelData
where
    F: Codec,
{
    let f = s.field();
    let spectrum = match s.berezin.spectrum(n, cols) {
        Ok(sp) => sp.eigenvalues.iter().map(|c| Some(f.to_c64(c).re)).collect(),
        Err(_) => vec![None; cols as usize + 1],
    };
    let opts = s.config.norm_options();
    let probe = (|| -> Result<(f64, f64), DistError> {
        let probes = probe_suite(s.alg());
        let mut rmax = 0.0f64;
        let mut slack = 0.0;
        for (_, x) in &probes {
            rmax = rmax.max(approx_inequality_check(&s.acts, &s.berezin, x, n, 0.0, 0.0, &opts)?.ratio);
            slack += berezin_approximant(&s.acts, &s.berezin, x, n, &opts)?.lip_slack;
        }
        Ok((rmax, slack / probes.len() as f64))
    })()
    .map_err(|e| e.to_string());
    LevelData { probe, spectrum }
}

fn sweep_q<F: Codec>(s: &Session<F>, spec: &SweepSpec, todo: &[(u32, u32)], sink: &(dyn Fn(SweepRow) + Sync)) {
    let cols = spec.spin_cols();
    let mut ns: Vec<u32> = todo.iter().map(|c| c.0).collect();
    ns.dedup();
    let levels: BTreeMap<u32, LevelData> = ns.par_iter().map(|&n| (n, level_data(s, n, cols))).collect();
    todo.par_iter().for_each(|&(n, m)| {
        let lv = &levels[&n];
        let mode = s.config.search_mode().unwrap_or(Mode::Certified);
        let dist = estimate_distance(&s.acts, &s.berezin, &s.config.problem(n, m, mode), None);
        let mut errors = Vec::new();
        if let Err(e) = &dist {
            errors.push(format!("dist: {e}"));
        }
        if let Err(e) = &lv.probe {
            errors.push(format!("probes: {e}"));
        }
        if lv.spectrum.iter().any(Option::is_none) {
            errors.push("spectrum unavailable".into());
        }
        let row = SweepRow {
            q: s.config.q.clone(),
            n,
            m,
            status: if errors.is_empty() { "ok".into() } else { format!("error: {}", errors.join("; ")) },
            dist_lb: dist.as_ref().ok().map(|d| d.value),
            degraded: dist.as_ref().ok().map(|d| d.degraded),
            max_probe_ratio: lv.probe.as_ref().ok().map(|p| p.0),
            mean_lip_slack: lv.probe.as_ref().ok().map(|p| p.1),
            spectrum: lv.spectrum.clone(),
        };
        sink(row);
    });
}

/// Evaluates every `(q, N, M)` cell. Completed rows are appended to the cache file as they
/// finish and reused on the next run with the same configuration; failed cells are kept
/// as flagged rows and retried on resume.
pub fn sweep<F: Codec>(
    config: &SessionConfig,
    spec: &SweepSpec,
    make: impl Fn(SessionConfig) -> Result<Session<F>, SessionError> + Sync,
) -> Result<Vec<SweepRow>, SessionError> {
    let key = cache_config(config);
    let path = sweep_cache_path(config);
    let cached = path.as_ref().map(|p| load_cache(p, &key)).unwrap_or_default();
    let file = match &path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir).map_err(|e| SessionError::Io(format!("{}: {e}", dir.display())))?;
            }
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| SessionError::Io(format!("{}: {e}", p.display())))?;
            Some(Mutex::new(f))
        }
        None => None,
    };
    let rows = Mutex::new(cached.clone());
    let sink = |row: SweepRow| {
        if let (Some(f), true) = (&file, row.ok()) {
            let line = serde_json::to_string(&CacheLine { config: key.clone(), row: row.clone() }).expect("row serializes");
            // a failed cache write only costs a recomputation later
            let _ = writeln!(f.lock().unwrap(), "{line}");
        }
        rows.lock().unwrap().insert((row.q.clone(), row.n, row.m), row);
    };
    for q in &spec.qs {
        let todo: Vec<(u32, u32)> = spec
            .ns
            .iter()
            .flat_map(|&n| spec.ms.iter().map(move |&m| (n, m)))
            .filter(|(n, m)| !cached.contains_key(&(q.clone(), *n, *m)))
            .collect();
        if todo.is_empty() {
            continue;
        }
        let cfg = SessionConfig { q: q.clone(), ..config.clone() };
        match make(cfg) {
            Ok(s) => sweep_q(&s, spec, &todo, &sink),
            Err(e) => {
                for &(n, m) in &todo {
                    sink(SweepRow {
                        q: q.clone(),
                        n,
                        m,
                        status: format!("error: {e}"),
                        dist_lb: None,
                        degraded: None,
                        max_probe_ratio: None,
                        mean_lip_slack: None,
                        spectrum: vec![None; spec.spin_cols() as usize + 1],
                    });
                }
            }
        }
    }
    let all = rows.into_inner().unwrap();
    // output follows the order of the requested lists
    let mut out = Vec::new();
    for q in &spec.qs {
        for &n in &spec.ns {
            for &m in &spec.ms {
                if let Some(r) = all.get(&(q.clone(), n, m)) {
                    out.push(r.clone());
                }
            }
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = String::from("q,N,M,status,dist_lb,degraded,max_probe_ratio,mean_lipSlack");
    for k in 0..=spec.spin_cols() {
        out.push_str(&format!(",c_{k}"));
    }
    out.push('\n');
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            r.q,
            r.n,
            r.m,
            status,
            opt(r.dist_lb),
            r.degraded.map(|d| d.to_string()).unwrap_or_default(),
            opt(r.max_probe_ratio),
            opt(r.mean_lip_slack)
        ));
        for c in &r.spectrum {
            out.push(',');
            out.push_str(&opt(*c));
        }
        out.push('\n');
    }
    out
}
