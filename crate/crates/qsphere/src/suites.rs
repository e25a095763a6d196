//! Verification suites. Each check reports a status and the largest residual seen.
//!
//! In exact mode an identity passes only with residual exactly 0. In float mode the
//! residual is compared with a tolerance derived from the working precision.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use qsphere_core::berezin::Berezin;
use qsphere_core::gns::{self, FuzzyBasis};
use qsphere_core::random::{random_element, random_sphere, rng};
use qsphere_core::specnorm::{
    gram_precision, lip_norm, lip_norm_gram_oracle, GramOptions, NormEstimate, NormOptions,
};
use qsphere_core::uq_actions::{Actions, Gen, Label};
use qsphere_core::{expr, Element, Exact, Field, Float, Monomial, SuQ2, Tensor};

use crate::codec::Codec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub residual: f64,
    /// Number of instances examined.
    pub count: usize,
    pub elapsed: Duration,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn status(&self) -> Status {
        self.checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass)
    }

    pub fn passed(&self) -> bool {
        self.status() != Status::Fail
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Timings are omitted unless asked for, so that reports stay byte-identical.
    pub fn to_json(&self, timings: bool) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                let mut o = json!({
                    "name": c.name,
                    "status": c.status.name(),
                    "residual": c.residual,
                    "count": c.count,
                });
                if let Some(d) = &c.detail {
                    o["detail"] = json!(d);
                }
                if timings {
                    o["elapsedMs"] = json!(c.elapsed.as_secs_f64() * 1e3);
                }
                o
            })
            .collect();
        json!({ "suite": self.suite, "status": self.status().name(), "checks": checks })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,status,residual,count\n");
        for c in &self.checks {
            out.push_str(&format!("{},{},{:e},{}\n", c.name, c.status.name(), c.residual, c.count));
        }
        out
    }
}

/// Accumulates one named check.
struct Tally {
    name: String,
    count: usize,
    worst: f64,
    status: Status,
    detail: Option<String>,
    start: Instant,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally { name: name.into(), count: 0, worst: 0.0, status: Status::Pass, detail: None, start: Instant::now() }
    }

    fn fail(&mut self, residual: f64, detail: String) {
        self.status = Status::Fail;
        self.worst = self.worst.max(residual);
        if self.detail.is_none() {
            self.detail = Some(detail);
        }
    }

    fn warn(&mut self, detail: String) {
        if self.status == Status::Pass {
            self.status = Status::Warn;
        }
        if self.detail.is_none() {
            self.detail = Some(detail);
        }
    }

    /// Records a measured error as the residual, failing above `tol`.
    fn within(&mut self, err: f64, tol: f64, what: impl FnOnce() -> String) {
        self.count += 1;
        if err.is_nan() || err > tol {
            self.fail(if err.is_nan() { f64::INFINITY } else { err }, what());
        } else {
            self.worst = self.worst.max(err);
        }
    }

    /// Residual of an identity `lhs − rhs` given by its coefficients.
    fn identity<'x, F: Field>(&mut self, f: &F, coeffs: impl Iterator<Item = &'x F::E>, what: impl FnOnce() -> String)
    where
        F::E: 'x,
    {
        self.count += 1;
        let mut r = 0.0f64;
        let mut nonzero = false;
        for c in coeffs {
            if !f.is_zero(c) {
                nonzero = true;
                r = r.max(f.abs_f64(c));
            }
        }
        if !nonzero {
            return;
        }
        let r = r.max(f64::MIN_POSITIVE);
        if f.is_exact() || r > float_tol(f) {
            self.fail(r, what());
        } else {
            self.worst = self.worst.max(r);
        }
    }

    fn element<F: Field>(&mut self, f: &F, diff: &Element<F::E>, what: impl FnOnce() -> String) {
        self.identity(f, diff.iter().map(|(_, c)| c), what);
    }

    fn tensor<F: Field>(&mut self, f: &F, diff: &Tensor<F::E>, what: impl FnOnce() -> String) {
        self.identity(f, diff.iter().map(|(_, c)| c), what);
    }

    fn scalar<F: Field>(&mut self, f: &F, diff: &F::E, what: impl FnOnce() -> String) {
        self.identity(f, std::iter::once(diff), what);
    }

    /// A numerical inequality `value ≤ bound`.
    fn at_most(&mut self, value: f64, bound: f64, what: impl FnOnce() -> String) {
        self.count += 1;
        let excess = value - bound;
        if excess > 0.0 || value.is_nan() {
            self.fail(excess, what());
        } else {
            self.worst = self.worst.max(excess.max(0.0));
        }
    }

    fn done(self) -> Check {
        Check {
            name: self.name,
            status: self.status,
            residual: self.worst,
            count: self.count,
            elapsed: self.start.elapsed(),
            detail: self.detail,
        }
    }
}

fn float_tol<F: Field>(f: &F) -> f64 {
    match f.precision() {
        Some(d) => 10f64.powi(-(d as i32 - 10).max(6)),
        None => 0.0,
    }
}

fn report(suite: &str, checks: Vec<Check>) -> VerificationReport {
    VerificationReport { suite: suite.into(), checks }
}

// --- Hopf structure ----------------------------------------------------------------

type Triple = (Monomial, Monomial, Monomial);

fn add_triple<F: Field>(f: &F, acc: &mut std::collections::BTreeMap<Triple, F::E>, k: Triple, c: F::E) {
    let v = match acc.remove(&k) {
        Some(old) => f.add(&old, &c),
        None => c,
    };
    if !f.is_zero(&v) {
        acc.insert(k, v);
    }
}

/// Algebra and Hopf axioms on all monomials (tuples) of total degree at most `degree`.
pub fn hopf<F: Field>(alg: &SuQ2<F>, degree: u32) -> VerificationReport {
    let f = alg.field();
    let mons = Monomial::all_up_to(degree);
    let el = |m: Monomial| alg.monomial(m);

    let mut assoc = Tally::new("associativity");
    let mut mult = Tally::new("coproduct-multiplicative");
    for &x in &mons {
        for &y in mons.iter().filter(|y| x.degree() + y.degree() <= degree) {
            let (ex, ey) = (el(x), el(y));
            let xy = alg.mul(&ex, &ey);
            let d = alg.tensor_sub(&alg.coproduct(&xy), &alg.tensor_mul(&alg.coproduct(&ex), &alg.coproduct(&ey)));
            mult.tensor(f, &d, || format!("Δ({x}·{y})"));
            for &z in mons.iter().filter(|z| x.degree() + y.degree() + z.degree() <= degree) {
                let ez = el(z);
                let d = alg.sub(&alg.mul(&xy, &ez), &alg.mul(&ex, &alg.mul(&ey, &ez)));
                assoc.element(f, &d, || format!("({x}·{y})·{z}"));
            }
        }
    }

    let mut coassoc = Tally::new("coassociativity");
    let mut counit = Tally::new("counit");
    let mut antipode = Tally::new("antipode");
    let mut star = Tally::new("antipode-star");
    let mut haar = Tally::new("haar-invariance");
    for &m in &mons {
        let x = el(m);
        let d = alg.coproduct(&x);
        let mut left = std::collections::BTreeMap::new();
        let mut right = std::collections::BTreeMap::new();
        for ((l, r), c) in d.iter() {
            for ((ll, lr), cl) in alg.coproduct_monomial(*l).iter() {
                add_triple(f, &mut left, (*ll, *lr, *r), f.mul(c, cl));
            }
            for ((rl, rr), cr) in alg.coproduct_monomial(*r).iter() {
                add_triple(f, &mut right, (*l, *rl, *rr), f.mul(c, cr));
            }
        }
        for (k, c) in &right {
            add_triple(f, &mut left, *k, f.neg(c));
        }
        coassoc.identity(f, left.values(), || format!("Δ² on {m}"));

        let e = |r: Monomial| alg.counit_monomial(r);
        counit.element(f, &alg.sub(&alg.slice_left(&d, e), &x), || format!("(ε⊗id)Δ({m})"));
        counit.element(f, &alg.sub(&alg.slice_right(&d, e), &x), || format!("(id⊗ε)Δ({m})"));

        let unit = alg.scalar(alg.counit(&x));
        let s_left = alg.tensor_contract(&d, |l| alg.antipode_monomial(l), |r| alg.monomial(r));
        let s_right = alg.tensor_contract(&d, |l| alg.monomial(l), |r| alg.antipode_monomial(r));
        antipode.element(f, &alg.sub(&s_left, &unit), || format!("m(S⊗id)Δ({m})"));
        antipode.element(f, &alg.sub(&s_right, &unit), || format!("m(id⊗S)Δ({m})"));

        let back = alg.antipode(&alg.star(&alg.antipode(&alg.star(&x))));
        star.element(f, &alg.sub(&back, &x), || format!("S(S(x*)*) on {m}"));

        let hx = alg.scalar(alg.haar(&x));
        let h = |r: Monomial| alg.haar_monomial(r);
        haar.element(f, &alg.sub(&alg.slice_left(&d, h), &hx), || format!("(h⊗id)Δ({m})"));
        haar.element(f, &alg.sub(&alg.slice_right(&d, h), &hx), || format!("(id⊗h)Δ({m})"));
    }
    report("hopf", vec![assoc.done(), mult.done(), coassoc.done(), counit.done(), antipode.done(), star.done(), haar.done()])
}

// --- derivations ---------------------------------------------------------------------

/// Twisted Leibniz rule, star compatibility, Haar annihilation and the twisted trace on
/// seeded random pairs.
pub fn derivations<F: Field>(acts: &Actions<F>, pairs: usize, degree: u32, seed: u64) -> VerificationReport {
    let alg = acts.alg();
    let f = alg.field();
    let mut g = rng(seed);
    let mut leibniz = Tally::new("twisted-leibniz");
    let mut starc = Tally::new("star-compatibility");
    let mut ann = Tally::new("haar-annihilation");
    let mut trace = Tally::new("twisted-trace");
    let dk = |x: &Element<F::E>| acts.left_action(Gen::K, x);
    let dki = |x: &Element<F::E>| acts.left_action(Gen::KInv, x);
    for i in 0..pairs {
        let x = random_element(alg, &mut g, degree, 4);
        let y = random_element(alg, &mut g, degree, 4);
        let xy = alg.mul(&x, &y);
        for l in [Label::Delta1, Label::Delta2, Label::Delta3] {
            let rhs = alg.add(&alg.mul(&acts.apply(l, &x), &dk(&y)), &alg.mul(&dki(&x), &acts.apply(l, &y)));
            leibniz.element(f, &alg.sub(&acts.apply(l, &xy), &rhs), || format!("{} on pair {i}", l.name()));
            for z in [&x, &y] {
                let hz = alg.haar(&acts.apply(l, z));
                ann.scalar(f, &hz, || format!("h∘{} on pair {i}", l.name()));
            }
        }
        for z in [&x, &y] {
            let zs = alg.star(z);
            let d1 = alg.add(&acts.apply(Label::Delta1, &zs), &alg.star(&acts.apply(Label::Delta2, z)));
            starc.element(f, &d1, || format!("δ1(x*) + δ2(x)* on pair {i}"));
            let d3 = alg.add(&acts.apply(Label::Delta3, &zs), &alg.star(&acts.apply(Label::Delta3, z)));
            starc.element(f, &d3, || format!("δ3(x*) + δ3(x)* on pair {i}"));
        }
        let lhs = alg.haar(&xy);
        let rhs = alg.haar(&alg.mul(&acts.modular(&y, false), &x));
        trace.scalar(f, &f.sub(&lhs, &rhs), || format!("h(xy) − h(ν(y)x) on pair {i}"));
    }
    report("derivations", vec![leibniz.done(), starc.done(), ann.done(), trace.done()])
}

// --- projections ---------------------------------------------------------------------

/// Adjoint patterns of the compressed `δ_i` and their commutation with `P_N`, for every
/// compression level up to `basis.level`.
pub fn projections<F: Field>(acts: &Actions<F>, basis: &FuzzyBasis<F::E>) -> VerificationReport {
    let mut adj12 = Tally::new("adjoint-delta1-delta2");
    let mut adj3 = Tally::new("selfadjoint-delta3");
    let mut comm = Tally::new("pn-commutation");
    let f = acts.alg().field();
    let exact = f.is_exact();
    let tol = float_tol(f).max(if exact { 0.0 } else { 1e-10 });
    for m in 0..=basis.level {
        let b = basis.truncate(m);
        let (r1, r3) = gns::adjoint_pattern_residuals(acts, &b);
        for (t, r, what) in [(&mut adj12, r1, "δ1 − q⁻¹δ2†"), (&mut adj3, r3, "δ3 − δ3†")] {
            t.count += 1;
            if r > tol {
                t.fail(r, format!("{what} at level {m}"));
            }
        }
        for l in [Label::Delta1, Label::Delta2, Label::Delta3, Label::Delta4] {
            for n in 0..=m {
                let r = gns::pn_commutation_residual(acts, &b, l, n);
                comm.count += 1;
                if r > tol {
                    comm.fail(r, format!("[P_{n}, {}] at level {m}", l.name()));
                }
            }
        }
    }
    report("projections", vec![adj12.done(), adj3.done(), comm.done()])
}

// --- Berezin transform -----------------------------------------------------------------

/// The seeded element suite shared by the Berezin and Lip-contraction checks.
pub fn element_suite<F: Field>(alg: &SuQ2<F>, count: usize, degree: u32, seed: u64) -> Vec<Element<F::E>> {
    let mut g = rng(seed);
    (0..count).map(|_| random_sphere(alg, &mut g, degree, 5)).collect()
}

/// Coproduct route against spectral route, plus the spectrum edge values.
pub fn berezin<F: Field>(b: &Berezin<F>, elements: &[Element<F::E>], ns: &[u32]) -> VerificationReport {
    let alg = b.alg();
    let f = alg.field();
    let mut dual = Tally::new("dual-oracle");
    let mut unit = Tally::new("spectrum-unit");
    let mut cut = Tally::new("spectrum-cutoff");
    for &n in ns {
        match b.spectrum(n, n + 2) {
            Ok(sp) => {
                unit.scalar(f, &f.sub(&sp.eigenvalues[0], &f.one()), || format!("c_{{{n},0}} − 1"));
                for k in n + 1..=n + 2 {
                    cut.scalar(f, &sp.eigenvalues[k as usize], || format!("c_{{{n},{k}}}"));
                }
            }
            Err(e) => unit.fail(f64::INFINITY, format!("spectrum at N = {n}: {e}")),
        }
        for (i, x) in elements.iter().enumerate() {
            match (b.via_coproduct(x, n), b.via_spectrum(x, n)) {
                (Ok(c), Ok(s)) => dual.element(f, &alg.sub(&c, &s), || format!("element {i}, N = {n}")),
                (Err(e), _) | (_, Err(e)) => dual.fail(f64::INFINITY, format!("element {i}, N = {n}: {e}")),
            }
        }
    }
    report("berezin", vec![dual.done(), unit.done(), cut.done()])
}

// --- Lip-norms -------------------------------------------------------------------------

/// `L(β_N(x)) ≤ L(x)`: the lower bound of the left side never exceeds the certified upper
/// bound of the right side, and with converged estimates the lower bounds compare within
/// `rel_tol`.
pub fn lip_contraction<F: Field>(
    acts: &Actions<F>,
    b: &Berezin<F>,
    elements: &[Element<F::E>],
    ns: &[u32],
    opts: &NormOptions,
    rel_tol: f64,
) -> VerificationReport {
    type Row = Result<(NormEstimate, Vec<NormEstimate>), String>;
    let rows: Vec<Row> = elements
        .par_iter()
        .map(|x| {
            let lx = lip_norm(acts, x, opts).map_err(|e| e.to_string())?.value;
            let mut ly = Vec::with_capacity(ns.len());
            for &n in ns {
                let y = b.via_spectrum(x, n).map_err(|e| e.to_string())?;
                ly.push(lip_norm(acts, &y, opts).map_err(|e| e.to_string())?.value);
            }
            Ok((lx, ly))
        })
        .collect();
    let mut bound = Tally::new("lip-upper-bound");
    let mut contraction = Tally::new("lip-contraction");
    let mut conv = Tally::new("lip-converged");
    for (i, row) in rows.iter().enumerate() {
        let (lx, ly) = match row {
            Ok(r) => r,
            Err(e) => {
                bound.fail(f64::INFINITY, format!("element {i}: {e}"));
                continue;
            }
        };
        for (&n, l) in ns.iter().zip(ly) {
            bound.at_most(l.lower, lx.upper, || format!("element {i}, N = {n}: {} > {}", l.lower, lx.upper));
            conv.count += 1;
            if lx.converged && l.converged {
                let lim = lx.lower * (1.0 + rel_tol);
                contraction.at_most(l.lower, lim, || format!("element {i}, N = {n}: {} > {}", l.lower, lx.lower));
            } else {
                conv.warn(format!("element {i}, N = {n} not converged"));
            }
        }
    }
    report("lip", vec![bound.done(), contraction.done(), conv.done()])
}

/// Lip-norm lower bounds from the truncated representation against the Gram-matrix oracle
/// run in high-precision float arithmetic.
pub fn gram<F: Codec>(
    acts: &Actions<F>,
    q: &BigRational,
    probes: &[(String, Element<F::E>)],
    opts: &NormOptions,
    gopts: &GramOptions,
    rel_tol: f64,
) -> VerificationReport {
    let f = acts.alg().field();
    let fl = Float::new(q, gram_precision(f.q_f64(), gopts.degree_cap));
    let facts = Actions::new(SuQ2::new(fl.clone()));
    let mut agree = Tally::new("gram-agreement");
    let mut conv = Tally::new("gram-converged");
    let rows: Vec<Result<(f64, f64, bool), String>> = probes
        .par_iter()
        .map(|(name, x)| {
            let l = lip_norm(acts, x, opts).map_err(|e| e.to_string())?.value;
            let xf = expr::parse(facts.alg(), &f.element_text(x)).map_err(|e| format!("{name}: {e}"))?;
            let g = lip_norm_gram_oracle(&facts, &xf, gopts).map_err(|e| e.to_string())?;
            Ok((l.lower, g.lower, l.converged && g.converged))
        })
        .collect();
    for ((name, _), row) in probes.iter().zip(rows) {
        match row {
            Ok((l, g, converged)) => {
                let rel = (l - g).abs() / l.abs().max(1e-300);
                agree.within(rel, rel_tol, || format!("{name}: lipNorm {l} vs Gram {g}"));
                conv.count += 1;
                if !converged {
                    conv.warn(format!("{name} not converged"));
                }
            }
            Err(e) => agree.fail(f64::INFINITY, e),
        }
    }
    report("gram", vec![agree.done(), conv.done()])
}

/// `L(slice) ≤ ‖ξ‖‖ζ‖ L(x)` on seeded triples.
pub fn slice<F: Field>(
    acts: &Actions<F>,
    b: &Berezin<F>,
    count: usize,
    degree: u32,
    seed: u64,
    opts: &NormOptions,
    rel_tol: f64,
) -> VerificationReport {
    let alg = acts.alg();
    let mut g = rng(seed);
    let triples: Vec<_> = (0..count)
        .map(|_| {
            let x = random_sphere(alg, &mut g, degree, 3);
            let xi = random_element(alg, &mut g, degree, 3);
            let zeta = random_element(alg, &mut g, degree, 3);
            (x, xi, zeta)
        })
        .collect();
    let rows: Vec<_> = triples.par_iter().map(|(x, xi, zeta)| b.slice_lip_check(acts, x, xi, zeta, opts)).collect();
    let mut bound = Tally::new("slice-bound");
    for (i, r) in rows.into_iter().enumerate() {
        match r {
            Ok(c) => {
                bound.at_most(c.lip_of_slice.lower, c.bound * (1.0 + rel_tol) + 1e-12, || {
                    format!("triple {i}: {} > {}", c.lip_of_slice.lower, c.bound)
                });
                if !c.converged {
                    bound.fail(0.0, format!("triple {i}: estimates not converged"));
                }
            }
            Err(e) => bound.fail(f64::INFINITY, format!("triple {i}: {e}")),
        }
    }
    report("slice", vec![bound.done()])
}

// --- classical limit -------------------------------------------------------------------

/// Berezin spectrum at `q = 1`: `0 ≤ c_{N,n} ≤ 1`, and `c_{N,n}` increases in `N` for
/// `n ≤ max_spin`.
pub fn classical(max_n: u32, max_spin: u32, grid_tol: f64) -> VerificationReport {
    let b = Berezin::new(SuQ2::new(Exact::from_ratio(1, 1)));
    let f = b.alg().field().clone();
    let mut range = Tally::new("spectrum-range");
    let mut mono = Tally::new("spectrum-increasing");
    let mut prev: Option<Vec<f64>> = None;
    for n in 1..=max_n {
        let sp = match b.spectrum(n, max_spin.max(n + 1)) {
            Ok(sp) => sp,
            Err(e) => {
                range.fail(f64::INFINITY, format!("N = {n}: {e}"));
                continue;
            }
        };
        let c: Vec<f64> = sp.eigenvalues.iter().map(|v| f.to_c64(v).re).collect();
        for (k, v) in c.iter().enumerate() {
            range.at_most(-v, 0.0, || format!("c_{{{n},{k}}} = {v} < 0"));
            range.at_most(*v, 1.0, || format!("c_{{{n},{k}}} = {v} > 1"));
        }
        if let Some(p) = &prev {
            for k in 0..=max_spin as usize {
                mono.at_most(p[k], c[k] + grid_tol, || format!("c_{{{},{k}}} = {} > c_{{{n},{k}}} = {}", n - 1, p[k], c[k]));
            }
        }
        prev = Some(c);
    }
    report("classical", vec![range.done(), mono.done()])
}

/// Names accepted by `verify --suite`.
pub const SUITES: [&str; 8] = ["hopf", "derivations", "projections", "berezin", "lip", "gram", "slice", "classical"];
