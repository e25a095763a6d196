//! Lower bounds for the Monge–Kantorovič distance `ρ_L(h_N, ε)` and the approximation
//! harness built on it.
//!
//! The search maximizes `|h_N(x) − ε(x)| / L(x)` over nonscalar selfadjoint `x` in the span
//! of a fuzzy basis. Since the ratio is 0-homogeneous and `L` is a norm on the nonscalar
//! part, this equals `1 / min { L(t) : g·t = 1 }` with `g_k = (h_N − ε)(e_k)`, a convex
//! problem solved by projected subgradient descent with Polyak steps.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::Matrix2;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::Rng;

use crate::berezin::{Berezin, BerezinError};
use crate::gns::{self, FuzzyBasis, GnsError};
use crate::linalg::{self, Banded, BlockBanded, SvdOptions};
use crate::qhopf::{Element, Monomial, SuQ2};
use crate::random::rng;
use crate::scalar::Field;
use crate::specnorm::{self, lip_norm, operator_norm, theta_points, theta_invariant, NormEstimate, NormOptions};
use crate::uq_actions::Actions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// Constraint through the certified upper bound of `L`; the value is a true lower bound.
    #[default]
    Certified,
    /// Constraint through the truncated lower bound of `L`.
    Heuristic,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Certified => "certified",
            Mode::Heuristic => "heuristic",
        }
    }

    pub fn from_name(s: &str) -> Option<Mode> {
        match s {
            "certified" => Some(Mode::Certified),
            "heuristic" => Some(Mode::Heuristic),
            _ => None,
        }
    }
}

/// Polyak steps toward the level `best − δ`. `δ` starts at `initial · best` and halves, with a
/// return to the best point, after `patience` iterations without improvement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSchedule {
    pub initial: f64,
    pub patience: usize,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { initial: 0.5, patience: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationProblem {
    /// Berezin level defining `h_N`.
    pub n: u32,
    /// Search space: selfadjoint part of the level-`M` fuzzy basis span.
    pub m: u32,
    /// Norm options for `L`; `trunc` is the truncation `M'` used inside the search.
    pub norm: NormOptions,
    pub mode: Mode,
    pub restarts: usize,
    pub max_iters: usize,
    pub step: StepSchedule,
    pub seed: u64,
    /// Allowed excess of a probe ratio over the heuristic estimate.
    pub gap: f64,
}

impl Default for OptimizationProblem {
    fn default() -> Self {
        OptimizationProblem {
            n: 1,
            m: 4,
            norm: NormOptions { trunc: 100, doublings: 2, ..Default::default() },
            mode: Mode::Certified,
            restarts: 8,
            max_iters: 300,
            step: StepSchedule::default(),
            seed: 0,
            gap: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceEstimate<E> {
    pub value: f64,
    pub witness: Element<E>,
    pub mode: Mode,
    /// Best search objective after each iteration of the winning restart.
    pub trace: Vec<f64>,
    pub n: u32,
    pub m: u32,
    pub norm_trunc: usize,
    /// The Lip-norm estimate of the witness used for `value`.
    pub lip: NormEstimate,
    /// `|h_N(witness) − ε(witness)|`.
    pub defect: f64,
    /// Search objective of each restart, by index.
    pub restart_values: Vec<f64>,
    pub best_restart: usize,
    /// No restart improved on the probe `A − ε(A)`.
    pub degraded: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DistError {
    InvalidLevel,
    /// The search runs on the weighted-shift model, which needs `q < 1`.
    Classical,
    Basis(GnsError),
    Berezin(BerezinError),
    NotInSphere,
    Scalar,
}

impl fmt::Display for DistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistError::InvalidLevel => f.write_str("N and M must be at least 1"),
            DistError::Classical => f.write_str("distance search needs 0 < q < 1"),
            DistError::Basis(e) => write!(f, "{e}"),
            DistError::Berezin(e) => write!(f, "{e}"),
            DistError::NotInSphere => f.write_str("element has components of nonzero right degree"),
            DistError::Scalar => f.write_str("element is a scalar; its Lip-norm vanishes"),
        }
    }
}

impl From<GnsError> for DistError {
    fn from(e: GnsError) -> Self {
        DistError::Basis(e)
    }
}

impl From<BerezinError> for DistError {
    fn from(e: BerezinError) -> Self {
        DistError::Berezin(e)
    }
}

/// Outcome of one restart.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartResult {
    pub index: usize,
    pub t: Vec<f64>,
    /// `1 / min L` reached.
    pub objective: f64,
    pub trace: Vec<f64>,
}

enum Model {
    /// Truncated representation of `δ(e_k)` per `θ`.
    Spectral { per_theta: Vec<Vec<BlockBanded>>, dim: usize, svd: SvdOptions },
    /// Coefficients of `δ(e_k)` entries: for each entry `(i, j)` and monomial, the vector over `k`.
    Coefficients { entries: Vec<((usize, usize), Vec<Complex64>)> },
}

/// A prepared search: the real selfadjoint basis, the functional `g` and the norm model.
pub struct DistanceSearch<'a, F: Field> {
    acts: &'a Actions<F>,
    berezin: &'a Berezin<F>,
    problem: OptimizationProblem,
    fuzzy: FuzzyBasis<F::E>,
    basis: Vec<Element<F::E>>,
    scales: Vec<f64>,
    g: Vec<f64>,
    model: Model,
}

impl<'a, F: Field> DistanceSearch<'a, F> {
    pub fn new(acts: &'a Actions<F>, berezin: &'a Berezin<F>, problem: OptimizationProblem) -> Result<Self, DistError> {
        if problem.n == 0 || problem.m == 0 {
            return Err(DistError::InvalidLevel);
        }
        let alg = acts.alg();
        let f = alg.field();
        if f.is_classical() {
            return Err(DistError::Classical);
        }
        let fuzzy = berezin.basis(problem.m)?;
        let mut basis = selfadjoint_basis(alg, &fuzzy);
        // each e_k is scaled by a power of two so its certified bound is near 1
        let mut scales = vec![1.0; basis.len()];
        for (e, sc) in basis.iter_mut().zip(scales.iter_mut()) {
            let d = acts.delta_matrix(e).map_err(|_| DistError::NotInSphere)?;
            let u = specnorm::matrix_norm_upper(f, &d);
            if u > 0.0 {
                let k = libm::round(libm::log2(u)) as i32;
                let r = if k >= 0 {
                    BigRational::new(BigInt::from(1), BigInt::from(1) << k as usize)
                } else {
                    BigRational::from_integer(BigInt::from(1) << (-k) as usize)
                };
                *e = alg.scale(e, &f.from_rational(&r));
                *sc = libm::exp2(-k as f64);
            }
        }
        let mut g = Vec::with_capacity(basis.len());
        for e in &basis {
            let d = f.sub(&berezin.h_n(e, problem.n), &alg.counit(e));
            g.push(f.to_c64(&d).re);
        }
        let deltas: Vec<[[Element<F::E>; 2]; 2]> =
            basis.iter().map(|e| acts.delta_matrix(e).map_err(|_| DistError::NotInSphere)).collect::<Result<_, _>>()?;
        let model = match problem.mode {
            Mode::Heuristic => {
                let flat: Vec<&Element<F::E>> = deltas.iter().flatten().flatten().collect();
                let thetas = theta_points(theta_invariant(&flat), problem.norm.theta_grid);
                let dim = problem.norm.trunc.max(1);
                let per_theta = thetas
                    .iter()
                    .map(|&th| {
                        deltas
                            .iter()
                            .map(|d| BlockBanded {
                                blocks: core::array::from_fn(|i| {
                                    core::array::from_fn(|j| specnorm::represent(alg, &d[i][j], th, dim))
                                }),
                            })
                            .collect()
                    })
                    .collect();
                Model::Spectral { per_theta, dim, svd: SvdOptions { tol: 1e-8, krylov: 40, ..problem.norm.svd } }
            }
            Mode::Certified => {
                let k = basis.len();
                let mut map: BTreeMap<(usize, usize, Monomial), Vec<Complex64>> = BTreeMap::new();
                for (idx, d) in deltas.iter().enumerate() {
                    for i in 0..2 {
                        for j in 0..2 {
                            for (m, c) in d[i][j].iter() {
                                map.entry((i, j, *m)).or_insert_with(|| vec![Complex64::new(0.0, 0.0); k])[idx] =
                                    f.to_c64(c);
                            }
                        }
                    }
                }
                Model::Coefficients { entries: map.into_iter().map(|((i, j, _), v)| ((i, j), v)).collect() }
            }
        };
        Ok(DistanceSearch { acts, berezin, problem, fuzzy, basis, scales, g, model })
    }

    pub fn problem(&self) -> &OptimizationProblem {
        &self.problem
    }

    /// Real selfadjoint search basis `e_k`.
    pub fn basis(&self) -> &[Element<F::E>] {
        &self.basis
    }

    /// `g_k = h_N(e_k) − ε(e_k)`.
    pub fn functional(&self) -> &[f64] {
        &self.g
    }

    /// `Σ t_k e_k` with each `t_k` rounded to a dyadic rational relative to `max |t_k|`.
    pub fn element(&self, t: &[f64]) -> Element<F::E> {
        let alg = self.acts.alg();
        let f = alg.field();
        let scale = t.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            return alg.zero();
        }
        let den = BigInt::from(1i64 << 40);
        alg.combine(t.iter().zip(&self.basis).filter_map(|(x, e)| {
            let num = libm::round(x / scale * (1u64 << 40) as f64) as i64;
            (num != 0).then(|| (f.from_rational(&BigRational::new(BigInt::from(num), den.clone())), e))
        }))
    }

    /// Coordinates of a selfadjoint element of the search space in the basis `e_k`.
    pub fn coordinates(&self, x: &Element<F::E>) -> Vec<f64> {
        let alg = self.acts.alg();
        let f = alg.field();
        let c = gns::coordinates(alg, &self.fuzzy, x);
        let mut out = Vec::with_capacity(self.basis.len());
        for (v, cv) in self.fuzzy.vectors.iter().zip(&c) {
            if v.spin == 0 {
                continue;
            }
            let z = f.to_c64(cv);
            if v.weight == 0 {
                out.push(z.re);
            } else if v.weight > 0 {
                out.push(z.re);
                out.push(z.im);
            }
        }
        out.iter_mut().zip(&self.scales).for_each(|(x, sc)| *x /= sc);
        out
    }

    /// Search norm `L(t)` with a subgradient.
    fn evaluate(&self, t: &[f64], warm: Option<&[Complex64]>) -> (f64, Vec<f64>, Option<Vec<Complex64>>) {
        match &self.model {
            Model::Spectral { per_theta, dim, svd } => {
                let mut best = (f64::NEG_INFINITY, vec![0.0; t.len()], None);
                for mats in per_theta {
                    let mut blocks: [[Banded; 2]; 2] =
                        core::array::from_fn(|_| core::array::from_fn(|_| Banded::zero(*dim)));
                    for (tk, mk) in t.iter().zip(mats) {
                        if *tk == 0.0 {
                            continue;
                        }
                        for i in 0..2 {
                            for j in 0..2 {
                                blocks[i][j].add_scaled(*tk, &mk.blocks[i][j]);
                            }
                        }
                    }
                    let op = BlockBanded { blocks };
                    let top = match warm {
                        Some(w) if per_theta.len() == 1 => linalg::top_singular_from(&op, *svd, w),
                        _ => linalg::top_singular(&op, *svd),
                    };
                    if top.sigma > best.0 {
                        let mut w = vec![Complex64::new(0.0, 0.0); 2 * dim];
                        let grad = mats
                            .iter()
                            .map(|mk| {
                                linalg::LinearOp::apply(mk, &top.v, &mut w);
                                top.u.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
                            })
                            .collect();
                        best = (top.sigma, grad, Some(top.v));
                    }
                }
                best
            }
            Model::Coefficients { entries } => {
                let mut s = Matrix2::<f64>::zeros();
                let mut vals = Vec::with_capacity(entries.len());
                for ((i, j), v) in entries {
                    let c: Complex64 = v.iter().zip(t).map(|(a, x)| a * x).sum();
                    s[(*i, *j)] += c.norm();
                    vals.push(c);
                }
                let svd = s.svd(true, true);
                let k = svd.singular_values.imax();
                let sigma = svd.singular_values[k];
                let mut a = svd.u.expect("requested").column(k).into_owned();
                let mut b = svd.v_t.expect("requested").row(k).transpose();
                if a.sum() < 0.0 {
                    a = -a;
                }
                if b.sum() < 0.0 {
                    b = -b;
                }
                let mut grad = vec![0.0; t.len()];
                for (((i, j), v), c) in entries.iter().zip(&vals) {
                    let n = c.norm();
                    if n == 0.0 {
                        continue;
                    }
                    let w = a[*i] * b[*j] / n;
                    for (gk, vk) in grad.iter_mut().zip(v) {
                        *gk += w * (c.conj() * vk).re;
                    }
                }
                (sigma, grad, None)
            }
        }
    }

    /// Search objective `|g·t| / L(t)`.
    pub fn objective(&self, t: &[f64]) -> f64 {
        let l = self.evaluate(t, None).0;
        let gt: f64 = self.g.iter().zip(t).map(|(a, b)| a * b).sum();
        if l > 0.0 {
            gt.abs() / l
        } else {
            0.0
        }
    }

    /// Starting points: the probe `A − ε(A)`, an optional warm start, then seeded random points.
    pub fn starts(&self, warm: Option<&Element<F::E>>) -> Vec<Vec<f64>> {
        let alg = self.acts.alg();
        let mut out = vec![self.coordinates(&alg.big_a())];
        if let Some(w) = warm {
            out.push(self.coordinates(w));
        }
        let mut r = rng(self.problem.seed);
        while out.len() < self.problem.restarts.max(1) + warm.is_some() as usize {
            out.push((0..self.basis.len()).map(|_| r.gen_range(-1.0..1.0)).collect());
        }
        out
    }

    /// Projected subgradient descent of `L` on the plane `g·t = 1` from `start`.
    pub fn descend(&self, index: usize, start: &[f64]) -> RestartResult {
        let g = &self.g;
        let g2: f64 = g.iter().map(|x| x * x).sum();
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        if g2 == 0.0 {
            return RestartResult { index, t: start.to_vec(), objective: 0.0, trace: Vec::new() };
        }
        let mut t = start.to_vec();
        let gt = dot(g, &t);
        let tn = libm::sqrt(dot(&t, &t));
        if gt.abs() > 0.1 * libm::sqrt(g2) * tn {
            t.iter_mut().for_each(|x| *x /= gt);
        } else {
            let shift = (1.0 - gt) / g2;
            t.iter_mut().zip(g).for_each(|(x, gk)| *x += shift * gk);
        }
        let mut best_l = f64::INFINITY;
        let mut best_t = t.clone();
        let mut delta = f64::NAN;
        let mut idle = 0;
        let mut warm: Option<Vec<Complex64>> = None;
        let mut trace = Vec::with_capacity(self.problem.max_iters);
        for _ in 0..self.problem.max_iters {
            let (l, grad, v) = self.evaluate(&t, warm.as_deref());
            warm = v;
            if l < best_l * (1.0 - 1e-12) {
                best_l = l;
                best_t = t.clone();
                idle = 0;
            } else {
                idle += 1;
            }
            if delta.is_nan() {
                delta = self.problem.step.initial * best_l;
            }
            trace.push(if best_l > 0.0 { 1.0 / best_l } else { 0.0 });
            if best_l == 0.0 || delta <= 1e-12 * best_l {
                break;
            }
            if idle >= self.problem.step.patience {
                delta *= 0.5;
                idle = 0;
                t = best_t.clone();
                continue;
            }
            let proj = dot(g, &grad) / g2;
            let d: Vec<f64> = grad.iter().zip(g).map(|(a, gk)| a - proj * gk).collect();
            let d2 = dot(&d, &d);
            if d2 <= 1e-30 * best_l * best_l {
                break;
            }
            let alpha = (l - (best_l - delta)) / d2;
            t.iter_mut().zip(&d).for_each(|(x, dk)| *x -= alpha * dk);
        }
        let objective = if best_l > 0.0 && best_l.is_finite() { 1.0 / best_l } else { 0.0 };
        RestartResult { index, t: best_t, objective, trace }
    }

    /// Picks the best restart (lowest index on ties) and recomputes its value from the
    /// exact witness.
    pub fn finish(&self, results: Vec<RestartResult>) -> Result<DistanceEstimate<F::E>, DistError> {
        let alg = self.acts.alg();
        let mut best = 0;
        for (i, r) in results.iter().enumerate() {
            if r.objective > results[best].objective {
                best = i;
            }
        }
        let trivial = self.objective(&self.coordinates(&alg.big_a()));
        let winner = &results[best];
        let witness = self.element(&winner.t);
        let (value, defect, lip) = witness_ratio(self.acts, self.berezin, &witness, self.problem.n, self.problem.mode, &self.problem.norm)?;
        Ok(DistanceEstimate {
            value,
            witness,
            mode: self.problem.mode,
            trace: winner.trace.clone(),
            n: self.problem.n,
            m: self.problem.m,
            norm_trunc: self.problem.norm.trunc,
            lip,
            defect,
            restart_values: results.iter().map(|r| r.objective).collect(),
            best_restart: winner.index,
            degraded: winner.objective <= trivial * (1.0 + 1e-9),
        })
    }
}

/// `|h_N(x) − ε(x)| / L̂(x)` with the defect and the Lip-norm estimate; `L̂` is the upper
/// bound in certified mode and the lower bound in heuristic mode. Scalars give 0.
pub fn witness_ratio<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    x: &Element<F::E>,
    n: u32,
    mode: Mode,
    opts: &NormOptions,
) -> Result<(f64, f64, NormEstimate), DistError> {
    let alg = acts.alg();
    let f = alg.field();
    let defect = f.to_c64(&f.sub(&berezin.h_n(x, n), &alg.counit(x))).norm();
    let lip = lip_norm(acts, x, opts).map_err(|_| DistError::NotInSphere)?.value;
    let denom = match mode {
        Mode::Certified => lip.upper,
        Mode::Heuristic => lip.lower,
    };
    let value = if denom > 0.0 { defect / denom } else { 0.0 };
    Ok((value, defect, lip))
}

/// `{v : weight 0} ∪ {v + v*, i(v − v*) : weight > 0}` over the nonscalar fuzzy basis vectors.
pub fn selfadjoint_basis<F: Field>(alg: &SuQ2<F>, basis: &FuzzyBasis<F::E>) -> Vec<Element<F::E>> {
    let f = alg.field();
    let mut out = Vec::new();
    for v in &basis.vectors {
        if v.spin == 0 {
            continue;
        }
        if v.weight == 0 {
            out.push(v.element.clone());
        } else if v.weight > 0 {
            let vs = alg.star(&v.element);
            out.push(alg.add(&v.element, &vs));
            out.push(alg.scale(&alg.sub(&v.element, &vs), &f.imag_unit()));
        }
    }
    out
}

/// Runs every restart sequentially; see [`DistanceSearch`] for a parallel driver.
pub fn estimate_distance<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    problem: &OptimizationProblem,
    warm: Option<&Element<F::E>>,
) -> Result<DistanceEstimate<F::E>, DistError> {
    let search = DistanceSearch::new(acts, berezin, problem.clone())?;
    let results = search.starts(warm).iter().enumerate().map(|(i, s)| search.descend(i, s)).collect();
    search.finish(results)
}

/// Estimates along increasing `M`, each warm-started from the previous witness.
pub fn distance_ladder<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    problem: &OptimizationProblem,
    ms: &[u32],
) -> Result<Vec<DistanceEstimate<F::E>>, DistError> {
    let mut out: Vec<DistanceEstimate<F::E>> = Vec::new();
    for &m in ms {
        let p = OptimizationProblem { m, ..problem.clone() };
        let warm = out.last().map(|d| d.witness.clone());
        out.push(estimate_distance(acts, berezin, &p, warm.as_ref())?);
    }
    Ok(out)
}

// --- approximation harness ------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxReport {
    /// `r(x) = ‖x − β_N(x)‖_lower / L(x)_upper`.
    pub ratio: f64,
    pub defect_norm: NormEstimate,
    pub lip_upper: f64,
    pub distance: f64,
    pub gap: f64,
    /// `r(x)` exceeds the distance estimate by more than the gap.
    pub quality_event: bool,
}

pub fn approx_inequality_check<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    x: &Element<F::E>,
    n: u32,
    distance: f64,
    gap: f64,
    opts: &NormOptions,
) -> Result<ApproxReport, DistError> {
    let alg = acts.alg();
    if !x.is_sphere() {
        return Err(DistError::NotInSphere);
    }
    let lip = lip_norm(acts, x, opts).map_err(|_| DistError::NotInSphere)?.value;
    if lip.upper == 0.0 {
        return Err(DistError::Scalar);
    }
    let diff = alg.sub(x, &berezin.via_spectrum(x, n)?);
    let defect_norm = operator_norm(alg, &diff, opts);
    let ratio = defect_norm.lower / lip.upper;
    Ok(ApproxReport {
        ratio,
        defect_norm,
        lip_upper: lip.upper,
        distance,
        gap,
        quality_event: ratio > distance + gap,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Approximant<E> {
    /// `y = β_N(x)`.
    pub y: Element<E>,
    /// `L(x) − L(y)` from the lower bounds.
    pub lip_slack: f64,
    /// Lower bound of `‖x − y‖`.
    pub dist_slack: f64,
    pub lip_x: NormEstimate,
    pub lip_y: NormEstimate,
}

pub fn berezin_approximant<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    x: &Element<F::E>,
    n: u32,
    opts: &NormOptions,
) -> Result<Approximant<F::E>, DistError> {
    let alg = acts.alg();
    let y = berezin.via_spectrum(x, n)?;
    let lip_x = lip_norm(acts, x, opts).map_err(|_| DistError::NotInSphere)?.value;
    let lip_y = lip_norm(acts, &y, opts).map_err(|_| DistError::NotInSphere)?.value;
    let diff = alg.sub(x, &y);
    let dist_slack = if diff.is_zero() { 0.0 } else { operator_norm(alg, &diff, opts).lower };
    Ok(Approximant { lip_slack: lip_x.lower - lip_y.lower, dist_slack, y, lip_x, lip_y })
}

/// `{A, B + B*, i(B − B*), A², AB + B*A}`, each minus its Haar mean.
pub fn probe_suite<F: Field>(alg: &SuQ2<F>) -> Vec<(String, Element<F::E>)> {
    let f = alg.field();
    let a = alg.big_a();
    let b = alg.big_b();
    let bs = alg.big_b_star();
    let raw = [
        ("A", a.clone()),
        ("B+B*", alg.add(&b, &bs)),
        ("i(B-B*)", alg.scale(&alg.sub(&b, &bs), &f.imag_unit())),
        ("A^2", alg.mul(&a, &a)),
        ("AB+B*A", alg.add(&alg.mul(&a, &b), &alg.mul(&bs, &a))),
    ];
    raw.into_iter()
        .map(|(name, x)| {
            let mean = f.neg(&alg.haar(&x));
            (String::from(name), alg.add_scalar(&x, &mean))
        })
        .collect()
}

/// One row of the approximation harness at level `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarnessRow {
    pub n: u32,
    /// Certified distance lower bound.
    pub dist_lb: f64,
    pub dist_heuristic: f64,
    pub max_probe_ratio: f64,
    pub mean_lip_slack: f64,
    /// Probes whose ratio exceeds the heuristic estimate by more than the gap.
    pub quality_events: Vec<String>,
    pub degraded: bool,
}

/// Assembles a harness row from the two distance estimates.
pub fn harness_row<F: Field>(
    acts: &Actions<F>,
    berezin: &Berezin<F>,
    certified: &DistanceEstimate<F::E>,
    heuristic: &DistanceEstimate<F::E>,
    gap: f64,
    opts: &NormOptions,
) -> Result<HarnessRow, DistError> {
    let n = certified.n;
    let mut max_ratio = 0.0f64;
    let mut slack = 0.0;
    let mut events = Vec::new();
    let probes = probe_suite(acts.alg());
    for (name, x) in &probes {
        let rep = approx_inequality_check(acts, berezin, x, n, heuristic.value, gap, opts)?;
        max_ratio = max_ratio.max(rep.ratio);
        if rep.quality_event {
            events.push(name.clone());
        }
        slack += berezin_approximant(acts, berezin, x, n, opts)?.lip_slack;
    }
    Ok(HarnessRow {
        n,
        dist_lb: certified.value,
        dist_heuristic: heuristic.value,
        max_probe_ratio: max_ratio,
        mean_lip_slack: slack / probes.len() as f64,
        quality_events: events,
        degraded: certified.degraded || heuristic.degraded,
    })
}
