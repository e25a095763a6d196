//! Operator norms in truncated weighted-shift representations, the Lip-norm `‖δ(x)‖`,
//! and an independent Gram-matrix route through the Haar inner product.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{self, Banded, BlockBanded, SingularTriple, SvdOptions};
use crate::qhopf::{Element, Monomial, SuQ2};
use crate::scalar::Field;
use crate::uq_actions::{Actions, NotInSphere};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    /// Initial truncation `M`.
    pub trunc: usize,
    pub theta_grid: usize,
    /// Maximum number of `M`-doublings in the convergence ladder.
    pub doublings: u32,
    /// Relative change between ladder steps counted as converged.
    pub rel_tol: f64,
    /// Points per angle in the `q = 1` grid.
    pub classical_grid: usize,
    pub svd: SvdOptions,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            trunc: 100,
            theta_grid: 16,
            doublings: 4,
            rel_tol: 1e-9,
            classical_grid: 64,
            svd: SvdOptions::default(),
        }
    }
}

impl NormOptions {
    /// Default truncation `max(100, 10·degree)`.
    pub fn for_degree(degree: u32) -> Self {
        NormOptions { trunc: 100.max(10 * degree as usize), ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub converged: bool,
    pub m_used: usize,
    pub theta_grid_size: usize,
    /// `(M, lower bound at M)` for each rung.
    pub ladder: Vec<(usize, f64)>,
    /// `(θ, value)` at the final rung.
    pub per_theta: Vec<(f64, f64)>,
    pub solver_converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipResult<E> {
    pub value: NormEstimate,
    pub components: [[Element<E>; 2]; 2],
}

// --- representations --------------------------------------------------------

/// Adds `coeff · π_θ(m)` restricted to `e_0 … e_{dim−1}` into `out`.
pub fn add_monomial(q: f64, m: Monomial, theta: f64, coeff: Complex64, out: &mut Banded) {
    let dim = out.dim;
    let phase = Complex64::from_polar(1.0, theta * (m.b as f64 - m.bs as f64));
    let c = coeff * phase;
    let s = m.a as i64;
    let bpow = (m.b + m.bs) as i32;
    for n in 0..dim {
        let diag = if bpow == 0 { 1.0 } else { libm::pow(q, (n as i32 * bpow) as f64) };
        if diag == 0.0 {
            break;
        }
        let mut w = diag;
        if s >= 0 {
            for k in 0..s as usize {
                w *= libm::sqrt(1.0 - libm::pow(q, (2 * (n + k) + 2) as f64));
            }
        } else {
            let t = s.unsigned_abs() as usize;
            if n < t {
                continue;
            }
            for k in 0..t {
                w *= libm::sqrt(1.0 - libm::pow(q, (2 * (n - k)) as f64));
            }
        }
        if w != 0.0 {
            out.add_entry(s, n, c * w);
        }
    }
}

/// `P_M π_θ(x) P_M` as a banded matrix.
pub fn represent<F: Field>(alg: &SuQ2<F>, x: &Element<F::E>, theta: f64, dim: usize) -> Banded {
    let f = alg.field();
    let q = f.q_f64();
    let mut out = Banded::zero(dim);
    for (m, c) in x.iter() {
        add_monomial(q, *m, theta, f.to_c64(c), &mut out);
    }
    out
}

/// Whether `π_θ(x)` is unitarily equivalent for all `θ` (a diagonal gauge absorbs the phase).
pub fn theta_invariant<E: Clone>(x: &[&Element<E>]) -> bool {
    let pts: Vec<(i64, i64)> = x
        .iter()
        .flat_map(|e| e.iter().map(|(m, _)| (m.a as i64, m.b as i64 - m.bs as i64)))
        .collect();
    let Some(&(s0, d0)) = pts.first() else { return true };
    match pts.iter().find(|(s, _)| *s != s0) {
        None => pts.iter().all(|(_, d)| *d == d0),
        Some(&(s1, d1)) => pts.iter().all(|&(s, d)| (d - d0) * (s1 - s0) == (d1 - d0) * (s - s0)),
    }
}

/// `Σ |c_m|`, a bound for `‖x‖` since every monomial is a contraction.
pub fn coefficient_bound<F: Field>(f: &F, x: &Element<F::E>) -> f64 {
    x.iter().map(|(_, c)| f.abs_f64(c)).sum()
}

pub(crate) fn theta_points(invariant: bool, grid: usize) -> Vec<f64> {
    if invariant {
        vec![0.0]
    } else {
        (0..grid.max(1)).map(|k| 2.0 * PI * k as f64 / grid.max(1) as f64).collect()
    }
}

/// Top singular value over `θ` for a `k×k` matrix of elements (`k ∈ {1, 2}`) at truncation `dim`.
fn sup_over_theta<F: Field>(
    alg: &SuQ2<F>,
    entries: &[Vec<&Element<F::E>>],
    thetas: &[f64],
    dim: usize,
    svd: SvdOptions,
) -> (Vec<(f64, f64)>, bool, Option<(f64, SingularTriple)>) {
    let mut per = Vec::with_capacity(thetas.len());
    let mut all_conv = true;
    let mut best: Option<(f64, SingularTriple)> = None;
    for &theta in thetas {
        let t = if entries.len() == 1 {
            linalg::top_singular(&represent(alg, entries[0][0], theta, dim), svd)
        } else {
            let blocks = core::array::from_fn(|i| core::array::from_fn(|j| represent(alg, entries[i][j], theta, dim)));
            linalg::top_singular(&BlockBanded { blocks }, svd)
        };
        all_conv &= t.converged;
        per.push((theta, t.sigma));
        if best.as_ref().map_or(true, |(_, b)| t.sigma > b.sigma) {
            best = Some((theta, t));
        }
    }
    (per, all_conv, best)
}

const THETA_VARIANCE_TOL: f64 = 1e-12;

/// Variance of the per-`θ` values relative to the squared maximum.
fn theta_spread(per: &[(f64, f64)], max: f64) -> f64 {
    if per.len() < 2 || max == 0.0 {
        return 0.0;
    }
    let n = per.len() as f64;
    let mean = per.iter().map(|p| p.1).sum::<f64>() / n;
    per.iter().map(|p| (p.1 - mean) * (p.1 - mean)).sum::<f64>() / n / (max * max)
}

fn ladder<F: Field>(
    alg: &SuQ2<F>,
    entries: &[Vec<&Element<F::E>>],
    opts: &NormOptions,
) -> (NormEstimate, Option<(f64, usize, SingularTriple)>) {
    let flat: Vec<&Element<F::E>> = entries.iter().flatten().copied().collect();
    let mut thetas = theta_points(theta_invariant(&flat), opts.theta_grid);
    let mut rungs = Vec::new();
    let mut m = opts.trunc.max(1);
    let mut prev: Option<f64> = None;
    let mut converged = false;
    let mut last = (Vec::new(), true, None);
    for step in 0..=opts.doublings {
        last = sup_over_theta(alg, entries, &thetas, m, opts.svd);
        let value = last.0.iter().map(|p| p.1).fold(0.0, f64::max);
        rungs.push((m, value));
        if let Some(p) = prev {
            if (value - p).abs() <= opts.rel_tol * value.max(1e-300) || value == 0.0 {
                converged = true;
                break;
            }
        }
        prev = Some(value);
        if step < opts.doublings {
            m *= 2;
        }
        if thetas.len() > 1 && theta_spread(&last.0, value) < THETA_VARIANCE_TOL {
            // keep the maximizing angle so the next rung cannot drop below this one
            let top = last.0.iter().enumerate().max_by(|x, y| x.1 .1.total_cmp(&y.1 .1)).map_or(0, |p| p.0);
            thetas = thetas.iter().enumerate().filter(|(i, _)| (i + thetas.len() - top) % 2 == 0).map(|p| *p.1).collect();
        }
    }
    let (per_theta, solver_converged, best) = last;
    let lower = rungs.last().map(|r| r.1).unwrap_or(0.0);
    let est = NormEstimate {
        lower,
        upper: 0.0,
        converged: converged && solver_converged,
        m_used: m,
        theta_grid_size: thetas.len(),
        ladder: rungs,
        per_theta,
        solver_converged,
    };
    (est, best.map(|(theta, t)| (theta, m, t)))
}

// --- q = 1 ----------------------------------------------------------------------

fn eval_classical<F: Field>(f: &F, x: &Element<F::E>, alpha: Complex64, beta: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, c) in x.iter() {
        let a = if m.a >= 0 { alpha.powu(m.a as u32) } else { alpha.conj().powu(m.a.unsigned_abs()) };
        acc += f.to_c64(c) * a * beta.powu(m.b) * beta.conj().powu(m.bs);
    }
    acc
}

fn classical_sup<F: Field>(f: &F, entries: &[Vec<&Element<F::E>>], grid: usize) -> f64 {
    let flat: Vec<&Element<F::E>> = entries.iter().flatten().copied().collect();
    let zero_weight = flat.iter().all(|e| e.is_sphere());
    let g = grid.max(2);
    let mut best = 0.0f64;
    let phis: Vec<f64> = (0..g).map(|k| 2.0 * PI * k as f64 / g as f64).collect();
    let second: &[f64] = if zero_weight { &[0.0] } else { &phis };
    for i in 0..g {
        let eta = 0.5 * PI * i as f64 / (g - 1) as f64;
        for &p1 in &phis {
            for &p2 in second {
                let alpha = Complex64::from_polar(libm::cos(eta), p1);
                let beta = Complex64::from_polar(libm::sin(eta), p2);
                let v = if entries.len() == 1 {
                    eval_classical(f, entries[0][0], alpha, beta).norm()
                } else {
                    let m = DMatrix::from_fn(2, 2, |r, c| eval_classical(f, entries[r][c], alpha, beta));
                    linalg::dense_norm(&m)
                };
                best = best.max(v);
            }
        }
    }
    best
}

fn classical_estimate<F: Field>(f: &F, entries: &[Vec<&Element<F::E>>], opts: &NormOptions) -> NormEstimate {
    let coarse = classical_sup(f, entries, opts.classical_grid / 2);
    let fine = classical_sup(f, entries, opts.classical_grid);
    NormEstimate {
        lower: fine,
        upper: 0.0,
        converged: (fine - coarse).abs() <= 1e-6 * fine.max(1e-300),
        m_used: opts.classical_grid,
        theta_grid_size: 1,
        ladder: vec![(opts.classical_grid / 2, coarse), (opts.classical_grid, fine)],
        per_theta: Vec::new(),
        solver_converged: true,
    }
}

// --- public norms -----------------------------------------------------------------

/// `‖x‖` in C(SU_q(2)) with a certified lower bound and the coefficient-sum upper bound.
pub fn operator_norm<F: Field>(alg: &SuQ2<F>, x: &Element<F::E>, opts: &NormOptions) -> NormEstimate {
    let f = alg.field();
    let entries = [vec![x]];
    let mut est = if f.is_classical() { classical_estimate(f, &entries, opts) } else { ladder(alg, &entries, opts).0 };
    est.upper = coefficient_bound(f, x);
    est.lower = est.lower.min(est.upper);
    est
}

/// Norm of a 2×2 matrix of elements; the upper bound is the norm of the matrix of entry bounds.
pub fn matrix_norm<F: Field>(alg: &SuQ2<F>, m: &[[Element<F::E>; 2]; 2], opts: &NormOptions) -> NormEstimate {
    matrix_norm_with_vectors(alg, m, opts).0
}

/// As [`matrix_norm`], also returning the maximizing `θ`, truncation and singular triple (`q < 1`).
pub fn matrix_norm_with_vectors<F: Field>(
    alg: &SuQ2<F>,
    m: &[[Element<F::E>; 2]; 2],
    opts: &NormOptions,
) -> (NormEstimate, Option<(f64, usize, SingularTriple)>) {
    let f = alg.field();
    let entries: Vec<Vec<&Element<F::E>>> = m.iter().map(|r| r.iter().collect()).collect();
    let (mut est, top) = if f.is_classical() {
        (classical_estimate(f, &entries, opts), None)
    } else {
        ladder(alg, &entries, opts)
    };
    est.upper = matrix_norm_upper(f, m);
    est.lower = est.lower.min(est.upper);
    (est, top)
}

/// Norm of the 2×2 matrix of coefficient bounds.
pub fn matrix_norm_upper<F: Field>(f: &F, m: &[[Element<F::E>; 2]; 2]) -> f64 {
    let bounds = DMatrix::from_fn(2, 2, |i, j| Complex64::new(coefficient_bound(f, &m[i][j]), 0.0));
    linalg::dense_norm(&bounds)
}

/// `L(x) = ‖δ(x)‖` for `x` in O(S_q²).
pub fn lip_norm<F: Field>(acts: &Actions<F>, x: &Element<F::E>, opts: &NormOptions) -> Result<LipResult<F::E>, NotInSphere> {
    let components = acts.delta_matrix(x)?;
    let value = matrix_norm(acts.alg(), &components, opts);
    Ok(LipResult { value, components })
}

// --- Gram-matrix oracle ----------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GramOptions {
    /// Largest monomial degree of the source subspace.
    pub degree_cap: u32,
    /// Ladder spacing in degree.
    pub step: u32,
    pub rel_tol: f64,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions { degree_cap: 24, step: 4, rel_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramEstimate {
    /// `max(‖∂_1(x)‖, ‖∂_2(x)‖)` at the largest cap.
    pub lower: f64,
    pub partial1: f64,
    pub partial2: f64,
    /// `(cap, lower)` per rung.
    pub ladder: Vec<(u32, f64)>,
    pub converged: bool,
    /// Relative size of the smallest Gram–Schmidt norm, as a conditioning diagnostic.
    pub min_pivot: f64,
}

/// Decimal digits that keep Gram–Schmidt on monomial chains of degree `cap` accurate.
pub fn gram_precision(q: f64, cap: u32) -> usize {
    let lost = (cap as f64) * (cap as f64) * libm::log10(1.0 / q.min(0.999));
    40 + lost as usize
}

/// Norm of left multiplication by `p` from the span of monomials of right degree `r` and
/// degree at most `cap` into L², returned per cap in `caps` (ascending).
pub fn restricted_norm<F: Field>(alg: &SuQ2<F>, p: &Element<F::E>, r: i64, caps: &[u32]) -> (Vec<f64>, f64) {
    let f = alg.field();
    let cap = *caps.last().expect("at least one cap");
    let mut blocks: BTreeMap<i32, Vec<Monomial>> = BTreeMap::new();
    for m in Monomial::all_up_to(cap) {
        if m.right_degree() == r {
            blocks.entry(m.a).or_default().push(m);
        }
    }
    for chain in blocks.values_mut() {
        chain.sort_by_key(|m| (m.degree(), *m));
    }
    let mut inner_memo: BTreeMap<(Monomial, Monomial), F::E> = BTreeMap::new();
    let mut mono_inner = |x: Monomial, y: Monomial| -> F::E {
        inner_memo
            .entry((x, y))
            .or_insert_with(|| alg.haar_inner(&alg.monomial(x), &alg.monomial(y)))
            .clone()
    };
    // Gram–Schmidt per block: basis vector j = Σ_k coeff[j][k] chain[k]
    let mut index: Vec<(i32, usize)> = Vec::new();
    let mut coeffs: BTreeMap<i32, Vec<Vec<F::E>>> = BTreeMap::new();
    let mut norms: BTreeMap<i32, Vec<F::E>> = BTreeMap::new();
    let mut min_pivot = 1.0f64;
    for (&s, chain) in &blocks {
        let k = chain.len();
        let gram: Vec<Vec<F::E>> = (0..k).map(|i| (0..k).map(|j| mono_inner(chain[i], chain[j])).collect()).collect();
        let inner = |x: &[F::E], y: &[F::E]| {
            let mut acc = f.zero();
            for (i, xi) in x.iter().enumerate() {
                let xc = f.conj(xi);
                for (j, yj) in y.iter().enumerate() {
                    f.add_assign(&mut acc, &f.mul(&xc, &f.mul(&gram[i][j], yj)));
                }
            }
            acc
        };
        let mut cs: Vec<Vec<F::E>> = Vec::new();
        let mut ns: Vec<F::E> = Vec::new();
        for idx in 0..k {
            let unit: Vec<F::E> = (0..k).map(|j| if j == idx { f.one() } else { f.zero() }).collect();
            let mut c = unit.clone();
            for (prev, n2) in cs.iter().zip(&ns) {
                let rr = f.div(&inner(prev, &unit), n2).expect("nonzero pivot");
                for (cj, pj) in c.iter_mut().zip(prev) {
                    *cj = f.sub(cj, &f.mul(&rr, pj));
                }
            }
            let n2 = inner(&c, &c);
            min_pivot = min_pivot.min(f.abs_f64(&n2) / f.abs_f64(&gram[idx][idx]));
            cs.push(c);
            ns.push(n2);
            index.push((s, idx));
        }
        coeffs.insert(s, cs);
        norms.insert(s, ns);
    }
    // T[(s',k'),(s,k)] = ⟨chain_s'[k'], p*p chain_s[k]⟩
    let pp = alg.mul(&alg.star(p), p);
    let mut t: BTreeMap<((i32, usize), (i32, usize)), F::E> = BTreeMap::new();
    for (&s, chain) in &blocks {
        for (k, &m) in chain.iter().enumerate() {
            let y = alg.mul(&pp, &alg.monomial(m));
            for (&s2, chain2) in &blocks {
                for (k2, &m2) in chain2.iter().enumerate() {
                    let mut acc = f.zero();
                    for (mm, c) in y.iter() {
                        if mm.a == s2 && mm.b as i64 - mm.bs as i64 == m2.b as i64 - m2.bs as i64 {
                            f.add_assign(&mut acc, &f.mul(c, &mono_inner(m2, *mm)));
                        }
                    }
                    if !f.is_zero(&acc) {
                        t.insert(((s2, k2), (s, k)), acc);
                    }
                }
            }
        }
    }
    // K = P† T P in the orthogonal basis, then normalize
    let n = index.len();
    let pos: BTreeMap<(i32, usize), usize> = index.iter().enumerate().map(|(i, key)| (*key, i)).collect();
    let mut acc: BTreeMap<(usize, usize), F::E> = BTreeMap::new();
    for (((s2, k2), (s, k)), v) in &t {
        for (j2, row2) in coeffs[s2].iter().enumerate() {
            if f.is_zero(&row2[*k2]) {
                continue;
            }
            let left = f.mul(&f.conj(&row2[*k2]), v);
            for (j, row) in coeffs[s].iter().enumerate() {
                if f.is_zero(&row[*k]) {
                    continue;
                }
                let slot = acc.entry((pos[&(*s2, j2)], pos[&(*s, j)])).or_insert_with(|| f.zero());
                f.add_assign(slot, &f.mul(&left, &row[*k]));
            }
        }
    }
    let flat_norms: Vec<f64> = index.iter().map(|(s, j)| f.abs_f64(&norms[s][*j])).collect();
    let mut k_mat = DMatrix::<Complex64>::zeros(n, n);
    for ((i, j), v) in &acc {
        k_mat[(*i, *j)] = f.to_c64(v) / libm::sqrt(flat_norms[*i] * flat_norms[*j]);
    }
    let degree_of = |i: usize| {
        let (s, j) = index[i];
        blocks[&s][j].degree()
    };
    let values = caps
        .iter()
        .map(|&c| {
            let keep: Vec<usize> = (0..n).filter(|&i| degree_of(i) <= c).collect();
            let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| k_mat[(keep[i], keep[j])]);
            let ev = linalg::hermitian_eigenvalues(&sub);
            libm::sqrt(ev.last().copied().unwrap_or(0.0).max(0.0))
        })
        .collect();
    (values, min_pivot)
}

/// `max(‖∂_1(x)|_{H_+}‖, ‖∂_2(x)|_{H_−}‖)` from Gram matrices of the Haar inner product.
pub fn lip_norm_gram_oracle<F: Field>(
    acts: &Actions<F>,
    x: &Element<F::E>,
    opts: &GramOptions,
) -> Result<GramEstimate, NotInSphere> {
    let (p1, p2) = acts.dirac_components(x)?;
    let alg = acts.alg();
    let mut caps: Vec<u32> = Vec::new();
    let mut c = opts.degree_cap % opts.step.max(1);
    if c == 0 {
        c = opts.step.max(1);
    }
    while c <= opts.degree_cap {
        caps.push(c);
        c += opts.step.max(1);
    }
    let (v1, piv1) = restricted_norm(alg, &p1, 1, &caps);
    let (v2, piv2) = restricted_norm(alg, &p2, -1, &caps);
    let ladder: Vec<(u32, f64)> = caps.iter().zip(v1.iter().zip(&v2)).map(|(&c, (a, b))| (c, a.max(*b))).collect();
    let lower = ladder.last().map(|l| l.1).unwrap_or(0.0);
    let converged = match ladder.len() {
        0 | 1 => false,
        n => (ladder[n - 1].1 - ladder[n - 2].1).abs() <= opts.rel_tol * lower.max(1e-300) || lower == 0.0,
    };
    Ok(GramEstimate {
        lower,
        partial1: *v1.last().unwrap_or(&0.0),
        partial2: *v2.last().unwrap_or(&0.0),
        ladder,
        converged,
        min_pivot: piv1.min(piv2),
    })
}
