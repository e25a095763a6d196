//! The Haar L²-layer: fuzzy-sphere bases, the projections Φ_N and P_N, matrices of the
//! derivations 𝒟_j, and the modular conjugation J.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::DenseMatrix;
use crate::qhopf::{Element, Monomial, SuQ2};
use crate::random::sphere_degree;
use crate::scalar::Field;
use crate::uq_actions::{Actions, Label};

/// Order in which each weight chain is orthogonalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Ordering {
    /// Increasing spin: vector `n` of weight `w` spans the spin-`n` layer.
    #[default]
    SpinAscending,
    /// Decreasing spin. Same span, different vectors; spin labels give the leading monomial.
    SpinDescending,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisVector<E> {
    pub element: Element<E>,
    pub spin: u32,
    pub weight: i64,
    /// `⟨v, v⟩_h`; vectors are orthogonal, not normalized.
    pub norm2: E,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuzzyBasis<E> {
    pub level: u32,
    pub ordering: Ordering,
    pub vectors: Vec<BasisVector<E>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GnsError {
    GramSingular { weight: i64, spin: u32 },
    NotInSphere,
}

impl fmt::Display for GnsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GnsError::GramSingular { weight, spin } => {
                write!(f, "Gram matrix numerically singular at weight {weight}, spin {spin}")
            }
            GnsError::NotInSphere => f.write_str("element has components of nonzero right degree"),
        }
    }
}

/// Zero-weight monomial of weight `w` and spin `n ≥ |w|`.
pub fn chain_monomial(w: i64, n: u32) -> Monomial {
    if w >= 0 {
        Monomial::new(w as i32, n - w as u32, n)
    } else {
        Monomial::new(w as i32, n, n - w.unsigned_abs() as u32)
    }
}

/// Weight of a zero-weight monomial (its `a`-exponent).
pub fn weight_of(m: Monomial) -> i64 {
    m.a as i64
}

/// Builds the orthogonal fuzzy basis of level `n`.
pub fn build_fuzzy_basis<F: Field>(alg: &SuQ2<F>, n: u32, ordering: Ordering) -> Result<FuzzyBasis<F::E>, GnsError> {
    let f = alg.field();
    let mut vectors = Vec::new();
    for w in -(n as i64)..=(n as i64) {
        let mut spins: Vec<u32> = (w.unsigned_abs() as u32..=n).collect();
        if ordering == Ordering::SpinDescending {
            spins.reverse();
        }
        let mons: Vec<Monomial> = spins.iter().map(|&s| chain_monomial(w, s)).collect();
        let k = mons.len();
        let gram = DenseMatrix::from_fn(k, k, |i, j| {
            alg.haar_inner(&alg.monomial(mons[i]), &alg.monomial(mons[j]))
        });
        // coefficient vectors over `mons`
        let mut coeffs: Vec<Vec<F::E>> = Vec::with_capacity(k);
        let mut norms: Vec<F::E> = Vec::with_capacity(k);
        let inner = |x: &[F::E], y: &[F::E]| {
            let mut acc = f.zero();
            for (i, xi) in x.iter().enumerate() {
                if f.is_zero(xi) {
                    continue;
                }
                let xc = f.conj(xi);
                for (j, yj) in y.iter().enumerate() {
                    if !f.is_zero(yj) {
                        f.add_assign(&mut acc, &f.mul(&xc, &f.mul(gram.get(i, j), yj)));
                    }
                }
            }
            acc
        };
        for idx in 0..k {
            let mut c: Vec<F::E> = (0..k).map(|j| if j == idx { f.one() } else { f.zero() }).collect();
            let raw = c.clone();
            for (prev, n2) in coeffs.iter().zip(&norms) {
                let r = f.div(&inner(prev, &raw), n2).expect("nonzero norm");
                for (cj, pj) in c.iter_mut().zip(prev) {
                    *cj = f.sub(cj, &f.mul(&r, pj));
                }
            }
            let n2 = inner(&c, &c);
            let raw_n2 = f.abs_f64(gram.get(idx, idx));
            if f.is_zero(&n2) || (!f.is_exact() && f.abs_f64(&n2) <= 1e-13 * raw_n2) {
                return Err(GnsError::GramSingular { weight: w, spin: spins[idx] });
            }
            coeffs.push(c);
            norms.push(n2);
        }
        for ((c, n2), spin) in coeffs.into_iter().zip(norms).zip(spins) {
            let mut x = alg.zero();
            for (m, cm) in mons.iter().zip(&c) {
                if !f.is_zero(cm) {
                    x = alg.add(&x, &alg.term(*m, cm.clone()));
                }
            }
            vectors.push(BasisVector { element: x, spin, weight: w, norm2: n2 });
        }
    }
    vectors.sort_by_key(|v| (v.spin, v.weight));
    Ok(FuzzyBasis { level: n, ordering, vectors })
}

impl<E: Clone> FuzzyBasis<E> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Sub-basis of spin at most `n` (valid for ascending ordering).
    pub fn truncate(&self, n: u32) -> FuzzyBasis<E> {
        assert_eq!(self.ordering, Ordering::SpinAscending, "truncation needs spin-graded vectors");
        FuzzyBasis {
            level: n.min(self.level),
            ordering: self.ordering,
            vectors: self.vectors.iter().filter(|v| v.spin <= n).cloned().collect(),
        }
    }
}

/// Max over pairs of `|⟨v_i, v_j⟩ − δ_ij n_i| / √(n_i n_j)`.
pub fn gram_certificate<F: Field>(alg: &SuQ2<F>, basis: &FuzzyBasis<F::E>) -> f64 {
    let f = alg.field();
    let mut worst = 0.0f64;
    for (i, vi) in basis.vectors.iter().enumerate() {
        for (j, vj) in basis.vectors.iter().enumerate() {
            let mut g = alg.haar_inner(&vi.element, &vj.element);
            if i == j {
                g = f.sub(&g, &vi.norm2);
            }
            if !f.is_zero(&g) {
                let scale = libm::sqrt(f.abs_f64(&vi.norm2) * f.abs_f64(&vj.norm2));
                worst = worst.max(f.abs_f64(&g) / scale).max(f64::MIN_POSITIVE);
            }
        }
    }
    worst
}

/// Coefficients `⟨v_i, x⟩ / n_i`.
pub fn coordinates<F: Field>(alg: &SuQ2<F>, basis: &FuzzyBasis<F::E>, x: &Element<F::E>) -> Vec<F::E> {
    let f = alg.field();
    let parts = split_by_weight(x);
    basis
        .vectors
        .iter()
        .map(|v| match parts.get(&v.weight) {
            Some(p) => f.div(&alg.haar_inner(&v.element, p), &v.norm2).expect("nonzero norm"),
            None => f.zero(),
        })
        .collect()
}

fn split_by_weight<E: Clone>(x: &Element<E>) -> BTreeMap<i64, Element<E>> {
    let mut out: BTreeMap<i64, BTreeMap<Monomial, E>> = BTreeMap::new();
    for (m, c) in x.iter() {
        out.entry(m.a as i64).or_default().insert(*m, c.clone());
    }
    out.into_iter().map(|(w, t)| (w, Element::from_terms(t))).collect()
}

/// `Φ_N(x) = Σ v ⟨v, x⟩ / ⟨v, v⟩` over the basis.
pub fn phi_projection<F: Field>(
    alg: &SuQ2<F>,
    basis: &FuzzyBasis<F::E>,
    x: &Element<F::E>,
) -> Result<Element<F::E>, GnsError> {
    if !x.is_sphere() {
        return Err(GnsError::NotInSphere);
    }
    let c = coordinates(alg, basis, x);
    Ok(alg.combine(c.into_iter().zip(&basis.vectors).map(|(c, v)| (c, &v.element))))
}

/// Spin-layer decomposition `x = Σ_n x_n` for `x` in O(S_q²), read off an ascending basis
/// of level at least the spin degree of `x`.
pub fn spin_layers<F: Field>(
    alg: &SuQ2<F>,
    basis: &FuzzyBasis<F::E>,
    x: &Element<F::E>,
) -> Result<BTreeMap<u32, Element<F::E>>, GnsError> {
    if !x.is_sphere() {
        return Err(GnsError::NotInSphere);
    }
    assert_eq!(basis.ordering, Ordering::SpinAscending);
    let top = x.iter().map(|(m, _)| sphere_degree(*m)).max().unwrap_or(0);
    assert!(top <= basis.level, "basis level {} below spin degree {}", basis.level, top);
    let f = alg.field();
    let mut out: BTreeMap<u32, Element<F::E>> = BTreeMap::new();
    for (c, v) in coordinates(alg, basis, x).into_iter().zip(&basis.vectors) {
        if f.is_zero(&c) {
            continue;
        }
        let layer = out.entry(v.spin).or_insert_with(|| alg.zero());
        *layer = alg.add(layer, &alg.scale(&v.element, &c));
    }
    Ok(out)
}

/// `K_ij = ⟨v_i, 𝒟(v_j)⟩` for `𝒟 ∈ {δ_1, …, δ_4}` on an orthogonal basis.
pub fn operator_matrix<F: Field>(
    acts: &Actions<F>,
    basis: &FuzzyBasis<F::E>,
    label: Label,
) -> DenseMatrix<F::E> {
    let alg = acts.alg();
    let f = alg.field();
    let images: Vec<BTreeMap<i64, Element<F::E>>> =
        basis.vectors.iter().map(|v| split_by_weight(&acts.apply(label, &v.element))).collect();
    DenseMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        let vi = &basis.vectors[i];
        match images[j].get(&vi.weight) {
            Some(p) => alg.haar_inner(&vi.element, p),
            None => f.zero(),
        }
    })
}

/// Matrix of an operator in the orthonormalized basis: `K_ij / √(n_i n_j)`.
pub fn orthonormal_view<F: Field>(f: &F, basis: &FuzzyBasis<F::E>, k: &DenseMatrix<F::E>) -> DMatrix<Complex64> {
    let s: Vec<f64> = basis.vectors.iter().map(|v| libm::sqrt(f.abs_f64(&v.norm2))).collect();
    DMatrix::from_fn(k.rows, k.cols, |i, j| f.to_c64(k.get(i, j)) / (s[i] * s[j]))
}

/// Exact residuals of the adjoint pattern: `K_1 − q⁻¹K_2^†` and `K_3 − K_3^†`, in the
/// orthonormal normalization. Returns the largest entry magnitude of each (0 when exact).
pub fn adjoint_pattern_residuals<F: Field>(acts: &Actions<F>, basis: &FuzzyBasis<F::E>) -> (f64, f64) {
    let f = acts.alg().field();
    let k1 = operator_matrix(acts, basis, Label::Delta1);
    let k2 = operator_matrix(acts, basis, Label::Delta2);
    let k3 = operator_matrix(acts, basis, Label::Delta3);
    let qinv = f.q_pow(-1);
    let n = basis.len();
    let scale = |i: usize, j: usize| {
        libm::sqrt(f.abs_f64(&basis.vectors[i].norm2) * f.abs_f64(&basis.vectors[j].norm2))
    };
    let mut r1 = 0.0f64;
    let mut r3 = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d1 = f.sub(k1.get(i, j), &f.mul(&qinv, &f.conj(k2.get(j, i))));
            if !f.is_zero(&d1) {
                r1 = r1.max(f.abs_f64(&d1) / scale(i, j)).max(f64::MIN_POSITIVE);
            }
            let d3 = f.sub(k3.get(i, j), &f.conj(k3.get(j, i)));
            if !f.is_zero(&d3) {
                r3 = r3.max(f.abs_f64(&d3) / scale(i, j)).max(f64::MIN_POSITIVE);
            }
        }
    }
    (r1, r3)
}

/// `‖P_N 𝒟 − 𝒟 P_N‖` on the level-`M` compression (ascending basis of level `M`).
pub fn pn_commutation_residual<F: Field>(
    acts: &Actions<F>,
    basis: &FuzzyBasis<F::E>,
    label: Label,
    n: u32,
) -> f64 {
    assert_eq!(basis.ordering, Ordering::SpinAscending);
    let f = acts.alg().field();
    let k = operator_matrix(acts, basis, label);
    let view = orthonormal_view(f, basis, &k);
    let p = DMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        if i == j && basis.vectors[i].spin <= n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let comm = &p * &view - &view * &p;
    // exact mode: the commutator has entries K_ij with one index inside, one outside
    let mut exact_nonzero = false;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let inside = |t: usize| basis.vectors[t].spin <= n;
            if inside(i) != inside(j) && !f.is_zero(k.get(i, j)) {
                exact_nonzero = true;
            }
        }
    }
    let r = crate::linalg::dense_norm(&comm);
    if exact_nonzero {
        r.max(f64::MIN_POSITIVE)
    } else {
        0.0
    }
}

/// `J(y) = ν^(−1/2)(y*)`.
pub fn modular_conjugation<F: Field>(acts: &Actions<F>, y: &Element<F::E>) -> Element<F::E> {
    acts.modular_inverse_half(&acts.alg().star(y))
}

/// `[J x* J, L_y]` on monomials `ξ` of degree at most `m − deg x − deg y` (the interior block).
/// Returns the largest coefficient magnitude of the commutator over the block.
pub fn commutant_residual<F: Field>(acts: &Actions<F>, x: &Element<F::E>, y: &Element<F::E>, m: u32) -> f64 {
    let alg = acts.alg();
    let f = alg.field();
    let xs = alg.star(x);
    let jxj = |xi: &Element<F::E>| modular_conjugation(acts, &alg.mul(&xs, &modular_conjugation(acts, xi)));
    let band = x.degree() + y.degree();
    let mut worst = 0.0f64;
    if band > m {
        return worst;
    }
    for mono in Monomial::all_up_to(m - band) {
        let xi = alg.monomial(mono);
        let lhs = jxj(&alg.mul(y, &xi));
        let rhs = alg.mul(y, &jxj(&xi));
        for (_, c) in alg.sub(&lhs, &rhs).iter() {
            worst = worst.max(f.abs_f64(c)).max(f64::MIN_POSITIVE);
        }
    }
    worst
}

/// Restrict `x` to its components of the given weights.
pub fn weight_part<E: Clone>(x: &Element<E>, w: i64) -> Element<E> {
    split_by_weight(x).remove(&w).unwrap_or_else(Element::zero)
}

/// `Σ_i |⟨v_i, x⟩|² / n_i`.
pub fn parseval_sum<F: Field>(alg: &SuQ2<F>, basis: &FuzzyBasis<F::E>, x: &Element<F::E>) -> F::E {
    let f = alg.field();
    let mut acc = f.zero();
    for v in &basis.vectors {
        let c = alg.haar_inner(&v.element, x);
        let sq = f.mul(&f.conj(&c), &c);
        f.add_assign(&mut acc, &f.div(&sq, &v.norm2).expect("nonzero norm"));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    #[test]
    fn basis_counts_and_labels() {
        let s = SuQ2::new(Exact::from_ratio(1, 2));
        let b0 = build_fuzzy_basis(&s, 0, Ordering::SpinAscending).unwrap();
        assert_eq!(b0.len(), 1);
        assert_eq!(b0.vectors[0].element, s.one());
        let b = build_fuzzy_basis(&s, 4, Ordering::SpinAscending).unwrap();
        assert_eq!(b.len(), 25);
        for n in 0..=4u32 {
            let ws: Vec<i64> = b.vectors.iter().filter(|v| v.spin == n).map(|v| v.weight).collect();
            assert_eq!(ws.len() as u32, 2 * n + 1);
        }
        assert_eq!(gram_certificate(&s, &b), 0.0);
        assert_eq!(build_fuzzy_basis(&s, 2, Ordering::SpinAscending).unwrap().len(), 9);
    }
}
