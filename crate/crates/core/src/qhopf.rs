//! The Hopf *-algebra O(SU_q(2)).
//!
//! Elements are finite sums of normal-ordered monomials `a^s b^l b*^m` (with `a^s`
//! read as `a*^|s|` for negative `s`). All rewriting uses closed forms derived from
//!
//! ```text
//! ba = q ab,  b*a = q ab*,  bb* = b*b,  a*a + q²bb* = 1 = aa* + bb*
//! ```
//!
//! so that `c = bb*` satisfies `ca = q²ac` and moving `b^l b*^m` past `a^t` costs a
//! factor `q^(t(l+m))` for either sign of `t`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use spin::RwLock;

use crate::scalar::Field;

/// Normal-ordered monomial `a^a b^b b*^bs` (negative `a` means powers of `a*`).
///
/// The derived ordering is the canonical term order `(aExp, bExp, bStarExp)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial {
    pub a: i32,
    pub b: u32,
    pub bs: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { a: 0, b: 0, bs: 0 };

    pub const fn new(a: i32, b: u32, bs: u32) -> Self {
        Monomial { a, b, bs }
    }

    /// `c^n = (bb*)^n`.
    pub const fn c_pow(n: u32) -> Self {
        Monomial { a: 0, b: n, bs: n }
    }

    pub fn degree(&self) -> u32 {
        self.a.unsigned_abs() + self.b + self.bs
    }

    /// Grading of the circle action `a ↦ za, b ↦ zb`.
    pub fn right_degree(&self) -> i64 {
        self.a as i64 + self.b as i64 - self.bs as i64
    }

    /// Complementary grading with `a` of degree +1 and `b` of degree −1.
    pub fn left_degree(&self) -> i64 {
        self.a as i64 - self.b as i64 + self.bs as i64
    }

    pub fn is_one(&self) -> bool {
        *self == Monomial::ONE
    }

    /// Every normal-ordered monomial of degree at most `d`, in canonical order.
    pub fn all_up_to(d: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let d = d as i32;
        for a in -d..=d {
            let rest = (d - a.abs()) as u32;
            for b in 0..=rest {
                for bs in 0..=(rest - b) {
                    out.push(Monomial::new(a, b, bs));
                }
            }
        }
        out
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<alloc::string::String> = Vec::new();
        let mut push = |name: &str, e: u32| {
            if e == 1 {
                parts.push(name.into());
            } else if e > 1 {
                parts.push(alloc::format!("{name}^{e}"));
            }
        };
        if self.a >= 0 {
            push("a", self.a as u32);
        } else {
            push("as", self.a.unsigned_abs());
        }
        push("b", self.b);
        push("bs", self.bs);
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// Finite linear combination of normal-ordered monomials. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Debug)]
pub struct Element<E> {
    terms: BTreeMap<Monomial, E>,
}

impl<E> Default for Element<E> {
    fn default() -> Self {
        Element { terms: BTreeMap::new() }
    }
}

impl<E: Clone> Element<E> {
    pub fn zero() -> Self {
        Element::default()
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, E> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &E)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&E> {
        self.terms.get(m)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// True if every monomial has right degree zero, i.e. the element lies in O(S_q²).
    pub fn is_sphere(&self) -> bool {
        self.terms.keys().all(|m| m.right_degree() == 0)
    }

    /// Caller guarantees no zero coefficients.
    pub(crate) fn from_terms(terms: BTreeMap<Monomial, E>) -> Self {
        Element { terms }
    }

    pub fn map_coeffs<G, H: Fn(&E) -> G>(&self, h: H) -> Element<G> {
        Element { terms: self.terms.iter().map(|(m, c)| (*m, h(c))).collect() }
    }
}

/// Finite sum of elementary tensors `m₁ ⊗ m₂` of monomials.
#[derive(Clone, PartialEq, Debug)]
pub struct Tensor<E> {
    terms: BTreeMap<(Monomial, Monomial), E>,
}

impl<E> Default for Tensor<E> {
    fn default() -> Self {
        Tensor { terms: BTreeMap::new() }
    }
}

impl<E: Clone> Tensor<E> {
    pub fn terms(&self) -> &BTreeMap<(Monomial, Monomial), E> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Monomial, Monomial), &E)> {
        self.terms.iter()
    }
}

fn accumulate<F: Field, K: Ord>(f: &F, map: &mut BTreeMap<K, F::E>, k: K, c: F::E) {
    if f.is_zero(&c) {
        return;
    }
    match map.entry(k) {
        alloc::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        alloc::collections::btree_map::Entry::Occupied(mut o) => {
            f.add_assign(o.get_mut(), &c);
            if f.is_zero(o.get()) {
                o.remove();
            }
        }
    }
}

struct Haar<E> {
    values: Vec<E>,
    /// Δ(b^n) and Δ(b*^n) for n = values.len() − 1.
    last: Option<(Tensor<E>, Tensor<E>)>,
}

struct Caches<E> {
    cross: RwLock<BTreeMap<(i32, i32), Arc<Vec<E>>>>,
    delta: RwLock<BTreeMap<Monomial, Arc<Tensor<E>>>>,
    haar: RwLock<Haar<E>>,
}

/// Monomials up to this degree have their coproduct memoised.
const DELTA_MEMO_DEGREE: u32 = 14;

/// Context for computations in O(SU_q(2)) over the scalar field `F`.
#[derive(Clone)]
pub struct SuQ2<F: Field> {
    f: F,
    caches: Arc<Caches<F::E>>,
}

/// Failure of the Haar invariance system to determine a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HaarError {
    pub degree: u32,
}

impl fmt::Display for HaarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Haar invariance system inconsistent at c^{}", self.degree)
    }
}

impl<F: Field> SuQ2<F> {
    pub fn new(f: F) -> Self {
        SuQ2 {
            caches: Arc::new(Caches {
                cross: RwLock::new(BTreeMap::new()),
                delta: RwLock::new(BTreeMap::new()),
                haar: RwLock::new(Haar { values: vec![f.one()], last: None }),
            }),
            f,
        }
    }

    pub fn field(&self) -> &F {
        &self.f
    }

    // --- construction -----------------------------------------------------

    pub fn zero(&self) -> Element<F::E> {
        Element::zero()
    }

    pub fn one(&self) -> Element<F::E> {
        self.scalar(self.f.one())
    }

    pub fn scalar(&self, c: F::E) -> Element<F::E> {
        self.term(Monomial::ONE, c)
    }

    pub fn term(&self, m: Monomial, c: F::E) -> Element<F::E> {
        let mut terms = BTreeMap::new();
        accumulate(&self.f, &mut terms, m, c);
        Element { terms }
    }

    pub fn monomial(&self, m: Monomial) -> Element<F::E> {
        self.term(m, self.f.one())
    }

    pub fn a(&self) -> Element<F::E> {
        self.monomial(Monomial::new(1, 0, 0))
    }

    pub fn a_star(&self) -> Element<F::E> {
        self.monomial(Monomial::new(-1, 0, 0))
    }

    pub fn b(&self) -> Element<F::E> {
        self.monomial(Monomial::new(0, 1, 0))
    }

    pub fn b_star(&self) -> Element<F::E> {
        self.monomial(Monomial::new(0, 0, 1))
    }

    /// `A = b*b`.
    pub fn big_a(&self) -> Element<F::E> {
        self.monomial(Monomial::new(0, 1, 1))
    }

    /// `B = ab*`.
    pub fn big_b(&self) -> Element<F::E> {
        self.monomial(Monomial::new(1, 0, 1))
    }

    /// `B* = ba*`.
    pub fn big_b_star(&self) -> Element<F::E> {
        self.star(&self.big_b())
    }

    /// The fundamental corepresentation `u = [[a*, −qb], [b*, a]]`.
    pub fn fundamental(&self) -> [[Element<F::E>; 2]; 2] {
        [
            [self.a_star(), self.scale(&self.b(), &self.f.neg(&self.f.q_pow(1)))],
            [self.b_star(), self.a()],
        ]
    }

    // --- linear structure -------------------------------------------------

    pub fn add(&self, x: &Element<F::E>, y: &Element<F::E>) -> Element<F::E> {
        let mut terms = x.terms.clone();
        for (m, c) in &y.terms {
            accumulate(&self.f, &mut terms, *m, c.clone());
        }
        Element { terms }
    }

    pub fn sub(&self, x: &Element<F::E>, y: &Element<F::E>) -> Element<F::E> {
        let mut terms = x.terms.clone();
        for (m, c) in &y.terms {
            accumulate(&self.f, &mut terms, *m, self.f.neg(c));
        }
        Element { terms }
    }

    pub fn neg(&self, x: &Element<F::E>) -> Element<F::E> {
        x.map_coeffs(|c| self.f.neg(c))
    }

    pub fn scale(&self, x: &Element<F::E>, c: &F::E) -> Element<F::E> {
        if self.f.is_zero(c) {
            return Element::zero();
        }
        let mut terms = BTreeMap::new();
        for (m, v) in &x.terms {
            accumulate(&self.f, &mut terms, *m, self.f.mul(v, c));
        }
        Element { terms }
    }

    /// `Σ cᵢ xᵢ`.
    pub fn combine<'x>(
        &self,
        parts: impl IntoIterator<Item = (F::E, &'x Element<F::E>)>,
    ) -> Element<F::E>
    where
        F::E: 'x,
    {
        let mut terms = BTreeMap::new();
        for (c, x) in parts {
            for (m, v) in &x.terms {
                accumulate(&self.f, &mut terms, *m, self.f.mul(v, &c));
            }
        }
        Element { terms }
    }

    pub fn add_scalar(&self, x: &Element<F::E>, c: &F::E) -> Element<F::E> {
        self.add(x, &self.scalar(c.clone()))
    }

    /// Exact equality of elements (tolerance-based in float mode).
    pub fn eq(&self, x: &Element<F::E>, y: &Element<F::E>) -> bool {
        self.sub(x, y).is_zero()
    }

    // --- multiplication ---------------------------------------------------

    /// Coefficients of the polynomial `P(c)` with `a^s a^t = a^(s+t) P(c)` when the signs differ.
    fn cross_poly(&self, s: i32, t: i32) -> Arc<Vec<F::E>> {
        if let Some(p) = self.caches.cross.read().get(&(s, t)) {
            return p.clone();
        }
        let f = &self.f;
        let mut poly = vec![f.one()];
        let times_linear = |poly: &mut Vec<F::E>, w: F::E| {
            // poly · (1 − w c)
            let mut next = poly.clone();
            next.push(f.zero());
            for j in 0..poly.len() {
                let t = f.mul(&poly[j], &w);
                next[j + 1] = f.sub(&next[j + 1], &t);
            }
            *poly = next;
        };
        if s > 0 && t < 0 {
            // a^s a*^r = a^(s−r) ∏_{i=1}^{k} (1 − q^(−2(r−i)) c)
            let r = (-t) as i64;
            let k = s.min(-t) as i64;
            for i in 1..=k {
                times_linear(&mut poly, f.q_pow(-2 * (r - i)));
            }
        } else if s < 0 && t > 0 {
            // a*^r a^s = a^(s−r) ∏_{i=0}^{k−1} (1 − q^(2(s−i)) c)
            let sp = t as i64;
            let k = (-s).min(t) as i64;
            for i in 0..k {
                times_linear(&mut poly, f.q_pow(2 * (sp - i)));
            }
        }
        let poly = Arc::new(poly);
        self.caches.cross.write().insert((s, t), poly.clone());
        poly
    }

    /// Adds `coef · x · y` to `out`.
    fn mul_monomials_into(
        &self,
        x: Monomial,
        y: Monomial,
        coef: &F::E,
        out: &mut BTreeMap<Monomial, F::E>,
    ) {
        for (m, c) in self.mul_monomials(x, y) {
            accumulate(&self.f, out, m, self.f.mul(&c, coef));
        }
    }

    /// Normal-ordered product of two monomials.
    pub fn mul_monomials(&self, x: Monomial, y: Monomial) -> Vec<(Monomial, F::E)> {
        let f = &self.f;
        let s = x.a;
        let t = y.a;
        let pre = f.q_pow(t as i64 * (x.b + x.bs) as i64);
        let b = x.b + y.b;
        let bs = x.bs + y.bs;
        if s == 0 || t == 0 || (s > 0) == (t > 0) {
            return vec![(Monomial::new(s + t, b, bs), pre)];
        }
        let poly = self.cross_poly(s, t);
        poly.iter()
            .enumerate()
            .filter(|(_, p)| !f.is_zero(p))
            .map(|(j, p)| (Monomial::new(s + t, b + j as u32, bs + j as u32), f.mul(&pre, p)))
            .collect()
    }

    pub fn mul(&self, x: &Element<F::E>, y: &Element<F::E>) -> Element<F::E> {
        let mut out = BTreeMap::new();
        for (mx, cx) in &x.terms {
            for (my, cy) in &y.terms {
                self.mul_monomials_into(*mx, *my, &self.f.mul(cx, cy), &mut out);
            }
        }
        Element { terms: out }
    }

    pub fn pow(&self, x: &Element<F::E>, n: u32) -> Element<F::E> {
        let mut acc = self.one();
        for _ in 0..n {
            acc = self.mul(&acc, x);
        }
        acc
    }

    pub fn product<'x>(&self, xs: impl IntoIterator<Item = &'x Element<F::E>>) -> Element<F::E>
    where
        F::E: 'x,
    {
        xs.into_iter().fold(self.one(), |acc, x| self.mul(&acc, x))
    }

    pub fn commutator(&self, x: &Element<F::E>, y: &Element<F::E>) -> Element<F::E> {
        self.sub(&self.mul(x, y), &self.mul(y, x))
    }

    // --- involution -------------------------------------------------------

    /// `(a^s b^l b*^m)* = q^(−s(l+m)) a^(−s) b^m b*^l`.
    pub fn star_monomial(&self, m: Monomial) -> (Monomial, F::E) {
        let k = -(m.a as i64) * (m.b + m.bs) as i64;
        (Monomial::new(-m.a, m.bs, m.b), self.f.q_pow(k))
    }

    pub fn star(&self, x: &Element<F::E>) -> Element<F::E> {
        let mut out = BTreeMap::new();
        for (m, c) in &x.terms {
            let (ms, w) = self.star_monomial(*m);
            accumulate(&self.f, &mut out, ms, self.f.mul(&self.f.conj(c), &w));
        }
        Element { terms: out }
    }

    pub fn is_selfadjoint(&self, x: &Element<F::E>) -> bool {
        self.eq(x, &self.star(x))
    }

    // --- gradings ---------------------------------------------------------

    /// Splits `x` into its right-degree components.
    pub fn right_degree_decompose(&self, x: &Element<F::E>) -> BTreeMap<i64, Element<F::E>> {
        let mut out: BTreeMap<i64, Element<F::E>> = BTreeMap::new();
        for (m, c) in &x.terms {
            out.entry(m.right_degree()).or_default().terms.insert(*m, c.clone());
        }
        out
    }

    /// The right-degree zero component, i.e. the part in O(S_q²).
    pub fn sphere_part(&self, x: &Element<F::E>) -> Element<F::E> {
        Element { terms: x.terms.iter().filter(|(m, _)| m.right_degree() == 0).map(|(m, c)| (*m, c.clone())).collect() }
    }

    // --- tensors ----------------------------------------------------------

    pub fn tensor_term(&self, l: Monomial, r: Monomial, c: F::E) -> Tensor<F::E> {
        let mut terms = BTreeMap::new();
        accumulate(&self.f, &mut terms, (l, r), c);
        Tensor { terms }
    }

    pub fn tensor_add(&self, x: &Tensor<F::E>, y: &Tensor<F::E>) -> Tensor<F::E> {
        let mut terms = x.terms.clone();
        for (k, c) in &y.terms {
            accumulate(&self.f, &mut terms, *k, c.clone());
        }
        Tensor { terms }
    }

    pub fn tensor_sub(&self, x: &Tensor<F::E>, y: &Tensor<F::E>) -> Tensor<F::E> {
        let mut terms = x.terms.clone();
        for (k, c) in &y.terms {
            accumulate(&self.f, &mut terms, *k, self.f.neg(c));
        }
        Tensor { terms }
    }

    /// `Σ cᵢ xᵢ ⊗ yᵢ` from element pairs.
    pub fn tensor_from_pairs<'x>(
        &self,
        pairs: impl IntoIterator<Item = (F::E, &'x Element<F::E>, &'x Element<F::E>)>,
    ) -> Tensor<F::E>
    where
        F::E: 'x,
    {
        let mut terms = BTreeMap::new();
        for (c, x, y) in pairs {
            for (mx, cx) in &x.terms {
                let cxc = self.f.mul(cx, &c);
                for (my, cy) in &y.terms {
                    accumulate(&self.f, &mut terms, (*mx, *my), self.f.mul(&cxc, cy));
                }
            }
        }
        Tensor { terms }
    }

    pub fn tensor_mul(&self, x: &Tensor<F::E>, y: &Tensor<F::E>) -> Tensor<F::E> {
        let f = &self.f;
        let mut terms = BTreeMap::new();
        for ((xl, xr), cx) in &x.terms {
            for ((yl, yr), cy) in &y.terms {
                let c = f.mul(cx, cy);
                let left = self.mul_monomials(*xl, *yl);
                let right = self.mul_monomials(*xr, *yr);
                for (ml, cl) in &left {
                    let clc = f.mul(cl, &c);
                    for (mr, cr) in &right {
                        accumulate(f, &mut terms, (*ml, *mr), f.mul(&clc, cr));
                    }
                }
            }
        }
        Tensor { terms }
    }

    /// Applies linear maps to both legs and multiplies: `Σ c φ(l) ψ(r)`.
    pub fn tensor_contract(
        &self,
        t: &Tensor<F::E>,
        mut left: impl FnMut(Monomial) -> Element<F::E>,
        mut right: impl FnMut(Monomial) -> Element<F::E>,
    ) -> Element<F::E> {
        let mut out = BTreeMap::new();
        for ((l, r), c) in &t.terms {
            let x = left(*l);
            if x.is_zero() {
                continue;
            }
            let y = right(*r);
            let p = self.mul(&x, &y);
            for (m, v) in p.terms {
                accumulate(&self.f, &mut out, m, self.f.mul(&v, c));
            }
        }
        Element { terms: out }
    }

    /// Slices the left leg with a functional: `(φ ⊗ id) t`.
    pub fn slice_left(&self, t: &Tensor<F::E>, mut phi: impl FnMut(Monomial) -> F::E) -> Element<F::E> {
        let mut out = BTreeMap::new();
        let mut memo: BTreeMap<Monomial, F::E> = BTreeMap::new();
        for ((l, r), c) in &t.terms {
            let v = memo.entry(*l).or_insert_with(|| phi(*l)).clone();
            if self.f.is_zero(&v) {
                continue;
            }
            accumulate(&self.f, &mut out, *r, self.f.mul(&v, c));
        }
        Element { terms: out }
    }

    /// Slices the right leg with a functional: `(id ⊗ φ) t`.
    pub fn slice_right(&self, t: &Tensor<F::E>, mut phi: impl FnMut(Monomial) -> F::E) -> Element<F::E> {
        let mut out = BTreeMap::new();
        let mut memo: BTreeMap<Monomial, F::E> = BTreeMap::new();
        for ((l, r), c) in &t.terms {
            let v = memo.entry(*r).or_insert_with(|| phi(*r)).clone();
            if self.f.is_zero(&v) {
                continue;
            }
            accumulate(&self.f, &mut out, *l, self.f.mul(&v, c));
        }
        Element { terms: out }
    }

    // --- coproduct, counit, antipode ---------------------------------------

    fn generator_coproduct(&self, g: Monomial) -> Tensor<F::E> {
        let f = &self.f;
        let one = f.one();
        let mq = f.neg(&f.q_pow(1));
        let a = Monomial::new(1, 0, 0);
        let ast = Monomial::new(-1, 0, 0);
        let b = Monomial::new(0, 1, 0);
        let bs = Monomial::new(0, 0, 1);
        let mut t = Tensor::default();
        let mut put = |l, r, c: &F::E| accumulate(f, &mut t.terms, (l, r), c.clone());
        match (g.a, g.b, g.bs) {
            // Δa = a⊗a − q b*⊗b
            (1, 0, 0) => {
                put(a, a, &one);
                put(bs, b, &mq);
            }
            // Δa* = a*⊗a* − q b⊗b*
            (-1, 0, 0) => {
                put(ast, ast, &one);
                put(b, bs, &mq);
            }
            // Δb = b⊗a + a*⊗b
            (0, 1, 0) => {
                put(b, a, &one);
                put(ast, b, &one);
            }
            // Δb* = b*⊗a* + a⊗b*
            (0, 0, 1) => {
                put(bs, ast, &one);
                put(a, bs, &one);
            }
            _ => unreachable!("not a generator"),
        }
        t
    }

    fn coproduct_monomial_uncached(&self, m: Monomial) -> Tensor<F::E> {
        if m.is_one() {
            return self.tensor_term(Monomial::ONE, Monomial::ONE, self.f.one());
        }
        // peel the last generator of the word a^s b^l b*^m
        let (prefix, last) = if m.bs > 0 {
            (Monomial::new(m.a, m.b, m.bs - 1), Monomial::new(0, 0, 1))
        } else if m.b > 0 {
            (Monomial::new(m.a, m.b - 1, 0), Monomial::new(0, 1, 0))
        } else if m.a > 0 {
            (Monomial::new(m.a - 1, 0, 0), Monomial::new(1, 0, 0))
        } else {
            (Monomial::new(m.a + 1, 0, 0), Monomial::new(-1, 0, 0))
        };
        let head = self.coproduct_monomial(prefix);
        self.tensor_mul(&head, &self.generator_coproduct(last))
    }

    pub fn coproduct_monomial(&self, m: Monomial) -> Arc<Tensor<F::E>> {
        if m.degree() > DELTA_MEMO_DEGREE {
            return Arc::new(self.coproduct_monomial_uncached(m));
        }
        if let Some(t) = self.caches.delta.read().get(&m) {
            return t.clone();
        }
        let t = Arc::new(self.coproduct_monomial_uncached(m));
        self.caches.delta.write().insert(m, t.clone());
        t
    }

    pub fn coproduct(&self, x: &Element<F::E>) -> Tensor<F::E> {
        let mut terms = BTreeMap::new();
        for (m, c) in &x.terms {
            for (k, v) in &self.coproduct_monomial(*m).terms {
                accumulate(&self.f, &mut terms, *k, self.f.mul(v, c));
            }
        }
        Tensor { terms }
    }

    /// `ε(a) = ε(a*) = 1`, `ε(b) = ε(b*) = 0`.
    pub fn counit_monomial(&self, m: Monomial) -> F::E {
        if m.b == 0 && m.bs == 0 {
            self.f.one()
        } else {
            self.f.zero()
        }
    }

    pub fn counit(&self, x: &Element<F::E>) -> F::E {
        let mut acc = self.f.zero();
        for (m, c) in &x.terms {
            if m.b == 0 && m.bs == 0 {
                self.f.add_assign(&mut acc, c);
            }
        }
        acc
    }

    /// Antimultiplicative extension of `S(a) = a*`, `S(a*) = a`, `S(b) = −q⁻¹b`, `S(b*) = −qb*`.
    pub fn antipode_monomial(&self, m: Monomial) -> Element<F::E> {
        let f = &self.f;
        let sb = self.scale(&self.b(), &f.neg(&f.q_pow(-1)));
        let sbs = self.scale(&self.b_star(), &f.neg(&f.q_pow(1)));
        let sa = if m.a >= 0 { self.a_star() } else { self.a() };
        let mut acc = self.pow(&sbs, m.bs);
        acc = self.mul(&acc, &self.pow(&sb, m.b));
        self.mul(&acc, &self.pow(&sa, m.a.unsigned_abs()))
    }

    pub fn antipode(&self, x: &Element<F::E>) -> Element<F::E> {
        let parts: Vec<(F::E, Element<F::E>)> =
            x.terms.iter().map(|(m, c)| (c.clone(), self.antipode_monomial(*m))).collect();
        self.combine(parts.iter().map(|(c, e)| (c.clone(), e)))
    }

    // --- Haar state -------------------------------------------------------

    /// Extends the table of `h(c^n)` up to `n` by solving `(h ⊗ id)Δ(c^n) = h(c^n)·1`.
    ///
    /// Only the part of `Δ(c^n) = Δ(b^n)Δ(b*^n)` whose left legs have bidegree (0, 0)
    /// can meet a nonzero Haar value, so just those products are formed.
    fn extend_haar(&self, n: u32) -> Result<(), HaarError> {
        if (self.caches.haar.read().values.len() as u32) > n {
            return Ok(());
        }
        let f = &self.f;
        let mut haar = self.caches.haar.write();
        let gb = self.generator_coproduct(Monomial::new(0, 1, 0));
        let gbs = self.generator_coproduct(Monomial::new(0, 0, 1));
        while (haar.values.len() as u32) <= n {
            let k = haar.values.len() as u32;
            let (db, dbs) = match haar.last.take() {
                Some((db, dbs)) => (self.tensor_mul(&db, &gb), self.tensor_mul(&dbs, &gbs)),
                None => (
                    (*self.coproduct_monomial(Monomial::new(0, k, 0))).clone(),
                    (*self.coproduct_monomial(Monomial::new(0, 0, k))).clone(),
                ),
            };
            // α_μ h_k + β_μ = 0 for every right-leg monomial μ
            let mut alpha: BTreeMap<Monomial, F::E> = BTreeMap::new();
            let mut beta: BTreeMap<Monomial, F::E> = BTreeMap::new();
            for ((xl, xr), cx) in &db.terms {
                for ((yl, yr), cy) in &dbs.terms {
                    if xl.a + yl.a != 0 || xl.b + yl.b != xl.bs + yl.bs {
                        continue;
                    }
                    let c = f.mul(cx, cy);
                    let right = self.mul_monomials(*xr, *yr);
                    for (l, cl) in self.mul_monomials(*xl, *yl) {
                        let clc = f.mul(&cl, &c);
                        for (r, cr) in &right {
                            let v = f.mul(&clc, cr);
                            if l.b == k {
                                accumulate(f, &mut alpha, *r, v);
                            } else {
                                accumulate(f, &mut beta, *r, f.mul(&v, &haar.values[l.b as usize]));
                            }
                        }
                    }
                }
            }
            accumulate(f, &mut alpha, Monomial::ONE, f.neg(&f.one()));
            let (mu, a) = alpha.iter().next().ok_or(HaarError { degree: k })?;
            let b = beta.get(mu).cloned().unwrap_or_else(|| f.zero());
            let hk = f.neg(&f.div(&b, a).ok_or(HaarError { degree: k })?);
            let mut keys: Vec<&Monomial> = alpha.keys().chain(beta.keys()).collect();
            keys.sort();
            keys.dedup();
            for key in keys {
                let a = alpha.get(key).cloned().unwrap_or_else(|| f.zero());
                let b = beta.get(key).cloned().unwrap_or_else(|| f.zero());
                if !f.approx_eq(&f.mul(&a, &hk), &f.neg(&b)) {
                    return Err(HaarError { degree: k });
                }
            }
            haar.values.push(hk);
            haar.last = Some((db, dbs));
        }
        Ok(())
    }

    /// `h(c^n)`.
    pub fn haar_c_pow(&self, n: u32) -> F::E {
        self.extend_haar(n).expect("Haar invariance system");
        self.caches.haar.read().values[n as usize].clone()
    }

    pub fn haar_monomial(&self, m: Monomial) -> F::E {
        if m.a != 0 || m.b != m.bs {
            return self.f.zero();
        }
        self.haar_c_pow(m.b)
    }

    pub fn haar(&self, x: &Element<F::E>) -> F::E {
        let top = x.terms.keys().filter(|m| m.a == 0 && m.b == m.bs).map(|m| m.b).max();
        if let Some(n) = top {
            self.extend_haar(n).expect("Haar invariance system");
        }
        let haar = self.caches.haar.read();
        let mut acc = self.f.zero();
        for (m, c) in &x.terms {
            if m.a == 0 && m.b == m.bs {
                self.f.add_assign(&mut acc, &self.f.mul(c, &haar.values[m.b as usize]));
            }
        }
        acc
    }

    /// `h(x* y)`, linear in the second slot.
    pub fn haar_inner(&self, x: &Element<F::E>, y: &Element<F::E>) -> F::E {
        self.haar(&self.mul(&self.star(x), y))
    }

    /// Fails if the invariance system is inconsistent up to `c^n`.
    pub fn try_prepare_haar(&self, n: u32) -> Result<(), HaarError> {
        self.extend_haar(n)
    }
}
