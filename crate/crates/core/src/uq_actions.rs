//! Left and right actions of U_q(su(2)) on O(SU_q(2)) through the dual pairing.
//!
//! `δ_η(x) = (⟨η,·⟩ ⊗ id)Δ(x)` and `∂_η(x) = (id ⊗ ⟨η,·⟩)Δ(x)`. The pairing is fixed by a
//! [`PairingTable`] of values against the fundamental corepresentation
//! `u = [[a*, −qb], [b*, a]]`, extended to monomials with `Δk = k⊗k`,
//! `Δe = e⊗k + k⁻¹⊗e`, `Δf = f⊗k + k⁻¹⊗f` and, at `q = 1`, `Δh = h⊗1 + 1⊗h`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use spin::RwLock;

use crate::qhopf::{Element, Monomial, SuQ2};
use crate::scalar::Field;

/// Generators of U_q(su(2)) (`H` is the classical `[f, e]`, used only at `q = 1`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Gen {
    K,
    KInv,
    E,
    F,
    H,
}

impl Gen {
    pub const ALL: [Gen; 5] = [Gen::K, Gen::KInv, Gen::E, Gen::F, Gen::H];

    pub fn name(self) -> &'static str {
        match self {
            Gen::K => "k",
            Gen::KInv => "kinv",
            Gen::E => "e",
            Gen::F => "f",
            Gen::H => "h",
        }
    }

    pub fn from_name(s: &str) -> Option<Gen> {
        Gen::ALL.into_iter().find(|g| g.name() == s)
    }
}

/// Named operators built from the actions.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Label {
    Delta1,
    Delta2,
    Delta3,
    Delta4,
    DeltaK,
    DeltaKinv,
    PartialE,
    PartialF,
    PartialK,
}

impl Label {
    pub const ALL: [Label; 9] = [
        Label::Delta1,
        Label::Delta2,
        Label::Delta3,
        Label::Delta4,
        Label::DeltaK,
        Label::DeltaKinv,
        Label::PartialE,
        Label::PartialF,
        Label::PartialK,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Label::Delta1 => "delta1",
            Label::Delta2 => "delta2",
            Label::Delta3 => "delta3",
            Label::Delta4 => "delta4",
            Label::DeltaK => "deltaK",
            Label::DeltaKinv => "deltaKinv",
            Label::PartialE => "partialE",
            Label::PartialF => "partialF",
            Label::PartialK => "partialK",
        }
    }

    pub fn from_name(s: &str) -> Option<Label> {
        Label::ALL.into_iter().find(|l| l.name() == s)
    }
}

/// Values `⟨η, u_ij⟩` for each generator.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingTable<E> {
    pub k: [[E; 2]; 2],
    pub kinv: [[E; 2]; 2],
    pub e: [[E; 2]; 2],
    pub f: [[E; 2]; 2],
    /// Classical limit data, required only when `q = 1`.
    pub h: Option<[[E; 2]; 2]>,
}

impl<E: Clone> PairingTable<E> {
    pub fn get(&self, g: Gen) -> Option<&[[E; 2]; 2]> {
        match g {
            Gen::K => Some(&self.k),
            Gen::KInv => Some(&self.kinv),
            Gen::E => Some(&self.e),
            Gen::F => Some(&self.f),
            Gen::H => self.h.as_ref(),
        }
    }
}

impl<E> PairingTable<E> {
    /// The built-in table.
    pub fn standard<F: Field<E = E>>(f: &F) -> Self {
        let z = || f.zero();
        let one = || f.one();
        PairingTable {
            k: [[f.q_half_pow(-1), z()], [z(), f.q_half_pow(1)]],
            kinv: [[f.q_half_pow(1), z()], [z(), f.q_half_pow(-1)]],
            e: [[z(), one()], [z(), z()]],
            f: [[z(), z()], [one(), z()]],
            h: Some([[f.neg(&one()), z()], [z(), one()]]),
        }
    }
}

/// A table whose induced actions violate a required identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRejected {
    pub check: String,
}

impl fmt::Display for TableRejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pairing table rejected: {}", self.check)
    }
}

/// Input outside O(S_q²) passed to an operation defined only there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotInSphere;

impl fmt::Display for NotInSphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("element has components of nonzero right degree")
    }
}

/// Operator requested that needs data the table does not provide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MissingLimitData;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Side {
    Left,
    Right,
}

type Mat<E> = [[E; 2]; 2];

struct Memo<E> {
    pairing: RwLock<BTreeMap<(Gen, Monomial), E>>,
    action: RwLock<BTreeMap<(Gen, Side, Monomial), Arc<Element<E>>>>,
}

/// The action layer over an algebra context.
#[derive(Clone)]
pub struct Actions<F: Field> {
    alg: SuQ2<F>,
    table: Arc<PairingTable<F::E>>,
    memo: Arc<Memo<F::E>>,
}

impl<F: Field> Actions<F> {
    /// Uses the built-in table.
    pub fn new(alg: SuQ2<F>) -> Self {
        let table = PairingTable::standard(alg.field());
        Self::unchecked(alg, table)
    }

    fn unchecked(alg: SuQ2<F>, table: PairingTable<F::E>) -> Self {
        Actions {
            alg,
            table: Arc::new(table),
            memo: Arc::new(Memo { pairing: RwLock::new(BTreeMap::new()), action: RwLock::new(BTreeMap::new()) }),
        }
    }

    /// Loads a table after checking the identities listed in [`validate`](Self::validate).
    pub fn with_table(alg: SuQ2<F>, table: PairingTable<F::E>) -> Result<Self, TableRejected> {
        let acts = Self::unchecked(alg, table);
        acts.validate(4)?;
        Ok(acts)
    }

    pub fn alg(&self) -> &SuQ2<F> {
        &self.alg
    }

    pub fn table(&self) -> &PairingTable<F::E> {
        &self.table
    }

    fn f(&self) -> &F {
        self.alg.field()
    }

    // --- pairing ------------------------------------------------------------

    /// `⟨η, g⟩` on the generators, ordered `a, a*, b, b*`.
    fn generator_values(&self, g: Gen) -> Option<[F::E; 4]> {
        let f = self.f();
        let t = self.table.get(g)?;
        let b = f.neg(&f.mul(&t[0][1], &f.q_pow(-1)));
        Some([t[1][1].clone(), t[0][0].clone(), b, t[1][0].clone()])
    }

    fn letter_values(&self, g: Gen) -> Option<[Mat<F::E>; 4]> {
        let f = self.f();
        let z = f.zero();
        let eps = [f.one(), f.one(), f.zero(), f.zero()];
        let v = self.generator_values(g)?;
        let mk = |i: usize, lo: &F::E, hi: &F::E| -> Mat<F::E> {
            [[lo.clone(), v[i].clone()], [z.clone(), hi.clone()]]
        };
        Some(match g {
            Gen::K | Gen::KInv => core::array::from_fn(|i| mk(i, &v[i], &v[i])),
            Gen::E | Gen::F => {
                let k = self.generator_values(Gen::K)?;
                let ki = self.generator_values(Gen::KInv)?;
                core::array::from_fn(|i| mk(i, &ki[i], &k[i]))
            }
            Gen::H => core::array::from_fn(|i| mk(i, &eps[i], &eps[i])),
        })
    }

    fn mat_mul(&self, x: &Mat<F::E>, y: &Mat<F::E>) -> Mat<F::E> {
        let f = self.f();
        core::array::from_fn(|i| {
            core::array::from_fn(|j| f.add(&f.mul(&x[i][0], &y[0][j]), &f.mul(&x[i][1], &y[1][j])))
        })
    }

    fn mat_pow(&self, x: &Mat<F::E>, n: u32) -> Mat<F::E> {
        let f = self.f();
        let mut acc = [[f.one(), f.zero()], [f.zero(), f.one()]];
        for _ in 0..n {
            acc = self.mat_mul(&acc, x);
        }
        acc
    }

    /// `⟨η, m⟩` for a normal-ordered monomial, or `None` if the table lacks `η`.
    pub fn pairing_monomial(&self, g: Gen, m: Monomial) -> Option<F::E> {
        if let Some(v) = self.memo.pairing.read().get(&(g, m)) {
            return Some(v.clone());
        }
        let letters = self.letter_values(g)?;
        let a_part = if m.a >= 0 { &letters[0] } else { &letters[1] };
        let mut acc = self.mat_pow(a_part, m.a.unsigned_abs());
        acc = self.mat_mul(&acc, &self.mat_pow(&letters[2], m.b));
        acc = self.mat_mul(&acc, &self.mat_pow(&letters[3], m.bs));
        // characters sit on the diagonal, twisted primitives in the corner
        let v = match g {
            Gen::K | Gen::KInv => acc[0][0].clone(),
            _ => acc[0][1].clone(),
        };
        self.memo.pairing.write().insert((g, m), v.clone());
        Some(v)
    }

    pub fn pairing(&self, g: Gen, x: &Element<F::E>) -> Option<F::E> {
        let f = self.f();
        let mut acc = f.zero();
        for (m, c) in x.iter() {
            f.add_assign(&mut acc, &f.mul(c, &self.pairing_monomial(g, *m)?));
        }
        Some(acc)
    }

    fn action_monomial(&self, g: Gen, side: Side, m: Monomial) -> Option<Arc<Element<F::E>>> {
        if let Some(v) = self.memo.action.read().get(&(g, side, m)) {
            return Some(v.clone());
        }
        self.table.get(g)?;
        let delta = self.alg.coproduct_monomial(m);
        let out = match side {
            Side::Left => self.alg.slice_left(&delta, |l| self.pairing_monomial(g, l).unwrap()),
            Side::Right => self.alg.slice_right(&delta, |r| self.pairing_monomial(g, r).unwrap()),
        };
        let out = Arc::new(out);
        self.memo.action.write().insert((g, side, m), out.clone());
        Some(out)
    }

    fn act(&self, g: Gen, side: Side, x: &Element<F::E>) -> Option<Element<F::E>> {
        let mut parts = Vec::with_capacity(x.len());
        for (m, c) in x.iter() {
            parts.push((c.clone(), self.action_monomial(g, side, *m)?));
        }
        Some(self.alg.combine(parts.iter().map(|(c, e)| (c.clone(), &**e))))
    }

    /// `δ_η(x)`. Panics if the table has no entry for `η`.
    pub fn left_action(&self, g: Gen, x: &Element<F::E>) -> Element<F::E> {
        self.act(g, Side::Left, x).expect("pairing table lacks generator")
    }

    /// `∂_η(x)`. Panics if the table has no entry for `η`.
    pub fn partial_action(&self, g: Gen, x: &Element<F::E>) -> Element<F::E> {
        self.act(g, Side::Right, x).expect("pairing table lacks generator")
    }

    pub fn try_left_action(&self, g: Gen, x: &Element<F::E>) -> Option<Element<F::E>> {
        self.act(g, Side::Left, x)
    }

    // --- derived operators ----------------------------------------------------

    /// Applies a named operator; `δ_3` at `q = 1` needs the classical `h` entry.
    pub fn try_apply(&self, label: Label, x: &Element<F::E>) -> Result<Element<F::E>, MissingLimitData> {
        let f = self.f();
        let s = &self.alg;
        Ok(match label {
            Label::Delta1 => s.scale(&self.left_action(Gen::E, x), &f.q_half_pow(1)),
            Label::Delta2 => s.scale(&self.left_action(Gen::F, x), &f.q_half_pow(-1)),
            Label::Delta3 => {
                if f.is_classical() {
                    let h = self.act(Gen::H, Side::Left, x).ok_or(MissingLimitData)?;
                    s.scale(&h, &f.from_rational(&num_rational::BigRational::new(1.into(), 2.into())))
                } else {
                    let d = s.sub(&self.left_action(Gen::K, x), &self.left_action(Gen::KInv, x));
                    let den = f.sub(&f.q_pow(1), &f.q_pow(-1));
                    s.scale(&d, &f.inv(&den).expect("q ≠ 1"))
                }
            }
            Label::Delta4 => s.neg(&self.try_apply(Label::Delta3, x)?),
            Label::DeltaK => self.left_action(Gen::K, x),
            Label::DeltaKinv => self.left_action(Gen::KInv, x),
            Label::PartialE => self.partial_action(Gen::E, x),
            Label::PartialF => self.partial_action(Gen::F, x),
            Label::PartialK => self.partial_action(Gen::K, x),
        })
    }

    pub fn apply(&self, label: Label, x: &Element<F::E>) -> Element<F::E> {
        self.try_apply(label, x).expect("classical limit data missing from pairing table")
    }

    /// `[[−δ_3(x), δ_2(x)], [δ_1(x), δ_3(x)]]` for `x` in O(S_q²).
    pub fn delta_matrix(&self, x: &Element<F::E>) -> Result<[[Element<F::E>; 2]; 2], NotInSphere> {
        if !x.is_sphere() {
            return Err(NotInSphere);
        }
        let d3 = self.apply(Label::Delta3, x);
        Ok([
            [self.alg.neg(&d3), self.apply(Label::Delta2, x)],
            [self.apply(Label::Delta1, x), d3],
        ])
    }

    /// Symbols `(q^(1/2) ∂_e(x), q^(−1/2) ∂_f(x))` of the Dirac commutator components.
    pub fn dirac_components(&self, x: &Element<F::E>) -> Result<(Element<F::E>, Element<F::E>), NotInSphere> {
        if !x.is_sphere() {
            return Err(NotInSphere);
        }
        let f = self.f();
        Ok((
            self.alg.scale(&self.partial_action(Gen::E, x), &f.q_half_pow(1)),
            self.alg.scale(&self.partial_action(Gen::F, x), &f.q_half_pow(-1)),
        ))
    }

    /// `u · [[0, ∂_2(x)], [∂_1(x), 0]] · u*` computed in the algebra.
    pub fn conjugated_dirac(&self, x: &Element<F::E>) -> Result<[[Element<F::E>; 2]; 2], NotInSphere> {
        let (p1, p2) = self.dirac_components(x)?;
        let s = &self.alg;
        let u = s.fundamental();
        let ustar: [[Element<F::E>; 2]; 2] =
            core::array::from_fn(|i| core::array::from_fn(|j| s.star(&u[j][i])));
        let z = s.zero();
        let d = [[z.clone(), p2], [p1, z]];
        let mm = |x: &[[Element<F::E>; 2]; 2], y: &[[Element<F::E>; 2]; 2]| -> [[Element<F::E>; 2]; 2] {
            core::array::from_fn(|i| {
                core::array::from_fn(|j| s.add(&s.mul(&x[i][0], &y[0][j]), &s.mul(&x[i][1], &y[1][j])))
            })
        };
        Ok(mm(&mm(&u, &d), &ustar))
    }

    // --- modular theory -------------------------------------------------------

    /// `ν = δ_{k⁻²} ∘ ∂_{k⁻²}` (`half = false`) or `ν^(1/2) = ∂_{k⁻¹} ∘ δ_{k⁻¹}` (`half = true`).
    pub fn modular(&self, x: &Element<F::E>, half: bool) -> Element<F::E> {
        let once = |y: &Element<F::E>| {
            self.partial_action(Gen::KInv, &self.left_action(Gen::KInv, y))
        };
        if half {
            once(x)
        } else {
            once(&once(x))
        }
    }

    /// `ν^(−1/2) = ∂_k ∘ δ_k`.
    pub fn modular_inverse_half(&self, x: &Element<F::E>) -> Element<F::E> {
        self.partial_action(Gen::K, &self.left_action(Gen::K, x))
    }

    // --- validation -----------------------------------------------------------

    /// Symbolic checks on every monomial (pair) up to `degree`: twisted Leibniz,
    /// star compatibility, Haar annihilation, `∂_k` weights, `δ_k` automorphism and
    /// `δ(x) = u ∂(x) u*`.
    pub fn validate(&self, degree: u32) -> Result<(), TableRejected> {
        let s = &self.alg;
        let f = self.f();
        let reject = |what: &str| Err(TableRejected { check: what.into() });
        if f.is_classical() && self.table.h.is_none() {
            return reject("classical limit entry h missing");
        }
        let mons = Monomial::all_up_to(degree);
        let small = Monomial::all_up_to(degree / 2);
        let derivs = [Label::Delta1, Label::Delta2, Label::Delta3];
        let dk = |x: &Element<F::E>| self.left_action(Gen::K, x);
        let dki = |x: &Element<F::E>| self.left_action(Gen::KInv, x);
        for &mx in &small {
            let x = s.monomial(mx);
            for &my in &small {
                let y = s.monomial(my);
                let xy = s.mul(&x, &y);
                if !s.eq(&dk(&xy), &s.mul(&dk(&x), &dk(&y))) {
                    return reject("δ_k multiplicative");
                }
                for l in derivs {
                    let lhs = self.apply(l, &xy);
                    let rhs = s.add(
                        &s.mul(&self.apply(l, &x), &dk(&y)),
                        &s.mul(&dki(&x), &self.apply(l, &y)),
                    );
                    if !s.eq(&lhs, &rhs) {
                        return reject("twisted Leibniz rule");
                    }
                }
            }
        }
        for &m in &mons {
            let x = s.monomial(m);
            let xs = s.star(&x);
            let d1s = self.apply(Label::Delta1, &xs);
            if !s.eq(&d1s, &s.neg(&s.star(&self.apply(Label::Delta2, &x)))) {
                return reject("δ_1(x*) = −δ_2(x)*");
            }
            let d3s = self.apply(Label::Delta3, &xs);
            if !s.eq(&d3s, &s.neg(&s.star(&self.apply(Label::Delta3, &x)))) {
                return reject("δ_3(x*) = −δ_3(x)*");
            }
            for l in derivs {
                if !f.is_zero(&s.haar(&self.apply(l, &x))) {
                    return reject("h ∘ δ_i = 0");
                }
            }
            if !f.is_zero(&f.sub(&s.haar(&dk(&x)), &s.haar(&x))) {
                return reject("h ∘ δ_k = h");
            }
            if !f.is_classical() {
                let w = s.scale(&x, &f.q_half_pow(m.right_degree()));
                if !s.eq(&self.partial_action(Gen::K, &x), &w) {
                    return reject("∂_k weight q^(n/2) on right degree n");
                }
            }
            if m.right_degree() == 0 {
                let d = self.delta_matrix(&x).expect("sphere monomial");
                let c = self.conjugated_dirac(&x).expect("sphere monomial");
                for i in 0..2 {
                    for j in 0..2 {
                        if !s.eq(&d[i][j], &c[i][j]) {
                            return reject("δ(x) = u ∂(x) u*");
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn acts() -> Actions<Exact> {
        Actions::new(SuQ2::new(Exact::from_ratio(1, 2)))
    }

    #[test]
    fn k_weights_on_generators() {
        let t = acts();
        let s = t.alg();
        let f = s.field();
        assert_eq!(t.partial_action(Gen::K, &s.a()), s.scale(&s.a(), &f.q_half_pow(1)));
        assert_eq!(t.partial_action(Gen::K, &s.big_a()), s.big_a());
        assert_eq!(t.left_action(Gen::K, &s.one()), s.one());
        assert!(t.left_action(Gen::E, &s.one()).is_zero());
        assert!(t.partial_action(Gen::F, &s.one()).is_zero());
    }

    #[test]
    fn standard_table_passes_validation() {
        let t = acts();
        assert_eq!(t.validate(4), Ok(()));
        let c = Actions::new(SuQ2::new(Exact::from_ratio(1, 1)));
        assert_eq!(c.validate(4), Ok(()));
    }

    #[test]
    fn corrupted_table_is_rejected() {
        let s = SuQ2::new(Exact::from_ratio(1, 2));
        let f = s.field().clone();
        let mut table = PairingTable::standard(&f);
        table.e[0][1] = f.from_i64(2);
        assert!(Actions::with_table(s.clone(), table).is_err());
        let mut table = PairingTable::standard(&f);
        table.k[0][0] = f.one();
        assert!(Actions::with_table(s, table).is_err());
    }
}
