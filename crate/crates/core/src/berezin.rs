//! The quantum Berezin transform `β_N = (1 ⊗ h_N)Δ` and its spin-layer spectrum.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use spin::RwLock;

use crate::gns::{self, FuzzyBasis, GnsError, Ordering};
use crate::qhopf::{Element, Monomial, SuQ2};
use crate::random::sphere_degree;
use crate::scalar::Field;
use crate::specnorm::{lip_norm, NormEstimate, NormOptions};
use crate::uq_actions::Actions;

#[derive(Clone, Debug, PartialEq)]
pub enum BerezinError {
    NotInSphere,
    /// `β_N` is not a scalar on some spin layer.
    InconsistentLayer { n: u32, spin: u32, weight: i64 },
    Basis(GnsError),
}

impl fmt::Display for BerezinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BerezinError::NotInSphere => f.write_str("element has components of nonzero right degree"),
            BerezinError::InconsistentLayer { n, spin, weight } => write!(
                f,
                "beta_{n} does not act by a scalar on spin {spin} (weight {weight} disagrees)"
            ),
            BerezinError::Basis(e) => write!(f, "{e}"),
        }
    }
}

impl From<GnsError> for BerezinError {
    fn from(e: GnsError) -> Self {
        BerezinError::Basis(e)
    }
}

/// Both sides of `L((φ_{ξ,ζ} ⊗ 1)Δ(x)) ≤ ‖ξ‖‖ζ‖ L(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceCheck<E> {
    pub slice: Element<E>,
    pub lip_of_slice: NormEstimate,
    pub lip_x: NormEstimate,
    pub xi_norm: f64,
    pub zeta_norm: f64,
    /// `‖ξ‖‖ζ‖ · L(x)` from the lower bound of `L(x)`.
    pub bound: f64,
    /// Both norm estimates converged.
    pub converged: bool,
}

impl<E> SliceCheck<E> {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lip_of_slice.lower <= self.bound * (1.0 + rel_tol) + 1e-12
    }
}

/// `c_{N,n}` for `n = 0..=max_spin`.
#[derive(Clone, Debug, PartialEq)]
pub struct BerezinSpectrum<E> {
    pub n: u32,
    pub eigenvalues: Vec<E>,
}

struct Caches<E> {
    h_n: RwLock<BTreeMap<(u32, Monomial), E>>,
    spectrum: RwLock<BTreeMap<u32, BerezinSpectrum<E>>>,
    basis: RwLock<Option<FuzzyBasis<E>>>,
}

/// Berezin transforms over one algebra context, with per-level caches.
#[derive(Clone)]
pub struct Berezin<F: Field> {
    alg: SuQ2<F>,
    caches: Arc<Caches<F::E>>,
}

impl<F: Field> Berezin<F> {
    pub fn new(alg: SuQ2<F>) -> Self {
        Berezin {
            alg,
            caches: Arc::new(Caches {
                h_n: RwLock::new(BTreeMap::new()),
                spectrum: RwLock::new(BTreeMap::new()),
                basis: RwLock::new(None),
            }),
        }
    }

    pub fn alg(&self) -> &SuQ2<F> {
        &self.alg
    }

    /// `⟨N+1⟩ = Σ_{k=0}^{N} q^{2k}`.
    pub fn q_number(&self, n: u32) -> F::E {
        let f = self.alg.field();
        let mut acc = f.zero();
        for k in 0..=n as i64 {
            f.add_assign(&mut acc, &f.q_pow(2 * k));
        }
        acc
    }

    pub fn h_n_monomial(&self, m: Monomial, n: u32) -> F::E {
        if let Some(v) = self.caches.h_n.read().get(&(n, m)) {
            return v.clone();
        }
        let s = &self.alg;
        let f = s.field();
        let v = if m.a != 0 || m.b != m.bs {
            // a*^N m a^N keeps the bidegree of m
            f.zero()
        } else {
            let an = s.pow(&s.a(), n);
            let asn = s.pow(&s.a_star(), n);
            let y = s.mul(&s.mul(&asn, &s.monomial(m)), &an);
            f.mul(&self.q_number(n), &s.haar(&y))
        };
        self.caches.h_n.write().insert((n, m), v.clone());
        v
    }

    /// `h_N(x) = ⟨N+1⟩ h(a*^N x a^N)`; `h_0 = h`.
    pub fn h_n(&self, x: &Element<F::E>, n: u32) -> F::E {
        let f = self.alg.field();
        let mut acc = f.zero();
        for (m, c) in x.iter() {
            f.add_assign(&mut acc, &f.mul(c, &self.h_n_monomial(*m, n)));
        }
        acc
    }

    /// `β_N(x) = (1 ⊗ h_N)Δ(x)`.
    pub fn via_coproduct(&self, x: &Element<F::E>, n: u32) -> Result<Element<F::E>, BerezinError> {
        if !x.is_sphere() {
            return Err(BerezinError::NotInSphere);
        }
        let s = &self.alg;
        let f = s.field();
        let mut acc = s.zero();
        for (m, c) in x.iter() {
            let d = s.coproduct_monomial(*m);
            let part = s.slice_right(&d, |r| self.h_n_monomial(r, n));
            acc = s.combine([(f.one(), &acc), (c.clone(), &part)]);
        }
        Ok(acc)
    }

    /// Ascending fuzzy basis of level at least `level`, cached.
    pub fn basis(&self, level: u32) -> Result<FuzzyBasis<F::E>, BerezinError> {
        if let Some(b) = self.caches.basis.read().as_ref() {
            if b.level >= level {
                return Ok(b.truncate(level));
            }
        }
        let b = gns::build_fuzzy_basis(&self.alg, level, Ordering::SpinAscending)?;
        *self.caches.basis.write() = Some(b.clone());
        Ok(b)
    }

    /// Installs a precomputed ascending basis (e.g. loaded from a cache) if it is larger
    /// than the cached one. Returns false for a basis in the wrong ordering.
    pub fn seed_basis(&self, b: FuzzyBasis<F::E>) -> bool {
        if b.ordering != Ordering::SpinAscending {
            return false;
        }
        let mut slot = self.caches.basis.write();
        if slot.as_ref().map_or(true, |c| c.level < b.level) {
            *slot = Some(b);
        }
        true
    }

    /// Computes `c_{N,n}` for `n ≤ max_spin` from `β_N` on every basis vector, checking that
    /// each layer is an eigenspace.
    pub fn spectrum(&self, n: u32, max_spin: u32) -> Result<BerezinSpectrum<F::E>, BerezinError> {
        if let Some(sp) = self.caches.spectrum.read().get(&n) {
            if sp.eigenvalues.len() > max_spin as usize {
                let mut sp = sp.clone();
                sp.eigenvalues.truncate(max_spin as usize + 1);
                return Ok(sp);
            }
        }
        let s = &self.alg;
        let f = s.field();
        let basis = self.basis(max_spin)?;
        let mut eigenvalues = Vec::new();
        for spin in 0..=max_spin {
            let mut layer_value: Option<F::E> = None;
            for v in basis.vectors.iter().filter(|v| v.spin == spin) {
                let image = self.via_coproduct(&v.element, n)?;
                let c = f.div(&s.haar_inner(&v.element, &image), &v.norm2).expect("nonzero norm");
                let rest = s.sub(&image, &s.scale(&v.element, &c));
                let consistent = match &layer_value {
                    None => true,
                    Some(prev) => f.is_zero(&f.sub(prev, &c)),
                };
                if !rest.is_zero() || !consistent {
                    return Err(BerezinError::InconsistentLayer { n, spin, weight: v.weight });
                }
                layer_value.get_or_insert(c);
            }
            eigenvalues.push(layer_value.expect("nonempty layer"));
        }
        let sp = BerezinSpectrum { n, eigenvalues };
        self.caches.spectrum.write().insert(n, sp.clone());
        Ok(sp)
    }

    /// `c_{N,n}`, zero beyond `n > N`.
    pub fn eigenvalue(&self, n: u32, spin: u32) -> Result<F::E, BerezinError> {
        if spin > n {
            return Ok(self.alg.field().zero());
        }
        Ok(self.spectrum(n, n)?.eigenvalues[spin as usize].clone())
    }

    /// `β_N` through the spin-layer decomposition scaled by `c_{N,n}`.
    pub fn via_spectrum(&self, x: &Element<F::E>, n: u32) -> Result<Element<F::E>, BerezinError> {
        if !x.is_sphere() {
            return Err(BerezinError::NotInSphere);
        }
        let s = &self.alg;
        let top = x.iter().map(|(m, _)| sphere_degree(*m)).max().unwrap_or(0);
        let basis = self.basis(top)?;
        let layers = gns::spin_layers(s, &basis, x)?;
        let mut acc = s.zero();
        for (spin, part) in layers {
            if spin > n {
                continue;
            }
            let c = self.eigenvalue(n, spin)?;
            acc = s.add(&acc, &s.scale(&part, &c));
        }
        Ok(acc)
    }

    /// `(φ_{ξ,ζ} ⊗ 1)Δ(x)` with `φ_{ξ,ζ}(z) = h(ξ* z ζ)`.
    pub fn slice(&self, x: &Element<F::E>, xi: &Element<F::E>, zeta: &Element<F::E>) -> Element<F::E> {
        let s = &self.alg;
        let xis = s.star(xi);
        let mut memo: BTreeMap<Monomial, F::E> = BTreeMap::new();
        let d = s.coproduct(x);
        s.slice_left(&d, |m| {
            memo.entry(m)
                .or_insert_with(|| s.haar(&s.mul(&s.mul(&xis, &s.monomial(m)), zeta)))
                .clone()
        })
    }

    /// Slices `x` with `φ_{ξ,ζ}` and compares Lip-norm lower bounds.
    pub fn slice_lip_check(
        &self,
        acts: &Actions<F>,
        x: &Element<F::E>,
        xi: &Element<F::E>,
        zeta: &Element<F::E>,
        opts: &NormOptions,
    ) -> Result<SliceCheck<F::E>, BerezinError> {
        if !x.is_sphere() {
            return Err(BerezinError::NotInSphere);
        }
        let s = &self.alg;
        let f = s.field();
        let slice = self.slice(x, xi, zeta);
        let lip_of_slice = lip_norm(acts, &slice, opts).map_err(|_| BerezinError::NotInSphere)?.value;
        let lip_x = lip_norm(acts, x, opts).map_err(|_| BerezinError::NotInSphere)?.value;
        let l2 = |v: &Element<F::E>| libm::sqrt(f.to_c64(&s.haar_inner(v, v)).re.max(0.0));
        let (xi_norm, zeta_norm) = (l2(xi), l2(zeta));
        Ok(SliceCheck {
            converged: lip_of_slice.converged && lip_x.converged,
            bound: xi_norm * zeta_norm * lip_x.lower,
            slice,
            lip_of_slice,
            lip_x,
            xi_norm,
            zeta_norm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    #[test]
    fn unital_and_spectrum_edges() {
        let b = Berezin::new(SuQ2::new(Exact::from_ratio(1, 2)));
        let s = b.alg().clone();
        let f = s.field();
        for n in 0..4 {
            assert_eq!(b.h_n(&s.one(), n), f.one());
            assert_eq!(b.via_coproduct(&s.one(), n).unwrap(), s.one());
        }
        let sp = b.spectrum(2, 3).unwrap();
        assert_eq!(sp.eigenvalues[0], f.one());
        assert_eq!(sp.eigenvalues[3], f.zero());
    }
}
