//! Scalar fields.
//!
//! Every algebraic routine is generic over a [`Field`] context. Two are provided:
//! [`Exact`] works in Q(i)(√q) for rational `q` and never rounds, [`Float`] carries
//! complex numbers with a fixed number of significant decimal digits.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use core::fmt;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use spin::RwLock;

pub type Real = FBig<HalfEven, 2>;

/// Arithmetic context for the coefficient field.
pub trait Field: Clone + Send + Sync + 'static {
    type E: Clone + PartialEq + fmt::Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn from_i64(&self, n: i64) -> Self::E;
    fn from_rational(&self, r: &BigRational) -> Self::E;
    fn from_complex_rational(&self, re: &BigRational, im: &BigRational) -> Self::E;
    /// Best representable approximation of a double-precision complex number.
    fn from_c64(&self, z: Complex64) -> Self::E;
    fn imag_unit(&self) -> Self::E;

    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn sub(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn neg(&self, a: &Self::E) -> Self::E;
    fn conj(&self, a: &Self::E) -> Self::E;
    fn inv(&self, a: &Self::E) -> Option<Self::E>;
    fn is_zero(&self, a: &Self::E) -> bool;

    fn add_assign(&self, a: &mut Self::E, b: &Self::E) {
        *a = self.add(a, b);
    }

    fn div(&self, a: &Self::E, b: &Self::E) -> Option<Self::E> {
        self.inv(b).map(|bi| self.mul(a, &bi))
    }

    /// Equality up to the working precision, relative to the operand sizes.
    fn approx_eq(&self, a: &Self::E, b: &Self::E) -> bool {
        self.is_zero(&self.sub(a, b))
    }

    fn is_one(&self, a: &Self::E) -> bool {
        self.is_zero(&self.sub(a, &self.one()))
    }

    /// `q^(k/2)`.
    fn q_half_pow(&self, k: i64) -> Self::E;

    fn q_pow(&self, k: i64) -> Self::E {
        self.q_half_pow(2 * k)
    }

    fn to_c64(&self, a: &Self::E) -> Complex64;

    fn abs_f64(&self, a: &Self::E) -> f64 {
        self.to_c64(a).norm()
    }

    fn is_exact(&self) -> bool;
    fn q_f64(&self) -> f64;
    /// True when `q = 1`, where the algebra is commutative.
    fn is_classical(&self) -> bool;
    /// Decimal digits carried (`None` in exact mode).
    fn precision(&self) -> Option<usize>;
    /// Human readable rendering of `q`.
    fn q_string(&self) -> String;
}

// ---------------------------------------------------------------------------
// Exact mode

/// Gaussian rational `re + i·im`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gauss {
    pub fn zero() -> Self {
        Gauss { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn real(re: BigRational) -> Self {
        Gauss { re, im: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn add(&self, o: &Gauss) -> Gauss {
        Gauss { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn sub(&self, o: &Gauss) -> Gauss {
        Gauss { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    fn neg(&self) -> Gauss {
        Gauss { re: -&self.re, im: -&self.im }
    }

    fn conj(&self) -> Gauss {
        Gauss { re: self.re.clone(), im: -&self.im }
    }

    fn mul(&self, o: &Gauss) -> Gauss {
        if self.is_zero() || o.is_zero() {
            return Gauss::zero();
        }
        if self.im.is_zero() && o.im.is_zero() {
            return Gauss::real(&self.re * &o.re);
        }
        Gauss {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn scale(&self, r: &BigRational) -> Gauss {
        Gauss { re: &self.re * r, im: &self.im * r }
    }

    fn inv(&self) -> Option<Gauss> {
        if self.is_zero() {
            return None;
        }
        let n = &self.re * &self.re + &self.im * &self.im;
        Some(Gauss { re: &self.re / &n, im: -&self.im / &n })
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Element `r + √q·s` of Q(i)(√q), with `r`, `s` Gaussian rationals.
///
/// When `q` is the square of a rational the `s` part is always zero.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct QNum {
    pub r: Gauss,
    pub s: Gauss,
}

impl QNum {
    pub fn rational(x: BigRational) -> Self {
        QNum { r: Gauss::real(x), s: Gauss::zero() }
    }

    /// The value as a rational number, if it is one.
    pub fn as_rational(&self) -> Option<&BigRational> {
        if self.s.is_zero() && self.r.im.is_zero() {
            Some(&self.r.re)
        } else {
            None
        }
    }
}

struct ExactInner {
    q: BigRational,
    root: Option<BigRational>,
    pows: RwLock<BTreeMap<i64, QNum>>,
}

/// Exact arithmetic in Q(i)(√q) for a rational deformation parameter.
#[derive(Clone)]
pub struct Exact {
    inner: Arc<ExactInner>,
}

fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

impl Exact {
    /// Panics unless `0 < q ≤ 1`.
    pub fn new(q: BigRational) -> Self {
        assert!(q.is_positive() && q <= BigRational::one(), "q must lie in (0, 1]");
        let root = rational_sqrt(&q);
        Exact { inner: Arc::new(ExactInner { q, root, pows: RwLock::new(BTreeMap::new()) }) }
    }

    pub fn from_ratio(p: i64, r: i64) -> Self {
        Self::new(BigRational::new(BigInt::from(p), BigInt::from(r)))
    }

    pub fn q(&self) -> &BigRational {
        &self.inner.q
    }

    fn qg(&self) -> &BigRational {
        &self.inner.q
    }

    fn compute_half_pow(&self, k: i64) -> QNum {
        let q = self.qg();
        if let Some(root) = &self.inner.root {
            return QNum::rational(num_traits::pow::Pow::pow(root, k as i32));
        }
        let half = k.div_euclid(2);
        let base: BigRational = num_traits::pow::Pow::pow(q, half as i32);
        if k.rem_euclid(2) == 0 {
            QNum::rational(base)
        } else {
            QNum { r: Gauss::zero(), s: Gauss::real(base) }
        }
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exact(q = {})", self.inner.q)
    }
}

impl Field for Exact {
    type E = QNum;

    fn zero(&self) -> QNum {
        QNum::default()
    }

    fn one(&self) -> QNum {
        QNum::rational(BigRational::one())
    }

    fn from_i64(&self, n: i64) -> QNum {
        QNum::rational(BigRational::from_integer(BigInt::from(n)))
    }

    fn from_rational(&self, r: &BigRational) -> QNum {
        QNum::rational(r.clone())
    }

    fn from_complex_rational(&self, re: &BigRational, im: &BigRational) -> QNum {
        QNum { r: Gauss { re: re.clone(), im: im.clone() }, s: Gauss::zero() }
    }

    fn from_c64(&self, z: Complex64) -> QNum {
        let conv = |x: f64| BigRational::from_float(x).unwrap_or_else(BigRational::zero);
        QNum { r: Gauss { re: conv(z.re), im: conv(z.im) }, s: Gauss::zero() }
    }

    fn imag_unit(&self) -> QNum {
        QNum { r: Gauss { re: BigRational::zero(), im: BigRational::one() }, s: Gauss::zero() }
    }

    fn add(&self, a: &QNum, b: &QNum) -> QNum {
        QNum { r: a.r.add(&b.r), s: a.s.add(&b.s) }
    }

    fn add_assign(&self, a: &mut QNum, b: &QNum) {
        if !b.r.re.is_zero() {
            a.r.re += &b.r.re;
        }
        if !b.r.im.is_zero() {
            a.r.im += &b.r.im;
        }
        if !b.s.is_zero() {
            a.s.re += &b.s.re;
            a.s.im += &b.s.im;
        }
    }

    fn sub(&self, a: &QNum, b: &QNum) -> QNum {
        QNum { r: a.r.sub(&b.r), s: a.s.sub(&b.s) }
    }

    fn mul(&self, a: &QNum, b: &QNum) -> QNum {
        if a.s.is_zero() && b.s.is_zero() {
            return QNum { r: a.r.mul(&b.r), s: Gauss::zero() };
        }
        let ss = a.s.mul(&b.s).scale(self.qg());
        QNum { r: a.r.mul(&b.r).add(&ss), s: a.r.mul(&b.s).add(&a.s.mul(&b.r)) }
    }

    fn neg(&self, a: &QNum) -> QNum {
        QNum { r: a.r.neg(), s: a.s.neg() }
    }

    fn conj(&self, a: &QNum) -> QNum {
        QNum { r: a.r.conj(), s: a.s.conj() }
    }

    fn inv(&self, a: &QNum) -> Option<QNum> {
        if a.s.is_zero() {
            return a.r.inv().map(|r| QNum { r, s: Gauss::zero() });
        }
        // (r + √q s)⁻¹ = (r − √q s) / (r² − q s²)
        let norm = a.r.mul(&a.r).sub(&a.s.mul(&a.s).scale(self.qg()));
        let ni = norm.inv()?;
        Some(QNum { r: a.r.mul(&ni), s: a.s.neg().mul(&ni) })
    }

    fn is_zero(&self, a: &QNum) -> bool {
        a.r.is_zero() && a.s.is_zero()
    }

    fn q_half_pow(&self, k: i64) -> QNum {
        if let Some(v) = self.inner.pows.read().get(&k) {
            return v.clone();
        }
        let v = self.compute_half_pow(k);
        self.inner.pows.write().insert(k, v.clone());
        v
    }

    fn to_c64(&self, a: &QNum) -> Complex64 {
        let sq = libm::sqrt(self.q_f64());
        a.r.to_c64() + a.s.to_c64() * sq
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn q_f64(&self) -> f64 {
        self.inner.q.to_f64().unwrap_or(f64::NAN)
    }

    fn is_classical(&self) -> bool {
        self.inner.q.is_one()
    }

    fn precision(&self) -> Option<usize> {
        None
    }

    fn q_string(&self) -> String {
        self.inner.q.to_string()
    }
}

// ---------------------------------------------------------------------------
// Float mode

/// Complex number with arbitrary-precision binary floating point parts.
#[derive(Clone, PartialEq, Debug)]
pub struct CBig {
    pub re: Real,
    pub im: Real,
}

struct FloatInner {
    q: Real,
    sqrt_q: Real,
    digits: usize,
    bits: usize,
    eps: f64,
    pows: RwLock<BTreeMap<i64, CBig>>,
}

/// Complex arithmetic with a fixed number of significant decimal digits.
#[derive(Clone)]
pub struct Float {
    inner: Arc<FloatInner>,
}

pub(crate) fn bigint_to_ibig(n: &BigInt) -> IBig {
    n.to_string().parse::<IBig>().expect("decimal integer")
}

impl Float {
    /// `q` given as a decimal or rational string is rounded once to the working precision.
    pub fn new(q: &BigRational, digits: usize) -> Self {
        assert!(q.is_positive() && *q <= BigRational::one(), "q must lie in (0, 1]");
        let digits = digits.max(17);
        let bits = libm::ceil(digits as f64 * 3.3219280948873626) as usize + 8;
        let num = Real::from(bigint_to_ibig(q.numer())).with_precision(bits).value();
        let den = Real::from(bigint_to_ibig(q.denom())).with_precision(bits).value();
        let qv = num / den;
        let sqrt_q = dashu_base::SquareRoot::sqrt(&qv);
        let eps = libm::pow(10.0, -((digits as f64) - 6.0));
        Float {
            inner: Arc::new(FloatInner {
                q: qv,
                sqrt_q,
                digits,
                bits,
                eps,
                pows: RwLock::new(BTreeMap::new()),
            }),
        }
    }

    pub fn digits(&self) -> usize {
        self.inner.digits
    }

    fn real_int(&self, n: &BigInt) -> Real {
        Real::from(bigint_to_ibig(n)).with_precision(self.inner.bits).value()
    }

    fn real_ratio(&self, r: &BigRational) -> Real {
        self.real_int(r.numer()) / self.real_int(r.denom())
    }

    fn real_zero(&self) -> Real {
        Real::ZERO.with_precision(self.inner.bits).value()
    }

    fn real_f64(&self, x: f64) -> Real {
        match Real::try_from(x) {
            Ok(v) => v.with_precision(self.inner.bits).value(),
            Err(_) => self.real_zero(),
        }
    }

    /// Decimal rendering of a real part with the session precision.
    pub fn real_to_string(&self, x: &Real) -> String {
        let d = x.to_decimal().value();
        let d = d.with_precision(self.inner.digits).value();
        d.to_string()
    }
}

impl fmt::Debug for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Float(q ≈ {}, digits = {})", self.q_f64(), self.inner.digits)
    }
}

fn real_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

impl Field for Float {
    type E = CBig;

    fn zero(&self) -> CBig {
        CBig { re: self.real_zero(), im: self.real_zero() }
    }

    fn one(&self) -> CBig {
        self.from_i64(1)
    }

    fn from_i64(&self, n: i64) -> CBig {
        CBig { re: self.real_int(&BigInt::from(n)), im: self.real_zero() }
    }

    fn from_rational(&self, r: &BigRational) -> CBig {
        CBig { re: self.real_ratio(r), im: self.real_zero() }
    }

    fn from_complex_rational(&self, re: &BigRational, im: &BigRational) -> CBig {
        CBig { re: self.real_ratio(re), im: self.real_ratio(im) }
    }

    fn from_c64(&self, z: Complex64) -> CBig {
        CBig { re: self.real_f64(z.re), im: self.real_f64(z.im) }
    }

    fn imag_unit(&self) -> CBig {
        CBig { re: self.real_zero(), im: self.real_int(&BigInt::from(1)) }
    }

    fn add(&self, a: &CBig, b: &CBig) -> CBig {
        CBig { re: &a.re + &b.re, im: &a.im + &b.im }
    }

    fn sub(&self, a: &CBig, b: &CBig) -> CBig {
        CBig { re: &a.re - &b.re, im: &a.im - &b.im }
    }

    fn mul(&self, a: &CBig, b: &CBig) -> CBig {
        CBig { re: &a.re * &b.re - &a.im * &b.im, im: &a.re * &b.im + &a.im * &b.re }
    }

    fn neg(&self, a: &CBig) -> CBig {
        CBig { re: -&a.re, im: -&a.im }
    }

    fn conj(&self, a: &CBig) -> CBig {
        CBig { re: a.re.clone(), im: -&a.im }
    }

    fn inv(&self, a: &CBig) -> Option<CBig> {
        if self.is_zero(a) {
            return None;
        }
        let n = &a.re * &a.re + &a.im * &a.im;
        Some(CBig { re: &a.re / &n, im: -&a.im / &n })
    }

    fn is_zero(&self, a: &CBig) -> bool {
        real_f64(&a.re).abs() < self.inner.eps && real_f64(&a.im).abs() < self.inner.eps
    }

    fn approx_eq(&self, a: &CBig, b: &CBig) -> bool {
        let scale = 1.0f64.max(self.abs_f64(a)).max(self.abs_f64(b));
        let d = self.sub(a, b);
        self.abs_f64(&d) <= self.inner.eps * scale
    }

    fn q_half_pow(&self, k: i64) -> CBig {
        if let Some(v) = self.inner.pows.read().get(&k) {
            return v.clone();
        }
        let v = CBig { re: self.inner.sqrt_q.powi(IBig::from(k)), im: self.real_zero() };
        self.inner.pows.write().insert(k, v.clone());
        v
    }

    fn to_c64(&self, a: &CBig) -> Complex64 {
        Complex64::new(real_f64(&a.re), real_f64(&a.im))
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn q_f64(&self) -> f64 {
        real_f64(&self.inner.q)
    }

    fn is_classical(&self) -> bool {
        (self.q_f64() - 1.0).abs() < self.inner.eps
    }

    fn precision(&self) -> Option<usize> {
        Some(self.inner.digits)
    }

    fn q_string(&self) -> String {
        self.real_to_string(&self.inner.q)
    }
}

/// Parses `p/r`, an integer, or a decimal literal into a rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, r)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let r: BigInt = r.trim().parse().ok()?;
        if r.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, r));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        if !ip.chars().all(|c| c.is_ascii_digit()) || !fp.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        if ip.is_empty() && fp.is_empty() {
            return None;
        }
        let mut digits = String::from(ip);
        digits.push_str(fp);
        let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
        let d = num_traits::pow::Pow::pow(BigInt::from(10), fp.len() as u32);
        let v = BigRational::new(n, d);
        return Some(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().ok()?;
    Some(BigRational::from_integer(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, r: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(r))
    }

    #[test]
    fn sqrt_q_squares_to_q() {
        let f = Exact::from_ratio(1, 2);
        let s = f.q_half_pow(1);
        assert!(s.as_rational().is_none());
        assert_eq!(f.mul(&s, &s), f.from_rational(&rat(1, 2)));
        assert_eq!(f.mul(&f.q_half_pow(3), &f.q_half_pow(-1)), f.from_rational(&rat(1, 2)));
    }

    #[test]
    fn perfect_square_q_stays_rational() {
        let f = Exact::from_ratio(4, 9);
        assert_eq!(f.q_half_pow(1), f.from_rational(&rat(2, 3)));
        assert_eq!(f.q_half_pow(-3), f.from_rational(&rat(27, 8)));
    }

    #[test]
    fn exact_inverse_with_root_part() {
        let f = Exact::from_ratio(1, 2);
        let x = f.add(&f.from_i64(3), &f.mul(&f.imag_unit(), &f.q_half_pow(1)));
        let y = f.inv(&x).unwrap();
        assert_eq!(f.mul(&x, &y), f.one());
        assert!(f.inv(&f.zero()).is_none());
    }

    #[test]
    fn float_mode_agrees_with_exact() {
        let e = Exact::from_ratio(3, 5);
        let fl = Float::new(&rat(3, 5), 50);
        for k in -5..6 {
            let a = e.to_c64(&e.q_half_pow(k));
            let b = fl.to_c64(&fl.q_half_pow(k));
            assert!((a - b).norm() < 1e-14 * a.norm());
        }
        let x = fl.from_complex_rational(&rat(1, 3), &rat(-2, 7));
        let y = fl.inv(&x).unwrap();
        assert!(fl.is_one(&fl.mul(&x, &y)));
        assert!(!fl.is_zero(&fl.sub(&x, &fl.conj(&x))));
    }

    #[test]
    fn float_precision_exceeds_double() {
        let fl = Float::new(&rat(1, 3), 50);
        let third = fl.from_rational(&rat(1, 3));
        let three = fl.from_i64(3);
        let diff = fl.sub(&fl.mul(&third, &three), &fl.one());
        assert!(fl.abs_f64(&diff) < 1e-45);
    }

    #[test]
    fn parses_rational_literals() {
        assert_eq!(parse_rational("1/2"), Some(rat(1, 2)));
        assert_eq!(parse_rational(" 9/10 "), Some(rat(9, 10)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational("-3"), Some(rat(-3, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }
}
