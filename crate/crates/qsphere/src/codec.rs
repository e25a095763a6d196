//! JSON encodings of coefficients, elements, tensors, fuzzy bases and pairing tables.
//!
//! Exact coefficients `r + s√q` with Gaussian rational `r, s` always carry `coeffNum` and
//! `coeffDen` (the real rational part); the imaginary and `√q` parts appear as
//! `coeffIm*`, `coeffSqrtq*` and `coeffSqrtqIm*` pairs only when nonzero. Float
//! coefficients are `coeffRe` / `coeffIm` decimal strings at the session precision.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use qsphere_core::expr;
use qsphere_core::gns::{BasisVector, FuzzyBasis, Ordering};
use qsphere_core::scalar::{parse_rational, CBig, Gauss, QNum};
use qsphere_core::uq_actions::PairingTable;
use qsphere_core::{Element, Exact, Field, Float, Monomial, SuQ2, Tensor};

pub const SCHEMA: &str = "qsphere/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodecError(pub String);

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CodecError {}

fn err<T>(msg: impl Into<String>) -> Result<T, CodecError> {
    Err(CodecError(msg.into()))
}

/// Scalar fields with a JSON form for their coefficients.
pub trait Codec: Field {
    fn mode_name(&self) -> &'static str;
    fn write_coeff(&self, c: &Self::E, out: &mut Map<String, Value>);
    fn read_coeff(&self, obj: &Map<String, Value>) -> Result<Self::E, CodecError>;
    /// Human-readable scalar.
    fn scalar_text(&self, c: &Self::E) -> String;
    /// Text form of an element: the expression grammar in exact mode, decimals otherwise.
    fn element_text(&self, x: &Element<Self::E>) -> String;
}

fn bigint_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => Value::String(n.to_string()),
    }
}

fn bigint_from(v: &Value) -> Option<BigInt> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn write_ratio(out: &mut Map<String, Value>, key: &str, r: &BigRational) {
    out.insert(format!("{key}Num"), bigint_json(r.numer()));
    out.insert(format!("{key}Den"), bigint_json(r.denom()));
}

fn read_ratio(obj: &Map<String, Value>, key: &str, required: bool) -> Result<BigRational, CodecError> {
    let num = obj.get(&format!("{key}Num"));
    let den = obj.get(&format!("{key}Den"));
    match (num, den) {
        (None, None) if !required => Ok(BigRational::zero()),
        (Some(n), d) => {
            let n = bigint_from(n).ok_or_else(|| CodecError(format!("{key}Num is not an integer")))?;
            let d = match d {
                Some(d) => bigint_from(d).ok_or_else(|| CodecError(format!("{key}Den is not an integer")))?,
                None => BigInt::from(1),
            };
            if d.is_zero() {
                return err(format!("{key}Den is zero"));
            }
            Ok(BigRational::new(n, d))
        }
        _ => err(format!("missing {key}Num")),
    }
}

impl Codec for Exact {
    fn mode_name(&self) -> &'static str {
        "exact"
    }

    fn write_coeff(&self, c: &QNum, out: &mut Map<String, Value>) {
        write_ratio(out, "coeff", &c.r.re);
        for (key, r) in [("coeffIm", &c.r.im), ("coeffSqrtq", &c.s.re), ("coeffSqrtqIm", &c.s.im)] {
            if !r.is_zero() {
                write_ratio(out, key, r);
            }
        }
    }

    fn read_coeff(&self, obj: &Map<String, Value>) -> Result<QNum, CodecError> {
        if obj.contains_key("coeffRe") {
            return err("float coefficient given to an exact session");
        }
        let r = Gauss { re: read_ratio(obj, "coeff", true)?, im: read_ratio(obj, "coeffIm", false)? };
        let s = Gauss { re: read_ratio(obj, "coeffSqrtq", false)?, im: read_ratio(obj, "coeffSqrtqIm", false)? };
        // route through the field so that a rational √q is folded into r
        let root = self.q_half_pow(1);
        let rs = QNum { r, s: Gauss::zero() };
        let ss = QNum { r: s, s: Gauss::zero() };
        Ok(self.add(&rs, &self.mul(&ss, &root)))
    }

    fn scalar_text(&self, c: &QNum) -> String {
        let mut out = String::new();
        for (r, unit) in [(&c.r.re, ""), (&c.r.im, "i"), (&c.s.re, "sqrtq"), (&c.s.im, "i*sqrtq")] {
            if r.is_zero() {
                continue;
            }
            let mag = num_traits::Signed::abs(r);
            if out.is_empty() {
                if num_traits::Signed::is_negative(r) {
                    out.push('-');
                }
            } else {
                out.push_str(if num_traits::Signed::is_negative(r) { " - " } else { " + " });
            }
            let num = if mag.is_integer() { mag.numer().to_string() } else { format!("{}/{}", mag.numer(), mag.denom()) };
            match (unit, num.as_str()) {
                ("", _) => out.push_str(&num),
                (u, "1") => out.push_str(u),
                (u, n) => out.push_str(&format!("{n}*{u}")),
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    fn element_text(&self, x: &Element<QNum>) -> String {
        expr::render_exact(x)
    }
}

fn parse_decimal(v: &Value, key: &str) -> Result<BigRational, CodecError> {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return err(format!("{key} must be a decimal string or number")),
    };
    if let Some(r) = parse_rational(&s) {
        return Ok(r);
    }
    // exponent form as produced by JSON numbers
    let lower = s.to_ascii_lowercase();
    if let Some((m, e)) = lower.split_once('e') {
        if let (Some(m), Ok(e)) = (parse_rational(m), e.parse::<i32>()) {
            let p = BigRational::from_integer(num_traits::pow(BigInt::from(10), e.unsigned_abs() as usize));
            return Ok(if e >= 0 { m * p } else { m / p });
        }
    }
    err(format!("{key} is not a decimal: {s}"))
}

impl Codec for Float {
    fn mode_name(&self) -> &'static str {
        "float"
    }

    fn write_coeff(&self, c: &CBig, out: &mut Map<String, Value>) {
        out.insert("coeffRe".into(), Value::String(self.real_to_string(&c.re)));
        out.insert("coeffIm".into(), Value::String(self.real_to_string(&c.im)));
    }

    fn read_coeff(&self, obj: &Map<String, Value>) -> Result<CBig, CodecError> {
        if let Some(re) = obj.get("coeffRe") {
            let re = parse_decimal(re, "coeffRe")?;
            let im = match obj.get("coeffIm") {
                Some(v) => parse_decimal(v, "coeffIm")?,
                None => BigRational::zero(),
            };
            return Ok(self.from_complex_rational(&re, &im));
        }
        // exact coefficients are accepted and rounded
        let r = Gauss { re: read_ratio(obj, "coeff", true)?, im: read_ratio(obj, "coeffIm", false)? };
        let s = Gauss { re: read_ratio(obj, "coeffSqrtq", false)?, im: read_ratio(obj, "coeffSqrtqIm", false)? };
        let rv = self.from_complex_rational(&r.re, &r.im);
        let sv = self.from_complex_rational(&s.re, &s.im);
        Ok(self.add(&rv, &self.mul(&sv, &self.q_half_pow(1))))
    }

    fn scalar_text(&self, c: &CBig) -> String {
        let re = self.real_to_string(&c.re);
        let im = self.real_to_string(&c.im);
        if im == "0" {
            return re;
        }
        if im.starts_with('-') {
            format!("{re} - {}*i", &im[1..])
        } else {
            format!("{re} + {im}*i")
        }
    }

    fn element_text(&self, x: &Element<CBig>) -> String {
        let mut out = String::new();
        for (m, c) in x.iter() {
            let coeff = self.scalar_text(c);
            let coeff = if coeff.contains('i') { format!("({coeff})") } else { coeff };
            if !out.is_empty() {
                out.push_str(" + ");
            }
            out.push_str(&coeff);
            if !m.is_one() {
                out.push('*');
                out.push_str(&m.to_string());
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

fn monomial_json(m: &Monomial) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("aExp".into(), json!(m.a));
    o.insert("bExp".into(), json!(m.b));
    o.insert("bStarExp".into(), json!(m.bs));
    o
}

fn monomial_from(obj: &Map<String, Value>) -> Result<Monomial, CodecError> {
    let get = |k: &str| obj.get(k).and_then(Value::as_i64).ok_or_else(|| CodecError(format!("missing integer {k}")));
    let a = get("aExp")?;
    let b = get("bExp")?;
    let bs = get("bStarExp")?;
    if b < 0 || bs < 0 || a.abs() > i32::MAX as i64 || b > u32::MAX as i64 || bs > u32::MAX as i64 {
        return err("monomial exponents out of range");
    }
    Ok(Monomial::new(a as i32, b as u32, bs as u32))
}

/// Canonical sorted term list.
pub fn element_to_json<F: Codec>(f: &F, x: &Element<F::E>) -> Value {
    Value::Array(
        x.iter()
            .map(|(m, c)| {
                let mut o = monomial_json(m);
                f.write_coeff(c, &mut o);
                Value::Object(o)
            })
            .collect(),
    )
}

pub fn element_from_json<F: Codec>(alg: &SuQ2<F>, v: &Value) -> Result<Element<F::E>, CodecError> {
    let f = alg.field();
    let items = v.as_array().ok_or_else(|| CodecError("element must be a JSON array".into()))?;
    let mut x = alg.zero();
    for it in items {
        let o = it.as_object().ok_or_else(|| CodecError("element term must be an object".into()))?;
        let m = monomial_from(o)?;
        let c = f.read_coeff(o)?;
        x = alg.add(&x, &alg.term(m, c));
    }
    Ok(x)
}

pub fn scalar_to_json<F: Codec>(f: &F, c: &F::E) -> Value {
    let mut o = Map::new();
    f.write_coeff(c, &mut o);
    o.insert("text".into(), Value::String(f.scalar_text(c)));
    Value::Object(o)
}

pub fn tensor_to_json<F: Codec>(f: &F, t: &Tensor<F::E>) -> Value {
    Value::Array(
        t.iter()
            .map(|((l, r), c)| {
                let mut o = Map::new();
                o.insert("left".into(), Value::Object(monomial_json(l)));
                o.insert("right".into(), Value::Object(monomial_json(r)));
                f.write_coeff(c, &mut o);
                Value::Object(o)
            })
            .collect(),
    )
}

/// Identity of a session's scalar context, used to match caches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldKey {
    pub q: String,
    pub mode: String,
    pub precision: Option<usize>,
}

impl FieldKey {
    pub fn of<F: Codec>(q: &BigRational, f: &F) -> Self {
        FieldKey { q: format!("{}/{}", q.numer(), q.denom()), mode: f.mode_name().into(), precision: f.precision() }
    }

    fn write(&self, o: &mut Map<String, Value>) {
        o.insert("q".into(), Value::String(self.q.clone()));
        o.insert("scalarMode".into(), Value::String(self.mode.clone()));
        o.insert("precision".into(), self.precision.map_or(Value::Null, |p| json!(p)));
    }

    fn matches(&self, o: &Map<String, Value>) -> bool {
        let p = o.get("precision").and_then(Value::as_u64).map(|p| p as usize);
        o.get("q").and_then(Value::as_str) == Some(self.q.as_str())
            && o.get("scalarMode").and_then(Value::as_str) == Some(self.mode.as_str())
            && p == self.precision
    }
}

pub fn basis_to_json<F: Codec>(key: &FieldKey, f: &F, b: &FuzzyBasis<F::E>) -> Value {
    let mut o = Map::new();
    o.insert("schema".into(), json!(SCHEMA));
    key.write(&mut o);
    o.insert("level".into(), json!(b.level));
    let ord = match b.ordering {
        Ordering::SpinAscending => "ascending",
        Ordering::SpinDescending => "descending",
    };
    o.insert("ordering".into(), json!(ord));
    let vs: Vec<Value> = b
        .vectors
        .iter()
        .map(|v| {
            json!({
                "spin": v.spin,
                "weight": v.weight,
                "norm2": scalar_to_json(f, &v.norm2),
                "element": element_to_json(f, &v.element),
            })
        })
        .collect();
    o.insert("vectors".into(), Value::Array(vs));
    Value::Object(o)
}

/// Loads a basis written by [`basis_to_json`]. `Ok(None)` means the file belongs to a
/// different scalar context.
pub fn basis_from_json<F: Codec>(
    key: &FieldKey,
    alg: &SuQ2<F>,
    v: &Value,
) -> Result<Option<FuzzyBasis<F::E>>, CodecError> {
    let o = v.as_object().ok_or_else(|| CodecError("basis must be an object".into()))?;
    if o.get("schema").and_then(Value::as_str) != Some(SCHEMA) {
        return err("basis file has an unknown schema");
    }
    if !key.matches(o) {
        return Ok(None);
    }
    let level = o.get("level").and_then(Value::as_u64).ok_or_else(|| CodecError("missing level".into()))? as u32;
    let ordering = match o.get("ordering").and_then(Value::as_str) {
        Some("ascending") => Ordering::SpinAscending,
        Some("descending") => Ordering::SpinDescending,
        _ => return err("ordering must be ascending or descending"),
    };
    let items = o.get("vectors").and_then(Value::as_array).ok_or_else(|| CodecError("missing vectors".into()))?;
    let mut vectors = Vec::with_capacity(items.len());
    for it in items {
        let spin = it.get("spin").and_then(Value::as_u64).ok_or_else(|| CodecError("missing spin".into()))? as u32;
        let weight = it.get("weight").and_then(Value::as_i64).ok_or_else(|| CodecError("missing weight".into()))?;
        let norm2 = it
            .get("norm2")
            .and_then(Value::as_object)
            .ok_or_else(|| CodecError("missing norm2".into()))
            .and_then(|n| alg.field().read_coeff(n))?;
        let element = element_from_json(alg, it.get("element").unwrap_or(&Value::Null))?;
        vectors.push(BasisVector { element, spin, weight, norm2 });
    }
    Ok(Some(FuzzyBasis { level, ordering, vectors }))
}

fn matrix_json<F: Codec>(f: &F, m: &[[F::E; 2]; 2]) -> Value {
    Value::Array(m.iter().map(|row| Value::Array(row.iter().map(|c| scalar_to_json(f, c)).collect())).collect())
}

pub fn table_to_json<F: Codec>(f: &F, t: &PairingTable<F::E>) -> Value {
    let mut o = Map::new();
    o.insert("schema".into(), json!(SCHEMA));
    o.insert("k".into(), matrix_json(f, &t.k));
    o.insert("kinv".into(), matrix_json(f, &t.kinv));
    o.insert("e".into(), matrix_json(f, &t.e));
    o.insert("f".into(), matrix_json(f, &t.f));
    if let Some(h) = &t.h {
        o.insert("h".into(), matrix_json(f, h));
    }
    Value::Object(o)
}

fn table_entry<F: Codec>(alg: &SuQ2<F>, v: &Value) -> Result<F::E, CodecError> {
    let f = alg.field();
    match v {
        Value::Object(o) => f.read_coeff(o),
        Value::Number(_) => {
            let r = parse_decimal(v, "entry")?;
            Ok(f.from_rational(&r))
        }
        Value::String(s) => {
            let x = expr::parse(alg, s).map_err(|e| CodecError(format!("entry \"{s}\": {e}")))?;
            match x.len() {
                0 => Ok(f.zero()),
                1 if x.coeff(&Monomial::ONE).is_some() => Ok(x.coeff(&Monomial::ONE).unwrap().clone()),
                _ => err(format!("entry \"{s}\" is not a scalar")),
            }
        }
        _ => err("table entries must be objects, numbers or expression strings"),
    }
}

fn table_matrix<F: Codec>(alg: &SuQ2<F>, v: &Value, name: &str) -> Result<[[F::E; 2]; 2], CodecError> {
    let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(|| CodecError(format!("{name} must be 2x2")))?;
    let mut out: Vec<[F::E; 2]> = Vec::with_capacity(2);
    for row in rows {
        let r = row.as_array().filter(|r| r.len() == 2).ok_or_else(|| CodecError(format!("{name} must be 2x2")))?;
        out.push([table_entry(alg, &r[0])?, table_entry(alg, &r[1])?]);
    }
    let second = out.pop().unwrap();
    let first = out.pop().unwrap();
    Ok([first, second])
}

/// Reads a pairing table. Entries are coefficient objects, JSON numbers, or scalar
/// expressions such as `"sqrtq"` or `"1/2*i"`.
pub fn table_from_json<F: Codec>(alg: &SuQ2<F>, v: &Value) -> Result<PairingTable<F::E>, CodecError> {
    let o = v.as_object().ok_or_else(|| CodecError("pairing table must be an object".into()))?;
    let get = |k: &str| o.get(k).ok_or_else(|| CodecError(format!("pairing table lacks \"{k}\"")));
    Ok(PairingTable {
        k: table_matrix(alg, get("k")?, "k")?,
        kinv: table_matrix(alg, get("kinv")?, "kinv")?,
        e: table_matrix(alg, get("e")?, "e")?,
        f: table_matrix(alg, get("f")?, "f")?,
        h: match o.get("h") {
            Some(h) if !h.is_null() => Some(table_matrix(alg, h, "h")?),
            _ => None,
        },
    })
}
