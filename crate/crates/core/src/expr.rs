//! Expression grammar for algebra elements.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := power ('*' power)*
//! power  := atom ('^' digits)?
//! atom   := number ['/' number] | ident | '(' expr ')' | '-' atom
//! ident  := a | as | b | bs | A | B | Bs | i | sqrtq
//! ```
//!
//! `A`, `B`, `Bs` stand for `bs*b`, `a*bs`, `b*as`. `i` and `sqrtq` denote the imaginary
//! unit and `q^(1/2)`, so that every exact element has a printable form. Decimal literals
//! are accepted and read as exact rationals.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::qhopf::{Element, Monomial, SuQ2};
use crate::scalar::{Exact, Field, Gauss, QNum};

/// Parse failure with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let (l0, c0) = (line, col);
        if ch == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let single = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push(Lexed { tok: t, line: l0, column: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let value = crate::scalar::parse_rational(&text).ok_or(ParseError {
                line: l0,
                column: c0,
                message: alloc::format!("malformed number '{text}'"),
            })?;
            out.push(Lexed { tok: Tok::Num(value), line: l0, column: c0 });
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Lexed { tok: Tok::Ident(text), line: l0, column: c0 });
            continue;
        }
        return Err(ParseError { line: l0, column: c0, message: alloc::format!("unexpected character '{ch}'") });
    }
    out.push(Lexed { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser<'s, F: Field> {
    toks: Vec<Lexed>,
    pos: usize,
    alg: &'s SuQ2<F>,
}

impl<'s, F: Field> Parser<'s, F> {
    fn at(&self) -> &Lexed {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek(&self) -> &Tok {
        &self.at().tok
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let t = self.at();
        ParseError { line: t.line, column: t.column, message: message.into() }
    }

    fn bump(&mut self) -> Tok {
        let t = self.at().tok.clone();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Element<F::E>, ParseError> {
        let s = self.alg;
        let mut acc = if *self.peek() == Tok::Minus {
            self.bump();
            s.neg(&self.term()?)
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = s.add(&acc, &self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = s.sub(&acc, &self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Element<F::E>, ParseError> {
        let mut acc = self.power()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = self.alg.mul(&acc, &self.power()?);
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Element<F::E>, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        match self.bump() {
            Tok::Num(n) if n.is_integer() && !n.is_negative() => {
                let e: u32 = n.to_integer().try_into().map_err(|_| self.error("exponent too large"))?;
                Ok(self.alg.pow(&base, e))
            }
            _ => {
                self.pos -= 1;
                Err(self.error("expected a non-negative integer exponent"))
            }
        }
    }

    fn atom(&mut self) -> Result<Element<F::E>, ParseError> {
        let s = self.alg;
        let f = s.field();
        match self.bump() {
            Tok::Num(n) => {
                if *self.peek() == Tok::Slash {
                    self.bump();
                    match self.bump() {
                        Tok::Num(d) if !d.is_zero() => Ok(s.scalar(f.from_rational(&(n / d)))),
                        _ => {
                            self.pos -= 1;
                            Err(self.error("expected a nonzero denominator"))
                        }
                    }
                } else {
                    Ok(s.scalar(f.from_rational(&n)))
                }
            }
            Tok::Ident(name) => match name.as_str() {
                "a" => Ok(s.a()),
                "as" => Ok(s.a_star()),
                "b" => Ok(s.b()),
                "bs" => Ok(s.b_star()),
                "A" => Ok(s.mul(&s.b_star(), &s.b())),
                "B" => Ok(s.mul(&s.a(), &s.b_star())),
                "Bs" => Ok(s.mul(&s.b(), &s.a_star())),
                "i" => Ok(s.scalar(f.imag_unit())),
                "sqrtq" => Ok(s.scalar(f.q_half_pow(1))),
                _ => {
                    self.pos -= 1;
                    Err(self.error(alloc::format!("unknown symbol '{name}'")))
                }
            },
            Tok::LParen => {
                let inner = self.expr()?;
                if self.bump() != Tok::RParen {
                    self.pos -= 1;
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Tok::Minus => Ok(s.neg(&self.power()?)),
            Tok::End => Err(self.error("unexpected end of input")),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a number, generator or '('"))
            }
        }
    }
}

/// Parses an expression into a normal-ordered element.
pub fn parse<F: Field>(alg: &SuQ2<F>, src: &str) -> Result<Element<F::E>, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, alg };
    if *p.peek() == Tok::End {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

fn push_rational_term(out: &mut String, r: &BigRational, unit: &str, mono: &Monomial) {
    if r.is_zero() {
        return;
    }
    let neg = r.is_negative();
    let mag = r.abs();
    if out.is_empty() {
        if neg {
            out.push('-');
        }
    } else {
        out.push_str(if neg { " - " } else { " + " });
    }
    let mut factors: Vec<String> = Vec::new();
    if !mag.is_one() || (unit.is_empty() && mono.is_one()) {
        if mag.is_integer() {
            factors.push(mag.numer().to_string());
        } else {
            factors.push(alloc::format!("{}/{}", mag.numer(), mag.denom()));
        }
    }
    if !unit.is_empty() {
        factors.push(unit.into());
    }
    if !mono.is_one() {
        factors.push(mono.to_string());
    }
    out.push_str(&factors.join("*"));
}

/// Renders an exact element in the expression grammar; `parse` inverts it.
pub fn render_exact(x: &Element<QNum>) -> String {
    let mut out = String::new();
    for (m, c) in x.iter() {
        let parts: [(&BigRational, &str); 4] =
            [(&c.r.re, ""), (&c.r.im, "i"), (&c.s.re, "sqrtq"), (&c.s.im, "i*sqrtq")];
        for (r, unit) in parts {
            push_rational_term(&mut out, r, unit, m);
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Renders any element with double-precision decimal coefficients (for display only).
pub fn render_approx<F: Field>(alg: &SuQ2<F>, x: &Element<F::E>) -> String {
    let f = alg.field();
    let mut out = String::new();
    for (m, c) in x.iter() {
        let z = f.to_c64(c);
        let coeff = if z.im == 0.0 {
            alloc::format!("{}", z.re)
        } else {
            alloc::format!("({} + {}*i)", z.re, z.im)
        };
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

/// Exact element from a Gaussian rational coefficient table (helper for fixtures).
pub fn exact_term(alg: &SuQ2<Exact>, m: Monomial, num: i64, den: i64) -> Element<QNum> {
    let r = BigRational::new(BigInt::from(num), BigInt::from(den));
    alg.term(m, QNum { r: Gauss::real(r), s: Gauss::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg() -> SuQ2<Exact> {
        SuQ2::new(Exact::from_ratio(1, 2))
    }

    #[test]
    fn b_times_a_is_half_ab() {
        let s = alg();
        let x = parse(&s, "b*a").unwrap();
        assert_eq!(x, exact_term(&s, Monomial::new(1, 1, 0), 1, 2));
        assert_eq!(render_exact(&x), "1/2*a*b");
    }

    #[test]
    fn desugars_sphere_generators() {
        let s = alg();
        assert_eq!(parse(&s, "A").unwrap(), parse(&s, "bs*b").unwrap());
        assert_eq!(parse(&s, "B").unwrap(), parse(&s, "a*bs").unwrap());
        assert_eq!(parse(&s, "Bs").unwrap(), parse(&s, "b*as").unwrap());
        assert_eq!(parse(&s, " A - 1/2 ").unwrap(), parse(&s, "A-1/2").unwrap());
    }

    #[test]
    fn precedence_and_powers() {
        let s = alg();
        let x = parse(&s, "2*a^2 + -b").unwrap();
        let want = s.sub(&exact_term(&s, Monomial::new(2, 0, 0), 2, 1), &s.b());
        assert_eq!(x, want);
        assert_eq!(parse(&s, "(a + b)^0").unwrap(), s.one());
    }

    #[test]
    fn reports_positions() {
        let s = alg();
        let e = parse(&s, "a +\n  c").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        let e = parse(&s, "a^x").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        let e = parse(&s, "(a").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
        assert!(parse(&s, "").is_err());
        assert!(parse(&s, "1/0").is_err());
    }

    #[test]
    fn renders_extension_coefficients() {
        let s = alg();
        let x = parse(&s, "i*sqrtq*a - 3/2*sqrtq + 1").unwrap();
        let back = parse(&s, &render_exact(&x)).unwrap();
        assert_eq!(back, x);
    }
}
