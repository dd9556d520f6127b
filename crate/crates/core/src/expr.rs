//! Text expressions such as `sin(pi*z)*sin(sqrt2*pi*z + 0.5)` parsed into
//! exponential sums.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' integer)?
//! primary := number | number 'i' | name | func '(' sum ')' | '(' sum ')'
//! func    := 'exp' | 'sin' | 'cos'
//! ```
//!
//! Names are `z`, `i`, `pi` and the declared basis entries. Inside a
//! function call the argument must be affine in `z`, and the coefficient of
//! `z` must be `π` (for `sin`, `cos`) or `2πi` (for `exp`) times a rational
//! combination of basis entries. `π` is always symbolic: a declaration named
//! `pi` is accepted and ignored.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::basis::{parse_decimal, BasisEntry, FreqVector, FrequencyBasis};
use crate::error::{Error, Result};
use crate::expsum::ExpSum;

const RESERVED: [&str; 6] = ["z", "i", "pi", "exp", "sin", "cos"];

/// Basis `{one: 1}` followed by the declared `(name, decimal)` pairs.
pub fn expression_basis(decls: &[(String, String)]) -> Result<Arc<FrequencyBasis>> {
    let mut entries = vec![BasisEntry {
        name: "one".into(),
        value: "1".into(),
    }];
    for (name, value) in decls {
        if name == "pi" {
            continue;
        }
        if RESERVED.contains(&name.as_str()) || name == "one" {
            return Err(Error::InvalidBasis(format!("{name:?} is a reserved name")));
        }
        entries.push(BasisEntry {
            name: name.clone(),
            value: value.clone(),
        });
    }
    FrequencyBasis::new(entries, true)
}

/// Parse `text` over [`expression_basis`] of the declarations.
pub fn parse_expression(text: &str, decls: &[(String, String)]) -> Result<ExpSum> {
    parse_expression_in(text, expression_basis(decls)?)
}

/// Parse `text` over an explicit basis whose entry names are usable in it.
pub fn parse_expression_in(text: &str, basis: Arc<FrequencyBasis>) -> Result<ExpSum> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        basis,
        end: text.len(),
    };
    let v = p.sum()?;
    if let Some(t) = p.peek() {
        return Err(p.error_at(t.pos, format!("unexpected {:?}", t.kind)));
    }
    let q = p.into_sum(v, 0)?;
    q.require_nonempty()?;
    Ok(q)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(BigRational),
    Imag(BigRational),
    Name(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (pos, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_ascii_digit() || chars[k].1 == '.') {
                k += 1;
            }
            if k < chars.len() && matches!(chars[k].1, 'e' | 'E') {
                let mut j = k + 1;
                if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].1.is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].1.is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let end = chars.get(k).map(|c| c.0).unwrap_or(text.len());
            let lit = &text[chars[start].0..end];
            let value = parse_decimal(lit).map_err(|_| Error::Parse {
                position: pos,
                message: format!("bad number {lit:?}"),
            })?;
            let imaginary = k < chars.len()
                && chars[k].1 == 'i'
                && !chars
                    .get(k + 1)
                    .is_some_and(|c| c.1.is_ascii_alphanumeric() || c.1 == '_');
            if imaginary {
                k += 1;
                out.push(Token {
                    kind: Kind::Imag(value),
                    pos,
                });
            } else {
                out.push(Token {
                    kind: Kind::Num(value),
                    pos,
                });
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].1.is_ascii_alphanumeric() || chars[k].1 == '_') {
                k += 1;
            }
            let end = chars.get(k).map(|c| c.0).unwrap_or(text.len());
            out.push(Token {
                kind: Kind::Name(text[chars[start].0..end].to_string()),
                pos,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token {
                kind: Kind::Op(c),
                pos,
            });
            k += 1;
        } else {
            return Err(Error::Parse {
                position: pos,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

/// `coef · π^pi · i^imag · ∏ b_j^{exps_j}` with `imag ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq)]
struct Monomial {
    coef: BigRational,
    pi: i32,
    imag: u8,
    exps: Vec<i32>,
}

impl Monomial {
    fn same_shape(&self, o: &Monomial) -> bool {
        self.pi == o.pi && self.imag == o.imag && self.exps == o.exps
    }

    fn mul(&self, o: &Monomial) -> Monomial {
        let mut coef = &self.coef * &o.coef;
        let mut imag = self.imag + o.imag;
        if imag == 2 {
            coef = -coef;
            imag = 0;
        }
        Monomial {
            coef,
            pi: self.pi + o.pi,
            imag,
            exps: self.exps.iter().zip(&o.exps).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Exact sum of monomials.
#[derive(Debug, Clone, PartialEq)]
struct Scalar(Vec<Monomial>);

impl Scalar {
    fn zero() -> Self {
        Scalar(Vec::new())
    }

    fn rational(r: BigRational, dim: usize, imag: u8) -> Self {
        Scalar(vec![Monomial {
            coef: r,
            pi: 0,
            imag,
            exps: vec![0; dim],
        }])
        .normalized()
    }

    fn normalized(mut self) -> Self {
        let mut out: Vec<Monomial> = Vec::new();
        for m in self.0.drain(..) {
            match out.iter_mut().find(|o| o.same_shape(&m)) {
                Some(o) => o.coef += m.coef,
                None => out.push(m),
            }
        }
        out.retain(|m| !m.coef.is_zero());
        Scalar(out)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn add(&self, o: &Scalar) -> Scalar {
        Scalar(self.0.iter().chain(&o.0).cloned().collect()).normalized()
    }

    fn neg(&self) -> Scalar {
        Scalar(
            self.0
                .iter()
                .map(|m| Monomial {
                    coef: -m.coef.clone(),
                    ..m.clone()
                })
                .collect(),
        )
    }

    fn mul(&self, o: &Scalar) -> Scalar {
        Scalar(
            self.0
                .iter()
                .flat_map(|a| o.0.iter().map(move |b| a.mul(b)))
                .collect(),
        )
        .normalized()
    }

    /// Inverse of a single monomial.
    fn inverse(&self) -> Option<Scalar> {
        let [m] = self.0.as_slice() else {
            return None;
        };
        // 1/i = −i
        let coef = if m.imag == 1 {
            -m.coef.recip()
        } else {
            m.coef.recip()
        };
        Some(Scalar(vec![Monomial {
            coef,
            pi: -m.pi,
            imag: m.imag,
            exps: m.exps.iter().map(|e| -e).collect(),
        }]))
    }

    fn to_c64(&self, basis: &FrequencyBasis) -> Complex64 {
        self.0
            .iter()
            .map(|m| {
                let mut v = m.coef.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(m.pi);
                for (j, &e) in m.exps.iter().enumerate() {
                    if e != 0 {
                        v *= basis.approx_value(j).powi(e);
                    }
                }
                if m.imag == 1 {
                    Complex64::new(0.0, v)
                } else {
                    Complex64::new(v, 0.0)
                }
            })
            .sum()
    }
}

/// Affine in `z` with exact coefficients, or a finished exponential sum.
#[derive(Debug, Clone)]
enum Val {
    Affine { c0: Scalar, c1: Scalar },
    Sum(ExpSum),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    basis: Arc<FrequencyBasis>,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.pos).unwrap_or(self.end)
    }

    fn error_at(&self, position: usize, message: String) -> Error {
        Error::Parse { position, message }
    }

    fn eat(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: Kind::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.error_at(self.here(), format!("expected '{op}'")))
        }
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn constant(&self, c: Complex64) -> Result<ExpSum> {
        ExpSum::new_allow_empty(self.basis.clone(), vec![(FreqVector::zero(self.dim()), c)])
    }

    fn into_sum(&self, v: Val, pos: usize) -> Result<ExpSum> {
        match v {
            Val::Sum(s) => Ok(s),
            Val::Affine { c0, c1 } => {
                if !c1.is_zero() {
                    return Err(
                        self.error_at(pos, "z may only appear inside exp, sin or cos".into())
                    );
                }
                self.constant(c0.to_c64(&self.basis))
            }
        }
    }

    fn sum(&mut self) -> Result<Val> {
        let mut acc = self.product()?;
        loop {
            let pos = self.here();
            let sign = if self.eat('+') {
                1
            } else if self.eat('-') {
                -1
            } else {
                return Ok(acc);
            };
            let rhs = self.product()?;
            let rhs = if sign < 0 { self.negate(rhs) } else { rhs };
            acc = self.add(acc, rhs, pos)?;
        }
    }

    fn product(&mut self) -> Result<Val> {
        let mut acc = self.unary()?;
        loop {
            let pos = self.here();
            if self.eat('*') {
                let rhs = self.unary()?;
                acc = self.mul(acc, rhs, pos)?;
            } else if self.eat('/') {
                let rhs = self.unary()?;
                acc = self.div(acc, rhs, pos)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Val> {
        if self.eat('-') {
            let v = self.unary()?;
            return Ok(self.negate(v));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Val> {
        let base = self.primary()?;
        let pos = self.here();
        if !self.eat('^') {
            return Ok(base);
        }
        let n = match self.peek() {
            Some(Token {
                kind: Kind::Num(r), ..
            }) if r.is_integer() && !r.is_negative() => r
                .to_integer()
                .to_u32()
                .ok_or_else(|| self.error_at(pos, "exponent too large".into()))?,
            _ => {
                return Err(self.error_at(
                    self.here(),
                    "exponent must be a non-negative integer".into(),
                ))
            }
        };
        self.pos += 1;
        match base {
            Val::Sum(s) => Ok(Val::Sum(s.pow(n)?)),
            Val::Affine { c0, c1 } if c1.is_zero() => {
                let mut acc = Scalar::rational(BigRational::one(), self.dim(), 0);
                for _ in 0..n {
                    acc = acc.mul(&c0);
                }
                Ok(Val::Affine { c0: acc, c1 })
            }
            v @ Val::Affine { .. } if n == 1 => Ok(v),
            _ => Err(self.error_at(pos, "powers of z are not exponential sums".into())),
        }
    }

    fn primary(&mut self) -> Result<Val> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error_at(self.end, "unexpected end of input".into()));
        };
        self.pos += 1;
        let dim = self.dim();
        match tok.kind {
            Kind::Num(r) => Ok(Val::Affine {
                c0: Scalar::rational(r, dim, 0),
                c1: Scalar::zero(),
            }),
            Kind::Imag(r) => Ok(Val::Affine {
                c0: Scalar::rational(r, dim, 1),
                c1: Scalar::zero(),
            }),
            Kind::Op('(') => {
                let v = self.sum()?;
                self.expect(')')?;
                Ok(v)
            }
            Kind::Op(c) => Err(self.error_at(tok.pos, format!("unexpected '{c}'"))),
            Kind::Name(name) => match name.as_str() {
                "z" => Ok(Val::Affine {
                    c0: Scalar::zero(),
                    c1: Scalar::rational(BigRational::one(), dim, 0),
                }),
                "i" => Ok(Val::Affine {
                    c0: Scalar::rational(BigRational::one(), dim, 1),
                    c1: Scalar::zero(),
                }),
                "pi" => Ok(Val::Affine {
                    c0: Scalar(vec![Monomial {
                        coef: BigRational::one(),
                        pi: 1,
                        imag: 0,
                        exps: vec![0; dim],
                    }]),
                    c1: Scalar::zero(),
                }),
                "exp" | "sin" | "cos" => {
                    self.expect('(')?;
                    let arg = self.sum()?;
                    self.expect(')')?;
                    self.function(&name, arg, tok.pos).map(Val::Sum)
                }
                other => match self.basis.index_of(other) {
                    Some(j) => {
                        let mut exps = vec![0; dim];
                        exps[j] = 1;
                        Ok(Val::Affine {
                            c0: Scalar(vec![Monomial {
                                coef: BigRational::one(),
                                pi: 0,
                                imag: 0,
                                exps,
                            }]),
                            c1: Scalar::zero(),
                        })
                    }
                    None => Err(self.error_at(tok.pos, format!("unknown name {other:?}"))),
                },
            },
        }
    }

    fn negate(&self, v: Val) -> Val {
        match v {
            Val::Affine { c0, c1 } => Val::Affine {
                c0: c0.neg(),
                c1: c1.neg(),
            },
            Val::Sum(s) => Val::Sum(s.scale(Complex64::new(-1.0, 0.0))),
        }
    }

    fn add(&self, a: Val, b: Val, pos: usize) -> Result<Val> {
        match (a, b) {
            (Val::Affine { c0, c1 }, Val::Affine { c0: d0, c1: d1 }) => Ok(Val::Affine {
                c0: c0.add(&d0),
                c1: c1.add(&d1),
            }),
            (a, b) => Ok(Val::Sum(
                self.into_sum(a, pos)?.add(&self.into_sum(b, pos)?)?,
            )),
        }
    }

    fn mul(&self, a: Val, b: Val, pos: usize) -> Result<Val> {
        match (a, b) {
            (Val::Affine { c0, c1 }, Val::Affine { c0: d0, c1: d1 }) => {
                if !c1.is_zero() && !d1.is_zero() {
                    return Err(self.error_at(pos, "product is not affine in z".into()));
                }
                Ok(Val::Affine {
                    c0: c0.mul(&d0),
                    c1: c1.mul(&d0).add(&d1.mul(&c0)),
                })
            }
            (a, b) => Ok(Val::Sum(
                self.into_sum(a, pos)?.multiply(&self.into_sum(b, pos)?)?,
            )),
        }
    }

    fn div(&self, a: Val, b: Val, pos: usize) -> Result<Val> {
        let Val::Affine { c0: d0, c1: d1 } = b else {
            return Err(self.error_at(pos, "can only divide by a constant".into()));
        };
        if !d1.is_zero() {
            return Err(self.error_at(pos, "can only divide by a constant".into()));
        }
        if d0.is_zero() {
            return Err(self.error_at(pos, "division by zero".into()));
        }
        match (a, d0.inverse()) {
            (Val::Affine { c0, c1 }, Some(inv)) => Ok(Val::Affine {
                c0: c0.mul(&inv),
                c1: c1.mul(&inv),
            }),
            (a, _) => {
                let s = self.into_sum(a, pos)?;
                Ok(Val::Sum(
                    s.scale(Complex64::new(1.0, 0.0) / d0.to_c64(&self.basis)),
                ))
            }
        }
    }

    /// Frequency vector `ω` with `c1 = 2π·ω` (for `imag = 0`) or
    /// `c1 = 2πi·ω` (for `imag = 1`).
    fn frequency(&self, c1: &Scalar, imag: u8, pos: usize) -> Result<FreqVector> {
        let dim = self.dim();
        let one = self.basis.index_of("one");
        if c1.0.iter().any(|m| m.imag != imag) {
            return Err(Error::FrequencyNotReal { position: pos });
        }
        let mut v = FreqVector::zero(dim);
        for m in &c1.0 {
            let linear: Vec<usize> = (0..dim).filter(|&j| m.exps[j] != 0).collect();
            let idx = match linear.as_slice() {
                [] => one,
                [j] if m.exps[*j] == 1 => Some(*j),
                _ => None,
            };
            let Some(idx) = idx.filter(|_| m.pi == 1) else {
                return Err(Error::BasisMismatch(format!(
                    "coefficient of z at position {pos} is not π times a rational combination of basis entries"
                )));
            };
            v.0[idx] += &m.coef / BigRational::from_integer(BigInt::from(2));
        }
        Ok(v)
    }

    fn function(&self, name: &str, arg: Val, pos: usize) -> Result<ExpSum> {
        let Val::Affine { c0, c1 } = arg else {
            return Err(self.error_at(pos, format!("argument of {name} must be affine in z")));
        };
        let phase = c0.to_c64(&self.basis);
        let i = Complex64::new(0.0, 1.0);
        match name {
            "exp" => {
                let w = self.frequency(&c1, 1, pos)?;
                ExpSum::new_allow_empty(self.basis.clone(), vec![(w, phase.exp())])
            }
            _ => {
                let w = self.frequency(&c1, 0, pos)?;
                let (p, m) = ((i * phase).exp(), (-i * phase).exp());
                let terms = if name == "sin" {
                    vec![(w.clone(), p / (2.0 * i)), (-&w, -m / (2.0 * i))]
                } else {
                    vec![(w.clone(), p / 2.0), (-&w, m / 2.0)]
                };
                ExpSum::new_allow_empty(self.basis.clone(), terms)
            }
        }
    }
}
