//! Real frequency bases and exact rational frequency vectors.
//!
//! A frequency is stored as a vector of rationals over a finite list of
//! declared real numbers. Equality of frequencies is equality of vectors;
//! the real value is only needed for ordering and for evaluation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// π to 120 decimals.
pub const PI_DECIMAL: &str = "3.141592653589793238462643383279502884197169399375105820974944592307816406286208998628034825342117067982148086513282306647";

/// Distinct vectors whose values are closer than this trigger an
/// independence warning.
pub const NEAR_COLLISION: f64 = 1e-40;

/// Parse a plain or scientific decimal string into an exact rational.
pub fn parse_decimal(text: &str) -> Result<BigRational> {
    let bad = || Error::InvalidBasis(format!("not a decimal number: {text:?}"));
    let s = text.trim();
    let (neg, s) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer =
        BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Parse `"p/q"`, `"p"`, or a decimal string into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim())
            .map_err(|_| Error::InvalidArgument(format!("bad rational {text:?}")))?;
        let q = BigInt::from_str(q.trim())
            .map_err(|_| Error::InvalidArgument(format!("bad rational {text:?}")))?;
        if q.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "zero denominator in {text:?}"
            )));
        }
        Ok(BigRational::new(p, q))
    } else {
        parse_decimal(s).map_err(|_| Error::InvalidArgument(format!("bad rational {text:?}")))
    }
}

/// Render a rational as `"p/q"`.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Render a rational with `digits` significant decimal digits (truncated).
pub fn format_decimal(r: &BigRational, digits: usize) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let a = r.abs();
    let ten = BigInt::from(10u32);
    // Smallest e with a < 10^e.
    let mut e: i64 = a.to_integer().to_string().len() as i64;
    if a < BigRational::one() {
        e = 0;
        let mut t = a.clone();
        while t < BigRational::new(BigInt::one(), ten.clone()) {
            t *= BigRational::from_integer(ten.clone());
            e -= 1;
        }
    }
    let shift = digits as i64 - e;
    let scaled = if shift >= 0 {
        a * BigRational::from_integer(num_traits::pow(ten.clone(), shift as usize))
    } else {
        a / BigRational::from_integer(num_traits::pow(ten.clone(), (-shift) as usize))
    };
    let int = scaled.to_integer().to_string();
    let point = int.len() as i64 - shift;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), int)
    } else if point as usize >= int.len() {
        format!("{}{}", int, "0".repeat(point as usize - int.len()))
    } else {
        format!("{}.{}", &int[..point as usize], &int[point as usize..])
    };
    let body = if body.contains('.') {
        body.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        body
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Square root of a non-negative rational, truncated to `digits` decimals.
pub fn decimal_sqrt(r: &BigRational, digits: usize) -> BigRational {
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let target = (r * BigRational::from_integer(&scale * &scale)).to_integer();
    let root = target.magnitude().sqrt();
    BigRational::new(BigInt::from_biguint(Sign::Plus, root), scale)
}

/// π as an exact rational (120 decimals).
pub fn pi_rational() -> BigRational {
    parse_decimal(PI_DECIMAL).expect("valid constant")
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if r.denom().is_one() {
        return r.numer().to_f64().unwrap_or(f64::NAN);
    }
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub name: String,
    pub value: String,
}

/// An ordered list of named positive reals spanning the frequencies in use.
#[derive(Debug, Clone)]
pub struct FrequencyBasis {
    entries: Vec<BasisEntry>,
    independence_claimed: bool,
    exact: Vec<BigRational>,
    approx: Vec<f64>,
}

impl PartialEq for FrequencyBasis {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl FrequencyBasis {
    pub fn new(entries: Vec<BasisEntry>, independence_claimed: bool) -> Result<Arc<Self>> {
        let mut exact = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if !is_identifier(&e.name) {
                return Err(Error::InvalidBasis(format!(
                    "{:?} is not an identifier",
                    e.name
                )));
            }
            if entries[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::InvalidBasis(format!("duplicate name {:?}", e.name)));
            }
            let v = parse_decimal(&e.value)?;
            if !v.is_positive() {
                return Err(Error::InvalidBasis(format!("{} must be positive", e.name)));
            }
            if exact.contains(&v) {
                return Err(Error::InvalidBasis(format!(
                    "{} repeats an earlier value",
                    e.name
                )));
            }
            exact.push(v);
        }
        let approx = exact.iter().map(rational_to_f64).collect();
        Ok(Arc::new(FrequencyBasis {
            entries,
            independence_claimed,
            exact,
            approx,
        }))
    }

    /// Convenience constructor from `(name, decimal)` pairs; independence claimed.
    pub fn from_pairs<S: AsRef<str>, T: AsRef<str>>(pairs: &[(S, T)]) -> Result<Arc<Self>> {
        Self::new(
            pairs
                .iter()
                .map(|(n, v)| BasisEntry {
                    name: n.as_ref().to_string(),
                    value: v.as_ref().to_string(),
                })
                .collect(),
            true,
        )
    }

    /// The one-element basis `{one: 1}`.
    pub fn unit() -> Arc<Self> {
        Self::from_pairs(&[("one", "1")]).expect("valid basis")
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[BasisEntry] {
        &self.entries
    }

    pub fn independence_claimed(&self) -> bool {
        self.independence_claimed
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn exact_value(&self, i: usize) -> &BigRational {
        &self.exact[i]
    }

    pub fn approx_value(&self, i: usize) -> f64 {
        self.approx[i]
    }

    /// Exact value of `v` (relative to the declared decimal values).
    pub fn value_exact(&self, v: &FreqVector) -> BigRational {
        v.0.iter()
            .zip(&self.exact)
            .fold(BigRational::zero(), |acc, (c, b)| {
                if c.is_zero() {
                    acc
                } else {
                    acc + c * b
                }
            })
    }

    /// Floating value of `v` and a bound on its rounding error.
    pub fn value_approx(&self, v: &FreqVector) -> (f64, f64) {
        let mut sum = 0.0;
        let mut mag = 0.0;
        for (c, b) in v.0.iter().zip(&self.approx) {
            if c.is_zero() {
                continue;
            }
            let t = rational_to_f64(c) * b;
            sum += t;
            mag += t.abs();
        }
        (sum, 8.0 * f64::EPSILON * mag + f64::MIN_POSITIVE)
    }

    pub fn value(&self, v: &FreqVector) -> f64 {
        let (x, err) = self.value_approx(v);
        if x.abs() > 1e6 * err {
            x
        } else {
            // heavy cancellation
            rational_to_f64(&self.value_exact(v))
        }
    }

    /// Order two vectors by value; exact arithmetic only when the floating
    /// values are too close to separate.
    pub fn cmp_values(&self, a: &FreqVector, b: &FreqVector) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let (x, ex) = self.value_approx(a);
        let (y, ey) = self.value_approx(b);
        if (x - y).abs() > ex + ey {
            return x.partial_cmp(&y).unwrap_or(Ordering::Equal);
        }
        self.value_exact(a).cmp(&self.value_exact(b))
    }

    /// True when `a != b` but their values lie within [`NEAR_COLLISION`].
    pub fn near_collision(&self, a: &FreqVector, b: &FreqVector) -> bool {
        if a == b {
            return false;
        }
        let (x, ex) = self.value_approx(a);
        let (y, ey) = self.value_approx(b);
        if (x - y).abs() > ex + ey + 1e-30 {
            return false;
        }
        let d = (self.value_exact(a) - self.value_exact(b)).abs();
        d < parse_decimal("1e-40").expect("constant")
    }

    /// Find `value ≈ (p/q)·basis_i` with a small denominator.
    pub fn represent(&self, value: f64) -> Option<FreqVector> {
        if value == 0.0 {
            return Some(FreqVector::zero(self.dim()));
        }
        for (i, b) in self.approx.iter().enumerate() {
            let ratio = value / b;
            for q in 1..=24i64 {
                let p = (ratio * q as f64).round();
                if p == 0.0 {
                    continue;
                }
                let back = p / q as f64 * b;
                if (back - value).abs() <= 1e-12 * value.abs().max(1.0) {
                    let mut v = FreqVector::zero(self.dim());
                    v.0[i] = BigRational::new(BigInt::from(p as i64), BigInt::from(q));
                    return Some(v);
                }
            }
        }
        None
    }

    pub fn render(&self, v: &FreqVector) -> String {
        let mut parts = Vec::new();
        for (c, e) in v.0.iter().zip(&self.entries) {
            if c.is_zero() {
                continue;
            }
            if c.is_one() {
                parts.push(e.name.clone());
            } else {
                parts.push(format!("{}*{}", c, e.name));
            }
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Serialize for FrequencyBasis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

/// Rational coefficients of a frequency over a [`FrequencyBasis`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreqVector(pub Vec<BigRational>);

impl FreqVector {
    pub fn zero(dim: usize) -> Self {
        FreqVector(vec![BigRational::zero(); dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zero(dim);
        v.0[i] = BigRational::one();
        v
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        FreqVector(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
        )
    }

    /// Parse `"p/q"` strings.
    pub fn parse(coeffs: &[&str]) -> Result<Self> {
        coeffs
            .iter()
            .map(|c| parse_rational(c))
            .collect::<Result<Vec<_>>>()
            .map(FreqVector)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        FreqVector(self.0.iter().map(|c| c * k).collect())
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.scale(&BigRational::from_integer(k.into()))
    }

    pub fn half(&self) -> Self {
        self.scale(&BigRational::new(1.into(), 2.into()))
    }

    /// Common denominator of all coefficients.
    pub fn denominator_lcm(&self) -> BigInt {
        self.0
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

impl Add for &FreqVector {
    type Output = FreqVector;
    fn add(self, rhs: &FreqVector) -> FreqVector {
        FreqVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &FreqVector {
    type Output = FreqVector;
    fn sub(self, rhs: &FreqVector) -> FreqVector {
        FreqVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &FreqVector {
    type Output = FreqVector;
    fn neg(self) -> FreqVector {
        FreqVector(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for FreqVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_strings().join(", "))
    }
}

impl Serialize for FreqVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FreqVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(FreqVector)
    }
}

/// A frequency vector together with its floating value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub vector: FreqVector,
    pub value: f64,
}

impl Frequency {
    pub fn new(basis: &FrequencyBasis, vector: FreqVector) -> Self {
        let value = basis.value(&vector);
        Frequency { vector, value }
    }
}
