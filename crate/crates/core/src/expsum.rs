//! Finite exponential sums `Σ q_ω e^{2πiωz}` with exact frequencies.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisEntry, FreqVector, Frequency, FrequencyBasis};
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub freq: FreqVector,
    /// Floating value of `freq`.
    pub value: f64,
    pub coeff: Complex64,
}

/// An exponential sum over a shared frequency basis. Terms are kept sorted
/// by increasing frequency value, with distinct vectors and nonzero
/// coefficients.
#[derive(Debug, Clone)]
pub struct ExpSum {
    basis: Arc<FrequencyBasis>,
    terms: Vec<Term>,
    /// `(2πω, ln|q|, arg q)` per term, for evaluation.
    polar: Vec<(f64, f64, f64)>,
}

fn assemble(basis: Arc<FrequencyBasis>, terms: Vec<Term>) -> ExpSum {
    let polar = terms
        .iter()
        .map(|t| (TWO_PI * t.value, t.coeff.norm().ln(), t.coeff.arg()))
        .collect();
    ExpSum {
        basis,
        terms,
        polar,
    }
}

/// A complex value stored as `mantissa · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn to_complex(self) -> Result<Complex64> {
        if self.mantissa == Complex64::new(0.0, 0.0) {
            return Ok(self.mantissa);
        }
        let log_mag = self.mantissa.norm().ln() + self.log_scale;
        if log_mag > 709.0 {
            return Err(Error::Overflow {
                log_magnitude: log_mag,
                phase: self.mantissa.arg(),
            });
        }
        Ok(self.mantissa * self.log_scale.exp())
    }

    pub fn log_abs(self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// `self / other` without leaving the floating range.
    pub fn ratio(self, other: Scaled) -> Complex64 {
        self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp()
    }
}

/// Neumaier-compensated complex accumulator.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    re: f64,
    im: f64,
    c_re: f64,
    c_im: f64,
}

impl CompensatedSum {
    fn add(&mut self, z: Complex64) {
        fn step(sum: &mut f64, comp: &mut f64, x: f64) {
            let t = *sum + x;
            if sum.abs() >= x.abs() {
                *comp += (*sum - t) + x;
            } else {
                *comp += (x - t) + *sum;
            }
            *sum = t;
        }
        step(&mut self.re, &mut self.c_re, z.re);
        step(&mut self.im, &mut self.c_im, z.im);
    }

    fn total(self) -> Complex64 {
        Complex64::new(self.re + self.c_re, self.im + self.c_im)
    }
}

fn merge_key_coeffs(
    basis: &FrequencyBasis,
    parts: impl IntoIterator<Item = (FreqVector, Complex64)>,
) -> Vec<Term> {
    let mut acc: HashMap<FreqVector, (CompensatedSum, f64, usize)> = HashMap::new();
    for (v, c) in parts {
        let e = acc.entry(v).or_default();
        e.0.add(c);
        e.1 += c.norm();
        e.2 += 1;
    }
    let mut terms: Vec<Term> = acc
        .into_iter()
        .filter_map(|(freq, (sum, mag, count))| {
            let coeff = sum.total();
            let cancelled =
                coeff.norm() == 0.0 || (count > 1 && coeff.norm() <= 4.0 * f64::EPSILON * mag);
            (!cancelled).then(|| {
                let value = basis.value(&freq);
                Term { freq, value, coeff }
            })
        })
        .collect();
    terms.sort_by(|a, b| basis.cmp_values(&a.freq, &b.freq));
    terms
}

impl ExpSum {
    /// Build a sum, merging duplicate frequencies and dropping zero
    /// coefficients. An empty result is an error.
    pub fn new(basis: Arc<FrequencyBasis>, terms: Vec<(FreqVector, Complex64)>) -> Result<Self> {
        let q = Self::new_allow_empty(basis, terms)?;
        if q.terms.is_empty() {
            return Err(Error::EmptySum);
        }
        Ok(q)
    }

    /// Like [`ExpSum::new`] but the zero sum is accepted.
    pub fn new_allow_empty(
        basis: Arc<FrequencyBasis>,
        terms: Vec<(FreqVector, Complex64)>,
    ) -> Result<Self> {
        for (v, _) in &terms {
            if v.dim() != basis.dim() {
                return Err(Error::BasisMismatch(format!(
                    "frequency {} has {} coefficients, basis has {}",
                    v,
                    v.dim(),
                    basis.dim()
                )));
            }
        }
        let terms = merge_key_coeffs(&basis, terms);
        Ok(assemble(basis, terms))
    }

    pub fn zero(basis: Arc<FrequencyBasis>) -> Self {
        assemble(basis, Vec::new())
    }

    pub fn constant(basis: Arc<FrequencyBasis>, c: Complex64) -> Result<Self> {
        let dim = basis.dim();
        Self::new(basis, vec![(FreqVector::zero(dim), c)])
    }

    pub fn basis(&self) -> &Arc<FrequencyBasis> {
        &self.basis
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: &FreqVector) -> Option<Complex64> {
        self.terms.iter().find(|t| &t.freq == v).map(|t| t.coeff)
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.terms.is_empty() {
            Err(Error::EmptySum)
        } else {
            Ok(())
        }
    }

    /// `Σ q e^{2πiωz}` as mantissa and log-scale; the dominant exponential is
    /// factored out first so large `|Im z|` does not overflow.
    pub fn evaluate_scaled(&self, z: Complex64) -> Scaled {
        if self.terms.is_empty() {
            return Scaled {
                mantissa: Complex64::new(0.0, 0.0),
                log_scale: 0.0,
            };
        }
        let mut log_scale = f64::NEG_INFINITY;
        for &(w, lc, _) in &self.polar {
            log_scale = log_scale.max(lc - w * z.im);
        }
        let mut sum = CompensatedSum::default();
        for &(w, lc, arg) in &self.polar {
            sum.add(Complex64::from_polar(
                (lc - w * z.im - log_scale).exp(),
                w * z.re + arg,
            ));
        }
        Scaled {
            mantissa: sum.total(),
            log_scale,
        }
    }

    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        self.evaluate_scaled(z).to_complex()
    }

    /// Sum of `|q_ω e^{2πiωz}|`, the natural scale for residual tests.
    pub fn magnitude_scale(&self, z: Complex64) -> f64 {
        self.polar
            .iter()
            .map(|&(w, lc, _)| (lc - w * z.im).exp())
            .sum()
    }

    /// Term-wise derivative in `z`.
    pub fn derivative(&self) -> ExpSum {
        let terms = self
            .terms
            .iter()
            .filter(|t| !t.freq.is_zero())
            .map(|t| Term {
                freq: t.freq.clone(),
                value: t.value,
                coeff: t.coeff * Complex64::new(0.0, TWO_PI * t.value),
            })
            .collect();
        assemble(self.basis.clone(), terms)
    }

    /// `n`-th derivative.
    pub fn nth_derivative(&self, n: usize) -> ExpSum {
        (0..n).fold(self.clone(), |q, _| q.derivative())
    }

    fn same_basis(&self, other: &ExpSum) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch(
                "operands use different frequency bases".into(),
            ))
        }
    }

    pub fn multiply(&self, other: &ExpSum) -> Result<ExpSum> {
        self.same_basis(other)?;
        let parts = self.terms.iter().flat_map(|a| {
            other
                .terms
                .iter()
                .map(move |b| (&a.freq + &b.freq, a.coeff * b.coeff))
        });
        let terms = merge_key_coeffs(&self.basis, parts);
        Ok(assemble(self.basis.clone(), terms))
    }

    pub fn add(&self, other: &ExpSum) -> Result<ExpSum> {
        self.same_basis(other)?;
        let parts = self
            .terms
            .iter()
            .chain(&other.terms)
            .map(|t| (t.freq.clone(), t.coeff));
        Ok(assemble(
            self.basis.clone(),
            merge_key_coeffs(&self.basis, parts),
        ))
    }

    pub fn scale(&self, c: Complex64) -> ExpSum {
        if c == Complex64::new(0.0, 0.0) {
            return ExpSum::zero(self.basis.clone());
        }
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff * c,
                ..t.clone()
            })
            .collect();
        assemble(self.basis.clone(), terms)
    }

    /// Multiply by `e^{2πi·shift·z}`.
    pub fn shift(&self, shift: &FreqVector) -> Result<ExpSum> {
        if shift.dim() != self.basis.dim() {
            return Err(Error::BasisMismatch("shift vector dimension".into()));
        }
        let parts = self.terms.iter().map(|t| (&t.freq + shift, t.coeff));
        Ok(assemble(
            self.basis.clone(),
            merge_key_coeffs(&self.basis, parts),
        ))
    }

    pub fn pow(&self, k: u32) -> Result<ExpSum> {
        let mut acc = ExpSum::constant(self.basis.clone(), Complex64::new(1.0, 0.0))?;
        for _ in 0..k {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    /// Smallest and largest frequency of the spectrum.
    pub fn spectrum_extremes(&self) -> Result<(Frequency, Frequency)> {
        let first = self.terms.first().ok_or(Error::EmptySum)?;
        let last = self.terms.last().ok_or(Error::EmptySum)?;
        Ok((
            Frequency {
                vector: first.freq.clone(),
                value: first.value,
            },
            Frequency {
                vector: last.freq.clone(),
                value: last.value,
            },
        ))
    }

    /// Spectrum width `ω⁺ − ω⁻`.
    pub fn bandwidth(&self) -> f64 {
        match (self.terms.first(), self.terms.last()) {
            (Some(a), Some(b)) => self.basis.value(&(&b.freq - &a.freq)),
            _ => 0.0,
        }
    }

    /// Pairs of distinct spectrum vectors whose values nearly coincide.
    pub fn independence_warnings(&self) -> Vec<String> {
        self.terms
            .windows(2)
            .filter(|w| self.basis.near_collision(&w[0].freq, &w[1].freq))
            .map(|w| {
                format!(
                    "frequencies {} and {} differ by less than 1e-40; basis may not be independent",
                    self.basis.render(&w[0].freq),
                    self.basis.render(&w[1].freq)
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> ExpSumJson {
        ExpSumJson {
            basis: self.basis.entries().to_vec(),
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    freq: t.freq.to_strings(),
                    re: t.coeff.re,
                    im: t.coeff.im,
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &ExpSumJson) -> Result<ExpSum> {
        let basis = FrequencyBasis::new(doc.basis.clone(), true)?;
        let terms = doc
            .terms
            .iter()
            .map(|t| {
                let refs: Vec<&str> = t.freq.iter().map(String::as_str).collect();
                Ok((FreqVector::parse(&refs)?, Complex64::new(t.re, t.im)))
            })
            .collect::<Result<Vec<_>>>()?;
        ExpSum::new(basis, terms)
    }
}

/// Serialized form: `{"basis": [{"name","value"}], "terms": [{"freq","re","im"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExpSumJson {
    pub basis: Vec<BasisEntry>,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub freq: Vec<String>,
    pub re: f64,
    pub im: f64,
}

impl Serialize for ExpSum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExpSum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ExpSumJson::deserialize(d)?;
        ExpSum::from_json(&doc).map_err(serde::de::Error::custom)
    }
}

/// `sin(πz)` over `{one: 1}`.
pub fn sin_pi_z() -> ExpSum {
    let basis = FrequencyBasis::unit();
    let half = FreqVector::parse(&["1/2"]).expect("literal");
    ExpSum::new(
        basis,
        vec![
            (half.clone(), Complex64::new(0.0, -0.5)),
            (-&half, Complex64::new(0.0, 0.5)),
        ],
    )
    .expect("nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn half() -> FreqVector {
        FreqVector::parse(&["1/2"]).unwrap()
    }

    #[test]
    fn sin_from_euler_terms() {
        let q = sin_pi_z();
        assert_eq!(q.len(), 2);
        let v = q.evaluate(c(0.5, 0.0)).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cancellation_gives_empty_sum() {
        let b = FrequencyBasis::unit();
        let r = ExpSum::new(b, vec![(half(), c(1.0, 0.0)), (half(), c(-1.0, 0.0))]);
        assert!(matches!(r, Err(Error::EmptySum)));
    }

    #[test]
    fn duplicates_merge() {
        let b = FrequencyBasis::unit();
        let q = ExpSum::new(b, vec![(half(), c(1.0, 0.0)), (half(), c(2.0, 0.0))]).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.terms()[0].coeff, c(3.0, 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let b = FrequencyBasis::unit();
        let r = ExpSum::new(b, vec![(FreqVector::from_ints(&[1, 0]), c(1.0, 0.0))]);
        assert!(matches!(r, Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn constant_evaluates_to_itself() {
        let q = ExpSum::constant(FrequencyBasis::unit(), c(2.0, -1.0)).unwrap();
        for z in [c(0.0, 0.0), c(3.0, 7.0), c(-2.0, -40.0)] {
            assert_eq!(q.evaluate(z).unwrap(), c(2.0, -1.0));
        }
    }

    #[test]
    fn derivative_of_sine_and_constant() {
        let d = sin_pi_z().derivative();
        // π cos(πz) at z = 0 is π
        assert!((d.evaluate(c(0.0, 0.0)).unwrap() - c(PI, 0.0)).norm() < 1e-14);
        let k = ExpSum::constant(FrequencyBasis::unit(), c(5.0, 0.0))
            .unwrap()
            .derivative();
        assert!(k.is_empty());
        assert_eq!(k.evaluate(c(1.0, 1.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn sine_squared_expansion() {
        let s = sin_pi_z();
        let sq = s.multiply(&s).unwrap();
        assert_eq!(sq.len(), 3);
        let zero = FreqVector::from_ints(&[0]);
        let one = FreqVector::from_ints(&[1]);
        assert!((sq.coeff(&zero).unwrap() - c(0.5, 0.0)).norm() < 1e-16);
        assert!((sq.coeff(&one).unwrap() - c(-0.25, 0.0)).norm() < 1e-16);
        assert!((sq.coeff(&-&one).unwrap() - c(-0.25, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn overflow_reported_in_log_space() {
        let q = sin_pi_z();
        match q.evaluate(c(0.0, -400.0)) {
            Err(Error::Overflow { log_magnitude, .. }) => {
                // |sin(πz)| ≈ e^{400π}/2
                assert!((log_magnitude - (400.0 * PI - 2f64.ln())).abs() < 1e-9);
            }
            other => panic!("expected overflow, got {other:?}"),
        }
        let s = q.evaluate_scaled(c(0.0, -400.0));
        assert!(s.log_abs().is_finite());
    }
}
