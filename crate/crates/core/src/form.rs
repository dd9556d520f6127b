//! The sine-product representation `C·e^{iaz}·∏ sin^{k_j}(α_j z + β_j)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisEntry, FreqVector, FrequencyBasis};
use crate::error::{Error, Result};

/// One factor `sin^k(αz + β)` with `α = π·value(alpha_over_pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineFactor {
    pub alpha_over_pi: FreqVector,
    pub beta: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone)]
pub struct SineProductForm {
    pub basis: Arc<FrequencyBasis>,
    pub c: Complex64,
    /// `a / 2π` as a frequency vector.
    pub shift: FreqVector,
    pub factors: Vec<SineFactor>,
}

impl SineProductForm {
    pub fn new(
        basis: Arc<FrequencyBasis>,
        c: Complex64,
        shift: FreqVector,
        factors: Vec<SineFactor>,
    ) -> Result<Self> {
        if shift.dim() != basis.dim() {
            return Err(Error::BasisMismatch("prefactor shift dimension".into()));
        }
        for f in &factors {
            if f.alpha_over_pi.dim() != basis.dim() {
                return Err(Error::BasisMismatch("factor frequency dimension".into()));
            }
            if basis.value(&f.alpha_over_pi) <= 0.0 {
                return Err(Error::BadFactor(format!(
                    "alpha must be positive: {}",
                    basis.render(&f.alpha_over_pi)
                )));
            }
            if f.multiplicity == 0 {
                return Err(Error::BadFactor("multiplicity must be positive".into()));
            }
        }
        Ok(SineProductForm {
            basis,
            c,
            shift,
            factors,
        })
    }

    /// Build from real parameters, locating `a/2π` and each `α/π` in the basis.
    pub fn from_real(
        basis: Arc<FrequencyBasis>,
        c: Complex64,
        a: f64,
        factors: &[(f64, f64, u32)],
    ) -> Result<Self> {
        let shift = basis.represent(a / (2.0 * PI)).ok_or_else(|| {
            Error::BasisMismatch(format!(
                "a/(2π) = {} is not a small rational multiple of a basis entry",
                a / (2.0 * PI)
            ))
        })?;
        let mut fs = Vec::new();
        for &(alpha, beta, k) in factors {
            if alpha <= 0.0 {
                return Err(Error::BadFactor(format!(
                    "alpha must be positive, got {alpha}"
                )));
            }
            let u = basis.represent(alpha / PI).ok_or_else(|| {
                Error::BasisMismatch(format!("alpha/π = {} is not representable", alpha / PI))
            })?;
            fs.push(SineFactor {
                alpha_over_pi: u,
                beta,
                multiplicity: k,
            });
        }
        Self::new(basis, c, shift, fs)
    }

    pub fn a(&self) -> f64 {
        2.0 * PI * self.basis.value(&self.shift)
    }

    pub fn alpha(&self, j: usize) -> f64 {
        PI * self.basis.value(&self.factors[j].alpha_over_pi)
    }

    /// Zero spacing `π/α_j`.
    pub fn period(&self, j: usize) -> f64 {
        1.0 / self.basis.value(&self.factors[j].alpha_over_pi)
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.multiplicity).sum()
    }

    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let mut v = self.c * (i * self.a() * z).exp();
        for (j, f) in self.factors.iter().enumerate() {
            let s = (self.alpha(j) * z + f.beta).sin();
            v *= s.powu(f.multiplicity);
        }
        v
    }

    /// Reduce every β into `[0, π)`, absorb the sign flips into `C`, and
    /// sort the factors by α.
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.factors {
            let m = (f.beta / PI).floor();
            f.beta -= m * PI;
            if f.beta >= PI {
                f.beta -= PI;
            }
            if (m as i64 * f.multiplicity as i64).rem_euclid(2) == 1 {
                out.c = -out.c;
            }
        }
        let basis = out.basis.clone();
        out.factors
            .sort_by(|x, y| basis.cmp_values(&x.alpha_over_pi, &y.alpha_over_pi));
        out
    }

    /// Distance from real `x` to the nearest real zero of the form.
    pub fn distance_to_zero(&self, x: f64) -> f64 {
        self.factors
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let alpha = self.alpha(j);
                let t = (alpha * x + f.beta) / PI;
                (t - t.round()).abs() * PI / alpha
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Human-readable rendering `C · e^{iaz} · ∏ sin^k(αz+β)`.
    pub fn render(&self) -> String {
        let mut s = format!(
            "({:.12} {:+.12}i) · e^{{i·{:.12}·z}}",
            self.c.re,
            self.c.im,
            self.a()
        );
        for (j, f) in self.factors.iter().enumerate() {
            let pow = if f.multiplicity > 1 {
                format!("^{}", f.multiplicity)
            } else {
                String::new()
            };
            s.push_str(&format!(
                " · sin{}({:.12}·z + {:.12})",
                pow,
                self.alpha(j),
                f.beta
            ));
        }
        s
    }

    pub fn to_json(&self) -> SineProductJson {
        SineProductJson {
            basis: self.basis.entries().to_vec(),
            c_re: self.c.re,
            c_im: self.c.im,
            a: self.a(),
            shift: self.shift.to_strings(),
            factors: self
                .factors
                .iter()
                .enumerate()
                .map(|(j, f)| FactorJson {
                    alpha: self.alpha(j),
                    alpha_over_pi: f.alpha_over_pi.to_strings(),
                    beta: f.beta,
                    multiplicity: f.multiplicity,
                })
                .collect(),
            rendering: self.render(),
        }
    }

    pub fn from_json(doc: &SineProductJson) -> Result<Self> {
        let basis = FrequencyBasis::new(doc.basis.clone(), true)?;
        let parse = |v: &[String]| {
            let refs: Vec<&str> = v.iter().map(String::as_str).collect();
            FreqVector::parse(&refs)
        };
        let factors = doc
            .factors
            .iter()
            .map(|f| {
                Ok(SineFactor {
                    alpha_over_pi: parse(&f.alpha_over_pi)?,
                    beta: f.beta,
                    multiplicity: f.multiplicity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            basis,
            Complex64::new(doc.c_re, doc.c_im),
            parse(&doc.shift)?,
            factors,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SineProductJson {
    pub basis: Vec<BasisEntry>,
    pub c_re: f64,
    pub c_im: f64,
    /// Informational; the exact value is `2π·shift`.
    #[serde(default)]
    pub a: f64,
    pub shift: Vec<String>,
    pub factors: Vec<FactorJson>,
    #[serde(default)]
    pub rendering: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FactorJson {
    #[serde(default)]
    pub alpha: f64,
    pub alpha_over_pi: Vec<String>,
    pub beta: f64,
    pub multiplicity: u32,
}
