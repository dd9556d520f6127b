//! Test families: expanded sine products and secular determinants
//! `det(I − e^{ixL}U)` of unitary scattering matrices.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{
    format_decimal, parse_decimal, pi_rational, BasisEntry, FreqVector, FrequencyBasis,
};
use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::form::SineProductForm;
use crate::rootfinder::{certify_real_rooted, Certification};

pub const SQRT2_DECIMAL: &str =
    "1.41421356237309504880168872420969807856967187537694807317667973799073248";
pub const SQRT3_DECIMAL: &str =
    "1.73205080756887729352744634150587236694280525381038062805580697945193302";
pub const SQRT5_DECIMAL: &str =
    "2.23606797749978969640917366873127623544061835961152572427089724541052093";
pub const SQRT7_DECIMAL: &str =
    "2.64575131106459059050161575363926042571025918308245018036833445920106882";
pub const SQRT11_DECIMAL: &str =
    "3.31662479035539984911493273667068668392708854558935359705868214611648464";

/// Decimal digits kept for derived basis values.
const DIGITS: usize = 64;

pub const MAX_SECULAR_DIM: usize = 6;

/// Square complex matrix stored by rows.
pub type Matrix = Vec<Vec<Complex64>>;

/// `sin(αz + β)` as the two-term sum `(e^{i(αz+β)} − e^{−i(αz+β)})/(2i)`.
fn sine_terms(alpha_over_pi: &FreqVector, beta: f64) -> Vec<(FreqVector, Complex64)> {
    let half = alpha_over_pi.half();
    let i2 = Complex64::new(0.0, 2.0);
    vec![
        (half.clone(), Complex64::from_polar(1.0, beta) / i2),
        (-&half, -Complex64::from_polar(1.0, -beta) / i2),
    ]
}

/// Expand `C·e^{iaz}·∏ sin^{k_j}(α_j z + β_j)` into an exponential sum.
pub fn build_sine_product(form: &SineProductForm) -> Result<ExpSum> {
    let basis = form.basis.clone();
    if form.shift.dim() != basis.dim() {
        return Err(Error::BasisMismatch("prefactor shift dimension".into()));
    }
    let mut q = ExpSum::constant(basis.clone(), Complex64::new(1.0, 0.0))?;
    for f in &form.factors {
        if f.alpha_over_pi.dim() != basis.dim() {
            return Err(Error::BasisMismatch("factor frequency dimension".into()));
        }
        let s = ExpSum::new(basis.clone(), sine_terms(&f.alpha_over_pi, f.beta))?;
        q = q.multiply(&s.pow(f.multiplicity)?)?;
    }
    Ok(q.shift(&form.shift)?.scale(form.c))
}

/// Haar-like random unitary: modified Gram–Schmidt on a seeded complex
/// Gaussian matrix.
pub fn random_unitary(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    // Two passes keep the defect at rounding level.
    for _ in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[k];
                let v = &mut rest[0];
                let proj: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
            let norm = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for x in &mut cols[j] {
                *x /= norm;
            }
        }
    }
    (0..n)
        .map(|r| (0..n).map(|c| cols[c][r]).collect())
        .collect()
}

/// Largest entry of `|U*U − I|`.
pub fn unitarity_defect(u: &Matrix) -> f64 {
    let n = u.len();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let s: Complex64 = (0..n).map(|r| u[r][a].conj() * u[r][b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &Matrix) -> Complex64 {
    let n = m.len();
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap_or(col);
        if a[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let t = a[col][c];
                a[r][c] -= f * t;
            }
        }
    }
    det
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecularSpec {
    pub n: usize,
    /// Edge lengths as decimal strings.
    pub lengths: Vec<String>,
    pub unitary: Matrix,
    pub seed: u64,
}

impl SecularSpec {
    /// Lengths with a seeded random unitary.
    pub fn new(lengths: Vec<String>, seed: u64) -> Result<Self> {
        let n = lengths.len();
        let spec = SecularSpec {
            n,
            unitary: random_unitary(n, seed),
            lengths,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Lengths `2π·√p` for `p = 1, 2, 3, 5, 7, 11`, so the basis entries
    /// `ℓ/2π` are square roots of distinct squarefree integers.
    pub fn standard_incommensurable(n: usize, seed: u64) -> Self {
        let roots = [
            "1",
            SQRT2_DECIMAL,
            SQRT3_DECIMAL,
            SQRT5_DECIMAL,
            SQRT7_DECIMAL,
            SQRT11_DECIMAL,
        ];
        assert!(
            (1..=MAX_SECULAR_DIM).contains(&n),
            "dimension must be in 1..=6"
        );
        let two_pi = pi_rational() * BigRational::from_integer(2.into());
        let lengths = roots[..n]
            .iter()
            .map(|r| format_decimal(&(parse_decimal(r).expect("constant") * &two_pi), DIGITS))
            .collect();
        SecularSpec::new(lengths, seed).expect("valid lengths")
    }

    /// Copy with the matrix multiplied by `factor`; no longer unitary unless `|factor| = 1`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for row in &mut s.unitary {
            for x in row {
                *x *= factor;
            }
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_SECULAR_DIM).contains(&self.n) {
            return Err(Error::InvalidArgument(format!(
                "secular dimension {} outside 1..=6",
                self.n
            )));
        }
        if self.lengths.len() != self.n
            || self.unitary.len() != self.n
            || self.unitary.iter().any(|r| r.len() != self.n)
        {
            return Err(Error::InvalidArgument(
                "secular spec shapes disagree with n".into(),
            ));
        }
        for l in &self.lengths {
            if parse_decimal(l)? <= BigRational::from_integer(0.into()) {
                return Err(Error::InvalidArgument(format!(
                    "length {l} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.unitary)
    }

    /// Basis `{l1: ℓ_1/2π, …}`.
    pub fn basis(&self) -> Result<Arc<FrequencyBasis>> {
        let two_pi = pi_rational() * BigRational::from_integer(2.into());
        let entries = self
            .lengths
            .iter()
            .enumerate()
            .map(|(j, l)| {
                Ok(BasisEntry {
                    name: format!("l{}", j + 1),
                    value: format_decimal(&(parse_decimal(l)? / &two_pi), DIGITS),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FrequencyBasis::new(entries, true)
    }

    pub fn to_json(&self) -> SecularSpecJson {
        SecularSpecJson {
            n: self.n,
            lengths: self.lengths.clone(),
            unitary: self
                .unitary
                .iter()
                .flatten()
                .map(|z| [z.re, z.im])
                .collect(),
            seed: self.seed,
        }
    }

    pub fn from_json(doc: &SecularSpecJson) -> Result<Self> {
        if doc.unitary.len() != doc.n * doc.n {
            return Err(Error::InvalidArgument(format!(
                "expected {} matrix entries, got {}",
                doc.n * doc.n,
                doc.unitary.len()
            )));
        }
        let unitary = doc
            .unitary
            .chunks(doc.n.max(1))
            .map(|row| row.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            .collect();
        let spec = SecularSpec {
            n: doc.n,
            lengths: doc.lengths.clone(),
            unitary,
            seed: doc.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Serialized secular spec; the matrix is row-major `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SecularSpecJson {
    pub n: usize,
    pub lengths: Vec<String>,
    pub unitary: Vec<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
}

/// `det(I − e^{ixL}U)` expanded over index subsets, without checking roots.
pub fn secular_expsum_uncertified(spec: &SecularSpec) -> Result<ExpSum> {
    spec.validate()?;
    let basis = spec.basis()?;
    let n = spec.n;
    let mut terms = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let minor: Matrix = idx
            .iter()
            .map(|&r| idx.iter().map(|&c| spec.unitary[r][c]).collect())
            .collect();
        let sign = if idx.len() % 2 == 1 { -1.0 } else { 1.0 };
        let coeffs: Vec<i64> = (0..n).map(|j| (mask >> j & 1) as i64).collect();
        terms.push((FreqVector::from_ints(&coeffs), sign * determinant(&minor)));
    }
    ExpSum::new(basis, terms)
}

/// Probe window holding roughly `count` zeros, offset so it is not symmetric
/// about the origin.
pub fn probe_window(q: &ExpSum, count: f64) -> (f64, f64) {
    let half = 0.5 * count / q.bandwidth().max(1e-9);
    (-half - 0.123, half + 0.0771)
}

/// Secular sum together with the certificate from a probe window.
pub fn secular_expsum_certified(spec: &SecularSpec) -> Result<(ExpSum, Certification)> {
    let q = secular_expsum_uncertified(spec)?;
    let (lo, hi) = probe_window(&q, 40.0);
    let cert = certify_real_rooted(&q, lo, hi, 1.0)?;
    if !cert.certified {
        return Err(Error::NotRealRooted {
            rect_count: cert.rect_count,
            real_count: cert.real_count,
        });
    }
    Ok((q, cert))
}

/// Secular sum, returned only when its zeros on a probe window are real.
pub fn secular_expsum(spec: &SecularSpec) -> Result<ExpSum> {
    secular_expsum_certified(spec).map(|(q, _)| q)
}

/// `a/(2π)` for a real `a`, if it sits in the basis.
pub fn shift_for(basis: &FrequencyBasis, a: f64) -> Result<FreqVector> {
    basis.represent(a / (2.0 * PI)).ok_or_else(|| {
        Error::BasisMismatch(format!("a/(2π) = {} is not representable", a / (2.0 * PI)))
    })
}
