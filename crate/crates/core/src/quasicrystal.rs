//! Atomic Fourier transform of the zero-counting measure, and an empirical
//! estimator from located zeros to check it against.
//!
//! Convention: `μ̂(γ) = Σ_λ a(λ) e^{−2πiγλ}` over zeros `λ` with
//! multiplicities `a(λ)`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{FreqVector, Frequency, FrequencyBasis};
use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::logderiv::{h_expansion, HExpansion, HalfPlane};
use crate::rootfinder::{locate_real_zeros_with, RootConfig, ZeroSet};

#[derive(Debug, Clone, PartialEq)]
pub struct MassAtom {
    pub gamma: Frequency,
    pub mass: Complex64,
}

/// Fourier transform of the zero-counting measure, truncated at `|γ| ≤ cutoff`.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    pub basis: Arc<FrequencyBasis>,
    /// Sorted by increasing `γ`.
    pub atoms: Vec<MassAtom>,
    pub cutoff: f64,
}

impl AtomicMeasure {
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// Mass at `γ`, zero when absent.
    pub fn mass(&self, v: &FreqVector) -> Complex64 {
        self.atoms
            .iter()
            .find(|a| &a.gamma.vector == v)
            .map(|a| a.mass)
            .unwrap_or_default()
    }

    pub fn mass_at_zero(&self) -> Complex64 {
        self.mass(&FreqVector::zero(self.basis.dim()))
    }

    /// `max |mass(−γ) − conj(mass(γ))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let map: HashMap<&FreqVector, Complex64> = self
            .atoms
            .iter()
            .map(|a| (&a.gamma.vector, a.mass))
            .collect();
        self.atoms
            .iter()
            .map(|a| {
                let mirror = map.get(&-&a.gamma.vector).copied().unwrap_or_default();
                (mirror - a.mass.conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Atom-wise sum; both measures must share a basis.
    pub fn add(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch("measures over different bases".into()));
        }
        let mut acc: HashMap<FreqVector, (Frequency, Complex64)> = HashMap::new();
        for a in self.atoms.iter().chain(&other.atoms) {
            acc.entry(a.gamma.vector.clone())
                .or_insert_with(|| (a.gamma.clone(), Complex64::default()))
                .1 += a.mass;
        }
        let atoms = acc
            .into_values()
            .filter(|(_, m)| m.norm() > 0.0)
            .map(|(gamma, mass)| MassAtom { gamma, mass })
            .collect();
        Ok(AtomicMeasure {
            basis: self.basis.clone(),
            atoms: sorted(&self.basis, atoms),
            cutoff: self.cutoff.min(other.cutoff),
        })
    }

    /// The `k` heaviest atoms; ties go to smaller `|γ|`, then negative `γ` first.
    pub fn top_k(&self, k: usize) -> Vec<&MassAtom> {
        let mut v: Vec<&MassAtom> = self.atoms.iter().collect();
        v.sort_by(|a, b| {
            let (ma, mb) = (bucket(a.mass.norm()), bucket(b.mass.norm()));
            mb.cmp(&ma)
                .then(a.gamma.value.abs().total_cmp(&b.gamma.value.abs()))
                .then(a.gamma.value.total_cmp(&b.gamma.value))
        });
        v.truncate(k);
        v
    }

    /// `(γ, |mass|)` rows for external plotting.
    pub fn plot_data(&self) -> String {
        let mut s = String::from("gamma,abs_mass\n");
        for a in &self.atoms {
            let _ = writeln!(s, "{:.17e},{:.17e}", a.gamma.value, a.mass.norm());
        }
        s
    }

    pub fn to_json(&self) -> AtomicMeasureJson {
        AtomicMeasureJson {
            cutoff: self.cutoff,
            atoms: self
                .atoms
                .iter()
                .map(|a| MassAtomJson {
                    gamma: a.gamma.vector.to_strings(),
                    value: a.gamma.value,
                    re: a.mass.re,
                    im: a.mass.im,
                })
                .collect(),
        }
    }
}

fn bucket(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn sorted(basis: &FrequencyBasis, mut atoms: Vec<MassAtom>) -> Vec<MassAtom> {
    atoms.sort_by(|a, b| basis.cmp_values(&a.gamma.vector, &b.gamma.vector));
    atoms
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomicMeasureJson {
    pub cutoff: f64,
    pub atoms: Vec<MassAtomJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassAtomJson {
    pub gamma: Vec<String>,
    pub value: f64,
    pub re: f64,
    pub im: f64,
}

/// Masses `i·h/2π` on the upper support, `−i·h/2π` on the lower support and
/// `i(h₀⁺ − h₀⁻)/2π` at the origin.
pub fn fourier_atoms(upper: &HExpansion, lower: &HExpansion) -> Result<AtomicMeasure> {
    if upper.cutoff != lower.cutoff {
        return Err(Error::CutoffMismatch(upper.cutoff, lower.cutoff));
    }
    if upper.basis != lower.basis {
        return Err(Error::BasisMismatch(
            "expansions over different bases".into(),
        ));
    }
    let basis = upper.basis.clone();
    let (up, lo) = match (upper.halfplane, lower.halfplane) {
        (HalfPlane::Upper, HalfPlane::Lower) => (upper, lower),
        (HalfPlane::Lower, HalfPlane::Upper) => (lower, upper),
        _ => {
            return Err(Error::InvalidArgument(
                "need one expansion per half-plane".into(),
            ))
        }
    };
    let i = Complex64::new(0.0, 1.0);
    let tau = 2.0 * std::f64::consts::PI;
    let mut atoms = Vec::with_capacity(up.atoms.len() + lo.atoms.len() + 1);
    for a in &up.atoms {
        atoms.push(MassAtom {
            gamma: a.gamma.clone(),
            mass: i * a.h / tau,
        });
    }
    for a in &lo.atoms {
        atoms.push(MassAtom {
            gamma: a.gamma.clone(),
            mass: -i * a.h / tau,
        });
    }
    let m0 = i * (up.h0 - lo.h0) / tau;
    if m0.norm() > 0.0 {
        let zero = FreqVector::zero(basis.dim());
        atoms.push(MassAtom {
            gamma: Frequency::new(&basis, zero),
            mass: m0,
        });
    }
    Ok(AtomicMeasure {
        atoms: sorted(&basis, atoms),
        basis,
        cutoff: up.cutoff,
    })
}

/// Even window on `[−1, 1]` used by the empirical estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Weight {
    /// `1 − |t|`.
    #[default]
    Fejer,
    /// `exp(−8t²)`.
    Gaussian,
}

impl Weight {
    pub fn name(self) -> &'static str {
        match self {
            Weight::Fejer => "fejer",
            Weight::Gaussian => "gaussian",
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        if t.abs() > 1.0 {
            return 0.0;
        }
        match self {
            Weight::Fejer => 1.0 - t.abs(),
            Weight::Gaussian => (-8.0 * t * t).exp(),
        }
    }

    /// `∫₋₁¹ w`.
    pub fn integral(self) -> f64 {
        match self {
            Weight::Fejer => 1.0,
            Weight::Gaussian => {
                // composite Simpson; the integrand is smooth
                let n = 4000;
                let h = 2.0 / n as f64;
                let mut s = self.eval(-1.0) + self.eval(1.0);
                for k in 1..n {
                    let c = if k % 2 == 1 { 4.0 } else { 2.0 };
                    s += c * self.eval(-1.0 + k as f64 * h);
                }
                s * h / 3.0
            }
        }
    }
}

impl std::str::FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fejer" => Ok(Weight::Fejer),
            "gaussian" => Ok(Weight::Gaussian),
            _ => Err(Error::InvalidArgument(format!("unknown weight {s:?}"))),
        }
    }
}

/// Half-width `L` of the largest symmetric window inside the zero set's window.
pub fn half_width(zeros: &ZeroSet) -> f64 {
    (-zeros.window.0).min(zeros.window.1)
}

/// `(1 / (L·∫w)) Σ_λ a(λ) w(λ/L) e^{−2πiγλ}` over the zeros in `[−L, L]`.
pub fn empirical_atom(zeros: &ZeroSet, gamma: f64, weight: Weight) -> Result<Complex64> {
    if !zeros.certified {
        return Err(Error::RequiresCertification);
    }
    let l = half_width(zeros);
    if !(l > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window {:?} does not contain the origin",
            zeros.window
        )));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut sum = Complex64::default();
    for z in &zeros.zeros {
        let w = weight.eval(z.location / l);
        if w > 0.0 {
            sum += Complex64::from_polar(w * z.multiplicity as f64, -tau * gamma * z.location);
        }
    }
    Ok(sum / (l * weight.integral()))
}

/// Zeros per unit length over the zero set's window.
pub fn empirical_density(zeros: &ZeroSet) -> f64 {
    zeros.total_multiplicity() as f64 / (zeros.window.1 - zeros.window.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffractionEntry {
    pub gamma: Vec<String>,
    pub gamma_value: f64,
    pub formula_mass: Complex64,
    pub empirical_mass: Complex64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffractionReport {
    pub entries: Vec<DiffractionEntry>,
    #[serde(rename = "window_L")]
    pub window_l: f64,
    pub weight_name: String,
    pub cutoff: f64,
}

impl DiffractionReport {
    pub fn max_abs_error(&self) -> f64 {
        self.entries.iter().map(|e| e.abs_error).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("gamma,formula_re,formula_im,empirical_re,empirical_im,abs_error\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e}",
                e.gamma_value,
                e.formula_mass.re,
                e.formula_mass.im,
                e.empirical_mass.re,
                e.empirical_mass.im,
                e.abs_error
            );
        }
        s
    }

    /// `(γ, |formula|, |empirical|)` rows.
    pub fn plot_data(&self) -> String {
        let mut s = String::from("gamma,abs_formula,abs_empirical\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e}",
                e.gamma_value,
                e.formula_mass.norm(),
                e.empirical_mass.norm()
            );
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct DiffractionConfig {
    pub cutoff: f64,
    pub eta: f64,
    pub weight: Weight,
    pub roots: RootConfig,
}

impl Default for DiffractionConfig {
    fn default() -> Self {
        DiffractionConfig {
            cutoff: 50.0,
            eta: 1.0,
            weight: Weight::Fejer,
            roots: RootConfig::default(),
        }
    }
}

/// Tabulate formula against empirical masses for the `top_k` heaviest
/// atoms plus the origin.
pub fn compare_diffraction(q: &ExpSum, l: f64, top_k: usize) -> Result<DiffractionReport> {
    compare_diffraction_with(q, l, top_k, &DiffractionConfig::default())
}

pub fn compare_diffraction_with(
    q: &ExpSum,
    l: f64,
    top_k: usize,
    cfg: &DiffractionConfig,
) -> Result<DiffractionReport> {
    let upper = h_expansion(q, HalfPlane::Upper, cfg.cutoff)?;
    let lower = h_expansion(q, HalfPlane::Lower, cfg.cutoff)?;
    let measure = fourier_atoms(&upper, &lower)?;
    let mut report = DiffractionReport {
        entries: Vec::new(),
        window_l: l,
        weight_name: cfg.weight.name().into(),
        cutoff: cfg.cutoff,
    };
    if measure.is_empty() {
        return Ok(report);
    }
    let zeros = locate_real_zeros_with(q, -l, l, cfg.eta, &cfg.roots)?;
    report.entries = diffraction_entries(&measure, &zeros, top_k, cfg.weight)?;
    Ok(report)
}

/// Same comparison against an already located zero set.
pub fn diffraction_entries(
    measure: &AtomicMeasure,
    zeros: &ZeroSet,
    top_k: usize,
    weight: Weight,
) -> Result<Vec<DiffractionEntry>> {
    let mut chosen: Vec<&MassAtom> = measure.top_k(top_k);
    if let Some(z) = measure.atoms.iter().find(|a| a.gamma.vector.is_zero()) {
        if !chosen.iter().any(|a| a.gamma.vector.is_zero()) {
            chosen.insert(0, z);
        }
    }
    chosen.sort_by(|a, b| a.gamma.value.total_cmp(&b.gamma.value));
    chosen
        .par_iter()
        .map(|a| {
            let emp = empirical_atom(zeros, a.gamma.value, weight)?;
            Ok(DiffractionEntry {
                gamma: a.gamma.vector.to_strings(),
                gamma_value: a.gamma.value,
                formula_mass: a.mass,
                empirical_mass: emp,
                abs_error: (a.mass - emp).norm(),
            })
        })
        .collect()
}
