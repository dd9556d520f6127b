//! Half-plane Dirichlet expansions of `Q'/Q` and the linear-growth test.
//!
//! In the upper half-plane `Q = e^{2πiω⁻z} Σ_g p_g e^{2πigz}` with `g ≥ 0`
//! running over differences `ω − ω⁻`. Matching coefficients in
//! `Q' = (Q'/Q)·Q` gives, for every `g` of the additive semigroup generated
//! by those differences,
//!
//! ```text
//! h_g · p_0 = 2πi·g·p_g − Σ_{d ≠ 0} h_{g−d} · p_d
//! ```
//!
//! with `h_0 = 2πiω⁻`. The lower half-plane is the mirror image anchored at
//! `ω⁺`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisEntry, FreqVector, Frequency, FrequencyBasis};
use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::fixed::{FixedComplex, FixedContext};
use crate::form::SineProductForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HalfPlane {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    Double,
    /// Binary fixed point with this many fractional bits.
    Extended(u32),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HConfig {
    pub drop_threshold: f64,
    pub overflow_limit: f64,
    pub precision: Precision,
    pub max_elements: usize,
}

impl Default for HConfig {
    fn default() -> Self {
        HConfig {
            drop_threshold: 1e-30,
            overflow_limit: 1e300,
            precision: Precision::Double,
            max_elements: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub gamma: Frequency,
    pub h: Complex64,
}

/// Truncated expansion `Q'/Q = h_0 + Σ h_γ e^{2πiγz}` valid in one half-plane.
#[derive(Debug, Clone)]
pub struct HExpansion {
    pub basis: Arc<FrequencyBasis>,
    pub halfplane: HalfPlane,
    pub h0: Complex64,
    /// `ω⁻` for the upper half-plane, `ω⁺` for the lower.
    pub anchor: Frequency,
    /// Sorted by increasing `|γ|`.
    pub atoms: Vec<Atom>,
    pub cutoff: f64,
    pub warnings: Vec<String>,
}

impl HExpansion {
    pub fn atom(&self, v: &FreqVector) -> Option<Complex64> {
        self.atoms
            .iter()
            .find(|a| &a.gamma.vector == v)
            .map(|a| a.h)
    }

    pub fn atom_map(&self) -> HashMap<FreqVector, Complex64> {
        self.atoms
            .iter()
            .map(|a| (a.gamma.vector.clone(), a.h))
            .collect()
    }

    /// `Σ |h_γ|` over all stored atoms.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.h.norm()).sum()
    }

    /// Largest `|h − h'|` over the union of both atom supports.
    pub fn max_discrepancy(&self, other: &HExpansion) -> f64 {
        let mine = self.atom_map();
        let theirs = other.atom_map();
        let mut worst = (self.h0 - other.h0).norm();
        for (v, h) in &mine {
            let o = theirs.get(v).copied().unwrap_or_default();
            worst = worst.max((h - o).norm());
        }
        for (v, h) in &theirs {
            if !mine.contains_key(v) {
                worst = worst.max(h.norm());
            }
        }
        worst
    }

    pub fn to_json(&self) -> HExpansionJson {
        HExpansionJson {
            basis: self.basis.entries().to_vec(),
            halfplane: self.halfplane,
            h0_re: self.h0.re,
            h0_im: self.h0.im,
            anchor: self.anchor.clone(),
            cutoff: self.cutoff,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    gamma: a.gamma.vector.to_strings(),
                    value: a.gamma.value,
                    re: a.h.re,
                    im: a.h.im,
                })
                .collect(),
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HExpansionJson {
    pub basis: Vec<BasisEntry>,
    pub halfplane: HalfPlane,
    pub h0_re: f64,
    pub h0_im: f64,
    pub anchor: Frequency,
    pub cutoff: f64,
    pub atoms: Vec<AtomJson>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomJson {
    pub gamma: Vec<String>,
    pub value: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapKey(f64, usize);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// All nonzero ℕ-combinations of the differences `ω − ω_anchor`, with
/// `|value| ≤ cutoff`, ordered by increasing `|value|`.
pub fn difference_semigroup(
    basis: &FrequencyBasis,
    spectrum: &[FreqVector],
    anchor: Anchor,
    cutoff: f64,
) -> Result<Vec<Frequency>> {
    difference_semigroup_limited(
        basis,
        spectrum,
        anchor,
        cutoff,
        HConfig::default().max_elements,
    )
}

pub fn difference_semigroup_limited(
    basis: &FrequencyBasis,
    spectrum: &[FreqVector],
    anchor: Anchor,
    cutoff: f64,
    limit: usize,
) -> Result<Vec<Frequency>> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::BadCutoff(cutoff));
    }
    let pick = match anchor {
        Anchor::Min => Ordering::Less,
        Anchor::Max => Ordering::Greater,
    };
    let base = spectrum
        .iter()
        .reduce(|best, v| {
            if basis.cmp_values(v, best) == pick {
                v
            } else {
                best
            }
        })
        .ok_or(Error::EmptySum)?;
    // Work with positive generators; mirror at the end for the Max anchor.
    let mut gens: Vec<(FreqVector, f64)> = Vec::new();
    for v in spectrum {
        let d = match anchor {
            Anchor::Min => v - base,
            Anchor::Max => base - v,
        };
        if d.is_zero() || gens.iter().any(|(g, _)| *g == d) {
            continue;
        }
        let val = basis.value(&d);
        gens.push((d, val));
    }

    let mut store: Vec<(FreqVector, f64)> = Vec::new();
    let mut seen: HashSet<FreqVector> = HashSet::new();
    let mut heap = BinaryHeap::new();
    for (g, val) in &gens {
        if *val <= cutoff && seen.insert(g.clone()) {
            heap.push(Reverse(HeapKey(*val, store.len())));
            store.push((g.clone(), *val));
        }
    }
    let mut out_idx = Vec::new();
    while let Some(Reverse(HeapKey(_, idx))) = heap.pop() {
        out_idx.push(idx);
        if out_idx.len() > limit {
            return Err(Error::SemigroupTooLarge { limit, cutoff });
        }
        for (g, gval) in &gens {
            let next_val = store[idx].1 + gval;
            if next_val > cutoff * (1.0 + 1e-12) {
                continue;
            }
            let next = &store[idx].0 + g;
            let exact_val = basis.value(&next);
            if exact_val > cutoff {
                continue;
            }
            if seen.insert(next.clone()) {
                heap.push(Reverse(HeapKey(exact_val, store.len())));
                store.push((next, exact_val));
            }
        }
    }
    let mut out: Vec<Frequency> = out_idx
        .into_iter()
        .map(|i| {
            let (v, val) = std::mem::replace(&mut store[i], (FreqVector(Vec::new()), 0.0));
            Frequency {
                vector: v,
                value: val,
            }
        })
        .collect();
    // The heap pops by floating value; settle near-ties exactly.
    out.sort_by(|a, b| {
        if (a.value - b.value).abs() > 1e-9 * (1.0 + a.value.abs()) {
            a.value.total_cmp(&b.value)
        } else {
            basis.cmp_values(&a.vector, &b.vector)
        }
    });
    if anchor == Anchor::Max {
        for f in &mut out {
            f.vector = -&f.vector;
            f.value = -f.value;
        }
    }
    Ok(out)
}

trait Field: Sized {
    fn from_c64(&self, c: Complex64) -> FieldValue;
    fn two_pi_i(&self, basis: &FrequencyBasis, v: &Frequency) -> FieldValue;
    fn mul(&self, a: &FieldValue, b: &FieldValue) -> FieldValue;
    fn sub(&self, a: &FieldValue, b: &FieldValue) -> FieldValue;
    fn div(&self, a: &FieldValue, b: &FieldValue) -> FieldValue;
    fn to_c64(&self, a: &FieldValue) -> Complex64;

    /// `init − Σ a·b`.
    fn sub_products(&self, init: FieldValue, pairs: &[(&FieldValue, &FieldValue)]) -> FieldValue {
        pairs
            .iter()
            .fold(init, |acc, (a, b)| self.sub(&acc, &self.mul(a, b)))
    }
}

/// Neumaier sum that also keeps the rounding error of each product.
#[derive(Default)]
struct CompensatedDot {
    sum: f64,
    err: f64,
}

impl CompensatedDot {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.err += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.add(p);
        self.err += a.mul_add(b, -p);
    }

    fn value(&self) -> f64 {
        self.sum + self.err
    }
}

#[derive(Clone)]
enum FieldValue {
    D(Complex64),
    F(FixedComplex),
}

struct DoubleField;

impl Field for DoubleField {
    fn from_c64(&self, c: Complex64) -> FieldValue {
        FieldValue::D(c)
    }
    fn two_pi_i(&self, _: &FrequencyBasis, v: &Frequency) -> FieldValue {
        FieldValue::D(Complex64::new(0.0, 2.0 * PI * v.value))
    }
    fn mul(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        match (a, b) {
            (FieldValue::D(x), FieldValue::D(y)) => FieldValue::D(x * y),
            _ => unreachable!("mixed field values"),
        }
    }
    fn sub(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        match (a, b) {
            (FieldValue::D(x), FieldValue::D(y)) => FieldValue::D(x - y),
            _ => unreachable!("mixed field values"),
        }
    }
    fn div(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        match (a, b) {
            (FieldValue::D(x), FieldValue::D(y)) => FieldValue::D(x / y),
            _ => unreachable!("mixed field values"),
        }
    }
    fn to_c64(&self, a: &FieldValue) -> Complex64 {
        match a {
            FieldValue::D(x) => *x,
            FieldValue::F(_) => unreachable!("mixed field values"),
        }
    }
    // Most semigroup elements cancel to zero; compensation keeps the
    // rounding of the large intermediate products out of them.
    fn sub_products(&self, init: FieldValue, pairs: &[(&FieldValue, &FieldValue)]) -> FieldValue {
        let c = self.to_c64(&init);
        let (mut re, mut im) = (CompensatedDot::default(), CompensatedDot::default());
        re.add(c.re);
        im.add(c.im);
        for (a, b) in pairs {
            let (a, b) = (self.to_c64(a), self.to_c64(b));
            re.add_product(-a.re, b.re);
            re.add_product(a.im, b.im);
            im.add_product(-a.re, b.im);
            im.add_product(-a.im, b.re);
        }
        FieldValue::D(Complex64::new(re.value(), im.value()))
    }
}

impl Field for FixedContext {
    fn from_c64(&self, c: Complex64) -> FieldValue {
        FieldValue::F(FixedContext::from_c64(self, c))
    }
    fn two_pi_i(&self, basis: &FrequencyBasis, v: &Frequency) -> FieldValue {
        FieldValue::F(FixedContext::two_pi_i(self, &basis.value_exact(&v.vector)))
    }
    fn mul(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        match (a, b) {
            (FieldValue::F(x), FieldValue::F(y)) => FieldValue::F(FixedContext::mul(self, x, y)),
            _ => unreachable!("mixed field values"),
        }
    }
    fn sub(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        match (a, b) {
            (FieldValue::F(x), FieldValue::F(y)) => FieldValue::F(FixedContext::sub(self, x, y)),
            _ => unreachable!("mixed field values"),
        }
    }
    fn div(&self, a: &FieldValue, b: &FieldValue) -> FieldValue {
        match (a, b) {
            (FieldValue::F(x), FieldValue::F(y)) => FieldValue::F(FixedContext::div(self, x, y)),
            _ => unreachable!("mixed field values"),
        }
    }
    fn to_c64(&self, a: &FieldValue) -> Complex64 {
        match a {
            FieldValue::F(x) => FixedContext::to_c64(self, x),
            FieldValue::D(_) => unreachable!("mixed field values"),
        }
    }
}

/// Expansion of `Q'/Q` in one half-plane up to `|γ| ≤ cutoff`, with the
/// default configuration.
pub fn h_expansion(q: &ExpSum, halfplane: HalfPlane, cutoff: f64) -> Result<HExpansion> {
    h_expansion_with(q, halfplane, cutoff, &HConfig::default())
}

pub fn h_expansion_with(
    q: &ExpSum,
    halfplane: HalfPlane,
    cutoff: f64,
    cfg: &HConfig,
) -> Result<HExpansion> {
    q.require_nonempty()?;
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::BadCutoff(cutoff));
    }
    match cfg.precision {
        Precision::Double => recurse(q, halfplane, cutoff, cfg, &DoubleField),
        Precision::Extended(bits) => recurse(q, halfplane, cutoff, cfg, &FixedContext::new(bits)),
    }
}

fn recurse<F: Field>(
    q: &ExpSum,
    halfplane: HalfPlane,
    cutoff: f64,
    cfg: &HConfig,
    field: &F,
) -> Result<HExpansion> {
    let basis = q.basis().clone();
    let (lo, hi) = q.spectrum_extremes()?;
    let (anchor, anchor_kind) = match halfplane {
        HalfPlane::Upper => (lo, Anchor::Min),
        HalfPlane::Lower => (hi, Anchor::Max),
    };
    let h0 = Complex64::new(0.0, 2.0 * PI * anchor.value);

    // Frequencies as integer vectors over the common denominator, for cheap lookups.
    let mut lcm = BigInt::one();
    for t in q.terms() {
        lcm = lcm.lcm(&(&t.freq - &anchor.vector).denominator_lcm());
    }
    let scale = BigRational::from_integer(lcm);
    let key = |v: &FreqVector| -> Result<Box<[i64]>> {
        v.0.iter()
            .map(|c| {
                (c * &scale).to_integer().to_i64().ok_or_else(|| {
                    Error::InvalidArgument("frequency coordinates exceed the 64-bit range".into())
                })
            })
            .collect()
    };

    let mut p0 = None;
    let mut diffs: HashMap<Box<[i64]>, FieldValue> = HashMap::new();
    let mut nonzero: Vec<(Box<[i64]>, FieldValue)> = Vec::new();
    for t in q.terms() {
        let d = &t.freq - &anchor.vector;
        let c = field.from_c64(t.coeff);
        if d.is_zero() {
            p0 = Some(c);
        } else {
            let k = key(&d)?;
            diffs.insert(k.clone(), c.clone());
            nonzero.push((k, c));
        }
    }
    let p0 = p0.ok_or(Error::EmptySum)?;

    let spectrum: Vec<FreqVector> = q.terms().iter().map(|t| t.freq.clone()).collect();
    let elements =
        difference_semigroup_limited(&basis, &spectrum, anchor_kind, cutoff, cfg.max_elements)?;

    let mut index: HashMap<Box<[i64]>, usize> = HashMap::with_capacity(elements.len());
    let mut values: Vec<FieldValue> = Vec::with_capacity(elements.len());
    let mut prev = vec![0i64; basis.dim()];
    let mut atoms = Vec::new();
    for g in elements {
        let kg = key(&g.vector)?;
        let init = match diffs.get(&kg) {
            Some(pg) => field.mul(&field.two_pi_i(&basis, &g), pg),
            None => field.from_c64(Complex64::new(0.0, 0.0)),
        };
        let mut pairs = Vec::new();
        for (kd, pd) in &nonzero {
            for (i, p) in prev.iter_mut().enumerate() {
                *p = kg[i] - kd[i];
            }
            if let Some(&j) = index.get(&prev[..]) {
                pairs.push((&values[j], pd));
            }
        }
        let acc = field.sub_products(init, &pairs);
        let hg = field.div(&acc, &p0);
        let hc = field.to_c64(&hg);
        if !(hc.norm() <= cfg.overflow_limit) {
            return Err(Error::OverflowAbort { gamma: g.value });
        }
        if hc.norm() >= cfg.drop_threshold {
            atoms.push(Atom {
                gamma: g.clone(),
                h: hc,
            });
        }
        index.insert(kg, values.len());
        values.push(hg);
    }

    let mut warnings = q.independence_warnings();
    for w in atoms.windows(2) {
        if basis.near_collision(&w[0].gamma.vector, &w[1].gamma.vector) {
            warnings.push(format!(
                "exponents {} and {} nearly coincide",
                basis.render(&w[0].gamma.vector),
                basis.render(&w[1].gamma.vector)
            ));
        }
    }

    Ok(HExpansion {
        basis,
        halfplane,
        h0,
        anchor,
        atoms,
        cutoff,
        warnings,
    })
}

/// Expansion of `(log P)'` for a sine product, summed from the cotangent
/// series of each factor:
/// `α cot(αz+β) = −iα − 2iα Σ_{n≥1} e^{2iβn} e^{2iαnz}` for `Im z > 0`, and
/// `α cot(αz+β) = iα + 2iα Σ_{n≥1} e^{−2iβn} e^{−2iαnz}` for `Im z < 0`.
pub fn sine_product_h_closed_form(
    form: &SineProductForm,
    halfplane: HalfPlane,
    cutoff: f64,
) -> Result<HExpansion> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::BadCutoff(cutoff));
    }
    let basis = form.basis.clone();
    let i = Complex64::new(0.0, 1.0);
    let sign = match halfplane {
        HalfPlane::Upper => 1.0,
        HalfPlane::Lower => -1.0,
    };
    let mut h0 = i * form.a();
    let mut anchor_vec = form.shift.clone();
    let mut acc: HashMap<FreqVector, Complex64> = HashMap::new();
    for (j, f) in form.factors.iter().enumerate() {
        let alpha = form.alpha(j);
        if !(alpha > 0.0) {
            return Err(Error::BadFactor(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let k = f.multiplicity as f64;
        h0 -= sign * i * k * alpha;
        anchor_vec = &anchor_vec
            - &f.alpha_over_pi
                .scale_int(sign as i64 * f.multiplicity as i64)
                .half();
        let step = basis.value(&f.alpha_over_pi);
        let mut n = 1i64;
        while n as f64 * step <= cutoff * (1.0 + 1e-12) {
            let v = f.alpha_over_pi.scale_int(sign as i64 * n);
            if basis.value(&v).abs() > cutoff {
                break;
            }
            let h = -sign
                * 2.0
                * i
                * k
                * alpha
                * Complex64::from_polar(1.0, sign * 2.0 * f.beta * n as f64);
            *acc.entry(v).or_default() += h;
            n += 1;
        }
    }
    let mut atoms: Vec<Atom> = acc
        .into_iter()
        .filter(|(_, h)| h.norm() >= 1e-30)
        .map(|(v, h)| Atom {
            gamma: Frequency::new(&basis, v),
            h,
        })
        .collect();
    sort_atoms(&basis, &mut atoms);
    Ok(HExpansion {
        anchor: Frequency::new(&basis, anchor_vec),
        basis,
        halfplane,
        h0,
        atoms,
        cutoff,
        warnings: Vec::new(),
    })
}

pub(crate) fn sort_atoms(basis: &FrequencyBasis, atoms: &mut [Atom]) {
    atoms.sort_by(|a, b| {
        let (x, y) = (a.gamma.value.abs(), b.gamma.value.abs());
        if (x - y).abs() > 1e-9 * (1.0 + x) {
            x.total_cmp(&y)
        } else {
            let o = basis.cmp_values(&a.gamma.vector, &b.gamma.vector);
            if a.gamma.value < 0.0 {
                o.reverse()
            } else {
                o
            }
        }
    });
}

/// `R(r) = Σ_{|γ|<r} |h_γ|` sampled at a list of radii.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    #[serde(rename = "R_values")]
    pub r_values: Vec<f64>,
    /// Least-squares slope of `log R` against `log r` over the top decade;
    /// `None` when `R` vanishes there.
    pub slope_estimate: Option<f64>,
    pub ratio_profile: Vec<f64>,
    pub cutoff: f64,
}

impl GrowthReport {
    pub fn is_flat(&self) -> bool {
        self.r_values.iter().all(|&r| r == 0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,R,R/r\n");
        for ((r, big), ratio) in self
            .radii
            .iter()
            .zip(&self.r_values)
            .zip(&self.ratio_profile)
        {
            let _ = writeln!(s, "{r},{big},{ratio}");
        }
        s
    }
}

/// Geometric grid of `count` radii spanning two decades up to `cutoff`.
pub fn default_radii(cutoff: f64, count: usize) -> Vec<f64> {
    let lo = cutoff / 100.0;
    let count = count.max(2);
    (0..count)
        .map(|k| lo * (100f64).powf(k as f64 / (count - 1) as f64))
        .map(|r| r.min(cutoff))
        .collect()
}

pub fn growth_profile(
    upper: &HExpansion,
    lower: &HExpansion,
    radii: &[f64],
) -> Result<GrowthReport> {
    if upper.cutoff != lower.cutoff {
        return Err(Error::CutoffMismatch(upper.cutoff, lower.cutoff));
    }
    let cutoff = upper.cutoff;
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "radii must be strictly increasing".into(),
        ));
    }
    if let Some(&r) = radii.iter().find(|&&r| r > cutoff) {
        return Err(Error::CutoffExceeded { radius: r, cutoff });
    }
    let mut pts: Vec<(f64, f64)> = upper
        .atoms
        .iter()
        .chain(&lower.atoms)
        .map(|a| (a.gamma.value.abs(), a.h.norm()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prefix = Vec::with_capacity(pts.len() + 1);
    prefix.push(0.0);
    for (_, m) in &pts {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + m);
    }
    let r_values: Vec<f64> = radii
        .par_iter()
        .map(|&r| prefix[pts.partition_point(|p| p.0 < r)])
        .collect();
    let ratio_profile = radii
        .iter()
        .zip(&r_values)
        .map(|(r, big)| big / r)
        .collect();

    let slope_estimate = radii.last().and_then(|&rmax| {
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .zip(&r_values)
            .filter(|(r, big)| **r >= rmax / 10.0 * (1.0 - 1e-12) && **big > 0.0)
            .map(|(r, big)| (r.ln(), big.ln()))
            .collect();
        least_squares_slope(&pts)
    });

    Ok(GrowthReport {
        radii: radii.to_vec(),
        r_values,
        slope_estimate,
        ratio_profile,
        cutoff,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Linear,
    Superlinear,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeyerAssessment {
    pub verdict: Verdict,
    /// The decision rule is a finite-data heuristic.
    pub heuristic: bool,
    pub reason: String,
    pub slope_tolerance: f64,
    pub span_factor: f64,
    /// max/min of `R(r)/r` over the top decade.
    pub top_decade_ratio_spread: Option<f64>,
    /// last/first positive `R(r)/r` over the whole range.
    pub ratio_growth: Option<f64>,
    pub report: GrowthReport,
}

pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.15;
pub const DEFAULT_SPAN_FACTOR: f64 = 5.0;

pub fn meyer_verdict(
    report: &GrowthReport,
    slope_tolerance: f64,
    span_factor: f64,
) -> MeyerAssessment {
    let mk = |verdict, reason: &str, spread, growth| MeyerAssessment {
        verdict,
        heuristic: true,
        reason: reason.to_string(),
        slope_tolerance,
        span_factor,
        top_decade_ratio_spread: spread,
        ratio_growth: growth,
        report: report.clone(),
    };
    let (Some(&rmin), Some(&rmax)) = (report.radii.first(), report.radii.last()) else {
        return mk(Verdict::Inconclusive, "no radii", None, None);
    };
    if rmax / rmin < 100.0 * (1.0 - 1e-9) {
        return mk(
            Verdict::Inconclusive,
            "radii span less than two decades",
            None,
            None,
        );
    }
    if report.is_flat() {
        return mk(
            Verdict::Linear,
            "flat: no atoms below the cutoff",
            None,
            None,
        );
    }
    let top: Vec<f64> = report
        .radii
        .iter()
        .zip(&report.ratio_profile)
        .filter(|(r, ratio)| **r >= rmax / 10.0 * (1.0 - 1e-12) && **ratio > 0.0)
        .map(|(_, ratio)| *ratio)
        .collect();
    let spread = (!top.is_empty()).then(|| {
        let max = top.iter().copied().fold(f64::MIN, f64::max);
        let min = top.iter().copied().fold(f64::MAX, f64::min);
        max / min
    });
    let growth = report
        .ratio_profile
        .iter()
        .find(|&&x| x > 0.0)
        .zip(report.ratio_profile.last())
        .map(|(first, last)| last / first);
    let Some(slope) = report.slope_estimate else {
        return mk(
            Verdict::Inconclusive,
            "slope undefined on the top decade",
            spread,
            growth,
        );
    };
    if slope <= 1.0 + slope_tolerance && spread.is_some_and(|s| s <= 2.0) {
        mk(
            Verdict::Linear,
            "R(r)/r stays bounded on the top decade",
            spread,
            growth,
        )
    } else if slope >= 1.0 + slope_tolerance && growth.is_some_and(|g| g >= span_factor) {
        mk(
            Verdict::Superlinear,
            "R(r)/r keeps increasing",
            spread,
            growth,
        )
    } else {
        mk(
            Verdict::Inconclusive,
            "growth data fits neither rule",
            spread,
            growth,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsum::sin_pi_z;
    use num_rational::BigRational;

    fn values(v: &[Frequency]) -> Vec<f64> {
        v.iter().map(|f| f.value).collect()
    }

    #[test]
    fn semigroup_single_generator() {
        let b = FrequencyBasis::unit();
        let spec = [FreqVector::from_ints(&[0]), FreqVector::from_ints(&[1])];
        let s = difference_semigroup(&b, &spec, Anchor::Min, 5.5).unwrap();
        assert_eq!(values(&s), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let s = difference_semigroup(&b, &spec, Anchor::Max, 2.0).unwrap();
        assert_eq!(values(&s), vec![-1.0, -2.0]);
    }

    #[test]
    fn semigroup_rational_dedup() {
        let b = FrequencyBasis::unit();
        let spec = FreqVector::parse(&["0"]).into_iter().chain([
            FreqVector::parse(&["1/2"]).unwrap(),
            FreqVector::parse(&["3/2"]).unwrap(),
        ]);
        let spec: Vec<_> = spec.collect();
        let s = difference_semigroup(&b, &spec, Anchor::Min, 2.0).unwrap();
        assert_eq!(values(&s), vec![0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn semigroup_bad_cutoff() {
        let b = FrequencyBasis::unit();
        let spec = [FreqVector::from_ints(&[0])];
        assert!(matches!(
            difference_semigroup(&b, &spec, Anchor::Min, 0.0),
            Err(Error::BadCutoff(_))
        ));
        assert!(matches!(
            difference_semigroup(&b, &spec, Anchor::Min, -1.0),
            Err(Error::BadCutoff(_))
        ));
    }

    #[test]
    fn sine_expansion_matches_cotangent_series() {
        let q = sin_pi_z();
        let up = h_expansion(&q, HalfPlane::Upper, 10.0).unwrap();
        assert!((up.h0 - Complex64::new(0.0, -PI)).norm() < 1e-15);
        assert_eq!(up.atoms.len(), 10);
        for (n, a) in up.atoms.iter().enumerate() {
            assert_eq!(a.gamma.vector, FreqVector::from_ints(&[n as i64 + 1]));
            assert!(
                (a.h - Complex64::new(0.0, -2.0 * PI)).norm() < 1e-12,
                "{:?}",
                a
            );
        }
        let lo = h_expansion(&q, HalfPlane::Lower, 10.0).unwrap();
        assert!((lo.h0 - Complex64::new(0.0, PI)).norm() < 1e-15);
        for (n, a) in lo.atoms.iter().enumerate() {
            assert_eq!(a.gamma.vector, FreqVector::from_ints(&[-(n as i64) - 1]));
            assert!((a.h - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_exponential_has_no_atoms() {
        let b = FrequencyBasis::unit();
        let w = FreqVector::parse(&["3/7"]).unwrap();
        let q = ExpSum::new(b, vec![(w, Complex64::new(2.0, 1.0))]).unwrap();
        for hp in [HalfPlane::Upper, HalfPlane::Lower] {
            let e = h_expansion(&q, hp, 20.0).unwrap();
            assert!(e.atoms.is_empty());
            assert!((e.h0 - Complex64::new(0.0, 2.0 * PI * 3.0 / 7.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn extended_precision_agrees() {
        let q = sin_pi_z();
        let cfg = HConfig {
            precision: Precision::Extended(160),
            ..HConfig::default()
        };
        let a = h_expansion_with(&q, HalfPlane::Upper, 12.0, &cfg).unwrap();
        let b = h_expansion(&q, HalfPlane::Upper, 12.0).unwrap();
        assert!(a.max_discrepancy(&b) < 1e-12);
    }

    #[test]
    fn overflow_abort() {
        // 1/(1 − 10 w) has coefficients 10^n.
        let b = FrequencyBasis::unit();
        let q = ExpSum::new(
            b,
            vec![
                (FreqVector::from_ints(&[0]), Complex64::new(1.0, 0.0)),
                (FreqVector::from_ints(&[1]), Complex64::new(-10.0, 0.0)),
            ],
        )
        .unwrap();
        let cfg = HConfig {
            overflow_limit: 1e20,
            ..HConfig::default()
        };
        assert!(matches!(
            h_expansion_with(&q, HalfPlane::Upper, 100.0, &cfg),
            Err(Error::OverflowAbort { .. })
        ));
    }

    #[test]
    fn closed_form_double_factor() {
        let b = FrequencyBasis::unit();
        let form = SineProductForm::new(
            b,
            Complex64::new(1.0, 0.0),
            FreqVector::from_ints(&[0]),
            vec![crate::form::SineFactor {
                alpha_over_pi: FreqVector::from_ints(&[1]),
                beta: 0.3,
                multiplicity: 2,
            }],
        )
        .unwrap();
        let e = sine_product_h_closed_form(&form, HalfPlane::Upper, 5.0).unwrap();
        for a in &e.atoms {
            let n = a.gamma.value.round();
            let expect = Complex64::new(0.0, -4.0 * PI) * Complex64::from_polar(1.0, 0.6 * n);
            assert!((a.h - expect).norm() < 1e-12);
        }
        assert_eq!(
            e.anchor.vector,
            FreqVector(vec![BigRational::from_integer((-1).into())])
        );
    }

    #[test]
    fn growth_of_sine() {
        let q = sin_pi_z();
        let up = h_expansion(&q, HalfPlane::Upper, 10.75).unwrap();
        let lo = h_expansion(&q, HalfPlane::Lower, 10.75).unwrap();
        let g = growth_profile(&up, &lo, &[0.5, 10.5]).unwrap();
        assert_eq!(g.r_values[0], 0.0);
        assert!((g.r_values[1] - 40.0 * PI).abs() < 1e-9);
        assert!(matches!(
            growth_profile(&up, &lo, &[11.0]),
            Err(Error::CutoffExceeded { .. })
        ));
        assert!(g.to_csv().starts_with("r,R,R/r\n"));
    }

    #[test]
    fn verdict_guards() {
        let q = sin_pi_z();
        let up = h_expansion(&q, HalfPlane::Upper, 10.0).unwrap();
        let lo = h_expansion(&q, HalfPlane::Lower, 10.0).unwrap();
        let g = growth_profile(&up, &lo, &[1.5, 5.0, 10.0]).unwrap();
        assert_eq!(meyer_verdict(&g, 0.15, 5.0).verdict, Verdict::Inconclusive);
    }
}
