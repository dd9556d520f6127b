//! Recover `C·e^{iaz}·∏ sin^{k_j}(α_j z + β_j)` from the upper half-plane
//! expansion of `Q'/Q`, check it against `Q`, and cross-check the zero set
//! against a decomposition into arithmetic progressions.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{FreqVector, Frequency};
use crate::error::{Error, Result};
use crate::expsum::ExpSum;
use crate::form::{SineFactor, SineProductForm};
use crate::logderiv::{
    h_expansion, sine_product_h_closed_form, sort_atoms, Atom, HExpansion, HalfPlane,
};
use crate::rootfinder::ZeroSet;

pub const DEFAULT_TOL: f64 = 1e-6;
/// Matching tolerance for zero-set decomposition; the root finder merges
/// zeros closer than its cluster width (1e-3) into one multiple zero.
pub const DEFAULT_GAP_TOL: f64 = 1e-3;
pub const MAX_FACTORS: usize = 32;

fn not_a_product(reason: String, residual: HExpansion) -> Error {
    Error::NotASineProduct {
        reason,
        residual_mass: residual.total_mass(),
        residual: Box::new(residual),
    }
}

/// Greedy cotangent peeling. Each step reads `α` and `k` off the smallest
/// remaining atom, fits `β` from its phase and subtracts the full series of
/// `k·α·cot(αz + β)`.
pub fn peel_sine_factors(upper: &HExpansion, tol: f64) -> Result<(Vec<SineFactor>, HExpansion)> {
    if upper.halfplane != HalfPlane::Upper {
        return Err(Error::InvalidArgument(
            "peeling needs the upper half-plane expansion".into(),
        ));
    }
    let basis = upper.basis.clone();
    let mut residual: HashMap<FreqVector, (Frequency, Complex64)> = upper
        .atoms
        .iter()
        .map(|a| (a.gamma.vector.clone(), (a.gamma.clone(), a.h)))
        .collect();
    let mut h0 = upper.h0;
    let mut factors = Vec::new();

    let snapshot = |residual: &HashMap<FreqVector, (Frequency, Complex64)>, h0: Complex64| {
        let mut atoms: Vec<Atom> = residual
            .values()
            .filter(|(_, h)| h.norm() > 0.0)
            .map(|(g, h)| Atom {
                gamma: g.clone(),
                h: *h,
            })
            .collect();
        sort_atoms(&basis, &mut atoms);
        HExpansion {
            atoms,
            h0,
            ..upper.clone()
        }
    };

    loop {
        let lead = residual
            .values()
            .filter(|(_, h)| h.norm() > tol)
            .min_by(|a, b| basis.cmp_values(&a.0.vector, &b.0.vector));
        let Some((g, h)) = lead.cloned() else {
            break;
        };
        if factors.len() >= MAX_FACTORS {
            return Err(not_a_product(
                format!("residual remains after {MAX_FACTORS} factors"),
                snapshot(&residual, h0),
            ));
        }
        if g.value <= 0.0 {
            return Err(not_a_product(
                format!("atom at non-positive γ = {}", g.value),
                snapshot(&residual, h0),
            ));
        }
        let alpha = PI * g.value;
        let ratio = h.norm() / (2.0 * alpha);
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > tol * k.max(1.0) {
            return Err(not_a_product(
                format!(
                    "|h|/(2α) = {ratio:.9} at γ = {} is not a positive integer",
                    basis.render(&g.vector)
                ),
                snapshot(&residual, h0),
            ));
        }
        let k = k as u32;
        let i = Complex64::new(0.0, 1.0);
        let mut beta = 0.5 * (h / (-2.0 * i * k as f64 * alpha)).arg();
        if beta < 0.0 {
            beta += PI;
        }
        if beta >= PI {
            beta -= PI;
        }
        let factor = SineFactor {
            alpha_over_pi: g.vector.clone(),
            beta,
            multiplicity: k,
        };
        let single = SineProductForm::new(
            basis.clone(),
            Complex64::new(1.0, 0.0),
            FreqVector::zero(basis.dim()),
            vec![factor.clone()],
        )?;
        let series = sine_product_h_closed_form(&single, HalfPlane::Upper, upper.cutoff)?;
        h0 -= series.h0;
        for a in series.atoms {
            residual
                .entry(a.gamma.vector.clone())
                .or_insert_with(|| (a.gamma.clone(), Complex64::default()))
                .1 -= a.h;
        }
        factors.push(factor);
    }
    Ok((factors, snapshot(&residual, h0)))
}

/// `a = h₀⁺/i + Σ k_j α_j`, which must be real.
pub fn prefactor_from_h0(h0: Complex64, factors: &[(f64, u32)]) -> Result<f64> {
    let a = h0 / Complex64::new(0.0, 1.0)
        + factors
            .iter()
            .map(|&(alpha, k)| k as f64 * alpha)
            .sum::<f64>();
    if a.im.abs() > 1e-8 {
        return Err(Error::InconsistentPrefactor { re: a.re, im: a.im });
    }
    Ok(a.re)
}

/// `(C, a)` for `Q` given its sine factors: `a` from the upper `h₀`, `C`
/// from one evaluation at `z = i`.
pub fn recover_scale(q: &ExpSum, factors: &[SineFactor]) -> Result<(Complex64, f64)> {
    let form = recover_form(q, factors)?;
    Ok((form.c, form.a()))
}

/// Complete form with the exact shift `a/2π = ω⁻ + Σ k_j u_j/2`.
pub fn recover_form(q: &ExpSum, factors: &[SineFactor]) -> Result<SineProductForm> {
    q.require_nonempty()?;
    let basis = q.basis().clone();
    let (lo, _) = q.spectrum_extremes()?;
    let h0 = Complex64::new(0.0, 2.0 * PI * lo.value);
    let pairs: Vec<(f64, u32)> = factors
        .iter()
        .map(|f| (PI * basis.value(&f.alpha_over_pi), f.multiplicity))
        .collect();
    prefactor_from_h0(h0, &pairs)?;
    let mut shift = lo.vector.clone();
    for f in factors {
        shift = &shift + &f.alpha_over_pi.scale_int(f.multiplicity as i64).half();
    }
    let mut form = SineProductForm::new(basis, Complex64::new(1.0, 0.0), shift, factors.to_vec())?;
    let z0 = Complex64::new(0.0, 1.0);
    form.c = q.evaluate(z0)? / form.evaluate(z0);
    Ok(form)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub max_residual: f64,
    pub valid: usize,
    pub requested: usize,
}

/// `max |Q(z) / form(z) − 1|` over sample points on `Im z ∈ {0, 1, −1}`;
/// real points within 0.1 of a zero of the form are skipped.
pub fn verify_form(q: &ExpSum, form: &SineProductForm, samples: usize) -> Result<VerifyReport> {
    let span = 10.0
        + form
            .factors
            .iter()
            .enumerate()
            .map(|(j, _)| 4.0 * form.period(j))
            .fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut valid = 0;
    for s in 0..samples {
        let y = [0.0, 1.0, -1.0][s % 3];
        let x = -span + 2.0 * span * (s as f64 + 0.5) / samples as f64 + 0.0137;
        if y == 0.0 && form.distance_to_zero(x) < 0.1 {
            continue;
        }
        let z = Complex64::new(x, y);
        let r = q.evaluate(z)? / form.evaluate(z);
        worst = worst.max((r - 1.0).norm());
        valid += 1;
    }
    if 2 * valid < samples {
        return Err(Error::InsufficientSamples {
            valid,
            requested: samples,
        });
    }
    Ok(VerifyReport {
        max_residual: worst,
        valid,
        requested: samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progression {
    pub period: f64,
    /// In `[0, period)`.
    pub offset: f64,
    pub multiplicity: u32,
}

impl Progression {
    /// Distance from `x` to the nearest progression point.
    pub fn distance(&self, x: f64) -> f64 {
        let t = (x - self.offset) / self.period;
        (t - t.round()).abs() * self.period
    }

    /// Progression points in `[lo, hi]`.
    pub fn points_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let first = ((lo - self.offset) / self.period).ceil() as i64;
        let last = ((hi - self.offset) / self.period).floor() as i64;
        (first..=last)
            .map(|m| self.offset + m as f64 * self.period)
            .collect()
    }
}

/// Finite union of progressions, corrected by finite point sets, read as
/// multisets: `(progressions ∪ exceptional_plus) ∖ exceptional_minus`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProgressionSet {
    pub progressions: Vec<Progression>,
    pub exceptional_plus: Vec<f64>,
    pub exceptional_minus: Vec<f64>,
}

impl ProgressionSet {
    pub fn has_exceptions(&self) -> bool {
        !self.exceptional_plus.is_empty() || !self.exceptional_minus.is_empty()
    }
}

#[derive(Debug, Clone)]
struct Point {
    x: f64,
    left: u32,
}

/// Cluster sorted values into groups whose consecutive members differ by at most `tol`.
fn clusters(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            let grp = &sorted[start..i];
            if !grp.is_empty() {
                out.push((grp.iter().sum::<f64>() / grp.len() as f64, grp.len()));
            }
            start = i;
        }
    }
    out
}

/// Least-squares fit `x ≈ offset + period·m` over the members, refitted
/// once without outliers. Merged zeros from two progressions sit at their
/// centroid and would otherwise bias the period.
fn refine(members: &[f64], period: f64, offset: f64) -> (f64, f64) {
    let (p, off) = fit(members, period, offset);
    if members.len() < 6 {
        return (p, off);
    }
    let prog = Progression {
        period: p,
        offset: off,
        multiplicity: 1,
    };
    let mut res: Vec<f64> = members.iter().map(|&x| prog.distance(x)).collect();
    res.sort_by(f64::total_cmp);
    let cut = (8.0 * res[res.len() / 2]).max(1e-12);
    let kept: Vec<f64> = members
        .iter()
        .copied()
        .filter(|&x| prog.distance(x) <= cut)
        .collect();
    if kept.len() < members.len() && kept.len() >= 2 {
        fit(&kept, p, off)
    } else {
        (p, off)
    }
}

fn fit(members: &[f64], period: f64, offset: f64) -> (f64, f64) {
    if members.len() < 2 {
        return (period, offset);
    }
    let ms: Vec<f64> = members
        .iter()
        .map(|x| ((x - offset) / period).round())
        .collect();
    let n = members.len() as f64;
    let (sm, sx) = (ms.iter().sum::<f64>() / n, members.iter().sum::<f64>() / n);
    let (mut cov, mut var) = (0.0, 0.0);
    for (m, x) in ms.iter().zip(members) {
        cov += (m - sm) * (x - sx);
        var += (m - sm) * (m - sm);
    }
    let p = if var > 0.0 { cov / var } else { period };
    let off = (sx - p * sm).rem_euclid(p);
    (p, if off >= p { 0.0 } else { off })
}

struct Candidate {
    prog: Progression,
    members: Vec<usize>,
}

/// Split a certified zero set into arithmetic progressions plus finite
/// exceptional sets.
pub fn decompose_zero_set(zeros: &ZeroSet, gap_tol: f64) -> Result<ProgressionSet> {
    if !zeros.certified {
        return Err(Error::RequiresCertification);
    }
    if zeros.total_multiplicity() < 20 {
        return Err(Error::InvalidArgument(format!(
            "need at least 20 zeros, got {}",
            zeros.total_multiplicity()
        )));
    }
    let (lo, hi) = zeros.window;
    let mut pts: Vec<Point> = zeros
        .zeros
        .iter()
        .map(|z| Point {
            x: z.location,
            left: z.multiplicity,
        })
        .collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    let total: u32 = pts.iter().map(|p| p.left).sum();
    let mut out = ProgressionSet::default();

    while let Some(c) = best_candidate(&pts, lo, hi, gap_tol) {
        let m = c.members.iter().map(|&i| pts[i].left).min().unwrap_or(1);
        for &i in &c.members {
            pts[i].left -= m;
        }
        let tol = gap_tol * c.prog.period.max(1.0);
        for x in c.prog.points_in(lo, hi) {
            let present = c.members.iter().any(|&i| (pts[i].x - x).abs() <= tol);
            if !present && x - lo > tol && hi - x > tol {
                for _ in 0..m {
                    out.exceptional_minus.push(x);
                }
            }
        }
        out.progressions.push(Progression {
            multiplicity: m,
            ..c.prog
        });
    }

    for p in &pts {
        for _ in 0..p.left {
            out.exceptional_plus.push(p.x);
        }
    }
    let leftover = out.exceptional_plus.len() as f64;
    if out.progressions.is_empty() || leftover > 0.2 * total as f64 {
        return Err(Error::NoProgressionStructure(format!(
            "{} of {} zeros are not explained by any progression",
            leftover as u64, total
        )));
    }
    out.progressions.sort_by(|a, b| {
        a.period
            .total_cmp(&b.period)
            .then(a.offset.total_cmp(&b.offset))
    });
    Ok(out)
}

/// The progression with the most remaining zeros among those that cover at
/// least 90% of their lattice points in the window.
fn best_candidate(pts: &[Point], lo: f64, hi: f64, gap_tol: f64) -> Option<Candidate> {
    const HORIZON: usize = 8;
    let live: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].left > 0).collect();
    if live.len() < 3 {
        return None;
    }
    let mut gaps = Vec::new();
    for (a, &i) in live.iter().enumerate() {
        for &j in live.iter().skip(a + 1).take(HORIZON) {
            gaps.push(pts[j].x - pts[i].x);
        }
    }
    gaps.sort_by(f64::total_cmp);
    let mut groups = clusters(&gaps, gap_tol);
    groups.retain(|g| g.0 > gap_tol && g.1 >= 2);
    groups.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.total_cmp(&b.0)));
    groups.truncate(12);

    let mut best: Option<Candidate> = None;
    for &(p, _) in &groups {
        let tol = gap_tol * p.max(1.0);
        let mut res: Vec<(f64, usize)> =
            live.iter().map(|&i| (pts[i].x.rem_euclid(p), i)).collect();
        res.sort_by(|a, b| a.0.total_cmp(&b.0));
        // residue classes, merging across the wrap point
        let mut classes: Vec<Vec<(f64, usize)>> = Vec::new();
        for r in res {
            match classes.last_mut() {
                Some(c) if r.0 - c.last().map(|l| l.0).unwrap_or(f64::NEG_INFINITY) <= tol => {
                    c.push(r)
                }
                _ => classes.push(vec![r]),
            }
        }
        if classes.len() > 1 {
            let first = classes[0][0].0;
            let last = classes
                .last()
                .and_then(|c| c.last())
                .map(|l| l.0)
                .unwrap_or(0.0);
            if first + p - last <= tol {
                let tail = classes.pop().unwrap_or_default();
                classes[0].extend(tail.into_iter().map(|(r, i)| (r - p, i)));
            }
        }
        for class in classes {
            if class.len() < 3 {
                continue;
            }
            // circular mean of the residues
            let (s, c) = class.iter().fold((0.0, 0.0), |(s, c), (r, _)| {
                let t = 2.0 * PI * r / p;
                (s + t.sin(), c + t.cos())
            });
            let offset = (s.atan2(c) / (2.0 * PI) * p).rem_euclid(p);
            let xs: Vec<f64> = class.iter().map(|&(_, i)| pts[i].x).collect();
            let (period, offset) = refine(&xs, p, offset);
            let prog = Progression {
                period,
                offset,
                multiplicity: 1,
            };
            let members: Vec<usize> = live
                .iter()
                .copied()
                .filter(|&i| prog.distance(pts[i].x) <= tol)
                .collect();
            let expected = prog.points_in(lo + tol, hi - tol).len().max(1);
            let coverage = members.len() as f64 / expected as f64;
            if members.len() < 3 || coverage < 0.9 {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    members.len() > b.members.len()
                        || (members.len() == b.members.len() && period < b.prog.period)
                }
            };
            if better {
                best = Some(Candidate { prog, members });
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `(factor index, progression index)` pairs.
    pub matched: Vec<(usize, usize)>,
    pub unmatched_factors: Vec<usize>,
    pub unmatched_progressions: Vec<usize>,
    pub exceptional_points: usize,
    pub fully_matched: bool,
}

/// Pair each factor with a progression of period `π/α` and equal
/// multiplicity. Exceptional points make the match incomplete unless
/// `allow_exceptional` is set.
pub fn consistency_check(
    form: &SineProductForm,
    progressions: &ProgressionSet,
    allow_exceptional: bool,
) -> ConsistencyReport {
    let mut used = vec![false; progressions.progressions.len()];
    let mut matched = Vec::new();
    let mut unmatched_factors = Vec::new();
    for (j, f) in form.factors.iter().enumerate() {
        let period = form.period(j);
        let offset = (-f.beta / form.alpha(j)).rem_euclid(period);
        let pick = progressions
            .progressions
            .iter()
            .enumerate()
            .filter(|(i, p)| {
                !used[*i] && (p.period - period).abs() < 1e-6 && p.multiplicity == f.multiplicity
            })
            .min_by(|(_, a), (_, b)| {
                let d = |p: &Progression| {
                    let t = (p.offset - offset) / period;
                    (t - t.round()).abs()
                };
                d(a).total_cmp(&d(b))
            })
            .map(|(i, _)| i);
        match pick {
            Some(i) => {
                used[i] = true;
                matched.push((j, i));
            }
            None => unmatched_factors.push(j),
        }
    }
    let unmatched_progressions: Vec<usize> = (0..used.len()).filter(|&i| !used[i]).collect();
    let exceptional_points =
        progressions.exceptional_plus.len() + progressions.exceptional_minus.len();
    let fully_matched = unmatched_factors.is_empty()
        && unmatched_progressions.is_empty()
        && (allow_exceptional || exceptional_points == 0);
    ConsistencyReport {
        matched,
        unmatched_factors,
        unmatched_progressions,
        exceptional_points,
        fully_matched,
    }
}

/// Outcome of the frequency-domain factorization.
#[derive(Debug, Clone)]
pub struct Factorization {
    pub form: SineProductForm,
    pub verification: VerifyReport,
    pub residual: HExpansion,
}

/// Expand, peel, recover the prefactor, canonicalize and verify.
pub fn factorize(q: &ExpSum, cutoff: f64, tol: f64) -> Result<Factorization> {
    let upper = h_expansion(q, HalfPlane::Upper, cutoff)?;
    let (factors, residual) = peel_sine_factors(&upper, tol)?;
    let form = recover_form(q, &factors)?.canonical();
    let verification = verify_form(q, &form, 64)?;
    Ok(Factorization {
        form,
        verification,
        residual,
    })
}
