//! Real-zero location and certification by argument-principle counting.
//!
//! Every box is a rectangle `[x_lo, x_hi] × [y_lo, y_hi]`; the number of
//! enclosed zeros is `(1/2πi)∮ Q'/Q dz`, integrated edge by edge with
//! adaptive Gauss–Kronrod panels. Boxes are bisected in `x` until each
//! holds a single zero (polished by Newton) or a tight cluster (reported
//! with the box count as multiplicity).

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsum::ExpSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    /// `[x_lo, x_hi] × [−eta, eta]`.
    pub fn strip(x_lo: f64, x_hi: f64, eta: f64) -> Self {
        Rect {
            x_lo,
            x_hi,
            y_lo: -eta,
            y_hi: eta,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x_lo + self.x_hi), 0.5 * (self.y_lo + self.y_hi))
    }

    fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x_lo && z.re <= self.x_hi && z.im >= self.y_lo && z.im <= self.y_hi
    }

    /// Counter-clockwise edges.
    fn edges(&self) -> [(Edge, Complex64, Complex64); 4] {
        let a = Complex64::new(self.x_lo, self.y_lo);
        let b = Complex64::new(self.x_hi, self.y_lo);
        let c = Complex64::new(self.x_hi, self.y_hi);
        let d = Complex64::new(self.x_lo, self.y_hi);
        [
            (Edge::Bottom, a, b),
            (Edge::Right, b, c),
            (Edge::Top, c, d),
            (Edge::Left, d, a),
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootConfig {
    /// Clusters narrower than this are reported as one multiple zero.
    pub cluster_width: f64,
    /// Newton stops once `|Q| < newton_residual · Σ|q_ω e^{2πiωz}|`.
    pub newton_residual: f64,
    /// Minimum of `|Q|` on a contour relative to its maximum.
    pub probe_floor: f64,
    /// Absolute tolerance on the winding number.
    pub quad_tol: f64,
    /// Zeros with `|Im z|` above this are treated as off-axis.
    pub real_tol: f64,
    pub max_retries: usize,
    /// Window length handed to each parallel worker.
    pub chunk_length: f64,
    pub max_panels: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            cluster_width: 1e-3,
            newton_residual: 1e-13,
            probe_floor: 1e-12,
            quad_tol: 1e-6,
            real_tol: 1e-8,
            max_retries: 5,
            chunk_length: 4.0,
            max_panels: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub location: f64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroSet {
    pub window: (f64, f64),
    pub eta: f64,
    pub zeros: Vec<Zero>,
    pub certified: bool,
    /// Argument-principle count over the whole strip.
    pub rect_count: i64,
}

impl ZeroSet {
    pub fn total_multiplicity(&self) -> i64 {
        self.zeros.iter().map(|z| z.multiplicity as i64).sum()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.zeros.iter().map(|z| z.location).collect()
    }

    /// Sum of multiplicities with location in `[a, b)`.
    pub fn count_in(&self, a: f64, b: f64) -> i64 {
        self.zeros
            .iter()
            .filter(|z| z.location >= a && z.location < b)
            .map(|z| z.multiplicity as i64)
            .sum()
    }

    /// Counts over consecutive unit-length strips starting at the window's left end.
    pub fn unit_strip_counts(&self) -> Vec<i64> {
        let (lo, hi) = self.window;
        let n = (hi - lo).floor() as usize;
        (0..n)
            .map(|k| self.count_in(lo + k as f64, lo + k as f64 + 1.0))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("location,multiplicity\n");
        for z in &self.zeros {
            let _ = writeln!(s, "{:.17e},{}", z.location, z.multiplicity);
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certification {
    pub certified: bool,
    pub rect_count: i64,
    pub real_count: i64,
    pub unit_strip_max: i64,
    pub zeros: ZeroSet,
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Contour integrals `∮ (z−c)^m Q'/Q dz / 2πi` for `m = 0, 1, 2`.
#[derive(Debug, Clone, Copy)]
struct Moments {
    m: [Complex64; 3],
    center: Complex64,
}

impl Moments {
    /// The same moments about another center.
    fn recenter(&self, c: Complex64) -> Moments {
        let d = self.center - c;
        let [m0, m1, m2] = self.m;
        Moments {
            m: [m0, m1 + d * m0, m2 + 2.0 * d * m1 + d * d * m0],
            center: c,
        }
    }

    /// Moments of the region inside `self` but outside `part`, about `c`.
    fn minus(&self, part: &Moments, c: Complex64) -> Moments {
        let (a, b) = (self.recenter(c), part.recenter(c));
        Moments {
            m: [a.m[0] - b.m[0], a.m[1] - b.m[1], a.m[2] - b.m[2]],
            center: c,
        }
    }

    fn count(&self, tol: f64) -> Option<i64> {
        let n = self.m[0].re.round();
        ((self.m[0].re - n).abs() < 0.25
            && self.m[0].im.abs() < 0.25
            && (self.m[0] - n).norm() < 0.25f64.max(tol))
        .then_some(n as i64)
    }
}

struct Integrand<'a> {
    q: &'a ExpSum,
    dq: &'a ExpSum,
}

struct EdgeResult {
    value: [Complex64; 3],
    error: f64,
    min_rel: f64,
    forced: bool,
}

impl Integrand<'_> {
    /// Moment integrands, `ln |Q|` relative to its dominant term, and the
    /// rounding noise in `Q'/Q`.
    fn eval(&self, z: Complex64, center: Complex64) -> ([Complex64; 3], f64, f64) {
        let qv = self.q.evaluate_scaled(z);
        let dv = self.dq.evaluate_scaled(z);
        let f = if dv.mantissa == Complex64::new(0.0, 0.0) {
            Complex64::new(0.0, 0.0)
        } else {
            dv.ratio(qv)
        };
        let w = z - center;
        let eps = self.q.len() as f64 * f64::EPSILON;
        let noise = f.norm() * eps * (1.0 / qv.mantissa.norm() + 1.0 / dv.mantissa.norm().max(eps));
        ([f, f * w, f * w * w], qv.mantissa.norm().ln(), noise)
    }

    fn panel(
        &self,
        a: Complex64,
        b: Complex64,
        center: Complex64,
        out: &mut EdgeResult,
    ) -> ([Complex64; 3], f64, f64) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut k = [Complex64::new(0.0, 0.0); 3];
        let mut g = [Complex64::new(0.0, 0.0); 3];
        let mut noise = 0.0;
        for i in 0..8 {
            let nodes: &[f64] = if i == 7 { &[0.0] } else { &[-1.0, 1.0] };
            for s in nodes {
                let z = mid + half * (s * XGK[i]);
                let (f, rel, eta) = self.eval(z, center);
                out.min_rel = out.min_rel.min(rel);
                noise += eta * WGK[i];
                for c in 0..3 {
                    k[c] += f[c] * WGK[i];
                    if i % 2 == 1 {
                        g[c] += f[c] * WG[i / 2];
                    }
                }
            }
        }
        for c in 0..3 {
            k[c] *= half;
            g[c] *= half;
        }
        let err = (k[0] - g[0]).norm();
        (k, err, noise * half.norm())
    }

    fn edge(
        &self,
        a: Complex64,
        b: Complex64,
        center: Complex64,
        tol: f64,
        bandwidth: f64,
        max_panels: usize,
        floor: f64,
    ) -> Result<EdgeResult> {
        let len = (b - a).norm();
        let mut out = EdgeResult {
            value: [Complex64::new(0.0, 0.0); 3],
            error: 0.0,
            min_rel: f64::INFINITY,
            forced: false,
        };
        let n0 = ((len * bandwidth.max(0.5) * 2.0).ceil() as usize).clamp(1, max_panels / 4);
        let mut stack: Vec<(Complex64, Complex64)> = (0..n0)
            .rev()
            .map(|i| {
                (
                    a + (b - a) * (i as f64 / n0 as f64),
                    a + (b - a) * ((i + 1) as f64 / n0 as f64),
                )
            })
            .collect();
        let mut panels = 0usize;
        while let Some((pa, pb)) = stack.pop() {
            panels += 1;
            if panels > max_panels {
                return Err(Error::QuadratureFailure(format!(
                    "more than {max_panels} panels on one edge"
                )));
            }
            let (val, err, noise) = self.panel(pa, pb, center, &mut out);
            if out.min_rel < floor {
                out.forced = true;
                return Ok(out);
            }
            let plen = (pb - pa).norm();
            let allowed = tol * plen / len;
            // below the rounding noise further splitting cannot help
            if err <= allowed.max(8.0 * noise) {
                for c in 0..3 {
                    out.value[c] += val[c];
                }
                out.error += err;
            } else if plen < 1e-13 * len.max(1.0) {
                out.forced = true;
                return Ok(out);
            } else {
                let m = 0.5 * (pa + pb);
                stack.push((m, pb));
                stack.push((pa, m));
            }
        }
        Ok(out)
    }
}

fn contour_moments(
    q: &ExpSum,
    dq: &ExpSum,
    rect: &Rect,
    cfg: &RootConfig,
    tol: f64,
) -> Result<Moments> {
    let integrand = Integrand { q, dq };
    let center = rect.center();
    let bandwidth = q.bandwidth();
    let mut m = [Complex64::new(0.0, 0.0); 3];
    // Tolerance split over four edges, on the 2π-scaled integral.
    let edge_tol = 2.0 * PI * tol / 4.0;
    for (edge, a, b) in rect.edges() {
        // probe before integrating
        let len = (b - a).norm();
        let probes = ((len * bandwidth.max(0.5) * 8.0).ceil() as usize).clamp(8, 200_000);
        let floor = cfg.probe_floor.ln();
        let mut points: Vec<Complex64> = (0..=probes)
            .map(|k| a + (b - a) * (k as f64 / probes as f64))
            .collect();
        if a.im * b.im < 0.0 {
            points.push(Complex64::new(
                a.re + (b.re - a.re) * a.im / (a.im - b.im),
                0.0,
            ));
        }
        for z in points {
            if q.evaluate_scaled(z).mantissa.norm().ln() < floor {
                return Err(Error::ContourNearZero { edge });
            }
        }
        let r = integrand.edge(a, b, center, edge_tol, bandwidth, cfg.max_panels, floor)?;
        if r.forced || r.min_rel < floor {
            return Err(Error::ContourNearZero { edge });
        }
        for c in 0..3 {
            m[c] += r.value[c];
        }
    }
    let scale = Complex64::new(0.0, 2.0 * PI);
    Ok(Moments {
        m: [m[0] / scale, m[1] / scale, m[2] / scale],
        center,
    })
}

fn count_with_refinement(
    q: &ExpSum,
    dq: &ExpSum,
    rect: &Rect,
    cfg: &RootConfig,
) -> Result<(i64, Moments)> {
    let mut tol = cfg.quad_tol;
    for _ in 0..3 {
        let mom = contour_moments(q, dq, rect, cfg, tol)?;
        if let Some(n) = mom.count(cfg.quad_tol.max(1e-3)) {
            return Ok((n, mom));
        }
        tol *= 1e-2;
    }
    Err(Error::QuadratureFailure(format!(
        "winding number over [{}, {}] x [{}, {}] is not near an integer",
        rect.x_lo, rect.x_hi, rect.y_lo, rect.y_hi
    )))
}

/// Number of zeros of `q` inside `rect`, counted with multiplicity.
pub fn count_zeros_rect(q: &ExpSum, rect: &Rect) -> Result<i64> {
    count_zeros_rect_with(q, rect, &RootConfig::default())
}

pub fn count_zeros_rect_with(q: &ExpSum, rect: &Rect, cfg: &RootConfig) -> Result<i64> {
    q.require_nonempty()?;
    if !(rect.x_hi > rect.x_lo && rect.y_hi > rect.y_lo) {
        return Err(Error::InvalidArgument("degenerate rectangle".into()));
    }
    let dq = q.derivative();
    count_with_refinement(q, &dq, rect, cfg).map(|(n, _)| n)
}

/// Damped Newton iteration for a zero of `f` inside `rect`.
fn newton(
    f: &ExpSum,
    df: &ExpSum,
    start: Complex64,
    rect: &Rect,
    residual: f64,
) -> Option<Complex64> {
    let mut z = start;
    let max_step = 0.5 * rect.width().max(rect.y_hi - rect.y_lo);
    for _ in 0..100 {
        let fv = f.evaluate_scaled(z);
        let scale = f.magnitude_scale(z);
        let fz_abs = (fv.log_abs()).exp();
        if fz_abs <= residual * scale {
            return rect.contains(z).then_some(z);
        }
        let dv = df.evaluate_scaled(z);
        if dv.mantissa == Complex64::new(0.0, 0.0) {
            return None;
        }
        let mut step = fv.ratio(dv);
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        if step.norm() > max_step {
            step *= max_step / step.norm();
        }
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            return rect.contains(z).then_some(z);
        }
    }
    None
}

struct Locator<'a> {
    q: &'a ExpSum,
    dq: &'a ExpSum,
    cfg: &'a RootConfig,
}

impl Locator<'_> {
    /// Split point near the middle where the contour stays far from zeros.
    fn split_point(&self, rect: &Rect) -> f64 {
        let w = rect.width();
        let mid = 0.5 * (rect.x_lo + rect.x_hi);
        let offsets = [0.0, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0];
        let score = |x: f64| {
            [0.0, 0.5, -0.5]
                .iter()
                .map(|t| {
                    let z = Complex64::new(x, t * rect.y_hi.max(-rect.y_lo));
                    let v = self.q.evaluate_scaled(z).log_abs();
                    v - self.q.magnitude_scale(z).ln()
                })
                .fold(f64::INFINITY, f64::min)
        };
        offsets
            .iter()
            .map(|o| mid + o * w / 16.0)
            .map(|x| (x, score(x)))
            .fold((mid, f64::NEG_INFINITY), |best, cand| {
                if cand.1 > best.1 {
                    cand
                } else {
                    best
                }
            })
            .0
    }

    fn process(&self, rect: Rect, count: i64, moments: Option<Moments>) -> Result<Vec<Zero>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let width = rect.width();
        let mom = match moments {
            Some(m) => m,
            None => count_with_refinement(self.q, self.dq, &rect, self.cfg)?.1,
        };
        if count == 1 {
            let start = mom.center + mom.m[1];
            let start = Complex64::new(
                start.re.clamp(rect.x_lo, rect.x_hi),
                start.im.clamp(rect.y_lo, rect.y_hi),
            );
            if let Some(z) = newton(self.q, self.dq, start, &rect, self.cfg.newton_residual) {
                return Ok(if z.im.abs() <= self.cfg.real_tol {
                    vec![Zero {
                        location: z.re,
                        multiplicity: 1,
                    }]
                } else {
                    Vec::new()
                });
            }
            if width <= self.cfg.cluster_width {
                if start.im.abs() > width {
                    return Ok(Vec::new());
                }
                return Err(Error::UnresolvedCluster {
                    x_lo: rect.x_lo,
                    x_hi: rect.x_hi,
                    count,
                });
            }
        }
        if count >= 2 && width <= self.cfg.cluster_width {
            return self.cluster(rect, count);
        }
        if count >= 2 {
            // All zeros bunched together: splitting would only put edges next to them.
            let n = count as f64;
            let mean = mom.m[1] / n;
            let spread = (mom.m[2] / n - mean * mean).norm().sqrt();
            if spread < 0.5 * self.cfg.cluster_width {
                let c = mom.center + mean;
                let h = self.cfg.cluster_width;
                let tight = Rect {
                    x_lo: (c.re - h).max(rect.x_lo),
                    x_hi: (c.re + h).min(rect.x_hi),
                    ..rect
                };
                return self.cluster(tight, count);
            }
        }
        let s = self.split_point(&rect);
        let left = Rect { x_hi: s, ..rect };
        let right = Rect { x_lo: s, ..rect };
        let (left_count, left_mom) = count_with_refinement(self.q, self.dq, &left, self.cfg)?;
        let right_count = count - left_count;
        let right_mom = mom.minus(&left_mom, right.center());
        if right_count < 0 {
            return Err(Error::QuadratureFailure(format!(
                "inconsistent counts while splitting [{}, {}]",
                rect.x_lo, rect.x_hi
            )));
        }
        let (a, b) = if width > 8.0 {
            rayon::join(
                || self.process(left, left_count, Some(left_mom)),
                || self.process(right, right_count, Some(right_mom)),
            )
        } else {
            (
                self.process(left, left_count, Some(left_mom)),
                self.process(right, right_count, Some(right_mom)),
            )
        };
        let mut out = a?;
        out.extend(b?);
        Ok(out)
    }

    /// A box narrower than the cluster width holding several zeros: keep
    /// those within a box of comparable height around the real axis.
    fn cluster(&self, rect: Rect, count: i64) -> Result<Vec<Zero>> {
        let h = rect.width().max(1e-9);
        let small = Rect {
            y_lo: -h,
            y_hi: h,
            ..rect
        };
        let (m, mom) = count_with_refinement(self.q, self.dq, &small, self.cfg)?;
        if m <= 0 {
            return Ok(Vec::new());
        }
        if m > count {
            return Err(Error::UnresolvedCluster {
                x_lo: rect.x_lo,
                x_hi: rect.x_hi,
                count,
            });
        }
        let centroid = mom.center + mom.m[1] / m as f64;
        // Polish on the (m−1)-th derivative, which has a simple zero there.
        let f = self.q.nth_derivative(m as usize - 1);
        let df = f.derivative();
        let loc = newton(&f, &df, centroid, &small, self.cfg.newton_residual).unwrap_or(centroid);
        Ok(vec![Zero {
            location: loc.re,
            multiplicity: m as u32,
        }])
    }
}

fn locate_once(q: &ExpSum, x_lo: f64, x_hi: f64, eta: f64, cfg: &RootConfig) -> Result<ZeroSet> {
    let dq = q.derivative();
    let whole = Rect::strip(x_lo, x_hi, eta);
    let (rect_count, _) = count_with_refinement(q, &dq, &whole, cfg)?;
    let loc = Locator { q, dq: &dq, cfg };

    // Cut the window into chunks at zero-free points and work on them in parallel.
    let pieces = ((x_hi - x_lo) / cfg.chunk_length).ceil().max(1.0) as usize;
    let mut cuts = vec![x_lo];
    for k in 1..pieces {
        let x = x_lo + (x_hi - x_lo) * k as f64 / pieces as f64;
        let w = (x_hi - x_lo) / pieces as f64;
        let probe = Rect::strip(x - w / 2.0, x + w / 2.0, eta);
        cuts.push(loc.split_point(&probe));
    }
    cuts.push(x_hi);
    let chunks: Vec<Rect> = cuts
        .windows(2)
        .map(|c| Rect::strip(c[0], c[1], eta))
        .collect();
    let results: Vec<Result<Vec<Zero>>> = chunks
        .par_iter()
        .map(|r| {
            let (n, mom) = count_with_refinement(q, &dq, r, cfg)?;
            loc.process(*r, n, Some(mom))
        })
        .collect();
    let mut zeros = Vec::new();
    for r in results {
        zeros.extend(r?);
    }
    zeros.sort_by(|a, b| a.location.total_cmp(&b.location));
    zeros.retain(|z| z.location >= x_lo && z.location <= x_hi);
    let real_count: i64 = zeros.iter().map(|z| z.multiplicity as i64).sum();
    Ok(ZeroSet {
        window: (x_lo, x_hi),
        eta,
        zeros,
        certified: real_count == rect_count,
        rect_count,
    })
}

/// Locate the real zeros of `q` in `[x_lo, x_hi]` using boxes of half-height
/// `eta`. If a contour passes too close to a zero the height is perturbed
/// (horizontal edges) or the window widened slightly (vertical edges) and the
/// search retried.
pub fn locate_real_zeros(q: &ExpSum, x_lo: f64, x_hi: f64, eta: f64) -> Result<ZeroSet> {
    locate_real_zeros_with(q, x_lo, x_hi, eta, &RootConfig::default())
}

pub fn locate_real_zeros_with(
    q: &ExpSum,
    x_lo: f64,
    x_hi: f64,
    eta: f64,
    cfg: &RootConfig,
) -> Result<ZeroSet> {
    q.require_nonempty()?;
    if !(x_hi > x_lo) || !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad window [{x_lo}, {x_hi}] or eta {eta}"
        )));
    }
    let (mut lo, mut hi, mut h) = (x_lo, x_hi, eta);
    let nudge = cfg.cluster_width.max(1e-3) * 1.37;
    let mut attempt = 0;
    loop {
        match locate_once(q, lo, hi, h, cfg) {
            Err(Error::ContourNearZero { edge }) if attempt < cfg.max_retries => {
                attempt += 1;
                match edge {
                    Edge::Top | Edge::Bottom => {
                        let sign = if attempt % 2 == 1 { -1.0 } else { 1.0 };
                        h = eta * (1.0 + sign * 0.1 * attempt.div_ceil(2) as f64);
                    }
                    Edge::Left => lo -= nudge * attempt as f64,
                    Edge::Right => hi += nudge * attempt as f64,
                }
            }
            other => return other,
        }
    }
}

/// Check that all zeros in the strip lie on the real axis.
pub fn certify_real_rooted(q: &ExpSum, x_lo: f64, x_hi: f64, eta: f64) -> Result<Certification> {
    certify_real_rooted_with(q, x_lo, x_hi, eta, &RootConfig::default())
}

pub fn certify_real_rooted_with(
    q: &ExpSum,
    x_lo: f64,
    x_hi: f64,
    eta: f64,
    cfg: &RootConfig,
) -> Result<Certification> {
    let zeros = locate_real_zeros_with(q, x_lo, x_hi, eta, cfg)?;
    let real_count = zeros.total_multiplicity();
    let unit_strip_max = zeros
        .unit_strip_counts()
        .into_iter()
        .max()
        .unwrap_or(real_count);
    Ok(Certification {
        certified: zeros.certified,
        rect_count: zeros.rect_count,
        real_count,
        unit_strip_max,
        zeros,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{FreqVector, FrequencyBasis};
    use crate::expsum::sin_pi_z;

    fn sin_shift(beta: f64) -> ExpSum {
        // sin(πz + β)
        let b = FrequencyBasis::unit();
        let h = FreqVector::parse(&["1/2"]).unwrap();
        let i2 = Complex64::new(0.0, 2.0);
        ExpSum::new(
            b,
            vec![
                (h.clone(), Complex64::from_polar(1.0, beta) / i2),
                (-&h, -Complex64::from_polar(1.0, -beta) / i2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn counts_on_sine() {
        let q = sin_pi_z();
        assert_eq!(
            count_zeros_rect(&q, &Rect::new(-0.4, 0.4, -1.0, 1.0)).unwrap(),
            1
        );
        assert_eq!(
            count_zeros_rect(&q, &Rect::new(0.6, 3.4, -1.0, 1.0)).unwrap(),
            3
        );
        let sq = q.multiply(&q).unwrap();
        assert_eq!(
            count_zeros_rect(&sq, &Rect::new(-0.4, 0.4, -1.0, 1.0)).unwrap(),
            2
        );
    }

    #[test]
    fn contour_through_zero_is_rejected() {
        let q = sin_pi_z();
        let r = count_zeros_rect(&q, &Rect::new(0.0, 0.5, -1.0, 1.0));
        assert!(
            matches!(r, Err(Error::ContourNearZero { edge: Edge::Left })),
            "{r:?}"
        );
    }

    #[test]
    fn locates_integers() {
        let z = locate_real_zeros(&sin_pi_z(), -5.5, 5.5, 1.0).unwrap();
        assert!(z.certified);
        assert_eq!(z.zeros.len(), 11);
        for (k, zero) in z.zeros.iter().enumerate() {
            assert_eq!(zero.multiplicity, 1);
            assert!((zero.location - (k as f64 - 5.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn double_zeros_get_multiplicity_two() {
        let s = sin_shift(0.3);
        let q = s.multiply(&s).unwrap();
        let z = locate_real_zeros(&q, -3.0, 3.0, 1.0).unwrap();
        assert!(z.certified);
        assert_eq!(z.zeros.len(), 6);
        for zero in &z.zeros {
            assert_eq!(zero.multiplicity, 2);
            let t = zero.location + 0.3 / PI;
            assert!((t - t.round()).abs() < 1e-7, "{zero:?}");
        }
    }

    #[test]
    fn window_ending_on_zero_is_widened() {
        let z = locate_real_zeros(&sin_pi_z(), 0.0, 3.0, 1.0).unwrap();
        let locs = z.locations();
        assert_eq!(locs.len(), 4);
        assert!(locs[0].abs() < 1e-12 && (locs[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complex_shift_is_not_real_rooted() {
        let b = FrequencyBasis::unit();
        let q = sin_pi_z()
            .add(&ExpSum::constant(b, Complex64::new(0.0, 0.4)).unwrap())
            .unwrap();
        let c = certify_real_rooted(&q, -10.3, 10.3, 1.0).unwrap();
        assert!(!c.certified);
        assert!(c.rect_count > c.real_count);
        assert_eq!(c.real_count, 0);
    }
}
