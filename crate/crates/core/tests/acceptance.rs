//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its own PASS/FAIL line; exits nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sinefactor::expr::parse_expression;
use sinefactor::expsum::sin_pi_z;
use sinefactor::factorizer::{
    consistency_check, decompose_zero_set, factorize, peel_sine_factors, DEFAULT_GAP_TOL,
    DEFAULT_TOL,
};
use sinefactor::generators::{
    build_sine_product, secular_expsum_certified, SecularSpec, SQRT2_DECIMAL,
};
use sinefactor::logderiv::{
    default_radii, growth_profile, h_expansion, meyer_verdict, sine_product_h_closed_form,
    DEFAULT_SLOPE_TOLERANCE, DEFAULT_SPAN_FACTOR,
};
use sinefactor::quasicrystal::{compare_diffraction, empirical_density, fourier_atoms, half_width};
use sinefactor::rootfinder::{count_zeros_rect, locate_real_zeros};
use sinefactor::{Error, ExpSum, FreqVector, HalfPlane, Rect, SineProductForm, Verdict, ZeroSet};

use common::{beta_distance, random_form};

const FORMS: usize = 50;
const FORM_SEED: u64 = 20_240_601;
const FORM_WINDOW: f64 = 25.0;
const CUTOFF: f64 = 50.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Forms {
    forms: Vec<SineProductForm>,
    sums: Vec<ExpSum>,
    zeros: Vec<ZeroSet>,
    build_time: Duration,
}

fn forms() -> &'static Forms {
    static F: OnceLock<Forms> = OnceLock::new();
    F.get_or_init(|| {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(FORM_SEED);
        let forms: Vec<SineProductForm> = (0..FORMS)
            .map(|_| random_form(&mut rng).canonical())
            .collect();
        let sums: Vec<ExpSum> = forms
            .iter()
            .map(|f| build_sine_product(f).unwrap())
            .collect();
        let zeros = sums
            .iter()
            .map(|q| locate_real_zeros(q, -FORM_WINDOW, FORM_WINDOW, 1.0).unwrap())
            .collect();
        Forms {
            forms,
            sums,
            zeros,
            build_time: t.elapsed(),
        }
    })
}

fn sqrt2_product() -> ExpSum {
    parse_expression(
        "sin(pi*z)*sin(sqrt2*pi*z)",
        &[("sqrt2".into(), SQRT2_DECIMAL.into())],
    )
    .unwrap()
}

fn secular(n: usize) -> SecularSpec {
    SecularSpec::standard_incommensurable(n, 7)
}

fn poisson() -> Outcome {
    let t = Instant::now();
    let q = sin_pi_z();
    let up = h_expansion(&q, HalfPlane::Upper, CUTOFF).unwrap();
    let lo = h_expansion(&q, HalfPlane::Lower, CUTOFF).unwrap();
    let m = fourier_atoms(&up, &lo).unwrap();
    let mut worst = 0.0f64;
    for n in -50i64..=50 {
        let mass = m.mass(&FreqVector::from_ints(&[n]));
        worst = worst.max((mass - 1.0).norm());
    }
    let elapsed = t.elapsed();
    let pass = worst < 1e-9 && m.len() == 101 && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "{} atoms, max |mass - 1| = {worst:.2e} over |γ| <= 50, {elapsed:.2?}",
            m.len()
        ),
    )
}

fn recursion_vs_closed_form() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(FORM_SEED ^ 0x5eed);
    let mut worst = 0.0f64;
    let mut fewest = usize::MAX;
    for _ in 0..FORMS {
        let form = random_form(&mut rng);
        let q = build_sine_product(&form).unwrap();
        let mut cutoff = CUTOFF;
        while sine_product_h_closed_form(&form, HalfPlane::Upper, cutoff)
            .unwrap()
            .atoms
            .len()
            < 200
        {
            cutoff *= 1.5;
        }
        for hp in [HalfPlane::Upper, HalfPlane::Lower] {
            let closed = sine_product_h_closed_form(&form, hp, cutoff).unwrap();
            let rec = h_expansion(&q, hp, cutoff).unwrap();
            fewest = fewest.min(closed.atoms.len());
            worst = worst.max(rec.max_discrepancy(&closed));
        }
    }
    let elapsed = t.elapsed();
    let pass = worst < 1e-8 && fewest >= 200 && elapsed < Duration::from_secs(30);
    outcome(
        pass,
        format!(
            "{FORMS} forms, >= {fewest} atoms each, max discrepancy {worst:.2e}, {elapsed:.2?}"
        ),
    )
}

fn growth_dichotomy() -> Outcome {
    let t = Instant::now();
    let radii = default_radii(CUTOFF, 25);
    let f = forms();
    let mut inputs: Vec<ExpSum> = vec![sin_pi_z(), sqrt2_product()];
    inputs.extend(f.sums.iter().cloned());
    let mut slopes = (f64::INFINITY, f64::NEG_INFINITY);
    let mut nonlinear = 0;
    for q in &inputs {
        let up = h_expansion(q, HalfPlane::Upper, CUTOFF).unwrap();
        let lo = h_expansion(q, HalfPlane::Lower, CUTOFF).unwrap();
        let a = meyer_verdict(
            &growth_profile(&up, &lo, &radii).unwrap(),
            DEFAULT_SLOPE_TOLERANCE,
            DEFAULT_SPAN_FACTOR,
        );
        let s = a.report.slope_estimate.unwrap_or(f64::NAN);
        slopes = (slopes.0.min(s), slopes.1.max(s));
        if a.verdict != Verdict::Linear || !(0.9..=1.1).contains(&s) {
            nonlinear += 1;
        }
    }
    let q = sinefactor::generators::secular_expsum_uncertified(&secular(3)).unwrap();
    let up = h_expansion(&q, HalfPlane::Upper, CUTOFF).unwrap();
    let lo = h_expansion(&q, HalfPlane::Lower, CUTOFF).unwrap();
    let a = meyer_verdict(
        &growth_profile(&up, &lo, &radii).unwrap(),
        DEFAULT_SLOPE_TOLERANCE,
        DEFAULT_SPAN_FACTOR,
    );
    let growth = a.ratio_growth.unwrap_or(0.0);
    let elapsed = t.elapsed();
    let pass = nonlinear == 0
        && a.verdict == Verdict::Superlinear
        && growth >= 5.0
        && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{} sine products, {nonlinear} not Linear in [0.9, 1.1] (slopes {:.3}..{:.3}); secular n=3 {:?}, ratio growth {growth:.1}x, {elapsed:.2?}",
            inputs.len(),
            slopes.0,
            slopes.1,
            a.verdict
        ),
    )
}

fn two_route_diffraction() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, q) in [("sin", sin_pi_z()), ("sin*sin_r2", sqrt2_product())] {
        let e1 = compare_diffraction(&q, 1000.0, 10).unwrap();
        let e2 = compare_diffraction(&q, 2000.0, 10).unwrap();
        let (a, b) = (e1.max_abs_error(), e2.max_abs_error());
        pass &= e1.entries.len() == 10 && e2.entries.len() == 10 && a < 5e-3 && b < 5e-3 && b < a;
        parts.push(format!("{name}: L=1000 {a:.2e}, L=2000 {b:.2e}"));
    }
    let elapsed = t.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    outcome(pass, format!("{}, {elapsed:.2?}", parts.join("; ")))
}

fn density_identity() -> Outcome {
    let t = Instant::now();
    let f = forms();
    let mut algebraic = 0.0f64;
    let mut empirical_ratio = 0.0f64;
    let mut check = |q: &ExpSum, zeros: Option<&ZeroSet>| {
        let up = h_expansion(q, HalfPlane::Upper, CUTOFF).unwrap();
        let lo = h_expansion(q, HalfPlane::Lower, CUTOFF).unwrap();
        let (wl, wh) = q.spectrum_extremes().unwrap();
        let width = wh.value - wl.value;
        let m = fourier_atoms(&up, &lo).unwrap();
        algebraic = algebraic.max((m.mass_at_zero() - width).norm());
        if let Some(z) = zeros {
            assert!(z.certified);
            let l = half_width(z);
            empirical_ratio = empirical_ratio.max((empirical_density(z) - width).abs() / (2.0 / l));
        }
    };
    for q in [sin_pi_z(), sqrt2_product()] {
        let z = locate_real_zeros(&q, -200.0, 200.0, 1.0).unwrap();
        check(&q, Some(&z));
    }
    for (q, z) in f.sums.iter().zip(&f.zeros) {
        check(q, Some(z));
    }
    for n in [2, 3] {
        let (q, cert) = secular_expsum_certified(&secular(n)).unwrap();
        check(&q, Some(&cert.zeros));
    }
    let elapsed = t.elapsed();
    let pass = algebraic < 1e-12 && empirical_ratio <= 1.0;
    outcome(
        pass,
        format!("max |mass(0) - (ω+ - ω-)| = {algebraic:.2e}; worst empirical gap = {empirical_ratio:.2} x (2/L), {elapsed:.2?}"),
    )
}

fn round_trip() -> Outcome {
    let t = Instant::now();
    let f = forms();
    let mut failures = Vec::new();
    let (mut beta_err, mut scale_err, mut residual) = (0.0f64, 0.0f64, 0.0f64);
    for (i, ((form, q), zeros)) in f.forms.iter().zip(&f.sums).zip(&f.zeros).enumerate() {
        let got = match factorize(q, CUTOFF, DEFAULT_TOL) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("#{i}: {}", e.kind()));
                continue;
            }
        };
        let g = &got.form;
        let same_alpha = g.factors.len() == form.factors.len()
            && g.factors.iter().zip(&form.factors).all(|(a, b)| {
                a.alpha_over_pi == b.alpha_over_pi && a.multiplicity == b.multiplicity
            });
        if !same_alpha {
            failures.push(format!("#{i}: factors {} vs {}", g.render(), form.render()));
            continue;
        }
        for (a, b) in g.factors.iter().zip(&form.factors) {
            beta_err = beta_err.max(beta_distance(a.beta, b.beta));
        }
        scale_err = scale_err
            .max((g.c - form.c).norm())
            .max((g.a() - form.a()).abs());
        residual = residual.max(got.verification.max_residual);
        let report =
            decompose_zero_set(zeros, DEFAULT_GAP_TOL).map(|p| consistency_check(g, &p, false));
        match report {
            Ok(r) if r.fully_matched => {}
            Ok(r) => failures.push(format!(
                "#{i}: {} unmatched factors, {} unmatched progressions",
                r.unmatched_factors.len(),
                r.unmatched_progressions.len()
            )),
            Err(e) => failures.push(format!("#{i}: {}", e.kind())),
        }
    }
    let elapsed = t.elapsed() + f.build_time;
    let pass = failures.is_empty()
        && beta_err < 1e-8
        && scale_err < 1e-6
        && residual < 1e-8
        && elapsed < Duration::from_secs(60);
    let mut detail = format!(
        "{}/{FORMS} recovered; β err {beta_err:.2e}, (C, a) err {scale_err:.2e}, verify residual {residual:.2e}, {elapsed:.2?}",
        FORMS - failures.len()
    );
    if !failures.is_empty() {
        detail.push_str(&format!(" [{}]", failures.join("; ")));
    }
    outcome(pass, detail)
}

fn negative_soundness() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 3] {
        let (q, cert) = secular_expsum_certified(&secular(n)).unwrap();
        let up = h_expansion(&q, HalfPlane::Upper, CUTOFF).unwrap();
        let mass = match peel_sine_factors(&up, DEFAULT_TOL) {
            Err(Error::NotASineProduct { residual_mass, .. }) => residual_mass,
            _ => f64::NAN,
        };
        // Any accepted form would have to come out of factorize.
        let accepted = match factorize(&q, CUTOFF, DEFAULT_TOL) {
            Ok(r) => r.verification.max_residual < 1e-3,
            Err(_) => false,
        };
        pass &= cert.certified && mass > 0.0 && !accepted;
        parts.push(format!(
            "n={n}: certified {} ({}/{} zeros), residual mass {mass:.3}, accepted form {accepted}",
            cert.certified, cert.real_count, cert.rect_count
        ));
    }
    outcome(pass, format!("{}, {:.2?}", parts.join("; "), t.elapsed()))
}

fn root_finder_exactness() -> Outcome {
    let t = Instant::now();
    let q = parse_expression("sin(pi*z)*sin(pi*z + pi/3)", &[]).unwrap();
    let zeros = locate_real_zeros(&q, -30.0, 30.0, 1.0).unwrap();
    let (lo, hi) = zeros.window;
    let mut expected: Vec<f64> = (-31i64..=31)
        .flat_map(|n| [n as f64, n as f64 - 1.0 / 3.0])
        .filter(|&x| x >= lo && x <= hi)
        .collect();
    expected.sort_by(f64::total_cmp);
    let got = zeros.locations();
    let simple = zeros.zeros.iter().all(|z| z.multiplicity == 1);
    let max_err = if got.len() == expected.len() {
        got.iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    let mut rng = ChaCha8Rng::seed_from_u64(FORM_SEED ^ 0xbeef);
    let mut mismatches = 0;
    let mut tried = 0;
    while tried < 100 {
        let (mut a, mut b): (f64, f64) =
            (rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let (mut c, mut d): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if c > d {
            std::mem::swap(&mut c, &mut d);
        }
        let near = |x: f64| expected.iter().any(|z| (z - x).abs() < 1e-3);
        if b - a < 0.05 || d - c < 0.05 || near(a) || near(b) || c.abs() < 1e-3 || d.abs() < 1e-3 {
            continue;
        }
        tried += 1;
        let counted = count_zeros_rect(&q, &Rect::new(a, b, c, d)).unwrap();
        let located = if c < 0.0 && d > 0.0 {
            got.iter().filter(|&&x| x > a && x < b).count() as i64
        } else {
            0
        };
        if counted != located {
            mismatches += 1;
        }
    }
    let strips = zeros.unit_strip_counts();
    let constant = strips.windows(2).all(|w| w[0] == w[1]);
    let pass = zeros.certified && simple && max_err < 1e-10 && mismatches == 0 && constant;
    outcome(
        pass,
        format!(
            "{} zeros vs {} expected, max err {max_err:.2e}; {mismatches}/100 rectangle mismatches; unit strips {}..{}, {:.2?}",
            got.len(),
            expected.len(),
            strips.iter().min().unwrap_or(&0),
            strips.iter().max().unwrap_or(&0),
            t.elapsed()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("poisson recovery", poisson),
        ("recursion vs closed form", recursion_vs_closed_form),
        ("growth dichotomy", growth_dichotomy),
        ("two-route diffraction", two_route_diffraction),
        ("density identity", density_identity),
        ("factorization round trip", round_trip),
        ("negative soundness", negative_soundness),
        ("root-finder exactness", root_finder_exactness),
    ];
    // keep panic messages out of the summary lines
    std::panic::set_hook(Box::new(|info| eprintln!("  panic: {info}")));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| outcome(false, "panicked".into()));
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} - {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {}/8 passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
