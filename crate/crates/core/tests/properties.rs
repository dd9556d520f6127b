mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{beta_distance, mixed_basis, random_form};
use sinefactor::factorizer::{decompose_zero_set, factorize, Progression};
use sinefactor::generators::build_sine_product;
use sinefactor::logderiv::{h_expansion, sine_product_h_closed_form};
use sinefactor::quasicrystal::fourier_atoms;
use sinefactor::rootfinder::{count_zeros_rect, locate_real_zeros, Rect, Zero, ZeroSet};
use sinefactor::{Complex64, ExpSum, FreqVector, HalfPlane};

/// A few terms with small integer frequency vectors over `{one, √2, √3}`.
fn random_sum(rng: &mut ChaCha8Rng) -> ExpSum {
    let n = rng.random_range(1..=4);
    let terms = (0..n)
        .map(|_| {
            let v: Vec<i64> = (0..3).map(|_| rng.random_range(-2..=2)).collect();
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (FreqVector::from_ints(&v), c)
        })
        .collect();
    ExpSum::new(mixed_basis(), terms)
        .unwrap_or_else(|_| ExpSum::constant(mixed_basis(), Complex64::new(1.0, 0.0)).unwrap())
}

fn close(a: &ExpSum, b: &ExpSum, tol: f64) -> bool {
    let scale = a.terms().iter().map(|t| t.coeff.norm()).fold(1.0, f64::max);
    a.terms().iter().all(|t| {
        let other = b.coeff(&t.freq).unwrap_or_default();
        (t.coeff - other).norm() <= tol * scale
    }) && b.terms().iter().all(|t| {
        let other = a.coeff(&t.freq).unwrap_or_default();
        (t.coeff - other).norm() <= tol * scale
    })
}

fn random_z(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-10.0..10.0), rng.random_range(-2.0..2.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multiply_commutes_and_associates(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q, r) = (random_sum(&mut rng), random_sum(&mut rng), random_sum(&mut rng));
        prop_assert!(close(&p.multiply(&q).unwrap(), &q.multiply(&p).unwrap(), 1e-14));
        let left = p.multiply(&q).unwrap().multiply(&r).unwrap();
        let right = p.multiply(&q.multiply(&r).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-13));
    }

    #[test]
    fn product_evaluates_pointwise(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (random_sum(&mut rng), random_sum(&mut rng));
        let pq = p.multiply(&q).unwrap();
        for _ in 0..5 {
            let z = random_z(&mut rng);
            let want = p.evaluate(z).unwrap() * q.evaluate(z).unwrap();
            let got = pq.evaluate(z).unwrap();
            let scale = p.magnitude_scale(z) * q.magnitude_scale(z);
            prop_assert!((got - want).norm() <= 1e-10 * scale.max(want.norm()));
        }
    }

    #[test]
    fn leibniz_rule(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (random_sum(&mut rng), random_sum(&mut rng));
        let lhs = p.multiply(&q).unwrap().derivative();
        let rhs = p.derivative().multiply(&q).unwrap()
            .add(&p.multiply(&q.derivative()).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn spectrum_extremes_add(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (random_sum(&mut rng), random_sum(&mut rng));
        let (plo, phi) = p.spectrum_extremes().unwrap();
        let (qlo, qhi) = q.spectrum_extremes().unwrap();
        let (lo, hi) = p.multiply(&q).unwrap().spectrum_extremes().unwrap();
        prop_assert_eq!(lo.vector, &plo.vector + &qlo.vector);
        prop_assert_eq!(hi.vector, &phi.vector + &qhi.vector);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn h_expansion_is_additive(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = build_sine_product(&random_form(&mut rng)).unwrap();
        let b = build_sine_product(&random_form(&mut rng)).unwrap();
        for hp in [HalfPlane::Upper, HalfPlane::Lower] {
            let ha = h_expansion(&a, hp, 12.0).unwrap();
            let hb = h_expansion(&b, hp, 12.0).unwrap();
            let hab = h_expansion(&a.multiply(&b).unwrap(), hp, 12.0).unwrap();
            prop_assert!((hab.h0 - ha.h0 - hb.h0).norm() < 1e-9);
            let (ma, mb) = (ha.atom_map(), hb.atom_map());
            for atom in &hab.atoms {
                let v = &atom.gamma.vector;
                let want = ma.get(v).copied().unwrap_or_default() + mb.get(v).copied().unwrap_or_default();
                prop_assert!((atom.h - want).norm() < 1e-9, "{} vs {}", atom.h, want);
            }
        }
    }

    #[test]
    fn h0_matches_spectrum_extremes(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_sum(&mut rng);
        let (lo, hi) = q.spectrum_extremes().unwrap();
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let up = h_expansion(&q, HalfPlane::Upper, 5.0).unwrap();
        let down = h_expansion(&q, HalfPlane::Lower, 5.0).unwrap();
        prop_assert!((up.h0 - two_pi_i * lo.value).norm() < 1e-12);
        prop_assert!((down.h0 - two_pi_i * hi.value).norm() < 1e-12);
    }

    #[test]
    fn sine_products_match_closed_form(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = random_form(&mut rng);
        let q = build_sine_product(&form).unwrap();
        for hp in [HalfPlane::Upper, HalfPlane::Lower] {
            let rec = h_expansion(&q, hp, 20.0).unwrap();
            let closed = sine_product_h_closed_form(&form, hp, 20.0).unwrap();
            prop_assert!(rec.max_discrepancy(&closed) < 1e-8);
        }
    }

    #[test]
    fn hermitian_pairing_and_atom_at_zero(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = build_sine_product(&random_form(&mut rng)).unwrap();
        let up = h_expansion(&q, HalfPlane::Upper, 15.0).unwrap();
        let down = h_expansion(&q, HalfPlane::Lower, 15.0).unwrap();
        let lower = down.atom_map();
        for atom in &up.atoms {
            let mirror = lower.get(&-&atom.gamma.vector).copied().unwrap_or_default();
            prop_assert!((mirror - atom.h.conj()).norm() < 1e-8);
        }
        let mu = fourier_atoms(&up, &down).unwrap();
        prop_assert!(mu.hermitian_defect() < 1e-8);
        let width = q.bandwidth();
        prop_assert!((mu.mass_at_zero() - Complex64::new(width, 0.0)).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn counts_add_over_abutting_rectangles(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = build_sine_product(&random_form(&mut rng)).unwrap();
        let zeros = locate_real_zeros(&q, -6.0, 6.0, 1.0).unwrap();
        let locs = zeros.locations();
        // split points and edges kept away from zeros
        let mut pick = |lo: f64, hi: f64| loop {
            let x: f64 = rng.random_range(lo..hi);
            if locs.iter().all(|z| (z - x).abs() > 1e-2) {
                break x;
            }
        };
        let a = pick(-5.0, -2.0);
        let m = pick(-1.0, 1.0);
        let b = pick(2.0, 5.0);
        let whole = count_zeros_rect(&q, &Rect::new(a, b, -0.5, 0.5)).unwrap();
        let left = count_zeros_rect(&q, &Rect::new(a, m, -0.5, 0.5)).unwrap();
        let right = count_zeros_rect(&q, &Rect::new(m, b, -0.5, 0.5)).unwrap();
        prop_assert_eq!(whole, left + right);
        prop_assert_eq!(whole, zeros.count_in(a, b));
    }

    #[test]
    fn round_trip_recovers_form(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = random_form(&mut rng).canonical();
        let q = build_sine_product(&form).unwrap();
        let got = factorize(&q, 30.0, 1e-6).unwrap();
        prop_assert_eq!(got.form.factors.len(), form.factors.len());
        for (f, g) in form.factors.iter().zip(&got.form.factors) {
            prop_assert_eq!(&f.alpha_over_pi, &g.alpha_over_pi);
            prop_assert_eq!(f.multiplicity, g.multiplicity);
            prop_assert!(beta_distance(f.beta, g.beta) < 1e-8);
        }
        prop_assert!((got.form.c - form.c).norm() < 1e-6);
        prop_assert!((got.form.a() - form.a()).abs() < 1e-6);
        prop_assert!(got.verification.max_residual < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_progressions_are_recovered(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let periods = [1.0, std::f64::consts::SQRT_2, 3.0_f64.sqrt()];
        let n = rng.random_range(1..=3);
        let progs: Vec<Progression> = periods[..n]
            .iter()
            .map(|&p| Progression { period: p, offset: rng.random_range(0.0..p), multiplicity: 1 })
            .collect();
        let (lo, hi) = (-40.0, 40.0);
        let mut xs: Vec<f64> = progs.iter().flat_map(|p| p.points_in(lo, hi)).collect();
        xs.sort_by(f64::total_cmp);
        // reject samples where two progressions nearly coincide
        prop_assume!(xs.windows(2).all(|w| w[1] - w[0] > 1e-2));
        let zeros = ZeroSet {
            window: (lo, hi),
            eta: 1.0,
            zeros: xs.iter().map(|&x| Zero { location: x, multiplicity: 1 }).collect(),
            certified: true,
            rect_count: xs.len() as i64,
        };
        let got = decompose_zero_set(&zeros, 1e-3).unwrap();
        prop_assert!(!got.has_exceptions());
        prop_assert_eq!(got.progressions.len(), n);
        for p in &progs {
            let hit = got.progressions.iter().any(|g| {
                let d = (g.offset - p.offset).rem_euclid(p.period);
                (g.period - p.period).abs() < 1e-8 && d.min(p.period - d) < 1e-8
            });
            prop_assert!(hit, "{:?} not in {:?}", p, got.progressions);
        }
    }
}
