#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use num_rational::BigRational;
use rand::Rng;

use sinefactor::generators::{SQRT2_DECIMAL, SQRT3_DECIMAL};
use sinefactor::{Complex64, FreqVector, FrequencyBasis, SineFactor, SineProductForm};

/// `{one, √2, √3}`.
pub fn mixed_basis() -> Arc<FrequencyBasis> {
    FrequencyBasis::from_pairs(&[("one", "1"), ("r2", SQRT2_DECIMAL), ("r3", SQRT3_DECIMAL)])
        .unwrap()
}

pub const MULTIPLIERS: [(i64, i64); 6] = [(1, 2), (2, 3), (3, 4), (1, 1), (5, 4), (3, 2)];

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// Up to three factors with distinct `α/π ∈ {1/2, …, 3/2}·{1, √2, √3}`,
/// multiplicities 1 or 2, `β ∈ [0, π)` and a rational shift.
pub fn random_form<R: Rng>(rng: &mut R) -> SineProductForm {
    let basis = mixed_basis();
    let j = rng.random_range(1..=3);
    let mut factors: Vec<SineFactor> = Vec::new();
    while factors.len() < j {
        let (p, q) = MULTIPLIERS[rng.random_range(0..MULTIPLIERS.len())];
        let u = FreqVector::unit(3, rng.random_range(0..3)).scale(&ratio(p, q));
        if factors.iter().any(|f| f.alpha_over_pi == u) {
            continue;
        }
        factors.push(SineFactor {
            alpha_over_pi: u,
            beta: rng.random_range(0.0..PI),
            multiplicity: rng.random_range(1..=2),
        });
    }
    let c = Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(-PI..PI));
    let shift = FreqVector::unit(3, 0).scale(&ratio(rng.random_range(-2..=2), 2));
    SineProductForm::new(basis, c, shift, factors).unwrap()
}

/// `β` distance on the circle `ℝ/πℤ`.
pub fn beta_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}
