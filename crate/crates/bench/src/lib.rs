//! Fixtures shared by the criterion benchmarks.

use sinefactor::basis::FreqVector;
use sinefactor::expsum::sin_pi_z;
use sinefactor::generators::{secular_expsum_uncertified, SecularSpec};
use sinefactor::{Complex64, ExpSum, FrequencyBasis, SineFactor, SineProductForm};

/// `sin(πz)·sin(√2πz + 0.5)` over `{one, r2}`.
pub fn two_factor_product() -> ExpSum {
    let basis =
        FrequencyBasis::from_pairs(&[("one", "1"), ("r2", sinefactor::generators::SQRT2_DECIMAL)])
            .unwrap();
    let form = SineProductForm::new(
        basis,
        Complex64::new(1.0, 0.0),
        FreqVector::from_ints(&[0, 0]),
        vec![
            SineFactor {
                alpha_over_pi: FreqVector::from_ints(&[1, 0]),
                beta: 0.0,
                multiplicity: 1,
            },
            SineFactor {
                alpha_over_pi: FreqVector::from_ints(&[0, 1]),
                beta: 0.5,
                multiplicity: 1,
            },
        ],
    )
    .unwrap();
    sinefactor::generators::build_sine_product(&form).unwrap()
}

pub fn sine() -> ExpSum {
    sin_pi_z()
}

/// A three-edge secular function with incommensurable lengths.
pub fn secular_three() -> ExpSum {
    secular_expsum_uncertified(&SecularSpec::standard_incommensurable(3, 7)).unwrap()
}
