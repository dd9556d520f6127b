//! Binary fixed-point complex numbers with a configurable number of
//! fractional bits, used for the opt-in extended-precision recursion.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::basis::pi_rational;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedComplex {
    pub re: BigInt,
    pub im: BigInt,
}

#[derive(Debug, Clone)]
pub struct FixedContext {
    bits: u32,
    scale: BigRational,
    two_pi: BigRational,
}

impl FixedContext {
    pub fn new(bits: u32) -> Self {
        let scale = BigRational::from_integer(BigInt::one() << bits);
        FixedContext {
            bits,
            scale,
            two_pi: pi_rational() * BigRational::from_integer(2.into()),
        }
    }

    fn from_rational(&self, r: &BigRational) -> BigInt {
        (r * &self.scale).round().to_integer()
    }

    pub fn from_c64(&self, c: Complex64) -> FixedComplex {
        let conv = |x: f64| {
            BigRational::from_float(x)
                .map(|r| self.from_rational(&r))
                .unwrap_or_else(BigInt::zero)
        };
        FixedComplex {
            re: conv(c.re),
            im: conv(c.im),
        }
    }

    /// `2πi·v` for an exact real `v`.
    pub fn two_pi_i(&self, v: &BigRational) -> FixedComplex {
        FixedComplex {
            re: BigInt::zero(),
            im: self.from_rational(&(&self.two_pi * v)),
        }
    }

    pub fn to_c64(&self, x: &FixedComplex) -> Complex64 {
        let conv = |v: &BigInt| {
            BigRational::new(v.clone(), self.scale.to_integer())
                .to_f64()
                .unwrap_or(f64::NAN)
        };
        Complex64::new(conv(&x.re), conv(&x.im))
    }

    pub fn sub(&self, a: &FixedComplex, b: &FixedComplex) -> FixedComplex {
        FixedComplex {
            re: &a.re - &b.re,
            im: &a.im - &b.im,
        }
    }

    pub fn mul(&self, a: &FixedComplex, b: &FixedComplex) -> FixedComplex {
        let re = (&a.re * &b.re - &a.im * &b.im) >> self.bits;
        let im = (&a.re * &b.im + &a.im * &b.re) >> self.bits;
        FixedComplex { re, im }
    }

    pub fn div(&self, a: &FixedComplex, b: &FixedComplex) -> FixedComplex {
        let den = &b.re * &b.re + &b.im * &b.im;
        let nre = (&a.re * &b.re + &a.im * &b.im) << self.bits;
        let nim = (&a.im * &b.re - &a.re * &b.im) << self.bits;
        FixedComplex {
            re: nre / &den,
            im: nim / den,
        }
    }
}
