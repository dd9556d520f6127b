//! Sine-product structure of exponential sums with real zeros.
//!
//! An exponential sum `Q(z) = Σ q_ω e^{2πiωz}` with only real zeros is a
//! finite product of sines exactly when the coefficients of its
//! logarithmic derivative grow at most linearly:
//! `Σ_{|γ|<r} |h_γ| = O(r)`. This crate computes those coefficients by an
//! exact-frequency recursion, tests the growth, builds the atomic Fourier
//! transform of the zero-counting measure, certifies and locates real
//! zeros, and recovers `C·e^{iaz}·∏ sin^{k_j}(α_j z + β_j)` when it exists.

pub mod basis;
pub mod error;
pub mod expr;
pub mod expsum;
pub mod factorizer;
mod fixed;
pub mod form;
pub mod generators;
pub mod logderiv;
pub mod quasicrystal;
pub mod rootfinder;

pub use basis::{FreqVector, Frequency, FrequencyBasis};
pub use error::{Error, Result};
pub use expsum::ExpSum;
pub use form::{SineFactor, SineProductForm};
pub use logderiv::{GrowthReport, HExpansion, HalfPlane, Verdict};
pub use quasicrystal::{AtomicMeasure, DiffractionReport};
pub use rootfinder::{Rect, ZeroSet};

pub use num_complex::Complex64;

/// Version tag embedded in every JSON document.
pub const SCHEMA: &str = "sinefactor/1";
