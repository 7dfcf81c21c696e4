//! Weighted magnetic Laplacians on discrete funnels.
//!
//! A discrete funnel is the twisted Cartesian product of the exponentially
//! weighted half-line (`m₁(n) = eⁿ`, `ℰ₁(n, n+1) = e^{(2n+1)/2}`) with a
//! finite second factor. This crate builds those graphs and their magnetic
//! Laplacians, checks the exact operator identities that hold on finite
//! truncations, and probes the spectral picture numerically:
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`graph`] | weighted magnetic graphs, half-line factor, products |
//! | [`operators`] | Laplacian, quadratic form, weight and gauge unitaries |
//! | [`funnel`] | log-domain assembly of funnel operators for long truncations |
//! | [`conjugate`] | conjugate operators `A_ℕ`, `A_{m₁}`, `A_𝒢` and the commutator engine |
//! | [`spectral`] | Hermitian eigensolver, band prediction, thresholds, projectors |
//! | [`perturbation`] | perturbed graphs, difference kernel, hypothesis checks |
//! | [`mourre`] | localized positive-commutator scans |
//! | [`analysis`] | weighted resolvent ladder, time evolution, smoothness integrals |
//! | [`scenario`] | scenario files, experiment dispatch and CSV reports |
//!
//! All spectral work happens in the *flattened* picture: an operator on
//! `ℓ²(V, m)` is conjugated by `f ↦ √m f` into an ordinary Hermitian matrix.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod conjugate;
mod eigen;
pub mod error;
pub mod funnel;
pub mod graph;
pub mod linalg;
pub mod mourre;
pub mod operators;
pub mod perturbation;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Lower edge of the half-line band: `e^{1/2} + e^{-1/2} - 2`.
pub fn alpha() -> f64 {
    0.5f64.exp() + (-0.5f64).exp() - 2.0
}

/// Upper edge of the half-line band: `e^{1/2} + e^{-1/2} + 2`.
pub fn beta() -> f64 {
    0.5f64.exp() + (-0.5f64).exp() + 2.0
}

/// `⟨t⟩ = √(1 + t²)`.
pub fn japanese_bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}
