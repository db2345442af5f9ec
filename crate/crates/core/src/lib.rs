//! Averaging and maximal averaging operators attached to product varieties
//! `x_1 x_2 ... x_d = j` over odd prime fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`]: prime-field arithmetic and the additive character.
//! * [`grid`]: dense complex functions on `F_q^d`, norms, convolution and the
//!   two Fourier transforms.
//! * [`variety`]: product varieties, their surface measures and the
//!   zero-pattern frequency classes `N_k`.
//! * [`spectral`]: closed-form Fourier coefficients of the surface measure,
//!   the decay certificate and the `Omega_j` decomposition.
//! * [`operators`]: averaging and maximal operators, extremizers, ratios and
//!   the exponent region.
//! * [`experiments`]: prime sweeps, slope fits and report emission.
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is
//! enabled (the default) and fall back to plain iterators otherwise.

pub mod error;
pub mod exponent;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod operators;
pub mod par;
pub mod spectral;
pub mod variety;

pub use error::{BoundViolation, Error, Result};
pub use exponent::{Exponent, ExponentPair};
pub use field::FieldCtx;
pub use grid::GridFunction;

/// Absolute and relative tolerances used by every numerical check.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { abs: 1e-6, rel: 1e-6 }
    }
}
