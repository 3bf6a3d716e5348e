//! Local analysis of real codimension-two submanifolds `X = {ρ₁ = 0} ∩ {ρ₂ = 0}`
//! of `Cⁿ⁺²`.
//!
//! The crate locates complex jump points (where the complex tangent space
//! jumps to full dimension), certifies transversality of the Gauss image
//! against the jump locus, samples fibers of the CR-Nash blow-up over those
//! points, computes the Levi form (also on the blow-up) together with the
//! Mizner determinant polynomial, and expands the Chern-class obstruction to
//! Levi nondegeneracy symbolically.
//!
//! Modules, bottom-up:
//!
//! * [`expr`]: defining-function expressions, Wirtinger jets and symbolic partials
//! * [`linalg`]: small dense complex/real linear algebra
//! * [`manifold`]: specs, projection onto `X`, tangent frames and graph charts
//! * [`crcore`]: complex tangents, jump points, Plücker coordinates,
//!   transversality, Levi forms and the Mizner polynomial
//! * [`blowup`]: Nash blow-up fibers for plane curves and over jump points
//! * [`chern`]: exact obstruction class via the splitting principle

// `!(x > 0.0)` rejects NaN as well, which is what the validation code wants.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod chern;
pub mod crcore;
mod error;
pub mod expr;
pub mod linalg;
pub mod manifold;
pub mod par;
pub mod specfile;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
