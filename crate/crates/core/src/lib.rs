//! Horocycle and geodesic flows on a compact genus-2 surface and on a planar
//! model, their time changes, pointwise operator calculus, and spectral
//! diagnostics of the time-changed flow.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod flows;
pub mod mobius;
pub mod ode;
pub mod planar_toy;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod spectral;
pub mod surface;

pub use error::{Error, Result};
pub use mobius::{HalfPlanePoint, Orientation, Psl2};
pub use scalar::Real;

/// Double-precision group element.
pub type GroupElement = Psl2<f64>;
/// Double-precision point of the upper half-plane.
pub type HPoint = HalfPlanePoint<f64>;
