//! Curvature, covariant derivatives and equivalence tests for extended
//! holomorphic curves attached to Cowen–Douglas models.
//!
//! Everything is generic over the real field (`f32` or `f64`) through
//! [`scalar::Real`]; the aliases below fix `f64`, which is what the
//! verification tolerances are calibrated for.

pub mod classify;
pub mod curves;
pub mod flags;
pub mod geometry;
pub mod indexing;
pub mod jets;
pub mod model;
pub mod scalar;

pub use indexing::MultiIndex;
pub use scalar::Real;

// ----------------------------------------------------------------------------
// f64 aliases

pub type Complex = scalar::C<f64>;
pub type Matrix = scalar::CMat<f64>;
pub type Vector = scalar::CVec<f64>;
pub type Point = scalar::Point<f64>;
pub type Jet = jets::WirtingerJet<f64>;
pub type Polynomial = model::Polynomial<f64>;
pub type Section = model::PolynomialSection<f64>;
pub type Frame = model::Frame<f64>;
pub type Kernel = model::DiagonalKernelSpec<f64>;
pub type Fb2Model = model::Fb2Model<f64>;
pub type Curve = curves::ExtendedCurve<f64>;
pub type ExtendedBundle = curves::ExtendedBundle<f64>;
pub type ClassicalBundle = geometry::ClassicalBundle<f64>;
pub type Fb2Decomposition = flags::Fb2Decomposition<f64>;
