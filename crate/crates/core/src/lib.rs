//! Pointwise numerical certification of Hamilton–Jacobi separability for
//! time-dependent Hamiltonians by a (1,1) tensor on the event space.
//!
//! Everything below the pipeline layer is generic over the scalar type
//! ([`scalar::Scalar`], implemented for `f32` and `f64`); the aliases at the
//! crate root fix it to `f64`.

#![allow(
    clippy::needless_range_loop,
    clippy::suspicious_arithmetic_impl,
    clippy::neg_cmp_op_on_partial_ord
)]

pub mod check;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod geometry;
pub mod jet;
pub mod lifts;
pub mod linalg;
pub mod nijenhuis;
pub mod problem;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod separability;
pub mod transform;

pub use error::{Error, Result};

pub type Jet = jet::Jet2<f64>;
pub type PointE = geometry::PointE<f64>;
pub type PointDual = geometry::PointDual<f64>;
pub type PointCotangent = geometry::PointCotangent<f64>;
pub type TensorEval = geometry::TensorEval<f64>;
pub type SpectralVerdict = geometry::SpectralVerdict<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type LinearOperatorValue = lifts::LinearOperatorValue<f64>;
pub type OneFormValue = lifts::OneFormValue<f64>;
pub type TwoFormValue = lifts::TwoFormValue<f64>;
pub type TorsionValue = nijenhuis::TorsionValue<f64>;
pub type DistributionBasis = dynamics::DistributionBasis<f64>;
pub type PointData = dynamics::PointData<f64>;
pub type ForbatResiduals = separability::ForbatResiduals<f64>;
pub type IntegrabilityResidual = separability::IntegrabilityResidual<f64>;
