//! Event-driven simulation of semi-dispersing billiards with transport of
//! tangent vectors and normal covectors along the orbits, and checks of the
//! monotonicity and growth of the infinitesimal Lyapunov function.
//!
//! Everything is generic over the scalar type; the aliases below fix `f64`
//! (and [`Exact`] for rational arithmetic).

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod scalar;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::{Exact, Field, Scalar};

pub type Vector64 = linalg::Vector<f64>;
pub type Domain64 = geometry::Domain<f64>;
pub type PhasePoint64 = dynamics::PhasePoint<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type Covector64 = transport::Covector<f64>;
pub type TangentVector64 = transport::TangentVector<f64>;
pub type TransportSeries64 = transport::TransportSeries<f64>;
pub type DiagnosticsRecord64 = diagnostics::DiagnosticsRecord<f64>;

pub type Domain32 = geometry::Domain<f32>;
pub type Covector32 = transport::Covector<f32>;

pub type ExactVector = linalg::Vector<Exact>;
pub type ExactCovector = transport::Covector<Exact>;
pub type ExactTangentVector = transport::TangentVector<Exact>;
