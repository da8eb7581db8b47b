//! Active pose estimation of a movable object from semantic point observations.
//!
//! The geometric core is generic over the scalar type; the aliases below fix it
//! to `f64`, which is what the belief, planner and simulator use.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod discrepancy;
pub mod error;
pub mod geometry;
pub mod infogain;
pub mod io;
pub mod planner;
pub mod scalar;
pub mod semantics;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec3 = geometry::Vec3<f64>;
pub type Mat3 = geometry::Mat3<f64>;
pub type Pose = geometry::Pose<f64>;
pub type Shape = geometry::Shape<f64>;
pub type Workspace = geometry::Workspace<f64>;
pub type ScalarField = geometry::ScalarField<f64>;
pub type SemanticCloud = semantics::SemanticCloud<f64>;
