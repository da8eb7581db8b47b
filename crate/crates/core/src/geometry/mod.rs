//! Rigid transforms, signed distance functions and interpolated scalar grids.

mod field;
mod linalg;
mod pose;
mod shape;

pub use field::{ScalarField, Workspace};
pub use linalg::{Mat3, Vec3};
pub use pose::{Pose, PoseSpace};
pub use shape::{Aabb, Profile, SdfNode, Shape, VoxelSdf};
