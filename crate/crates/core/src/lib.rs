//! Corpus callosum morphometry on the mid-sagittal plane.
//!
//! The pipeline runs from label volumes and AC/PC landmarks to a mid-sagittal
//! plane, a 2D slab mask, a triangle mesh of the cross-section, Laplace-based
//! thickness and midline measures, sub-segmentations, and group statistics.
//!
//! Geometry, meshing and FEM code is generic over [`Scalar`] (`f32` or
//! `f64`); the aliases at the crate root fix `f64`, which is what the
//! pipeline uses.

// `!(x > 0)` is used on purpose so that NaN fails validation; index loops
// read better than iterator chains in the small dense numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod morphometry;
pub mod phantom;
mod scalar;
pub mod stats;
pub mod subseg;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vec2 = linalg::Vec2<f64>;
pub type Vec3 = linalg::Vec3<f64>;
pub type Plane = geometry::Plane<f64>;
pub type RigidTransform = geometry::RigidTransform<f64>;
pub type Landmarks = geometry::Landmarks<f64>;
pub type Polyline = mesh::Polyline<f64>;
pub type TriMesh2D = mesh::TriMesh2D<f64>;
pub type Field2D = mesh::Field2D<f64>;
