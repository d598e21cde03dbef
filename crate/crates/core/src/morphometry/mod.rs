//! Endpoints, intercallosal line, thickness profile and shape measures of a
//! mid-sagittal cross-section.

mod endpoints;
mod midline;
mod shape;
mod thickness;

pub use endpoints::{find_endpoints, AnchorOffsets, EndpointPair, InPlaneLandmarks};
pub use midline::{intercallosal_line, BoundaryConditions, Midline};
pub use shape::{
    cc_index, circularity, corrected_volume, length_and_curvature, polygon_moments, shape_summary,
    CcIndex, PolygonMoments, ShapeSummary, DEFAULT_VOLUME_WIDTH_MM,
};
pub(crate) use shape::{line_intervals, pick_interval};
pub use thickness::{thickness_profile, ThicknessProfile, DEFAULT_SAMPLES};

use crate::mesh::{Polyline, TriMesh2D};
use crate::Scalar;

/// The closed contour a mesh was built from, with a map from each contour
/// point to its mesh vertex and the contour parameter of every boundary-loop
/// vertex.
///
/// Meshes built by [`crate::mesh::triangulate`] carry this information; for
/// other meshes the boundary loop itself serves as the contour.
pub(crate) struct MeshContour<T> {
    pub contour: Polyline<T>,
    pub vertex_of: Vec<usize>,
    pub loop_params: Vec<T>,
}

impl<T: Scalar> MeshContour<T> {
    pub fn of(mesh: &TriMesh2D<T>) -> Self {
        match (mesh.contour_len(), mesh.contour_params()) {
            (Some(n), Some(params)) => Self {
                contour: Polyline::closed(mesh.vertices()[..n].to_vec()),
                vertex_of: (0..n).collect(),
                loop_params: params.to_vec(),
            },
            _ => {
                let lp = mesh.boundary_loop();
                Self {
                    contour: mesh.boundary_polyline(),
                    vertex_of: lp.to_vec(),
                    loop_params: (0..lp.len()).map(T::from_usize_lossy).collect(),
                }
            }
        }
    }
}
