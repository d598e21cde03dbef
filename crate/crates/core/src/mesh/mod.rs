//! Binary mask to smooth contour to quality triangle mesh.

mod contour;
mod io;
mod smooth;
mod triangulate;
mod types;

pub use contour::{extract_contour, extract_contours};
pub use io::{load_off, mesh_from_off, mesh_to_off, polyline_from_csv, polyline_to_csv, save_off};
pub use smooth::{pad_zero, smooth_mask};
pub use triangulate::{first_self_intersection, triangulate, MIN_ANGLE_DEG};
pub use types::{polygon_signed_area, triangle_signed_area, Field2D, Mask2D, Polyline, TriMesh2D};

use crate::{Result, Scalar};

/// Default smoothing width in pixels, contour level and triangle area bound.
pub const DEFAULT_SIGMA_PX: f64 = 1.0;
pub const DEFAULT_ISO: f64 = 0.5;
pub const DEFAULT_MAX_AREA_MM2: f64 = 0.25;

/// Smooth, zero-pad, contour and triangulate a mask in one call.
pub fn mask_to_mesh<T: Scalar>(
    mask: &Mask2D,
    sigma_mm: T,
    iso: T,
    max_area_mm2: T,
) -> Result<(Polyline<T>, TriMesh2D<T>)> {
    let field = pad_zero(&smooth_mask(mask, sigma_mm)?);
    let contour = extract_contour(&field, iso)?;
    let mesh = triangulate(&contour, max_area_mm2)?;
    Ok((contour, mesh))
}
