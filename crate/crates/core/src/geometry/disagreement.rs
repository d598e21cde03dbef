use super::Plane;
use crate::linalg::Vec3;
use crate::{Error, Result};

/// Height of the evaluation cylinder (mm) unless overridden.
pub const DEFAULT_HEIGHT_MM: f64 = 180.0;
pub const DEFAULT_RADIUS_MM: f64 = 60.0;

const RADIAL_STEPS: usize = 256;
const ANGULAR_STEPS: usize = 1024;

/// Volume (mm³) enclosed between two planes inside a cylinder centred at the
/// world origin, with the default 180 mm height.
pub fn plane_disagreement(p1: &Plane<f64>, p2: &Plane<f64>, radius_mm: f64) -> Result<f64> {
    plane_disagreement_with_height(p1, p2, radius_mm, DEFAULT_HEIGHT_MM)
}

/// As [`plane_disagreement`] with an explicit cylinder height.
///
/// The cylinder axis is the mean of the two sign-aligned normals. Along each
/// axis-parallel line through the cross-section the planes are clipped to the
/// cylinder height and the gap between them is integrated with a polar
/// midpoint rule.
pub fn plane_disagreement_with_height(
    p1: &Plane<f64>,
    p2: &Plane<f64>,
    radius_mm: f64,
    height_mm: f64,
) -> Result<f64> {
    if !(radius_mm > 0.0) || !(height_mm > 0.0) {
        return Err(Error::invalid(
            "cylinder radius and height must be positive",
        ));
    }
    let (n1, o1) = (p1.normal(), p1.offset());
    let (mut n2, mut o2) = (p2.normal(), p2.offset());
    let c = n1.dot(n2);
    if c.abs() < 1e-12 {
        return Err(Error::AmbiguousOrientation);
    }
    if c < 0.0 {
        n2 = -n2;
        o2 = -o2;
    }
    let axis = (n1 + n2).normalized().ok_or(Error::AmbiguousOrientation)?;
    let e1 = perpendicular(axis);
    let e2 = axis.cross(e1);
    let (a1, a2) = (n1.dot(axis), n2.dot(axis));
    let half = height_mm / 2.0;

    let dr = radius_mm / RADIAL_STEPS as f64;
    let dt = std::f64::consts::TAU / ANGULAR_STEPS as f64;
    let mut total = 0.0;
    for it in 0..ANGULAR_STEPS {
        let th = (it as f64 + 0.5) * dt;
        let dir = e1 * th.cos() + e2 * th.sin();
        let (d1, d2) = (n1.dot(dir), n2.dot(dir));
        let mut ring = 0.0;
        for ir in 0..RADIAL_STEPS {
            let r = (ir as f64 + 0.5) * dr;
            let t1 = ((o1 - r * d1) / a1).clamp(-half, half);
            let t2 = ((o2 - r * d2) / a2).clamp(-half, half);
            ring += (t1 - t2).abs() * r;
        }
        total += ring;
    }
    Ok(total * dr * dt)
}

fn perpendicular(a: Vec3<f64>) -> Vec3<f64> {
    let helper = if a.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    a.cross(helper).normalized().expect("non-parallel helper")
}
