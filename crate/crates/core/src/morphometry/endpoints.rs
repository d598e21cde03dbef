use serde::{Deserialize, Serialize};

use crate::linalg::Vec2;
use crate::mesh::Polyline;
use crate::{Error, Landmarks, Result, Scalar};

/// AC and PC in the 2D coordinates of the mid-sagittal cross-section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InPlaneLandmarks<T> {
    pub ac: Vec2<T>,
    pub pc: Vec2<T>,
}

impl<T: Scalar> InPlaneLandmarks<T> {
    pub fn new(ac: Vec2<T>, pc: Vec2<T>) -> Result<Self> {
        if !ac.is_finite() || !pc.is_finite() || ac == pc {
            return Err(Error::invalid("AC and PC must be finite and distinct"));
        }
        Ok(Self { ac, pc })
    }

    /// Drops the z coordinate of landmarks already expressed in the plane
    /// frame.
    pub fn from_xy(lm: &Landmarks) -> Result<Self> {
        Self::new(
            Vec2::new(T::lit(lm.ac[0]), T::lit(lm.ac[1])),
            Vec2::new(T::lit(lm.pc[0]), T::lit(lm.pc[1])),
        )
    }

    /// Unit vector from PC to AC.
    pub fn direction(&self) -> Vec2<T> {
        (self.ac - self.pc)
            .normalized()
            .expect("distinct landmarks")
    }
}

/// Shifts (mm) of the endpoint anchors relative to AC and PC. `along`
/// moves away from the other commissure; `ortho` moves to the left of the
/// PC→AC direction (superior in the standard frame).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnchorOffsets {
    pub anterior_along: f64,
    pub anterior_ortho: f64,
    pub posterior_along: f64,
    pub posterior_ortho: f64,
}

/// Contour point indices of the two endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointPair {
    pub anterior: usize,
    pub posterior: usize,
    /// Set when an anchor lies more than 50 mm outside the contour's
    /// bounding box, which usually means mismatched coordinate frames.
    pub far_from_contour: bool,
}

const FAR_MM: f64 = 50.0;

/// Contour points nearest the anterior and posterior anchors (lowest index
/// wins ties).
pub fn find_endpoints<T: Scalar>(
    contour: &Polyline<T>,
    lm: &InPlaneLandmarks<T>,
    offsets: &AnchorOffsets,
) -> Result<EndpointPair> {
    if contour.points.len() < 3 {
        return Err(Error::EmptyContour);
    }
    let d = lm.direction();
    let o = d.perp();
    let anchor_a = lm.ac + d * T::lit(offsets.anterior_along) + o * T::lit(offsets.anterior_ortho);
    let anchor_p =
        lm.pc - d * T::lit(offsets.posterior_along) + o * T::lit(offsets.posterior_ortho);
    let anterior = nearest(&contour.points, anchor_a);
    let posterior = nearest(&contour.points, anchor_p);
    if anterior == posterior {
        return Err(Error::DegenerateMidline(
            "both endpoints map to the same contour point".into(),
        ));
    }

    let (mut lo, mut hi) = (contour.points[0], contour.points[0]);
    for p in &contour.points {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let outside = |p: Vec2<T>| {
        let dx = (lo.x - p.x).max(p.x - hi.x).max(T::zero());
        let dy = (lo.y - p.y).max(p.y - hi.y).max(T::zero());
        dx.hypot(dy).as_f64()
    };
    let far_from_contour = outside(anchor_a) > FAR_MM || outside(anchor_p) > FAR_MM;
    if far_from_contour {
        log::warn!("endpoint anchor lies more than {FAR_MM} mm outside the contour bounds");
    }
    Ok(EndpointPair {
        anterior,
        posterior,
        far_from_contour,
    })
}

fn nearest<T: Scalar>(pts: &[Vec2<T>], q: Vec2<T>) -> usize {
    let mut best = (T::infinity(), 0);
    for (i, p) in pts.iter().enumerate() {
        let d = (*p - q).norm_sq();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}
