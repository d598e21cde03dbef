use serde::{Deserialize, Serialize};

use crate::linalg::{sym2_eigen, Vec2};
use crate::mesh::{Polyline, TriMesh2D};
use crate::{Error, Result, Scalar};

/// Slab width over which the corrected volume is accumulated.
pub const DEFAULT_VOLUME_WIDTH_MM: f64 = 5.0;

/// Per-case shape measures, serialised with fixed key names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub area_mm2: f64,
    pub perimeter_mm: f64,
    pub circularity: f64,
    pub cc_index_raw: f64,
    pub cc_index_norm: f64,
    pub volume_mm3: f64,
    pub length_mm: f64,
    pub curvature_per_mm: f64,
}

/// Area, centroid and central second moments of a simple polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolygonMoments<T> {
    pub area: T,
    pub centroid: Vec2<T>,
    /// `∫ (x − cx)²`, `∫ (x − cx)(y − cy)`, `∫ (y − cy)²`.
    pub ixx: T,
    pub ixy: T,
    pub iyy: T,
}

impl<T: Scalar> PolygonMoments<T> {
    /// Unit direction of largest spread, pointing towards +x (or +y when the
    /// axis is vertical).
    pub fn principal_axis(&self) -> Vec2<T> {
        let (_, _, v) = sym2_eigen(self.ixx, self.ixy, self.iyy);
        orient(v)
    }
}

pub(crate) fn orient<T: Scalar>(v: Vec2<T>) -> Vec2<T> {
    let tiny = T::lit(1e-12);
    if v.x > tiny || (v.x.abs() <= tiny && v.y > T::zero()) {
        v
    } else {
        -v
    }
}

/// Moments of the region bounded by `pts`, independent of orientation.
pub fn polygon_moments<T: Scalar>(pts: &[Vec2<T>]) -> Result<PolygonMoments<T>> {
    if pts.len() < 3 {
        return Err(Error::EmptyContour);
    }
    // work relative to the vertex mean to limit cancellation
    let mut o = Vec2::zero();
    for &p in pts {
        o += p;
    }
    let o = o * (T::one() / T::from_usize_lossy(pts.len()));
    let (mut a, mut sx, mut sy, mut sxx, mut sxy, mut syy) = (
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
        T::zero(),
    );
    let two = T::lit(2.0);
    for i in 0..pts.len() {
        let p = pts[i] - o;
        let q = pts[(i + 1) % pts.len()] - o;
        let c = p.cross(q);
        a += c;
        sx += (p.x + q.x) * c;
        sy += (p.y + q.y) * c;
        sxx += (p.x * p.x + p.x * q.x + q.x * q.x) * c;
        syy += (p.y * p.y + p.y * q.y + q.y * q.y) * c;
        sxy += (p.x * q.y + two * p.x * p.y + two * q.x * q.y + q.x * p.y) * c;
    }
    let area = a / two;
    if area == T::zero() || !area.is_finite() {
        return Err(Error::EmptyContour);
    }
    let cx = sx / (T::lit(6.0) * area);
    let cy = sy / (T::lit(6.0) * area);
    // the raw integrals carry the orientation sign; dividing it out via the
    // signed area makes the result orientation-free
    let sign = area.signum();
    let ixx = sign * sxx / T::lit(12.0) - area.abs() * cx * cx;
    let iyy = sign * syy / T::lit(12.0) - area.abs() * cy * cy;
    let ixy = sign * sxy / T::lit(24.0) - area.abs() * cx * cy;
    Ok(PolygonMoments {
        area: area.abs(),
        centroid: Vec2::new(cx, cy) + o,
        ixx,
        ixy,
        iyy,
    })
}

/// `4πA / L²`; 1 for a disc.
pub fn circularity<T: Scalar>(area: T, perimeter: T) -> T {
    T::lit(4.0 * std::f64::consts::PI) * area / (perimeter * perimeter)
}

/// Arc length of `line` and its mean unsigned discrete curvature: the
/// turning angle at each interior point divided by the mean length of the
/// two adjacent segments.
pub fn length_and_curvature<T: Scalar>(line: &Polyline<T>) -> (T, T) {
    let length = line.length();
    let pts = &line.points;
    if pts.len() < 3 {
        return (length, T::zero());
    }
    let mut sum = T::zero();
    let mut count = 0usize;
    for i in 1..pts.len() - 1 {
        let a = pts[i] - pts[i - 1];
        let b = pts[i + 1] - pts[i];
        let ds = (a.norm() + b.norm()) * T::lit(0.5);
        if ds <= T::zero() {
            continue;
        }
        sum += a.cross(b).abs().atan2(a.dot(b)) / ds;
        count += 1;
    }
    let curvature = if count == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(count)
    };
    (length, curvature)
}

/// Partial-volume corrected volume of a slab from its per-slice areas.
///
/// Interior slices count fully; the two outer slices get the weight
/// `w = (width − (n − 2)·s) / (2s)` that makes the slab exactly `width` thick.
pub fn corrected_volume<T: Scalar>(slice_areas: &[T], spacing_mm: T, width_mm: T) -> Result<T> {
    let n = slice_areas.len();
    if n == 0 {
        return Err(Error::invalid("no slice areas"));
    }
    if !(spacing_mm > T::zero()) || !(width_mm > T::zero()) {
        return Err(Error::invalid("spacing and width must be positive"));
    }
    if n == 1 {
        return Ok(slice_areas[0] * width_mm);
    }
    let two = T::lit(2.0);
    let w = (width_mm - T::from_usize_lossy(n - 2) * spacing_mm) / (two * spacing_mm);
    if w < T::zero() {
        return Err(Error::invalid(format!(
            "{n} slices at {spacing_mm} mm exceed the {width_mm} mm slab width"
        )));
    }
    let interior: T = slice_areas[1..n - 1].iter().copied().sum();
    Ok(spacing_mm * (interior + w * (slice_areas[0] + slice_areas[n - 1])))
}

/// CC index and the cuts it is built from.
#[derive(Clone, Debug, PartialEq)]
pub struct CcIndex<T> {
    /// Sum of the genu, body and splenium cut lengths (mm).
    pub raw: T,
    /// `raw` divided by the chord length.
    pub normalized: T,
    /// Posterior and anterior chord ends.
    pub chord: (Vec2<T>, Vec2<T>),
    /// `(start, end)` of the genu, body and splenium cuts.
    pub genu: (Vec2<T>, Vec2<T>),
    pub body: (Vec2<T>, Vec2<T>),
    pub splenium: (Vec2<T>, Vec2<T>),
}

impl<T: Scalar> CcIndex<T> {
    pub fn chord_length(&self) -> T {
        self.chord.0.dist(self.chord.1)
    }
}

/// CC index of a closed contour.
///
/// The chord joins the extreme points of the contour along its principal
/// axis. The chord line crosses the structure in one or more intervals; the
/// genu and splenium cuts are the narrowest cuts through the midpoints of
/// the most anterior and most posterior interval. The body cut lies on the
/// perpendicular through the chord midpoint.
pub fn cc_index<T: Scalar>(contour: &Polyline<T>) -> Result<CcIndex<T>> {
    let pts = &contour.points;
    let moments = polygon_moments(pts)?;
    let axis = moments.principal_axis();
    let (posterior, anterior) = chord_ends(pts, axis);
    let chord_len = posterior.dist(anterior);
    if !(chord_len > T::zero()) {
        return Err(Error::IndexUndefined("contour has zero extent".into()));
    }
    let dir = (anterior - posterior) * (T::one() / chord_len);

    let along = line_intervals(pts, posterior, dir);
    let (first, last) = match (along.first(), along.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => {
            return Err(Error::IndexUndefined(
                "chord line misses the structure".into(),
            ))
        }
    };
    let mid_of = |(a, b): (T, T)| posterior + dir * ((a + b) * T::lit(0.5));
    let splenium = narrowest_cut(pts, mid_of(first));
    let genu = narrowest_cut(pts, mid_of(last));

    let m = posterior.lerp(anterior, T::lit(0.5));
    let normal = dir.perp();
    let across = line_intervals(pts, m, normal);
    let body_iv = pick_interval(&across, T::zero())
        .ok_or_else(|| Error::IndexUndefined("perpendicular misses the structure".into()))?;
    let body = (m + normal * body_iv.0, m + normal * body_iv.1);

    let len = |c: (Vec2<T>, Vec2<T>)| c.0.dist(c.1);
    let raw = len(genu) + len(body) + len(splenium);
    Ok(CcIndex {
        raw,
        normalized: raw / chord_len,
        chord: (posterior, anterior),
        genu,
        body,
        splenium,
    })
}

/// Extreme points along `axis`. Ties within a relative 1e-9 are resolved to
/// the middle of the tied points' perpendicular range.
fn chord_ends<T: Scalar>(pts: &[Vec2<T>], axis: Vec2<T>) -> (Vec2<T>, Vec2<T>) {
    let perp = axis.perp();
    let proj: Vec<T> = pts.iter().map(|p| p.dot(axis)).collect();
    let lo = proj.iter().copied().fold(T::infinity(), T::min);
    let hi = proj.iter().copied().fold(T::neg_infinity(), T::max);
    let tol = T::lit(1e-9) * (hi - lo);
    let end = |target: T| {
        let (mut a, mut b) = (T::infinity(), T::neg_infinity());
        for (p, &s) in pts.iter().zip(&proj) {
            if (s - target).abs() <= tol {
                a = a.min(p.dot(perp));
                b = b.max(p.dot(perp));
            }
        }
        axis * target + perp * ((a + b) * T::lit(0.5))
    };
    (end(lo), end(hi))
}

/// Parameter intervals `[t0, t1]` of `origin + t·dir` inside the polygon,
/// sorted by `t0`. Vertices on the line count as lying on its negative side,
/// so every crossing is seen exactly once.
pub(crate) fn line_intervals<T: Scalar>(
    pts: &[Vec2<T>],
    origin: Vec2<T>,
    dir: Vec2<T>,
) -> Vec<(T, T)> {
    let mut ts = Vec::new();
    for i in 0..pts.len() {
        let a = pts[i] - origin;
        let b = pts[(i + 1) % pts.len()] - origin;
        let (sa, sb) = (dir.cross(a), dir.cross(b));
        if (sa > T::zero()) != (sb > T::zero()) {
            let u = sa / (sa - sb);
            ts.push(a.lerp(b, u).dot(dir));
        }
    }
    ts.sort_by(|x, y| x.partial_cmp(y).expect("finite crossings"));
    ts.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

/// The interval containing `t`, else the nearest one.
pub(crate) fn pick_interval<T: Scalar>(ivs: &[(T, T)], t: T) -> Option<(T, T)> {
    let gap = |&(a, b): &(T, T)| (a - t).max(t - b).max(T::zero());
    ivs.iter()
        .copied()
        .min_by(|x, y| gap(x).partial_cmp(&gap(y)).expect("finite intervals"))
}

/// Shortest in-structure cut through `p` over all directions: a 1° scan
/// followed by golden-section refinement around the best direction.
fn narrowest_cut<T: Scalar>(pts: &[Vec2<T>], p: Vec2<T>) -> (Vec2<T>, Vec2<T>) {
    let width = |theta: T| -> (T, (Vec2<T>, Vec2<T>)) {
        let d = Vec2::new(theta.cos(), theta.sin());
        match pick_interval(&line_intervals(pts, p, d), T::zero()) {
            Some((a, b)) => (b - a, (p + d * a, p + d * b)),
            None => (T::infinity(), (p, p)),
        }
    };
    let step = T::lit(std::f64::consts::PI / 180.0);
    let mut best = T::zero();
    let mut best_w = T::infinity();
    for k in 0..180 {
        let theta = step * T::from_usize_lossy(k);
        let w = width(theta).0;
        if w < best_w {
            best_w = w;
            best = theta;
        }
    }
    let phi = T::lit(0.5 * (5f64.sqrt() - 1.0));
    let (mut a, mut b) = (best - step, best + step);
    let mut c = b - (b - a) * phi;
    let mut d = a + (b - a) * phi;
    let (mut fc, mut fd) = (width(c).0, width(d).0);
    for _ in 0..60 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * phi;
            fc = width(c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * phi;
            fd = width(d).0;
        }
    }
    let refined = width((a + b) * T::lit(0.5));
    if refined.0 <= best_w {
        refined.1
    } else {
        width(best).1
    }
}

/// Shape measures of one case. `slice_areas` are the cross-section areas of
/// the slab slices, spaced `spacing_mm` apart.
pub fn shape_summary<T: Scalar>(
    mesh: &TriMesh2D<T>,
    contour: &Polyline<T>,
    line: &Polyline<T>,
    slice_areas: &[T],
    spacing_mm: T,
    width_mm: T,
) -> Result<ShapeSummary> {
    let area = mesh.area();
    let perimeter = contour.length();
    let index = cc_index(contour)?;
    let (length, curvature) = length_and_curvature(line);
    Ok(ShapeSummary {
        area_mm2: area.as_f64(),
        perimeter_mm: perimeter.as_f64(),
        circularity: circularity(area, perimeter).as_f64(),
        cc_index_raw: index.raw.as_f64(),
        cc_index_norm: index.normalized.as_f64(),
        volume_mm3: corrected_volume(slice_areas, spacing_mm, width_mm)?.as_f64(),
        length_mm: length.as_f64(),
        curvature_per_mm: curvature.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom;

    #[test]
    fn rectangle_moments() {
        let r = phantom::rectangle(20.0, 3.0, 1);
        let m = polygon_moments(&r.points).unwrap();
        assert!((m.area - 60.0).abs() < 1e-12);
        assert!(m.centroid.norm() < 1e-12);
        assert!((m.ixx - 3.0 * 20f64.powi(3) / 12.0).abs() < 1e-9);
        assert!((m.iyy - 20.0 * 27.0 / 12.0).abs() < 1e-9);
        assert!(m.ixy.abs() < 1e-9);
        let rev = polygon_moments(&r.reversed().points).unwrap();
        assert!((rev.ixx - m.ixx).abs() < 1e-9 && (rev.area - m.area).abs() < 1e-12);
    }

    #[test]
    fn rectangle_index() {
        let r = phantom::rectangle(20.0, 3.0, 1);
        let ix = cc_index(&r).unwrap();
        assert!((ix.chord_length() - 20.0).abs() < 1e-9);
        assert!((ix.raw - 9.0).abs() < 1e-6, "{}", ix.raw);
        assert!((ix.normalized - 0.45).abs() < 1e-7);
    }

    #[test]
    fn volume_weights() {
        assert!((corrected_volume(&[100.0f64; 5], 1.0, 5.0).unwrap() - 500.0).abs() < 1e-9);
        assert!((corrected_volume(&[100.0f64; 7], 0.8, 5.0).unwrap() - 500.0).abs() < 1e-9);
        assert!((corrected_volume(&[100.0f64; 11], 0.5, 5.0).unwrap() - 500.0).abs() < 1e-9);
        assert_eq!(corrected_volume(&[7.0f64], 1.0, 5.0).unwrap(), 35.0);
        assert!(corrected_volume(&[1.0f64; 9], 1.0, 5.0).is_err());
    }

    #[test]
    fn semicircle_curvature() {
        let pts = (0..102)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 101.0;
                Vec2::new(3.0 * a.cos(), 3.0 * a.sin())
            })
            .collect();
        let (len, k) = length_and_curvature(&Polyline::open(pts));
        assert!((len / (3.0 * std::f64::consts::PI) - 1.0).abs() < 5e-3);
        assert!((k * 3.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn square_circularity() {
        assert!((circularity(1.0f64, 4.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
