//! Geometric sub-division of a cross-section mesh into segments.
//!
//! Triangles are labelled by the segment containing their centroid. Segment
//! areas are exact: triangles straddling a cut are split along it and each
//! part is credited to its own segment.

mod pieces;
mod scheme;

pub use scheme::{default_fractions, SchemeKind, SubsegScheme};

use serde::Serialize;

use crate::linalg::Vec2;
use crate::mesh::{Polyline, TriMesh2D};
use crate::morphometry::{line_intervals, pick_interval, polygon_moments, InPlaneLandmarks};
use crate::{Error, Result, Scalar};
use pieces::{connected_regions, split_mesh, Cut, Piece};

/// Labels and areas of one sub-division.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsegResult<T> {
    pub scheme: SubsegScheme,
    /// Segment id per triangle.
    pub triangle_labels: Vec<usize>,
    pub segment_areas: Vec<T>,
    /// Drawable extent of each cut inside the contour; `None` when the cut
    /// misses the mesh.
    pub cuts: Vec<Option<(Vec2<T>, Vec2<T>)>>,
}

impl<T: Scalar> SubsegResult<T> {
    pub fn total_area(&self) -> T {
        self.segment_areas.iter().copied().sum()
    }
}

/// Sub-divides `mesh`. Segment ids run anterior to posterior, except for
/// Hampel where they follow the ray fan from posterior to anterior.
///
/// `line` is the intercallosal line (anterior first) and is required by the
/// shape-aware scheme only.
pub fn subsegment<T: Scalar>(
    mesh: &TriMesh2D<T>,
    scheme: &SubsegScheme,
    lm: &InPlaneLandmarks<T>,
    line: Option<&Polyline<T>>,
) -> Result<SubsegResult<T>> {
    scheme.validate()?;
    let fr: Vec<T> = scheme.fractions.iter().map(|&f| T::lit(f)).collect();
    let contour = mesh.boundary_polyline();
    let anterior = lm.direction();

    let (cuts, finite) = match scheme.kind {
        SchemeKind::Witelson | SchemeKind::HoferFrahm => {
            let (a, p) = extremes(mesh.vertices(), anterior);
            (parallel_cuts(a, p, &fr)?, false)
        }
        SchemeKind::Jancke => {
            let (a, p) = projected_extent(mesh.vertices(), -anterior);
            (parallel_cuts(a, p, &fr)?, false)
        }
        SchemeKind::Eigendirection => {
            let m = polygon_moments(&contour.points)?;
            let (l1, l2, _) = crate::linalg::sym2_eigen(m.ixx, m.ixy, m.iyy);
            if l1 - l2 <= T::lit(1e-6) * l1.abs() {
                return Err(Error::DegeneratePrincipalAxis);
            }
            let mut axis = m.principal_axis();
            if axis.dot(anterior) < T::zero() {
                axis = -axis;
            }
            let (a, p) = projected_extent(mesh.vertices(), -axis);
            (parallel_cuts(a, p, &fr)?, false)
        }
        SchemeKind::Hampel => (hampel_cuts(mesh.vertices(), anterior, &fr), false),
        SchemeKind::ShapeAware => {
            let line = line.ok_or_else(|| {
                Error::invalid("the shape-aware scheme needs the intercallosal line")
            })?;
            (shape_aware_cuts(line, &fr)?, true)
        }
    };

    let extents: Vec<Option<(Vec2<T>, Vec2<T>)>> = cuts
        .iter()
        .map(|c| cut_extent(&contour.points, c, finite))
        .collect();

    let (pieces, piece_labels) = if finite {
        label_finite(mesh, &cuts, &extents, line.expect("checked above"), &fr)
    } else {
        let pieces = split_mesh(mesh, &cuts, |_, _| true);
        let labels = pieces
            .iter()
            .map(|p| count_label(&cuts, p.centroid()))
            .collect();
        (pieces, labels)
    };

    let k = scheme.segment_count();
    let mut segment_areas = vec![T::zero(); k];
    for (p, &l) in pieces.iter().zip(&piece_labels) {
        segment_areas[l] += p.area();
    }
    let triangle_labels = triangle_labels(mesh, &pieces, &piece_labels);
    Ok(SubsegResult {
        scheme: scheme.clone(),
        triangle_labels,
        segment_areas,
        cuts: extents,
    })
}

/// Number of cuts whose positive side holds `p`.
fn count_label<T: Scalar>(cuts: &[Cut<T>], p: Vec2<T>) -> usize {
    cuts.iter().filter(|c| c.side(p) > T::zero()).count()
}

/// Anterior- and posterior-most points along `dir`. Where several vertices
/// tie (within 1e-9 of the extent) the middle of their span is used.
fn extremes<T: Scalar>(pts: &[Vec2<T>], dir: Vec2<T>) -> (Vec2<T>, Vec2<T>) {
    let perp = dir.perp();
    let (lo, hi) = min_max(pts.iter().map(|p| p.dot(dir)));
    let tol = T::lit(1e-9) * (hi - lo);
    let end = |target: T| {
        let (a, b) = min_max(
            pts.iter()
                .filter(|p| (p.dot(dir) - target).abs() <= tol)
                .map(|p| p.dot(perp)),
        );
        dir * target + perp * ((a + b) * T::lit(0.5))
    };
    (end(hi), end(lo))
}

/// Start and end of the projection of `pts` onto the line through the
/// origin along unit `dir` (start = smallest projection).
fn projected_extent<T: Scalar>(pts: &[Vec2<T>], dir: Vec2<T>) -> (Vec2<T>, Vec2<T>) {
    let s = pts.iter().map(|p| p.dot(dir));
    let lo = s.clone().fold(T::infinity(), T::min);
    let hi = s.fold(T::neg_infinity(), T::max);
    (dir * lo, dir * hi)
}

/// Cuts orthogonal to the segment `a → b` at the given fractions of its
/// length, positive side towards `b`.
fn parallel_cuts<T: Scalar>(a: Vec2<T>, b: Vec2<T>, fr: &[T]) -> Result<Vec<Cut<T>>> {
    let normal = (b - a)
        .normalized()
        .ok_or_else(|| Error::DegenerateConfiguration("anchor line has zero length".into()))?;
    Ok(fr
        .iter()
        .map(|&f| Cut {
            point: a.lerp(b, f),
            normal,
        })
        .collect())
}

/// Rays from the midpoint of the inferior border of the bounding rectangle
/// aligned with `anterior`. The fan starts posterior and sweeps over the
/// superior side to anterior.
fn hampel_cuts<T: Scalar>(pts: &[Vec2<T>], anterior: Vec2<T>, fr: &[T]) -> Vec<Cut<T>> {
    let up = anterior.perp();
    let (u0, u1) = min_max(pts.iter().map(|p| p.dot(anterior)));
    let (w0, _) = min_max(pts.iter().map(|p| p.dot(up)));
    let centre = anterior * ((u0 + u1) * T::lit(0.5)) + up * w0;
    let pi = T::lit(std::f64::consts::PI);
    fr.iter()
        .map(|&f| {
            let angle = pi * (T::one() - f);
            let ray = anterior * angle.cos() + up * angle.sin();
            Cut {
                point: centre,
                normal: -ray.perp(),
            }
        })
        .collect()
}

fn min_max<T: Scalar>(it: impl Iterator<Item = T>) -> (T, T) {
    it.fold((T::infinity(), T::neg_infinity()), |(a, b), x| {
        (a.min(x), b.max(x))
    })
}

/// Cuts through the points at the given arc-length fractions of `line`,
/// normal to it, positive side posterior.
fn shape_aware_cuts<T: Scalar>(line: &Polyline<T>, fr: &[T]) -> Result<Vec<Cut<T>>> {
    if line.len() < 2 || !(line.length() > T::zero()) {
        return Err(Error::DegenerateMidline(
            "intercallosal line has zero length".into(),
        ));
    }
    fr.iter()
        .map(|&f| {
            let (point, tangent) = point_and_tangent(line, f);
            Ok(Cut {
                point,
                normal: tangent,
            })
        })
        .collect()
}

/// Point at arc-length fraction `f` and the unit tangent there; at a vertex
/// the tangent bisects the two adjacent segments.
pub(crate) fn point_and_tangent<T: Scalar>(line: &Polyline<T>, f: T) -> (Vec2<T>, Vec2<T>) {
    let cum = line.arc_lengths();
    let total = *cum.last().expect("non-empty line");
    let s = f * total;
    let pts = &line.points;
    let i = cum
        .windows(2)
        .position(|w| s <= w[1])
        .unwrap_or(cum.len() - 2);
    let dir = |k: usize| (pts[k + 1] - pts[k]).normalized().unwrap_or(Vec2::zero());
    let tol = T::lit(1e-12) * total;
    let mut t = dir(i);
    if (s - cum[i + 1]).abs() <= tol && i + 2 < pts.len() {
        t = (t + dir(i + 1)).normalized().unwrap_or(t);
    } else if (s - cum[i]).abs() <= tol && i > 0 {
        t = (t + dir(i - 1)).normalized().unwrap_or(t);
    }
    (line.point_at(s), t)
}

/// Part of the cut line inside the contour: the whole span for infinite
/// cuts, or the interval through the cut point for finite ones.
fn cut_extent<T: Scalar>(
    contour: &[Vec2<T>],
    cut: &Cut<T>,
    finite: bool,
) -> Option<(Vec2<T>, Vec2<T>)> {
    let dir = cut.normal.perp();
    let ivs = line_intervals(contour, cut.point, dir);
    let (a, b) = if finite {
        pick_interval(&ivs, T::zero())?
    } else {
        (ivs.first()?.0, ivs.last()?.1)
    };
    Some((cut.point + dir * a, cut.point + dir * b))
}

/// Shape-aware labelling: the cuts end at the contour, so regions are found
/// by flood fill and named after the line stretch they contain.
fn label_finite<T: Scalar>(
    mesh: &TriMesh2D<T>,
    cuts: &[Cut<T>],
    extents: &[Option<(Vec2<T>, Vec2<T>)>],
    line: &Polyline<T>,
    fr: &[T],
) -> (Vec<Piece<T>>, Vec<usize>) {
    let scale = mesh
        .vertices()
        .iter()
        .map(|p| p.norm())
        .fold(T::zero(), T::max)
        .max(T::one());
    let slack = T::lit(1e-9) * scale;
    let pieces = split_mesh(mesh, cuts, |t, j| match extents[j] {
        Some((a, b)) => segment_hits_triangle(mesh.triangle_points(t), a, b, slack),
        None => false,
    });
    let region = connected_regions(mesh, &pieces);
    let n_regions = region.iter().copied().max().map_or(0, |m| m + 1);
    let mut region_label: Vec<Option<usize>> = vec![None; n_regions];

    let mut bounds = vec![T::zero()];
    bounds.extend_from_slice(fr);
    bounds.push(T::one());
    let tol = T::lit(1e-9) * scale;
    for (label, w) in bounds.windows(2).enumerate() {
        let (seed, _) = point_and_tangent(line, (w[0] + w[1]) * T::lit(0.5));
        let hit = pieces.iter().position(|p| p.contains(seed, tol));
        if let Some(i) = hit {
            let r = region[i];
            match region_label[r] {
                None => region_label[r] = Some(label),
                Some(other) => log::warn!(
                    "shape-aware segments {other} and {label} are not separated by a cut"
                ),
            }
        }
    }
    let labels = pieces
        .iter()
        .zip(&region)
        .map(|(p, &r)| region_label[r].unwrap_or_else(|| count_label(cuts, p.centroid())))
        .collect();
    (pieces, labels)
}

/// True when segment `a b`, lengthened by `slack` at both ends, passes
/// through the interior of the triangle.
fn segment_hits_triangle<T: Scalar>(tri: [Vec2<T>; 3], a: Vec2<T>, b: Vec2<T>, slack: T) -> bool {
    let Some(d) = (b - a).normalized() else {
        return false;
    };
    let (a, b) = (a - d * slack, b + d * slack);
    // Liang-Barsky against the three edge half-planes of a CCW triangle
    let (mut t0, mut t1) = (T::zero(), T::one());
    for k in 0..3 {
        let (p, q) = (tri[k], tri[(k + 1) % 3]);
        let e = q - p;
        let fa = e.cross(a - p);
        let fb = e.cross(b - p);
        if fa < T::zero() && fb < T::zero() {
            return false;
        }
        if fa < T::zero() || fb < T::zero() {
            let t = fa / (fa - fb);
            if fa < T::zero() {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    t1 > t0
}

/// Label of the piece containing each triangle centroid.
fn triangle_labels<T: Scalar>(
    mesh: &TriMesh2D<T>,
    pieces: &[Piece<T>],
    labels: &[usize],
) -> Vec<usize> {
    let mut by_tri: Vec<Vec<usize>> = vec![Vec::new(); mesh.triangle_count()];
    for (i, p) in pieces.iter().enumerate() {
        by_tri[p.triangle].push(i);
    }
    by_tri
        .iter()
        .enumerate()
        .map(|(t, ps)| {
            let c = mesh.triangle_centroid(t);
            let tol = T::lit(1e-12) * mesh.triangle_area(t).sqrt();
            let pick = ps
                .iter()
                .copied()
                .find(|&i| pieces[i].contains(c, tol))
                .or_else(|| {
                    ps.iter().copied().max_by(|&a, &b| {
                        pieces[a]
                            .area()
                            .partial_cmp(&pieces[b].area())
                            .expect("finite areas")
                    })
                })
                .expect("every triangle yields at least one piece");
            labels[pick]
        })
        .collect()
}

/// `scheme,segment_id,area_mm2` rows for several results.
pub fn segments_to_csv<T: Scalar>(results: &[SubsegResult<T>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scheme", "segment_id", "area_mm2"])?;
    for r in results {
        for (i, a) in r.segment_areas.iter().enumerate() {
            w.write_record([
                r.scheme.kind.name().to_string(),
                i.to_string(),
                a.as_f64().to_string(),
            ])?;
        }
    }
    finish(w)
}

/// `triangle,segment_id` rows.
pub fn labels_to_csv<T: Scalar>(result: &SubsegResult<T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["triangle", "segment_id"])?;
    for (t, l) in result.triangle_labels.iter().enumerate() {
        w.write_record([t.to_string(), l.to_string()])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::triangulate;
    use crate::phantom;

    fn rect_mesh() -> TriMesh2D<f64> {
        triangulate(&phantom::rectangle(20.0, 3.0, 4), 0.3).unwrap()
    }

    #[test]
    fn eigendirection_equal_fifths() {
        let m = rect_mesh();
        let lm = phantom::rectangle_landmarks(20.0);
        let s = SubsegScheme::with_defaults(SchemeKind::Eigendirection);
        let r = subsegment(&m, &s, &lm, None).unwrap();
        for a in &r.segment_areas {
            assert!((a / 60.0 - 0.2).abs() < 1e-9, "{a}");
        }
    }

    #[test]
    fn witelson_ids_run_anterior_to_posterior() {
        let m = rect_mesh();
        let lm = phantom::rectangle_landmarks(20.0);
        let s = SubsegScheme::with_defaults(SchemeKind::Witelson);
        let r = subsegment(&m, &s, &lm, None).unwrap();
        let expect = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 15.0, 0.2];
        for (a, e) in r.segment_areas.iter().zip(expect) {
            assert!((a / 60.0 - e).abs() < 1e-9);
        }
        let t = (0..m.triangle_count())
            .max_by(|&a, &b| {
                m.triangle_centroid(a)
                    .x
                    .partial_cmp(&m.triangle_centroid(b).x)
                    .unwrap()
            })
            .unwrap();
        assert_eq!(r.triangle_labels[t], 0);
    }

    #[test]
    fn disc_has_no_principal_axis() {
        let m = triangulate(&phantom::disc(5.0, 64), 0.5).unwrap();
        let lm = phantom::in_plane_landmarks(Vec2::new(6.0, 0.0), Vec2::new(-6.0, 0.0));
        let s = SubsegScheme::with_defaults(SchemeKind::Eigendirection);
        assert!(matches!(
            subsegment(&m, &s, &lm, None),
            Err(Error::DegeneratePrincipalAxis)
        ));
    }

    #[test]
    fn hampel_sectors_of_half_disc() {
        // half disc centred on the inferior border midpoint: equal sectors
        let pts: Vec<_> = (0..=130)
            .map(|i| {
                let a = std::f64::consts::PI * i as f64 / 130.0;
                Vec2::new(5.0 * a.cos(), 5.0 * a.sin())
            })
            .collect();
        let m = triangulate(&Polyline::closed(pts), 0.2).unwrap();
        let lm = phantom::in_plane_landmarks(Vec2::new(6.0, -1.0), Vec2::new(-6.0, -1.0));
        let s = SubsegScheme::with_defaults(SchemeKind::Hampel);
        let r = subsegment(&m, &s, &lm, None).unwrap();
        let total = m.area();
        for a in &r.segment_areas {
            assert!((a / total - 0.2).abs() < 1e-9, "{a}");
        }
    }
}
