use std::collections::{HashMap, HashSet};

use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};

use super::{Polyline, TriMesh2D};
use crate::linalg::Vec2;
use crate::{Error, Result, Scalar};

/// Smallest interior angle requested from the refinement.
pub const MIN_ANGLE_DEG: f64 = 20.0;

/// Constrained Delaunay triangulation of a simple counter-clockwise contour,
/// refined until every triangle has angles of at least 20° and area at most
/// `max_area_mm2`.
///
/// The contour points become vertices `0..n` of the mesh; refinement may add
/// further boundary vertices on contour segments. The boundary loop starts at
/// contour point 0 and carries each vertex's contour parameter.
pub fn triangulate<T: Scalar>(contour: &Polyline<T>, max_area_mm2: T) -> Result<TriMesh2D<T>> {
    if !(max_area_mm2 > T::zero()) {
        return Err(Error::invalid("max triangle area must be positive"));
    }
    let pts: Vec<Vec2<f64>> = contour.points.iter().map(|p| p.cast()).collect();
    let n = pts.len();
    if !contour.closed || n < 3 {
        return Err(Error::invalid(
            "triangulation needs a closed contour with at least 3 points",
        ));
    }
    if let Some((i, j)) = first_self_intersection(&pts) {
        return Err(Error::SelfIntersection(i, j));
    }
    if super::polygon_signed_area(&pts) <= 0.0 {
        return Err(Error::invalid("contour must be counter-clockwise"));
    }

    let vertices: Vec<Point2<f64>> = pts.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let edges: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(vertices, edges)
        .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != n {
        return Err(Error::Mesh("contour has duplicate points".into()));
    }

    let area = super::polygon_signed_area(&pts);
    let max_area = max_area_mm2.as_f64();
    let budget = ((area / max_area) * 20.0) as usize + 10 * n + 10_000;
    let params = RefinementParameters::<f64>::new()
        .exclude_outer_faces(true)
        .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG))
        .with_max_allowed_area(max_area)
        .with_max_additional_vertices(budget);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(Error::Mesh("refinement ran out of vertices".into()));
    }
    let excluded: HashSet<_> = result.excluded_faces.into_iter().collect();

    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut raw_tris = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        raw_tris.push(face.vertices().map(|v| v.fix().index()));
    }
    let mut used: Vec<usize> = raw_tris.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let all: Vec<Point2<f64>> = cdt.vertices().map(|v| v.position()).collect();
    let mut out_vertices = Vec::with_capacity(used.len());
    for (new, &old) in used.iter().enumerate() {
        remap.insert(old, new);
        out_vertices.push(Vec2::new(T::lit(all[old].x), T::lit(all[old].y)));
    }
    if used.len() < n || used[..n].iter().enumerate().any(|(i, &v)| i != v) {
        return Err(Error::Mesh("contour vertex missing from the mesh".into()));
    }
    let triangles: Vec<[usize; 3]> = raw_tris.iter().map(|t| t.map(|v| remap[&v])).collect();
    // keep the original contour coordinates bit-exact
    for (i, p) in contour.points.iter().enumerate() {
        out_vertices[i] = *p;
    }

    let mut mesh = TriMesh2D::new(out_vertices, triangles)?;
    let loop_vertices = mesh.boundary_loop().to_vec();
    let params: Vec<T> = loop_vertices
        .iter()
        .map(|&v| {
            if v < n {
                T::from_usize_lossy(v)
            } else {
                T::lit(contour_parameter(&pts, mesh.vertices()[v].cast()))
            }
        })
        .collect();
    let start = loop_vertices
        .iter()
        .position(|&v| v == 0)
        .ok_or_else(|| Error::Mesh("contour point 0 is not on the boundary".into()))?;
    mesh.set_contour_params(n, start, params);
    Ok(mesh)
}

/// Segment index plus fraction of the contour segment nearest `p`.
fn contour_parameter(pts: &[Vec2<f64>], p: Vec2<f64>) -> f64 {
    let n = pts.len();
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let d = b - a;
        let t = ((p - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        let dist = p.dist(a + d * t);
        if dist < best.0 {
            best = (dist, i as f64 + t);
        }
    }
    best.1
}

/// First pair `(i, j)`, `i < j`, of contour segments that intersect other
/// than at a shared endpoint of neighbours.
pub fn first_self_intersection<T: Scalar>(pts: &[Vec2<T>]) -> Option<(usize, usize)> {
    let n = pts.len();
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
    for i in 0..n {
        let (a, b) = seg(i);
        if a == b {
            return Some((i, i));
        }
        for j in i + 1..n {
            let (c, d) = seg(j);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // neighbours share one endpoint; they only conflict by folding back
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let (u, v) = (p - shared, q - shared);
                if u.cross(v) == T::zero() && u.dot(v) > T::zero() {
                    return Some((i, j));
                }
            } else if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

fn orient<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    (b - a).cross(c - a)
}

fn on_segment<T: Scalar>(a: Vec2<T>, b: Vec2<T>, p: Vec2<T>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>, d: Vec2<T>) -> bool {
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    let z = T::zero();
    if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
        return true;
    }
    (o1 == z && on_segment(a, b, c))
        || (o2 == z && on_segment(a, b, d))
        || (o3 == z && on_segment(c, d, a))
        || (o4 == z && on_segment(c, d, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polyline<f64> {
        Polyline::closed(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
    }

    #[test]
    fn unit_square_quality() {
        let m = triangulate(&square(), 0.005).unwrap();
        assert!(m.triangle_count() >= 200);
        assert!((m.area() - 1.0).abs() < 1e-9);
        assert!(m.min_angle() >= (MIN_ANGLE_DEG - 1e-9).to_radians());
        assert!(m
            .triangles()
            .iter()
            .enumerate()
            .all(|(t, _)| m.triangle_area(t) <= 0.005 + 1e-12));
    }

    #[test]
    fn boundary_follows_contour() {
        let m = triangulate(&square(), 0.01).unwrap();
        let originals: Vec<usize> = m
            .boundary_loop()
            .iter()
            .copied()
            .filter(|&v| v < 4)
            .collect();
        assert_eq!(originals, vec![0, 1, 2, 3]);
        let params = m.contour_params().unwrap();
        assert!(params.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bow_tie_is_rejected() {
        let c = Polyline::closed(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]);
        match triangulate(&c, 0.1) {
            Err(Error::SelfIntersection(0, 2)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
