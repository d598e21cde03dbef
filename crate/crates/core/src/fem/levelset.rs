use std::collections::{BTreeMap, HashMap};

use crate::linalg::Vec2;
use crate::mesh::{Polyline, TriMesh2D};
use crate::{Error, Result, Scalar};

/// Values this close to the iso-value are nudged upwards by the same amount
/// so that no crossing falls exactly on a vertex.
pub const SNAP_EPS: f64 = 1e-12;

/// One connected piece of a level set with its mesh context.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelCurve<T> {
    pub polyline: Polyline<T>,
    /// Triangles crossed, in path order.
    pub triangles: Vec<usize>,
    /// Mesh edges (sorted vertex pairs) holding the first and last point of
    /// an open curve.
    pub start_edge: Option<(usize, usize)>,
    pub end_edge: Option<(usize, usize)>,
}

/// Marching-triangles level set of a piecewise-linear field: maximal
/// polylines, oriented with larger values on the left. Open curves start and
/// end on the mesh boundary.
pub fn extract_level_set<T: Scalar>(
    mesh: &TriMesh2D<T>,
    field: &[T],
    value: T,
) -> Result<Vec<Polyline<T>>> {
    Ok(level_curves(mesh, field, value)?
        .into_iter()
        .map(|c| c.polyline)
        .collect())
}

pub fn level_curves<T: Scalar>(
    mesh: &TriMesh2D<T>,
    field: &[T],
    value: T,
) -> Result<Vec<LevelCurve<T>>> {
    if field.len() != mesh.vertex_count() {
        return Err(Error::invalid("field length must equal vertex count"));
    }
    let eps = T::lit(SNAP_EPS);
    let f: Vec<T> = field
        .iter()
        .map(|&x| {
            if (x - value).abs() <= eps {
                value + eps
            } else {
                x
            }
        })
        .collect();
    let above = |v: usize| f[v] > value;

    // segment start edge -> (end edge, triangle)
    let mut next: BTreeMap<(usize, usize), ((usize, usize), usize)> = BTreeMap::new();
    let mut has_prev: HashMap<(usize, usize), ()> = HashMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let up = tri.map(above);
        if up.iter().all(|&b| b) || up.iter().all(|&b| !b) {
            continue;
        }
        let mut exit = None;
        let mut entry = None;
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if up[k] && !up[(k + 1) % 3] {
                exit = Some(key(a, b));
            } else if !up[k] && up[(k + 1) % 3] {
                entry = Some(key(a, b));
            }
        }
        // walking exit -> entry keeps the high side on the left
        let (s, e) = (exit.unwrap(), entry.unwrap());
        next.insert(s, (e, t));
        has_prev.insert(e, ());
    }

    let point = |(a, b): (usize, usize)| -> Vec2<T> {
        let t = (value - f[a]) / (f[b] - f[a]);
        mesh.vertices()[a].lerp(mesh.vertices()[b], t)
    };

    let mut curves = Vec::new();
    let mut remaining = next.clone();
    // open chains first, from edges nobody leads into
    let starts: Vec<(usize, usize)> = next
        .keys()
        .copied()
        .filter(|k| !has_prev.contains_key(k))
        .collect();
    for start in starts {
        let mut edges = vec![start];
        let mut tris = vec![];
        let mut cur = start;
        while let Some((e, t)) = remaining.remove(&cur) {
            edges.push(e);
            tris.push(t);
            cur = e;
        }
        curves.push(build(&edges, tris, false, &point));
    }
    while let Some((&start, _)) = remaining.iter().next() {
        let mut edges = vec![start];
        let mut tris = vec![];
        let mut cur = start;
        while let Some((e, t)) = remaining.remove(&cur) {
            tris.push(t);
            if e == start {
                break;
            }
            edges.push(e);
            cur = e;
        }
        curves.push(build(&edges, tris, true, &point));
    }
    Ok(curves)
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn build<T: Scalar>(
    edges: &[(usize, usize)],
    triangles: Vec<usize>,
    closed: bool,
    point: &impl Fn((usize, usize)) -> Vec2<T>,
) -> LevelCurve<T> {
    let mut pts: Vec<Vec2<T>> = Vec::with_capacity(edges.len());
    for &e in edges {
        let p = point(e);
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    LevelCurve {
        polyline: Polyline {
            points: pts,
            closed,
        },
        triangles,
        start_edge: (!closed).then(|| edges[0]),
        end_edge: (!closed).then(|| *edges.last().unwrap()),
    }
}

/// Per-vertex field as CSV: `vertex,x_mm,y_mm,value`.
pub fn field_to_csv<T: Scalar>(mesh: &TriMesh2D<T>, field: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["vertex", "x_mm", "y_mm", "value"])?;
    for (i, (p, v)) in mesh.vertices().iter().zip(field).enumerate() {
        w.write_record([
            i.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            v.to_string(),
        ])?;
    }
    finish(w)
}

/// Polylines as CSV: `curve,x_mm,y_mm`.
pub fn polylines_to_csv<T: Scalar>(lines: &[Polyline<T>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["curve", "x_mm", "y_mm"])?;
    for (c, l) in lines.iter().enumerate() {
        for p in &l.points {
            w.write_record([c.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
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

    #[test]
    fn planar_cut_on_square() {
        let m = crate::mesh::triangulate(
            &Polyline::closed(vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ]),
            0.01,
        )
        .unwrap();
        let f: Vec<f64> = m.vertices().iter().map(|p| 2.0 * p.x - 1.0).collect();
        let curves = level_curves(&m, &f, 0.0).unwrap();
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!((c.polyline.length() - 1.0).abs() < 1e-9);
        assert!(c.polyline.points.iter().all(|p| (p.x - 0.5).abs() < 1e-9));
        // high side (x > 0.5) on the left: walking downwards
        assert!(c.polyline.points[0].y > c.polyline.points.last().unwrap().y);
        assert!(c.start_edge.is_some());
        assert!(extract_level_set(&m, &f, 2.0).unwrap().is_empty());
    }

    #[test]
    fn closed_loop_around_peak() {
        let m = crate::mesh::triangulate(&crate::phantom::disc(1.0, 32), 0.01).unwrap();
        let f: Vec<f64> = m.vertices().iter().map(|p| 1.0 - p.norm_sq()).collect();
        let curves = level_curves(&m, &f, 0.75).unwrap();
        assert_eq!(curves.len(), 1);
        assert!(curves[0].polyline.closed);
        // high side inside, on the left: counter-clockwise
        assert!(curves[0].polyline.signed_area() > 0.0);
        let r = curves[0].polyline.length() / std::f64::consts::TAU;
        assert!((r - 0.5).abs() < 0.01);
    }
}
