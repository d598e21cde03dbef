//! Exact splitting of mesh triangles along straight cuts.

use std::collections::{BTreeMap, VecDeque};

use crate::linalg::Vec2;
use crate::mesh::{polygon_signed_area, TriMesh2D};
use crate::Scalar;

/// Oriented cut line `{p : (p − point) · normal = 0}`; the positive side is
/// the side of higher segment ids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Cut<T> {
    pub point: Vec2<T>,
    pub normal: Vec2<T>,
}

impl<T: Scalar> Cut<T> {
    pub fn side(&self, p: Vec2<T>) -> T {
        (p - self.point).dot(self.normal)
    }
}

/// Convex part of one triangle. `edges[i]` is the mesh edge (sorted vertex
/// pair) that the polygon edge from `points[i]` to `points[i + 1]` lies on,
/// or `None` for edges along a cut.
#[derive(Clone, Debug)]
pub(crate) struct Piece<T> {
    pub triangle: usize,
    pub points: Vec<Vec2<T>>,
    pub edges: Vec<Option<(usize, usize)>>,
}

impl<T: Scalar> Piece<T> {
    pub fn area(&self) -> T {
        polygon_signed_area(&self.points).abs()
    }

    pub fn centroid(&self) -> Vec2<T> {
        let mut c = Vec2::zero();
        for &p in &self.points {
            c += p;
        }
        c * (T::one() / T::from_usize_lossy(self.points.len()))
    }

    pub fn contains(&self, p: Vec2<T>, tol: T) -> bool {
        let n = self.points.len();
        (0..n)
            .all(|i| (self.points[(i + 1) % n] - self.points[i]).cross(p - self.points[i]) >= -tol)
    }
}

/// Splits every triangle by the cuts that `applies(triangle, cut)` selects.
pub(crate) fn split_mesh<T: Scalar>(
    mesh: &TriMesh2D<T>,
    cuts: &[Cut<T>],
    applies: impl Fn(usize, usize) -> bool,
) -> Vec<Piece<T>> {
    let mut out = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let pts = mesh.triangle_points(t);
        let edge = |k: usize| {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            Some((a.min(b), a.max(b)))
        };
        let mut parts = vec![Piece {
            triangle: t,
            points: pts.to_vec(),
            edges: vec![edge(0), edge(1), edge(2)],
        }];
        for (j, cut) in cuts.iter().enumerate() {
            let s: Vec<T> = pts.iter().map(|&p| cut.side(p)).collect();
            let crosses = s.iter().any(|&x| x > T::zero()) && s.iter().any(|&x| x < T::zero());
            if !crosses || !applies(t, j) {
                continue;
            }
            parts = parts
                .into_iter()
                .flat_map(|p| [clip(&p, cut, false), clip(&p, cut, true)])
                .flatten()
                .collect();
        }
        out.extend(parts);
    }
    out
}

/// Part of `piece` on the positive (`positive = true`) or non-positive side.
fn clip<T: Scalar>(piece: &Piece<T>, cut: &Cut<T>, positive: bool) -> Option<Piece<T>> {
    let inside = |d: T| {
        if positive {
            d > T::zero()
        } else {
            d <= T::zero()
        }
    };
    let n = piece.points.len();
    let mut points = Vec::with_capacity(n + 1);
    let mut edges = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (p, q) = (piece.points[i], piece.points[(i + 1) % n]);
        let (dp, dq) = (cut.side(p), cut.side(q));
        let cross = || p.lerp(q, dp / (dp - dq));
        match (inside(dp), inside(dq)) {
            (true, true) => {
                points.push(p);
                edges.push(piece.edges[i]);
            }
            (true, false) => {
                points.push(p);
                edges.push(piece.edges[i]);
                points.push(cross());
                edges.push(None);
            }
            (false, true) => {
                points.push(cross());
                edges.push(piece.edges[i]);
            }
            (false, false) => {}
        }
    }
    let piece = Piece {
        triangle: piece.triangle,
        points,
        edges,
    };
    (piece.points.len() >= 3 && piece.area() > T::zero()).then_some(piece)
}

/// Groups pieces into regions connected across mesh edges. Pieces of the
/// same triangle are only connected through neighbouring triangles, so the
/// cuts act as walls.
/// Piece index with the parameter interval it covers along a mesh edge.
type EdgeSpan<T> = (usize, T, T);

pub(crate) fn connected_regions<T: Scalar>(mesh: &TriMesh2D<T>, pieces: &[Piece<T>]) -> Vec<usize> {
    // mesh edge -> (piece, parameter interval along the edge)
    let mut on_edge: BTreeMap<(usize, usize), Vec<EdgeSpan<T>>> = BTreeMap::new();
    let v = mesh.vertices();
    for (i, piece) in pieces.iter().enumerate() {
        let n = piece.points.len();
        for k in 0..n {
            let Some((a, b)) = piece.edges[k] else {
                continue;
            };
            let d = v[b] - v[a];
            let len2 = d.norm_sq();
            let s = |p: Vec2<T>| (p - v[a]).dot(d) / len2;
            let (s0, s1) = (s(piece.points[k]), s(piece.points[(k + 1) % n]));
            on_edge
                .entry((a, b))
                .or_default()
                .push((i, s0.min(s1), s0.max(s1)));
        }
    }
    let mut adj = vec![Vec::new(); pieces.len()];
    let tol = T::lit(1e-9);
    for list in on_edge.values() {
        for (x, &(i, a0, a1)) in list.iter().enumerate() {
            for &(j, b0, b1) in &list[x + 1..] {
                if pieces[i].triangle != pieces[j].triangle && a1.min(b1) - a0.max(b0) > tol {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
    }
    let mut region = vec![usize::MAX; pieces.len()];
    let mut next = 0;
    for start in 0..pieces.len() {
        if region[start] != usize::MAX {
            continue;
        }
        region[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if region[j] == usize::MAX {
                    region[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    region
}
