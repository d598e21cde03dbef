use std::collections::HashMap;

use crate::linalg::Vec2;
use crate::{Error, Result, Scalar};

/// Binary image on a regular 2D grid, x-fastest. Pixel `(i, j)` has its
/// centre at `origin + (i * pixel_size[0], j * pixel_size[1])` mm.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask2D {
    dims: [usize; 2],
    pixel_size: [f64; 2],
    origin: Vec2<f64>,
    data: Vec<u8>,
}

impl Mask2D {
    pub fn new(dims: [usize; 2], pixel_size: [f64; 2], data: Vec<u8>) -> Result<Self> {
        Self::with_origin(dims, pixel_size, Vec2::zero(), data)
    }

    pub fn with_origin(
        dims: [usize; 2],
        pixel_size: [f64; 2],
        origin: Vec2<f64>,
        data: Vec<u8>,
    ) -> Result<Self> {
        if dims[0] == 0 || dims[1] == 0 {
            return Err(Error::invalid("mask dims must be positive"));
        }
        if pixel_size.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::invalid("pixel sizes must be positive"));
        }
        if data.len() != dims[0] * dims[1] {
            return Err(Error::invalid("mask data length does not match dims"));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::invalid("mask values must be 0 or 1"));
        }
        Ok(Self {
            dims,
            pixel_size,
            origin,
            data,
        })
    }

    /// Mask from a predicate on pixel-centre positions (mm).
    pub fn from_fn(
        dims: [usize; 2],
        pixel_size: [f64; 2],
        origin: Vec2<f64>,
        mut inside: impl FnMut(Vec2<f64>) -> bool,
    ) -> Self {
        let mut data = Vec::with_capacity(dims[0] * dims[1]);
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let p = origin + Vec2::new(i as f64 * pixel_size[0], j as f64 * pixel_size[1]);
                data.push(inside(p) as u8);
            }
        }
        Self::with_origin(dims, pixel_size, origin, data).expect("valid generated mask")
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn pixel_size(&self) -> [f64; 2] {
        self.pixel_size
    }

    pub fn origin(&self) -> Vec2<f64> {
        self.origin
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i + self.dims[0] * j]
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&v| v as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }
}

/// Scalar image sampled at grid nodes; same layout conventions as [`Mask2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D<T> {
    pub dims: [usize; 2],
    pub pixel_size: [T; 2],
    pub origin: Vec2<T>,
    pub data: Vec<T>,
}

impl<T: Scalar> Field2D<T> {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i + self.dims[0] * j]
    }

    #[inline]
    pub fn position(&self, i: T, j: T) -> Vec2<T> {
        self.origin + Vec2::new(i * self.pixel_size[0], j * self.pixel_size[1])
    }
}

/// Ordered points in mm, optionally closed (last joins first).
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline<T> {
    pub points: Vec<Vec2<T>>,
    pub closed: bool,
}

impl<T: Scalar> Polyline<T> {
    pub fn open(points: Vec<Vec2<T>>) -> Self {
        Self {
            points,
            closed: false,
        }
    }

    pub fn closed(points: Vec<Vec2<T>>) -> Self {
        Self {
            points,
            closed: true,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        match (self.closed, self.points.len()) {
            (_, 0 | 1) => 0,
            (true, n) => n,
            (false, n) => n - 1,
        }
    }

    /// Endpoints of segment `i`.
    pub fn segment(&self, i: usize) -> (Vec2<T>, Vec2<T>) {
        let n = self.points.len();
        (self.points[i], self.points[(i + 1) % n])
    }

    pub fn length(&self) -> T {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                a.dist(b)
            })
            .sum()
    }

    /// Shoelace area; positive for counter-clockwise closed polylines.
    pub fn signed_area(&self) -> T {
        polygon_signed_area(&self.points)
    }

    /// Cumulative arc length at each point, starting at 0.
    pub fn arc_lengths(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.points.len());
        let mut acc = T::zero();
        for (i, &p) in self.points.iter().enumerate() {
            if i > 0 {
                acc += self.points[i - 1].dist(p);
            }
            out.push(acc);
        }
        out
    }

    /// Point at arc length `s` along an open polyline (clamped).
    pub fn point_at(&self, s: T) -> Vec2<T> {
        let cum = self.arc_lengths();
        let total = *cum.last().expect("non-empty polyline");
        let s = s.max(T::zero()).min(total);
        let k = cum.partition_point(|&c| c <= s).clamp(1, cum.len() - 1);
        let seg = cum[k] - cum[k - 1];
        let t = if seg > T::zero() {
            (s - cum[k - 1]) / seg
        } else {
            T::zero()
        };
        self.points[k - 1].lerp(self.points[k], t)
    }

    /// `n` points equally spaced by arc length along an open polyline,
    /// including both ends.
    pub fn resample(&self, n: usize) -> Self {
        assert!(n >= 2, "resampling needs at least two points");
        let total = self.length();
        let last = T::from_usize_lossy(n - 1);
        let pts = (0..n)
            .map(|i| match i {
                0 => self.points[0],
                _ if i == n - 1 => *self.points.last().unwrap(),
                _ => self.point_at(total * T::from_usize_lossy(i) / last),
            })
            .collect();
        Self::open(pts)
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self {
            points,
            closed: self.closed,
        }
    }

    pub fn map(&self, f: impl Fn(Vec2<T>) -> Vec2<T>) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            closed: self.closed,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Polyline<U> {
        Polyline {
            points: self.points.iter().map(|p| p.cast()).collect(),
            closed: self.closed,
        }
    }
}

pub fn polygon_signed_area<T: Scalar>(pts: &[Vec2<T>]) -> T {
    let n = pts.len();
    if n < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..n {
        acc += pts[i].cross(pts[(i + 1) % n]);
    }
    acc / T::lit(2.0)
}

#[inline]
pub fn triangle_signed_area<T: Scalar>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> T {
    (b - a).cross(c - a) / T::lit(2.0)
}

/// Planar triangle mesh with counter-clockwise triangles, disk topology and
/// one boundary loop.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh2D<T> {
    vertices: Vec<Vec2<T>>,
    triangles: Vec<[usize; 3]>,
    boundary_flags: Vec<bool>,
    boundary_loop: Vec<usize>,
    contour_params: Option<Vec<T>>,
    contour_len: Option<usize>,
}

impl<T: Scalar> TriMesh2D<T> {
    /// Validates orientation, non-degeneracy, connectivity and the single
    /// boundary loop.
    pub fn new(vertices: Vec<Vec2<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Mesh("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let a = triangle_signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(a > T::zero()) {
                return Err(Error::DegenerateTriangle(t));
            }
        }

        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, 1).is_some() {
                    return Err(Error::Mesh(format!(
                        "edge ({}, {}) is used twice with the same orientation",
                        e.0, e.1
                    )));
                }
            }
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) && next.insert(a, b).is_some() {
                return Err(Error::Mesh(format!("vertex {a} is a boundary pinch point")));
            }
        }
        if next.is_empty() {
            return Err(Error::Mesh("mesh has no boundary".into()));
        }
        let start = *next.keys().min().unwrap();
        let mut boundary_loop = vec![start];
        let mut cur = next[&start];
        while cur != start {
            if boundary_loop.len() > next.len() {
                return Err(Error::Mesh("boundary does not close".into()));
            }
            boundary_loop.push(cur);
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::Mesh("boundary does not close".into()))?;
        }
        if boundary_loop.len() != next.len() {
            return Err(Error::Mesh("boundary has more than one loop".into()));
        }

        let mut used = vec![false; vertices.len()];
        for tri in &triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if used.iter().any(|u| !u) {
            return Err(Error::Mesh("mesh has unreferenced vertices".into()));
        }
        if !triangles_connected(vertices.len(), &triangles) {
            return Err(Error::Mesh("mesh is not connected".into()));
        }

        let mut boundary_flags = vec![false; vertices.len()];
        for &v in &boundary_loop {
            boundary_flags[v] = true;
        }
        Ok(Self {
            vertices,
            triangles,
            boundary_flags,
            boundary_loop,
            contour_params: None,
            contour_len: None,
        })
    }

    pub fn vertices(&self) -> &[Vec2<T>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    /// Boundary vertices in counter-clockwise order.
    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    /// For meshes built from a contour: position of each boundary-loop vertex
    /// along that contour, as `segment index + fraction`.
    pub fn contour_params(&self) -> Option<&[T]> {
        self.contour_params.as_deref()
    }

    /// Number of source contour points (vertices `0..n`), if built from one.
    pub fn contour_len(&self) -> Option<usize> {
        self.contour_len
    }

    pub(crate) fn set_contour_params(&mut self, contour_len: usize, start: usize, params: Vec<T>) {
        self.boundary_loop.rotate_left(start);
        let mut params = params;
        params.rotate_left(start);
        self.contour_params = Some(params);
        self.contour_len = Some(contour_len);
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangle_points(t);
        triangle_signed_area(a, b, c)
    }

    pub fn triangle_centroid(&self, t: usize) -> Vec2<T> {
        let [a, b, c] = self.triangle_points(t);
        (a + b + c) * (T::one() / T::lit(3.0))
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Closed polyline through the boundary loop.
    pub fn boundary_polyline(&self) -> Polyline<T> {
        Polyline::closed(
            self.boundary_loop
                .iter()
                .map(|&v| self.vertices[v])
                .collect(),
        )
    }

    /// Undirected edges, each listed once with the smaller index first, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Smallest interior angle (radians) over all triangles.
    pub fn min_angle(&self) -> T {
        let mut best = T::infinity();
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let (a, b, c) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (u, v) = (b - a, c - a);
                best = best.min(u.cross(v).abs().atan2(u.dot(v)));
            }
        }
        best
    }

    /// Index of the triangle containing `p` (closed triangles, brute force).
    pub fn locate(&self, p: Vec2<T>) -> Option<usize> {
        let tol = T::lit(-1e-9);
        let mut best: Option<(usize, T)> = None;
        for t in 0..self.triangles.len() {
            let l = self.barycentric(t, p);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= T::zero() {
                return Some(t);
            }
            if best.is_none_or(|(_, w)| worst > w) {
                best = Some((t, worst));
            }
        }
        best.filter(|&(_, w)| w >= tol).map(|(t, _)| t)
    }

    /// Barycentric coordinates of `p` in triangle `t`.
    pub fn barycentric(&self, t: usize, p: Vec2<T>) -> [T; 3] {
        let [a, b, c] = self.triangle_points(t);
        let area = triangle_signed_area(a, b, c);
        [
            triangle_signed_area(p, b, c) / area,
            triangle_signed_area(a, p, c) / area,
            triangle_signed_area(a, b, p) / area,
        ]
    }

    pub fn map_vertices(&self, f: impl Fn(Vec2<T>) -> Vec2<T>) -> Result<Self> {
        let mut m = Self::new(
            self.vertices.iter().map(|&p| f(p)).collect(),
            self.triangles.clone(),
        )?;
        if let Some(params) = &self.contour_params {
            let start = m
                .boundary_loop
                .iter()
                .position(|&v| v == self.boundary_loop[0])
                .expect("same topology");
            m.boundary_loop.rotate_left(start);
            m.contour_params = Some(params.clone());
            m.contour_len = self.contour_len;
        }
        Ok(m)
    }

    pub fn cast<U: Scalar>(&self) -> TriMesh2D<U> {
        TriMesh2D {
            vertices: self.vertices.iter().map(|p| p.cast()).collect(),
            triangles: self.triangles.clone(),
            boundary_flags: self.boundary_flags.clone(),
            boundary_loop: self.boundary_loop.clone(),
            contour_params: self
                .contour_params
                .as_ref()
                .map(|p| p.iter().map(|&x| U::lit(x.as_f64())).collect()),
            contour_len: self.contour_len,
        }
    }
}

fn triangles_connected(nv: usize, triangles: &[[usize; 3]]) -> bool {
    let mut parent: Vec<usize> = (0..nv).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for t in triangles {
        for k in 1..3 {
            let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[k]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let root = find(&mut parent, triangles[0][0]);
    (0..nv).all(|v| find(&mut parent, v) == root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> TriMesh2D<f64> {
        TriMesh2D::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn square_boundary() {
        let m = square();
        assert_eq!(m.boundary_loop(), &[0, 1, 2, 3]);
        assert_eq!(m.area(), 1.0);
        assert_eq!(m.edges().len(), 5);
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let err = TriMesh2D::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangle(0)));
    }

    #[test]
    fn resample_is_equidistant() {
        let l = Polyline::<f64>::open(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 0.0),
            Vec2::new(3.0, 4.0),
        ]);
        let r = l.resample(8);
        for i in 1..8 {
            assert!((r.points[i - 1].dist(r.points[i]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_and_barycentric() {
        let m = square();
        let p = Vec2::new(0.25, 0.5);
        let t = m.locate(p).unwrap();
        let l = m.barycentric(t, p);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(m.locate(Vec2::new(2.0, 0.0)).is_none());
    }
}
