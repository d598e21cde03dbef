use super::{find_endpoints, AnchorOffsets, EndpointPair, InPlaneLandmarks, MeshContour};
use crate::fem::{level_curves, solve_dirichlet_with, stiffness_matrix, SolverOptions};
use crate::mesh::{Polyline, TriMesh2D};
use crate::{Error, Result, Scalar};

/// Dirichlet data on the mesh boundary: 0 at the endpoints, +1 on the
/// superior and −1 on the inferior contour arc.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConditions<T> {
    /// `(vertex, value)` for every boundary-loop vertex.
    pub fixed: Vec<(usize, T)>,
    /// Anterior and posterior endpoint mesh vertices.
    pub anterior_vertex: usize,
    pub posterior_vertex: usize,
}

impl<T: Scalar> BoundaryConditions<T> {
    /// Builds the data from contour endpoint indices.
    ///
    /// Values are assigned to contour points and interpolated linearly along
    /// each contour segment for boundary vertices that refinement inserted
    /// between contour points.
    pub fn new(mesh: &TriMesh2D<T>, endpoints: &EndpointPair) -> Result<Self> {
        let mc = MeshContour::of(mesh);
        let pts = &mc.contour.points;
        let n = pts.len();
        let (a, p) = (endpoints.anterior, endpoints.posterior);
        if a >= n || p >= n || a == p {
            return Err(Error::invalid(
                "endpoint indices must be distinct contour points",
            ));
        }
        let forward: Vec<usize> = (1..n)
            .map(|k| (a + k) % n)
            .take_while(|&i| i != p)
            .collect();
        let backward: Vec<usize> = (1..n)
            .map(|k| (p + k) % n)
            .take_while(|&i| i != a)
            .collect();
        if forward.is_empty() || backward.is_empty() {
            return Err(Error::DegenerateMidline(
                "endpoints are adjacent on the contour".into(),
            ));
        }
        let up = (pts[a] - pts[p])
            .normalized()
            .ok_or_else(|| Error::DegenerateMidline("endpoints coincide".into()))?;
        let up = up.perp();
        let mean_height = |arc: &[usize]| {
            arc.iter().map(|&i| pts[i].dot(up)).sum::<T>() / T::from_usize_lossy(arc.len())
        };
        let forward_is_superior = mean_height(&forward) >= mean_height(&backward);

        let mut value = vec![T::zero(); n];
        let (sup, inf) = if forward_is_superior {
            (&forward, &backward)
        } else {
            (&backward, &forward)
        };
        for &i in sup {
            value[i] = T::one();
        }
        for &i in inf {
            value[i] = -T::one();
        }

        let fixed = mesh
            .boundary_loop()
            .iter()
            .zip(&mc.loop_params)
            .map(|(&v, &s)| {
                let i = s.floor().to_usize().unwrap_or(0).min(n - 1);
                let frac = s - T::from_usize_lossy(i);
                let x = value[i] + (value[(i + 1) % n] - value[i]) * frac;
                (v, x)
            })
            .collect();
        Ok(Self {
            fixed,
            anterior_vertex: mc.vertex_of[a],
            posterior_vertex: mc.vertex_of[p],
        })
    }
}

/// Laplace solution, endpoints and the intercallosal line of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Midline<T> {
    pub endpoints: EndpointPair,
    pub boundary: BoundaryConditions<T>,
    /// Laplace solution `f`, one value per vertex.
    pub f: Vec<T>,
    /// Zero level set of `f`, anterior to posterior, ends at the endpoints.
    pub raw: Polyline<T>,
    /// `raw` resampled to `n + 2` equidistant points.
    pub line: Polyline<T>,
}

/// Finds endpoints from the landmarks, solves the Laplace problem and
/// extracts the intercallosal line resampled to `n + 2` points.
pub fn intercallosal_line<T: Scalar>(
    mesh: &TriMesh2D<T>,
    lm: &InPlaneLandmarks<T>,
    n: usize,
    offsets: &AnchorOffsets,
    opts: &SolverOptions,
) -> Result<Midline<T>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let mc = MeshContour::of(mesh);
    let endpoints = find_endpoints(&mc.contour, lm, offsets)?;
    let boundary = BoundaryConditions::new(mesh, &endpoints)?;
    let w = stiffness_matrix(mesh)?;
    let f = solve_dirichlet_with(mesh, &w, &boundary.fixed, opts)?;

    let curves = level_curves(mesh, &f, T::zero())?;
    if curves.is_empty() {
        return Err(Error::DegenerateMidline("zero level set is empty".into()));
    }
    if curves.len() > 1 {
        return Err(Error::DegenerateMidline(format!(
            "zero level set has {} components",
            curves.len()
        )));
    }
    let curve = curves.into_iter().next().unwrap();
    if curve.polyline.closed || curve.polyline.len() < 2 {
        return Err(Error::DegenerateMidline(
            "zero level set is not an open path".into(),
        ));
    }
    let pa = mesh.vertices()[boundary.anterior_vertex];
    let pp = mesh.vertices()[boundary.posterior_vertex];
    let mut raw = curve.polyline;
    if raw.points[0].dist(pa) + raw.points[raw.len() - 1].dist(pp)
        > raw.points[0].dist(pp) + raw.points[raw.len() - 1].dist(pa)
    {
        raw = raw.reversed();
    }
    attach_end(&mut raw.points, pa, true);
    attach_end(&mut raw.points, pp, false);
    let line = raw.resample(n + 2);
    Ok(Midline {
        endpoints,
        boundary,
        f,
        raw,
        line,
    })
}

/// Puts the exact endpoint at the start or end of the path: replaces the
/// path end when it already sits on the endpoint, appends it otherwise.
fn attach_end<T: Scalar>(
    pts: &mut Vec<crate::linalg::Vec2<T>>,
    p: crate::linalg::Vec2<T>,
    front: bool,
) {
    let tol = T::lit(1e-6);
    let idx = if front { 0 } else { pts.len() - 1 };
    if pts[idx].dist(p) <= tol {
        pts[idx] = p;
    } else if front {
        pts.insert(0, p);
    } else {
        pts.push(p);
    }
}
