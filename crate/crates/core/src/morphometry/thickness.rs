use std::collections::{BTreeMap, BTreeSet};

use super::{length_and_curvature, Midline};
use crate::fem::{
    divergence, gradient, level_curves, rotate90, solve_poisson_with, stiffness_matrix, LevelCurve,
    SolverOptions,
};
use crate::linalg::Vec2;
use crate::mesh::{Polyline, TriMesh2D};
use crate::{Error, Result, Scalar};

pub const DEFAULT_SAMPLES: usize = 100;

/// Thickness along the intercallosal line.
#[derive(Clone, Debug, PartialEq)]
pub struct ThicknessProfile<T> {
    /// Arc-length fractions `k / (n + 1)`, `k = 1..=n`.
    pub positions: Vec<T>,
    /// Level-path length at each position; `None` where the path does not
    /// run from the inferior to the superior boundary.
    pub thickness: Vec<Option<T>>,
    /// The level path measured at each position.
    pub paths: Vec<Option<Polyline<T>>>,
    /// Conjugate field `g`, one value per vertex.
    pub g: Vec<T>,
    pub intercallosal_length: T,
    /// Mean unsigned curvature of the line (1/mm).
    pub curvature: T,
}

impl<T: Scalar> ThicknessProfile<T> {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.thickness.iter().flatten().count()
    }

    /// `position_fraction,thickness_mm`; invalid samples have an empty value.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["position_fraction", "thickness_mm"])?;
        for (p, t) in self.positions.iter().zip(&self.thickness) {
            let t = t.map(|t| t.as_f64().to_string()).unwrap_or_default();
            w.write_record([p.as_f64().to_string(), t])?;
        }
        Ok(
            String::from_utf8(w.into_inner().map_err(|e| Error::invalid(e.to_string()))?)
                .expect("csv output is utf-8"),
        )
    }
}

/// Thickness at the `n` interior samples of `midline.line`.
///
/// The streamlines of the Laplace field are the level sets of its conjugate
/// `g`, obtained from `W g = div(rot ∇f)`. At every sample the level set of
/// `g` through that point is measured from boundary to boundary.
pub fn thickness_profile<T: Scalar>(
    mesh: &TriMesh2D<T>,
    midline: &Midline<T>,
    opts: &SolverOptions,
) -> Result<ThicknessProfile<T>> {
    let line = &midline.line;
    if line.len() < 3 {
        return Err(Error::invalid("intercallosal line needs at least 3 points"));
    }
    let n = line.len() - 2;
    let w = stiffness_matrix(mesh)?;
    let h = divergence(mesh, &rotate90(&gradient(mesh, &midline.f)?))?;
    let g = solve_poisson_with(
        mesh,
        &w,
        &h,
        (midline.boundary.anterior_vertex, T::zero()),
        opts,
    )?;

    let bc: BTreeMap<usize, T> = midline.boundary.fixed.iter().copied().collect();
    let lp = mesh.boundary_loop();
    let boundary_edges: BTreeSet<(usize, usize)> = (0..lp.len())
        .map(|i| key(lp[i], lp[(i + 1) % lp.len()]))
        .collect();
    let side = |e: (usize, usize)| -> Option<T> {
        if !boundary_edges.contains(&e) {
            return None;
        }
        Some((bc[&e.0] + bc[&e.1]) * T::lit(0.5))
    };

    let denom = T::from_usize_lossy(n + 1);
    let mut positions = Vec::with_capacity(n);
    let mut thickness = Vec::with_capacity(n);
    let mut paths = Vec::with_capacity(n);
    for k in 1..=n {
        positions.push(T::from_usize_lossy(k) / denom);
        let p = line.points[k];
        let path = level_path_through(mesh, &g, p)?;
        let valid = path.as_ref().filter(|c| {
            if c.polyline.closed {
                return false;
            }
            match (c.start_edge.and_then(side), c.end_edge.and_then(side)) {
                (Some(a), Some(b)) => {
                    (a > T::zero() && b < T::zero()) || (a < T::zero() && b > T::zero())
                }
                _ => false,
            }
        });
        match valid {
            Some(c) => {
                thickness.push(Some(c.polyline.length()));
                paths.push(Some(c.polyline.clone()));
            }
            None => {
                log::debug!("thickness sample {k} has no boundary-to-boundary level path");
                thickness.push(None);
                paths.push(path.map(|c| c.polyline));
            }
        }
    }
    let (intercallosal_length, curvature) = length_and_curvature(line);
    Ok(ThicknessProfile {
        positions,
        thickness,
        paths,
        g,
        intercallosal_length,
        curvature,
    })
}

/// Component of the level set of `g` through `p`: the one crossing the
/// triangle that contains `p`, or else the one passing closest to `p`.
fn level_path_through<T: Scalar>(
    mesh: &TriMesh2D<T>,
    g: &[T],
    p: Vec2<T>,
) -> Result<Option<LevelCurve<T>>> {
    let Some(t) = mesh.locate(p) else {
        return Ok(None);
    };
    let tri = mesh.triangles()[t];
    let l = mesh.barycentric(t, p);
    let value = l[0] * g[tri[0]] + l[1] * g[tri[1]] + l[2] * g[tri[2]];
    let curves = level_curves(mesh, g, value)?;
    if let Some(i) = curves.iter().position(|c| c.triangles.contains(&t)) {
        return Ok(curves.into_iter().nth(i));
    }
    Ok(curves
        .into_iter()
        .map(|c| (distance_to(&c.polyline, p), c))
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"))
        .map(|(_, c)| c))
}

fn distance_to<T: Scalar>(line: &Polyline<T>, p: Vec2<T>) -> T {
    if line.len() == 1 {
        return line.points[0].dist(p);
    }
    (0..line.segment_count())
        .map(|i| {
            let (a, b) = line.segment(i);
            let d = b - a;
            let len2 = d.norm_sq();
            let s = if len2 > T::zero() {
                ((p - a).dot(d) / len2).max(T::zero()).min(T::one())
            } else {
                T::zero()
            };
            a.lerp(b, s).dist(p)
        })
        .fold(T::infinity(), T::min)
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}
