use std::collections::VecDeque;

use super::sparse::{pcg, CsrMatrix, SolverOptions};
use crate::linalg::Vec2;
use crate::mesh::TriMesh2D;
use crate::{Error, Result, Scalar};

/// Gradients of the three hat functions of triangle `t`:
/// `∇φ_i = perp(x_k − x_j) / (2A)` for the cyclic order `(i, j, k)`.
pub fn hat_gradients<T: Scalar>(mesh: &TriMesh2D<T>, t: usize) -> Result<[Vec2<T>; 3]> {
    let p = mesh.triangle_points(t);
    let two_a = (p[1] - p[0]).cross(p[2] - p[0]);
    if !(two_a > T::zero()) {
        return Err(Error::DegenerateTriangle(t));
    }
    let inv = T::one() / two_a;
    Ok([0, 1, 2].map(|i| (p[(i + 2) % 3] - p[(i + 1) % 3]).perp() * inv))
}

/// Linear-FEM stiffness (cotangent) matrix:
/// `W_ij = −(cot α_ij + cot β_ij) / 2` off the diagonal, rows summing to 0.
pub fn stiffness_matrix<T: Scalar>(mesh: &TriMesh2D<T>) -> Result<CsrMatrix<T>> {
    let half = T::lit(0.5);
    let mut trip = Vec::with_capacity(mesh.triangle_count() * 9);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let two_a = (p[1] - p[0]).cross(p[2] - p[0]);
        if !(two_a > T::zero()) {
            return Err(Error::DegenerateTriangle(t));
        }
        for k in 0..3 {
            // angle at vertex k is opposite the edge (i, j)
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let (u, v) = (p[i] - p[k], p[j] - p[k]);
            let w = -half * u.dot(v) / two_a;
            trip.push((tri[i], tri[j], w));
            trip.push((tri[j], tri[i], w));
            trip.push((tri[i], tri[i], -w));
            trip.push((tri[j], tri[j], -w));
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.vertex_count(), &trip))
}

/// Minimiser of the Dirichlet energy with the given vertex values fixed.
pub fn solve_dirichlet<T: Scalar>(
    mesh: &TriMesh2D<T>,
    fixed: &[(usize, T)],
    opts: &SolverOptions,
) -> Result<Vec<T>> {
    let w = stiffness_matrix(mesh)?;
    solve_dirichlet_with(mesh, &w, fixed, opts)
}

pub(crate) fn solve_dirichlet_with<T: Scalar>(
    mesh: &TriMesh2D<T>,
    w: &CsrMatrix<T>,
    fixed: &[(usize, T)],
    opts: &SolverOptions,
) -> Result<Vec<T>> {
    let n = mesh.vertex_count();
    if fixed.is_empty() {
        return Err(Error::SingularSystem("no fixed vertices".into()));
    }
    let mut value: Vec<Option<T>> = vec![None; n];
    for &(v, x) in fixed {
        if v >= n {
            return Err(Error::invalid(format!("fixed vertex {v} out of range")));
        }
        if !x.is_finite() {
            return Err(Error::invalid("fixed values must be finite"));
        }
        match value[v] {
            Some(old) if old != x => {
                return Err(Error::invalid(format!("vertex {v} fixed to two values")))
            }
            _ => value[v] = Some(x),
        }
    }
    check_reaches_fixed(mesh, &value)?;

    let free: Vec<usize> = (0..n).filter(|&v| value[v].is_none()).collect();
    let mut out: Vec<T> = value.iter().map(|v| v.unwrap_or(T::zero())).collect();
    if free.is_empty() {
        return Ok(out);
    }
    let mut rhs = vec![T::zero(); free.len()];
    for (k, &r) in free.iter().enumerate() {
        for (c, a) in w.row(r) {
            if let Some(x) = value[c] {
                rhs[k] -= a * x;
            }
        }
    }
    let reduced = w.restrict(&free);
    let x = pcg(&reduced, &rhs, opts)?;
    for (k, &v) in free.iter().enumerate() {
        out[v] = x[k];
    }
    Ok(out)
}

/// Every free vertex must be connected to some fixed vertex, otherwise the
/// reduced system is singular.
fn check_reaches_fixed<T: Scalar>(mesh: &TriMesh2D<T>, value: &[Option<T>]) -> Result<()> {
    let n = mesh.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for (a, b) in mesh.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| value[v].is_some()).collect();
    for &v in &queue {
        seen[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(v) => Err(Error::SingularSystem(format!(
            "vertex {v} is not connected to any fixed vertex"
        ))),
        None => Ok(()),
    }
}

/// Solves `W g = h` with `g[anchor.0] = anchor.1`.
///
/// `h` is first shifted to zero mean, the compatibility condition of the
/// pure Neumann problem; for consistent right-hand sides this changes
/// nothing beyond round-off.
pub fn solve_poisson<T: Scalar>(
    mesh: &TriMesh2D<T>,
    h: &[T],
    anchor: (usize, T),
    opts: &SolverOptions,
) -> Result<Vec<T>> {
    let w = stiffness_matrix(mesh)?;
    solve_poisson_with(mesh, &w, h, anchor, opts)
}

pub(crate) fn solve_poisson_with<T: Scalar>(
    mesh: &TriMesh2D<T>,
    w: &CsrMatrix<T>,
    h: &[T],
    anchor: (usize, T),
    opts: &SolverOptions,
) -> Result<Vec<T>> {
    let n = mesh.vertex_count();
    if h.len() != n {
        return Err(Error::invalid(
            "right-hand side length must equal vertex count",
        ));
    }
    if anchor.0 >= n {
        return Err(Error::invalid("anchor vertex out of range"));
    }
    let mean = h.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let free: Vec<usize> = (0..n).filter(|&v| v != anchor.0).collect();
    let mut rhs: Vec<T> = free.iter().map(|&v| h[v] - mean).collect();
    for (k, &r) in free.iter().enumerate() {
        rhs[k] -= w.get(r, anchor.0) * anchor.1;
    }
    let x = pcg(&w.restrict(&free), &rhs, opts)?;
    let mut out = vec![anchor.1; n];
    for (k, &v) in free.iter().enumerate() {
        out[v] = x[k];
    }
    Ok(out)
}

/// Per-triangle gradient of the piecewise-linear interpolant of `f`.
pub fn gradient<T: Scalar>(mesh: &TriMesh2D<T>, f: &[T]) -> Result<Vec<Vec2<T>>> {
    if f.len() != mesh.vertex_count() {
        return Err(Error::invalid("field length must equal vertex count"));
    }
    (0..mesh.triangle_count())
        .map(|t| {
            let g = hat_gradients(mesh, t)?;
            let tri = mesh.triangles()[t];
            Ok(g[0] * f[tri[0]] + g[1] * f[tri[1]] + g[2] * f[tri[2]])
        })
        .collect()
}

/// Rotates every vector by +90° about the mesh normal: `(u, v) → (−v, u)`.
pub fn rotate90<T: Scalar>(field: &[Vec2<T>]) -> Vec<Vec2<T>> {
    field.iter().map(|v| v.perp()).collect()
}

/// Weak divergence `div_i = Σ_t A_t ∇φ_i · v_t`, so that
/// `divergence(gradient(f)) = W f`.
pub fn divergence<T: Scalar>(mesh: &TriMesh2D<T>, vf: &[Vec2<T>]) -> Result<Vec<T>> {
    if vf.len() != mesh.triangle_count() {
        return Err(Error::invalid(
            "vector field length must equal triangle count",
        ));
    }
    let mut out = vec![T::zero(); mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = hat_gradients(mesh, t)?;
        let a = mesh.triangle_area(t);
        for k in 0..3 {
            out[tri[k]] += a * g[k].dot(vf[t]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TriMesh2D<f64> {
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
    fn two_triangle_square_matrix() {
        // Hand computation: the diagonal 0-2 is opposite two right angles
        // (cot 0); each side is opposite one 45° angle (cot 1).
        let w = stiffness_matrix(&unit_square()).unwrap();
        let expect = [
            [1.0, -0.5, 0.0, -0.5],
            [-0.5, 1.0, -0.5, 0.0],
            [0.0, -0.5, 1.0, -0.5],
            [-0.5, 0.0, -0.5, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((w.get(i, j) - expect[i][j]).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn rotate90_examples() {
        let v = vec![Vec2::new(2.0, 0.0), Vec2::new(0.3, -1.2)];
        assert_eq!(rotate90(&v)[0], Vec2::new(0.0, 2.0));
        let four = rotate90(&rotate90(&rotate90(&rotate90(&v))));
        assert_eq!(four, v);
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let m = crate::mesh::triangulate(&crate::phantom::disc(1.0, 24), 0.02).unwrap();
        let fixed: Vec<_> = m.boundary_loop().iter().map(|&v| (v, 7.0)).collect();
        let f = solve_dirichlet(&m, &fixed, &SolverOptions::default()).unwrap();
        assert!(f.iter().all(|&x| (x - 7.0).abs() < 1e-10));
    }

    #[test]
    fn poisson_zero_rhs_is_anchor_constant() {
        let m = crate::mesh::triangulate(&crate::phantom::disc(1.0, 16), 0.05).unwrap();
        let g = solve_poisson(
            &m,
            &vec![0.0; m.vertex_count()],
            (3, 5.0),
            &Default::default(),
        )
        .unwrap();
        assert!(g.iter().all(|&x| (x - 5.0).abs() < 1e-10));
    }

    #[test]
    fn no_fixed_vertices_is_singular() {
        let err = solve_dirichlet(&unit_square(), &[], &Default::default()).unwrap_err();
        assert!(matches!(err, Error::SingularSystem(_)));
    }
}
