//! Linear finite elements on planar triangle meshes: stiffness assembly,
//! Dirichlet and Poisson solves, per-triangle gradients, weak divergence and
//! level-set extraction.
//!
//! Scalar fields are plain slices with one value per vertex; vector fields
//! hold one vector per triangle.

mod levelset;
mod operators;
mod sparse;

pub use levelset::{
    extract_level_set, field_to_csv, level_curves, polylines_to_csv, LevelCurve, SNAP_EPS,
};
pub use operators::{
    divergence, gradient, hat_gradients, rotate90, solve_dirichlet, solve_poisson, stiffness_matrix,
};
pub(crate) use operators::{solve_dirichlet_with, solve_poisson_with};
pub use sparse::{pcg, CsrMatrix, SolverOptions};
