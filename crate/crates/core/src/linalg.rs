//! Small fixed-size vectors and matrices used throughout the crate.
//!
//! Everything here is generic over [`Scalar`]; the heavier dense algebra in
//! the statistics module uses `nalgebra` on `f64` instead.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self * (T::one() / n))
    }

    /// Counter-clockwise rotation by 90 degrees: (u, v) -> (-v, u).
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }

    pub fn cast<U: Scalar>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self * (T::one() / n))
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn cast<U: Scalar>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

macro_rules! impl_vec_ops {
    ($t:ident, $($f:ident),+) => {
        impl<T: Scalar> Add for $t<T> {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self { $t { $($f: self.$f + o.$f),+ } }
        }
        impl<T: Scalar> Sub for $t<T> {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self { $t { $($f: self.$f - o.$f),+ } }
        }
        impl<T: Scalar> Mul<T> for $t<T> {
            type Output = Self;
            #[inline]
            fn mul(self, s: T) -> Self { $t { $($f: self.$f * s),+ } }
        }
        impl<T: Scalar> Neg for $t<T> {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self { $t { $($f: -self.$f),+ } }
        }
        impl<T: Scalar> AddAssign for $t<T> {
            #[inline]
            fn add_assign(&mut self, o: Self) { $(self.$f += o.$f;)+ }
        }
        impl<T: Scalar> SubAssign for $t<T> {
            #[inline]
            fn sub_assign(&mut self, o: Self) { $(self.$f -= o.$f;)+ }
        }
    };
}

impl_vec_ops!(Vec2, x, y);
impl_vec_ops!(Vec3, x, y, z);

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Scalar> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn zeros() -> Self {
        Self {
            m: [[T::zero(); 3]; 3],
        }
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Self {
            m: [r0.to_array(), r1.to_array(), r2.to_array()],
        }
    }

    pub fn from_cols(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self::from_rows(c0, c1, c2).transpose()
    }

    pub fn diag(d: [T; 3]) -> Self {
        let mut r = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            r.m[i][i] = v;
        }
        r
    }

    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3::from_array(self.m[i])
    }

    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Self {
        let mut r = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                r.m[j][i] = self.m[i][j];
            }
        }
        r
    }

    pub fn det(&self) -> T {
        self.row(0).dot(self.row(1).cross(self.row(2)))
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = T::zero();
                for k in 0..3 {
                    s += self.m[i][k] * o.m[k][j];
                }
                r.m[i][j] = s;
            }
        }
        r
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, o: &Self) -> T {
        let mut d = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }

    /// Deviation of `RᵀR` from the identity (max abs entry).
    pub fn orthonormality_error(&self) -> T {
        self.transpose()
            .mul_mat(self)
            .max_abs_diff(&Self::identity())
    }

    /// Axis-angle rotation (Rodrigues). `axis` need not be normalised.
    pub fn rotation(axis: Vec3<T>, angle: T) -> Self {
        let a = axis
            .normalized()
            .unwrap_or(Vec3::new(T::zero(), T::zero(), T::one()));
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        Self {
            m: [
                [
                    t * a.x * a.x + c,
                    t * a.x * a.y - s * a.z,
                    t * a.x * a.z + s * a.y,
                ],
                [
                    t * a.x * a.y + s * a.z,
                    t * a.y * a.y + c,
                    t * a.y * a.z - s * a.x,
                ],
                [
                    t * a.x * a.z - s * a.y,
                    t * a.y * a.z + s * a.x,
                    t * a.z * a.z + c,
                ],
            ],
        }
    }

    /// Rotation angle of a proper rotation matrix, in radians.
    pub fn rotation_angle(&self) -> T {
        let tr = self.m[0][0] + self.m[1][1] + self.m[2][2];
        let c = ((tr - T::one()) / T::lit(2.0)).max(-T::one()).min(T::one());
        // acos loses precision near 0; use the skew part for small angles.
        let s = Vec3::new(
            self.m[2][1] - self.m[1][2],
            self.m[0][2] - self.m[2][0],
            self.m[1][0] - self.m[0][1],
        )
        .norm()
            / T::lit(2.0);
        s.atan2(c)
    }

    pub fn cast<U: Scalar>(&self) -> Mat3<U> {
        let mut r = Mat3::<U>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = U::lit(self.m[i][j].as_f64());
            }
        }
        r
    }
}

impl<T> Index<(usize, usize)> for Mat3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.m[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.m[i][j]
    }
}

/// Row-major homogeneous 4x4 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4<T> {
    pub m: [[T; 4]; 4],
}

impl<T: Scalar> Mat4<T> {
    pub fn identity() -> Self {
        let mut m = [[T::zero(); 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Self { m }
    }

    pub fn from_linear_translation(a: &Mat3<T>, t: Vec3<T>) -> Self {
        let mut r = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = a.m[i][j];
            }
        }
        r.m[0][3] = t.x;
        r.m[1][3] = t.y;
        r.m[2][3] = t.z;
        r
    }

    pub fn linear(&self) -> Mat3<T> {
        let mut r = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = self.m[i][j];
            }
        }
        r
    }

    pub fn translation(&self) -> Vec3<T> {
        Vec3::new(self.m[0][3], self.m[1][3], self.m[2][3])
    }

    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        let r =
            |i: usize| self.m[i][0] * p.x + self.m[i][1] * p.y + self.m[i][2] * p.z + self.m[i][3];
        Vec3::new(r(0), r(1), r(2))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut r = [[T::zero(); 4]; 4];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let mut s = T::zero();
                for k in 0..4 {
                    s += self.m[i][k] * o.m[k][j];
                }
                *v = s;
            }
        }
        Self { m: r }
    }

    /// Gauss-Jordan inverse with partial pivoting; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let mut a = self.m;
        let mut inv = Self::identity().m;
        let scale = a
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()));
        if scale == T::zero() || !scale.is_finite() {
            return None;
        }
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            if a[piv][col].abs() <= scale * T::epsilon() * T::lit(64.0) {
                return None;
            }
            a.swap(col, piv);
            inv.swap(col, piv);
            let d = T::one() / a[col][col];
            for j in 0..4 {
                a[col][j] *= d;
                inv[col][j] *= d;
            }
            for i in 0..4 {
                if i != col {
                    let f = a[i][col];
                    if f != T::zero() {
                        for j in 0..4 {
                            a[i][j] -= f * a[col][j];
                            inv[i][j] -= f * inv[col][j];
                        }
                    }
                }
            }
        }
        Some(Self { m: inv })
    }

    pub fn to_rows(&self) -> [[T; 4]; 4] {
        self.m
    }
}

/// Singular value decomposition `A = U diag(s) Vᵀ` of a 3x3 matrix.
#[derive(Clone, Copy, Debug)]
pub struct Svd3<T> {
    pub u: Mat3<T>,
    /// Singular values, descending.
    pub s: [T; 3],
    pub v: Mat3<T>,
}

/// One-sided Jacobi (Hestenes) SVD. Accurate to working precision even for
/// rank-deficient input; when the third singular value vanishes the third
/// left vector is completed as `u0 × u1`.
pub fn svd3<T: Scalar>(a: &Mat3<T>) -> Svd3<T> {
    let mut w = *a;
    let mut v = Mat3::identity();
    let eps = T::epsilon();
    for _sweep in 0..64 {
        let mut rotated = false;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
            for i in 0..3 {
                alpha += w.m[i][p] * w.m[i][p];
                beta += w.m[i][q] * w.m[i][q];
                gamma += w.m[i][p] * w.m[i][q];
            }
            if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
            let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
            let c = T::one() / (T::one() + t * t).sqrt();
            let s = c * t;
            for i in 0..3 {
                let (wp, wq) = (w.m[i][p], w.m[i][q]);
                w.m[i][p] = c * wp - s * wq;
                w.m[i][q] = s * wp + c * wq;
                let (vp, vq) = (v.m[i][p], v.m[i][q]);
                v.m[i][p] = c * vp - s * vq;
                v.m[i][q] = s * vp + c * vq;
            }
        }
        if !rotated {
            break;
        }
    }

    let norms = [w.col(0).norm(), w.col(1).norm(), w.col(2).norm()];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let s = [norms[order[0]], norms[order[1]], norms[order[2]]];
    let vs = Mat3::from_cols(v.col(order[0]), v.col(order[1]), v.col(order[2]));
    let tiny = s[0] * eps * T::lit(8.0);

    let mut ucols = [Vec3::zero(); 3];
    for k in 0..3 {
        if s[k] > tiny {
            ucols[k] = w.col(order[k]) * (T::one() / s[k]);
        }
    }
    if s[1] <= tiny {
        // Rank <= 1: complete with any orthonormal pair.
        let u0 = ucols[0]
            .normalized()
            .unwrap_or(Vec3::new(T::one(), T::zero(), T::zero()));
        ucols[0] = u0;
        let helper = if u0.x.abs() < T::lit(0.9) {
            Vec3::new(T::one(), T::zero(), T::zero())
        } else {
            Vec3::new(T::zero(), T::one(), T::zero())
        };
        ucols[1] = u0.cross(helper).normalized().unwrap();
    }
    if s[2] <= tiny {
        ucols[2] = ucols[0].cross(ucols[1]);
    }
    Svd3 {
        u: Mat3::from_cols(ucols[0], ucols[1], ucols[2]),
        s,
        v: vs,
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix `[[a, b], [b, c]]`.
/// Returns `(lambda_max, lambda_min, unit eigenvector of lambda_max)`.
pub fn sym2_eigen<T: Scalar>(a: T, b: T, c: T) -> (T, T, Vec2<T>) {
    let two = T::lit(2.0);
    let mean = (a + c) / two;
    let r = ((a - c) / two).hypot(b);
    let theta = (two * b).atan2(a - c) / two;
    (mean + r, mean - r, Vec2::new(theta.cos(), theta.sin()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd3<f64>) -> Mat3<f64> {
        svd.u
            .mul_mat(&Mat3::diag(svd.s))
            .mul_mat(&svd.v.transpose())
    }

    #[test]
    fn svd_reconstructs_general_matrix() {
        let a = Mat3 {
            m: [[2.0, -1.0, 0.5], [0.3, 4.0, 1.0], [-2.0, 0.1, 3.0]],
        };
        let svd = svd3(&a);
        assert!(reconstruct(&svd).max_abs_diff(&a) < 1e-13);
        assert!(svd.u.orthonormality_error() < 1e-13);
        assert!(svd.v.orthonormality_error() < 1e-13);
        assert!(svd.s[0] >= svd.s[1] && svd.s[1] >= svd.s[2]);
    }

    #[test]
    fn svd_rank_two_completes_u() {
        // Rank-2: third row is the sum of the first two.
        let a = Mat3 {
            m: [[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [1.0, 3.0, 3.0]],
        };
        let svd = svd3(&a);
        assert!(svd.s[2] < 1e-12);
        assert!(svd.u.orthonormality_error() < 1e-12);
        assert!(reconstruct(&svd).max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn mat4_inverse_roundtrip() {
        let r = Mat3::rotation(Vec3::new(1.0, 2.0, 0.5), 0.7);
        let m = Mat4::<f64>::from_linear_translation(
            &r.mul_mat(&Mat3::diag([0.8, 1.2, 2.0])),
            Vec3::new(3.0, -4.0, 5.0),
        );
        let inv = m.inverse().unwrap();
        let id = m.mul_mat(&inv);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id.m[i][j] - e).abs() < 1e-13);
            }
        }
        let mut singular = Mat4::<f64>::identity();
        singular.m[2][2] = 0.0;
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn sym2_eigen_axis() {
        let (l1, l2, v) = sym2_eigen(4.0f64, 0.0, 1.0);
        assert_eq!((l1, l2), (4.0, 1.0));
        assert!((v.x.abs() - 1.0).abs() < 1e-15);
        let (_, _, v) = sym2_eigen(1.0f64, 0.0, 4.0);
        assert!((v.y.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_angle_small() {
        let r = Mat3::rotation(Vec3::new(0.0f64, 0.0, 1.0), 1e-10);
        assert!((r.rotation_angle() - 1e-10).abs() < 1e-20);
    }
}
