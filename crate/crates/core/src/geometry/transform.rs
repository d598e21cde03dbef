use serde::{Deserialize, Serialize};

use crate::linalg::{Mat3, Mat4, Vec3};
use crate::{Error, Result, Scalar};

/// Proper rigid map `p -> R p + t` (mm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform<T> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Scalar> RigidTransform<T> {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zero(),
        }
    }

    /// Checks `RᵀR = I` (1e-9, or a precision-appropriate floor) and `det R = +1`.
    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Result<Self> {
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        if rotation.orthonormality_error() > tol || rotation.det() <= T::zero() {
            return Err(Error::invalid(
                "rotation is not a proper orthonormal matrix",
            ));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(t: Vec3<T>) -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: t,
        }
    }

    #[inline]
    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(v)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation.mul_mat(&other.rotation),
            translation: self.rotation.mul_vec(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -rt.mul_vec(self.translation),
        }
    }

    pub fn to_matrix(&self) -> Mat4<T> {
        Mat4::from_linear_translation(&self.rotation, self.translation)
    }

    pub fn from_matrix(m: &Mat4<T>) -> Result<Self> {
        let bottom = [T::zero(), T::zero(), T::zero(), T::one()];
        if m.m[3] != bottom {
            return Err(Error::invalid(
                "last row of a rigid transform must be [0, 0, 0, 1]",
            ));
        }
        Self::new(m.linear(), m.translation())
    }

    /// Row-major 4x4 representation used for JSON interchange.
    pub fn to_rows(&self) -> [[T; 4]; 4] {
        self.to_matrix().m
    }

    pub fn from_rows(rows: [[T; 4]; 4]) -> Result<Self> {
        Self::from_matrix(&Mat4 { m: rows })
    }

    pub fn cast<U: Scalar>(&self) -> RigidTransform<U> {
        RigidTransform {
            rotation: self.rotation.cast(),
            translation: self.translation.cast(),
        }
    }
}

impl<T: Scalar> Serialize for RigidTransform<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for RigidTransform<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[T; 4]; 4]>::deserialize(d)?;
        Self::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Oriented plane `{x : normal · x = offset}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Plane<T> {
    normal: [T; 3],
    offset: T,
}

impl<T: Scalar> Plane<T> {
    /// Normalises `normal` (and scales `offset` accordingly).
    pub fn new(normal: Vec3<T>, offset: T) -> Result<Self> {
        let n = normal.norm();
        if !(n > T::zero()) || !n.is_finite() || !offset.is_finite() {
            return Err(Error::invalid("plane normal must be finite and non-zero"));
        }
        Ok(Self {
            normal: (normal * (T::one() / n)).to_array(),
            offset: offset / n,
        })
    }

    pub fn from_point_normal(point: Vec3<T>, normal: Vec3<T>) -> Result<Self> {
        let n = normal
            .normalized()
            .ok_or_else(|| Error::invalid("plane normal must be non-zero"))?;
        Self::new(n, n.dot(point))
    }

    pub fn normal(&self) -> Vec3<T> {
        Vec3::from_array(self.normal)
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    /// Point of the plane closest to the world origin.
    pub fn origin_point(&self) -> Vec3<T> {
        self.normal() * self.offset
    }

    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        self.normal().dot(p) - self.offset
    }

    /// Image of the plane under a rigid map.
    pub fn transformed(&self, t: &RigidTransform<T>) -> Self {
        let n = t.apply_vector(self.normal());
        let n = n.normalized().unwrap_or(n);
        let p = t.apply(self.origin_point());
        Self {
            normal: n.to_array(),
            offset: n.dot(p),
        }
    }

    /// Same plane with the opposite orientation.
    pub fn flipped(&self) -> Self {
        Self {
            normal: (-self.normal()).to_array(),
            offset: -self.offset,
        }
    }

    /// Rigid map taking the canonical plane `x = 0` (normal +x) onto this
    /// plane: the rotation is the minimal one carrying +x to the normal.
    pub fn to_transform(&self) -> RigidTransform<T> {
        let ex = Vec3::new(T::one(), T::zero(), T::zero());
        let n = self.normal();
        let axis = ex.cross(n);
        let s = axis.norm();
        let c = ex.dot(n);
        let rotation = if s <= T::epsilon() {
            if c > T::zero() {
                Mat3::identity()
            } else {
                Mat3::rotation(
                    Vec3::new(T::zero(), T::zero(), T::one()),
                    T::from(std::f64::consts::PI).unwrap(),
                )
            }
        } else {
            Mat3::rotation(axis, s.atan2(c))
        };
        RigidTransform {
            rotation,
            translation: self.origin_point(),
        }
    }

    /// Inverse of [`Plane::to_transform`]: the image of `x = 0` under `t`.
    pub fn from_transform(t: &RigidTransform<T>) -> Self {
        let canonical = Self {
            normal: [T::one(), T::zero(), T::zero()],
            offset: T::zero(),
        };
        canonical.transformed(t)
    }

    pub fn cast<U: Scalar>(&self) -> Plane<U> {
        Plane::new(self.normal().cast(), U::lit(self.offset.as_f64())).expect("finite plane")
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Plane<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<T> {
            normal: [T; 3],
            offset: T,
        }
        let raw = Raw::<T>::deserialize(d)?;
        Plane::new(Vec3::from_array(raw.normal), raw.offset).map_err(serde::de::Error::custom)
    }
}

/// Anterior and posterior commissure positions (world mm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmarks<T> {
    pub ac: [T; 3],
    pub pc: [T; 3],
}

impl<T: Scalar> Landmarks<T> {
    pub fn new(ac: Vec3<T>, pc: Vec3<T>) -> Result<Self> {
        let lm = Self {
            ac: ac.to_array(),
            pc: pc.to_array(),
        };
        lm.validate()?;
        Ok(lm)
    }

    pub fn validate(&self) -> Result<()> {
        let (ac, pc) = (self.ac(), self.pc());
        if !ac.is_finite() || !pc.is_finite() || ac.dist(pc) <= T::zero() {
            return Err(Error::invalid("AC and PC must be finite and distinct"));
        }
        Ok(())
    }

    pub fn ac(&self) -> Vec3<T> {
        Vec3::from_array(self.ac)
    }

    pub fn pc(&self) -> Vec3<T> {
        Vec3::from_array(self.pc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_transform() -> RigidTransform<f64> {
        RigidTransform::new(
            Mat3::rotation(Vec3::new(0.3, -1.0, 0.2), 0.9),
            Vec3::new(1.0, -2.0, 3.5),
        )
        .unwrap()
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = sample_transform();
        let id = t.compose(&t.inverse());
        assert!(id.rotation.max_abs_diff(&Mat3::identity()) < 1e-14);
        assert!(id.translation.norm() < 1e-14);
    }

    #[test]
    fn plane_transform_roundtrip() {
        let p = Plane::new(Vec3::new(0.9f64, 0.1, -0.2), 4.0).unwrap();
        let back = Plane::from_transform(&p.to_transform());
        assert!((back.normal() - p.normal()).norm() < 1e-14);
        assert!((back.offset() - p.offset()).abs() < 1e-13);
    }

    #[test]
    fn plane_transformed_keeps_points_on_plane() {
        let p = Plane::new(Vec3::new(0.0, 1.0, 1.0), 2.0).unwrap();
        let t = sample_transform();
        let q = p.transformed(&t);
        let on = p.origin_point() + Vec3::new(1.0, 0.5, -0.5) * 3.0;
        assert!(p.signed_distance(on).abs() < 1e-12);
        assert!(q.signed_distance(t.apply(on)).abs() < 1e-12);
    }

    #[test]
    fn json_shapes() {
        let p = Plane::new(Vec3::new(2.0, 0.0, 0.0), 4.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"normal":[1.0,0.0,0.0],"offset":2.0}"#);
        let t = RigidTransform::<f64>::from_translation(Vec3::new(1.0, 2.0, 3.0));
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(
            s,
            "[[1.0,0.0,0.0,1.0],[0.0,1.0,0.0,2.0],[0.0,0.0,1.0,3.0],[0.0,0.0,0.0,1.0]]"
        );
        let back: RigidTransform<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_reflection() {
        let refl = Mat3::diag([1.0, 1.0, -1.0]);
        assert!(RigidTransform::new(refl, Vec3::zero()).is_err());
    }
}
