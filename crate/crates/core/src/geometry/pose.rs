use super::{Landmarks, RigidTransform};
use crate::linalg::{Mat3, Vec3};
use crate::{Error, Result, Scalar};

/// Head-pose standardisation from AC, PC and a structure centroid.
///
/// The result maps AC to the origin, PC onto the negative y (posterior)
/// axis, and `cc_centroid` into the `x = 0` plane on the +z side. Rows of
/// the rotation are the new x, y and z axes expressed in world coordinates.
pub fn acpc_standardize<T: Scalar>(
    lm: &Landmarks<T>,
    cc_centroid: Vec3<T>,
) -> Result<RigidTransform<T>> {
    lm.validate()?;
    let (ac, pc) = (lm.ac(), lm.pc());
    let ey = (ac - pc).normalized().ok_or(Error::CannotFixRoll)?;
    let c = cc_centroid - ac;
    let scale = c.norm().max(ac.dist(pc));
    let up = c - ey * ey.dot(c);
    if up.norm() <= T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * scale {
        return Err(Error::CannotFixRoll);
    }
    let ez = up.normalized().ok_or(Error::CannotFixRoll)?;
    let ex = ey.cross(ez);
    let rotation = Mat3::from_rows(ex, ey, ez);
    Ok(RigidTransform {
        rotation,
        translation: -rotation.mul_vec(ac),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_pose_is_fixed() {
        let lm = Landmarks::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, -25.0, 0.0)).unwrap();
        let t = acpc_standardize(&lm, Vec3::new(0.0, -12.0, 20.0)).unwrap();
        assert!(t.rotation.max_abs_diff(&Mat3::identity()) < 1e-12);
        assert!(t.translation.norm() < 1e-12);
    }

    #[test]
    fn centroid_on_line_fails() {
        let lm = Landmarks::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, -20.0, 3.0)).unwrap();
        let err = acpc_standardize(&lm, Vec3::new(1.0, -5.0, 3.0)).unwrap_err();
        assert!(err.to_string().starts_with("cannot fix roll"));
    }
}
