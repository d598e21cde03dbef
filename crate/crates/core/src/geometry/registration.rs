use std::collections::BTreeMap;

use super::{Plane, RigidTransform, Volume};
use crate::linalg::{svd3, Mat3, Vec3};
use crate::{Error, Result, Scalar};

/// Per-label centroids (world mm) for labels present in both volumes,
/// sorted by label id. Background (0) is never included.
///
/// `labels` restricts the result to the given ids; `None` uses every shared
/// non-background label.
pub fn label_centroids(
    vol: &Volume,
    other: &Volume,
    labels: Option<&[u32]>,
) -> Result<Vec<(u32, Vec3<f64>)>> {
    Ok(shared_centroids(vol, other, labels)?
        .into_iter()
        .map(|(l, a, _)| (l, a))
        .collect())
}

/// Label with its centroid in each of two volumes.
type CentroidPair = (u32, Vec3<f64>, Vec3<f64>);

fn shared_centroids(
    vol: &Volume,
    other: &Volume,
    labels: Option<&[u32]>,
) -> Result<Vec<CentroidPair>> {
    vol.require_labels()?;
    other.require_labels()?;
    let a = centroids_of(vol);
    let b = centroids_of(other);
    let shared: Vec<_> = a
        .into_iter()
        .filter(|(l, _)| labels.is_none_or(|ls| ls.contains(l)))
        .filter_map(|(l, ca)| b.get(&l).map(|&cb| (l, ca, cb)))
        .collect();
    if shared.len() < 3 {
        return Err(Error::InsufficientCorrespondences {
            found: shared.len(),
        });
    }
    Ok(shared)
}

fn centroids_of(vol: &Volume) -> BTreeMap<u32, Vec3<f64>> {
    let [nx, ny, nz] = vol.dims();
    let mut acc: BTreeMap<u32, ([f64; 3], usize)> = BTreeMap::new();
    let data = vol.data();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = data[vol.index(i, j, k)];
                if v == 0.0 {
                    continue;
                }
                let e = acc.entry(v as u32).or_insert(([0.0; 3], 0));
                e.0[0] += i as f64;
                e.0[1] += j as f64;
                e.0[2] += k as f64;
                e.1 += 1;
            }
        }
    }
    // The affine is linear, so the mean of voxel indices maps to the mean of
    // world positions.
    acc.into_iter()
        .map(|(l, (s, n))| {
            let n = n as f64;
            let c = Vec3::new(s[0] / n, s[1] / n, s[2] / n);
            (l, vol.voxel_to_world(c))
        })
        .collect()
}

/// Least-squares proper rigid map taking `src[i]` onto `dst[i]`.
pub fn kabsch_rigid<T: Scalar>(src: &[Vec3<T>], dst: &[Vec3<T>]) -> Result<RigidTransform<T>> {
    if src.len() != dst.len() {
        return Err(Error::invalid(format!(
            "point lists differ in length ({} vs {})",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} point pairs, need at least 3",
            src.len()
        )));
    }
    let n = T::from_usize_lossy(src.len());
    let mean = |pts: &[Vec3<T>]| {
        let mut c = Vec3::zero();
        for &p in pts {
            c += p;
        }
        c * (T::one() / n)
    };
    let (cs, cd) = (mean(src), mean(dst));

    let mut h = Mat3::zeros();
    for (&p, &q) in src.iter().zip(dst) {
        let (a, b) = (p - cs, q - cd);
        let (a, b) = (a.to_array(), b.to_array());
        for r in 0..3 {
            for c in 0..3 {
                h.m[r][c] += a[r] * b[c];
            }
        }
    }

    let svd = svd3(&h);
    let sqrt_eps = T::epsilon().sqrt();
    if svd.s[0] <= T::zero() || svd.s[1] <= sqrt_eps * svd.s[0] {
        return Err(Error::DegenerateConfiguration(
            "points are coincident or collinear".into(),
        ));
    }
    let vut = svd.v.mul_mat(&svd.u.transpose());
    let d = if vut.det() < T::zero() {
        -T::one()
    } else {
        T::one()
    };
    let rotation = svd
        .v
        .mul_mat(&Mat3::diag([T::one(), T::one(), d]))
        .mul_mat(&svd.u.transpose());
    let translation = cd - rotation.mul_vec(cs);
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

/// Mid-sagittal plane of `subject_seg` obtained by registering label
/// centroids onto the template and pulling `template_plane` back.
///
/// Returns the plane in subject world space and the subject-to-template map.
pub fn midsagittal_plane(
    subject_seg: &Volume,
    template_seg: &Volume,
    template_plane: &Plane<f64>,
    labels: Option<&[u32]>,
) -> Result<(Plane<f64>, RigidTransform<f64>)> {
    let pairs = shared_centroids(subject_seg, template_seg, labels)?;
    let (src, dst): (Vec<_>, Vec<_>) = pairs.iter().map(|&(_, a, b)| (a, b)).unzip();
    let t = kabsch_rigid(&src, &dst)?;
    let plane = template_plane.transformed(&t.inverse());
    Ok((plane, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DataType;

    fn labels(dims: [usize; 3], voxels: &[([usize; 3], u32)]) -> Volume {
        let mut v = Volume::zeros(dims, [1.0; 3], DataType::U8).unwrap();
        for &([i, j, k], l) in voxels {
            v.set(i, j, k, l as f64);
        }
        v
    }

    #[test]
    fn single_voxel_centroid() {
        let v = labels([4, 4, 4], &[([1, 1, 1], 1), ([0, 0, 0], 2), ([3, 0, 0], 3)]);
        let c = label_centroids(&v, &v, None).unwrap();
        assert_eq!(c[0], (1, Vec3::new(1.0, 1.0, 1.0)));
    }

    #[test]
    fn block_centroid_and_intersection() {
        let mut vox = vec![];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    vox.push(([i, j, k], 1));
                }
            }
        }
        vox.extend([([3, 3, 3], 2), ([3, 0, 3], 3), ([0, 3, 3], 4)]);
        let a = labels([4, 4, 4], &vox);
        vox.pop();
        let b = labels([4, 4, 4], &vox);
        let c = label_centroids(&a, &b, None).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].1, Vec3::new(0.5, 0.5, 0.5));
        assert!(c.iter().all(|(l, _)| *l != 4));
    }

    #[test]
    fn two_shared_labels_is_an_error() {
        let a = labels([4, 4, 4], &[([1, 1, 1], 1), ([2, 2, 2], 2)]);
        let err = label_centroids(&a, &a, None).unwrap_err();
        assert!(err.to_string().contains("insufficient correspondences"));
    }

    #[test]
    fn collinear_points_rejected() {
        let p: Vec<Vec3<f64>> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let err = kabsch_rigid(&p, &p).unwrap_err();
        assert!(err.to_string().contains("degenerate configuration"));
    }

    #[test]
    fn identity_and_translation() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
        ];
        let t = kabsch_rigid(&p, &p).unwrap();
        assert!(t.rotation.max_abs_diff(&Mat3::identity()) < 1e-12);
        assert!(t.translation.norm() < 1e-12);
        let q: Vec<_> = p.iter().map(|&x| x + Vec3::new(1.0, 2.0, 3.0)).collect();
        let t = kabsch_rigid(&p, &q).unwrap();
        assert!(t.rotation.max_abs_diff(&Mat3::identity()) < 1e-12);
        assert!((t.translation - Vec3::new(1.0, 2.0, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn planar_points_still_give_proper_rotation() {
        let p = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let r = Mat3::rotation(Vec3::new(1.0f64, 1.0, 0.3), 2.0);
        let q: Vec<_> = p.iter().map(|&x| r.mul_vec(x)).collect();
        let t = kabsch_rigid(&p, &q).unwrap();
        assert!(t.rotation.max_abs_diff(&r) < 1e-12);
        assert!((t.rotation.det() - 1.0).abs() < 1e-12);
    }
}
