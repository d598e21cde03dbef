use super::{DataType, Plane, Volume};
use crate::linalg::{Mat3, Mat4, Vec3};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Trilinear,
    /// For label maps: keeps values integral.
    Nearest,
}

/// Smallest odd count `n` with `n * spacing >= width`.
pub fn slab_slice_count(width_mm: f64, spacing_mm: f64) -> usize {
    let n = (width_mm / spacing_mm - 1e-9).ceil().max(1.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Orthonormal in-plane frame `(u, v)` with `u` the anterior (+y) direction
/// projected into the plane and `v = normal × u`.
pub fn plane_frame(normal: Vec3<f64>) -> (Vec3<f64>, Vec3<f64>) {
    let project = |a: Vec3<f64>| (a - normal * normal.dot(a)).normalized();
    let u = project(Vec3::new(0.0, 1.0, 0.0))
        .filter(|u| u.norm() > 0.5)
        .or_else(|| project(Vec3::new(0.0, 0.0, 1.0)))
        .expect("unit normal has a non-parallel axis");
    (u, normal.cross(u))
}

/// Resamples `vol` on a stack of slices parallel to `plane`, centred on it.
///
/// Slab axis 0 runs along the plane normal, axes 1 and 2 along the in-plane
/// frame of [`plane_frame`]. The in-plane grid covers the projected volume
/// and is anchored at the projection of voxel (0, 0, 0). Samples outside the
/// source grid are 0.
pub fn resample_slab(
    vol: &Volume,
    plane: &Plane<f64>,
    width_mm: f64,
    spacing_mm: f64,
    interpolation: Interpolation,
) -> Result<Volume> {
    if !(width_mm > 0.0 && width_mm.is_finite()) || !(spacing_mm > 0.0 && spacing_mm.is_finite()) {
        return Err(Error::invalid("slab width and spacing must be positive"));
    }
    let corners = vol.corner_centres();
    let d: Vec<f64> = corners.iter().map(|&c| plane.signed_distance(c)).collect();
    if d.iter().all(|&x| x > 0.0) || d.iter().all(|&x| x < 0.0) {
        return Err(Error::PlaneMissesVolume);
    }

    let n = plane.normal();
    let (u, v) = plane_frame(n);
    let p0 = corners[0];
    let q0 = p0 - n * plane.signed_distance(p0);
    let (mut umin, mut umax, mut vmin, mut vmax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &c in &corners {
        let r = c - q0;
        umin = umin.min(r.dot(u));
        umax = umax.max(r.dot(u));
        vmin = vmin.min(r.dot(v));
        vmax = vmax.max(r.dot(v));
    }
    let s = spacing_mm;
    let lo_u = (umin / s + 1e-9).floor();
    let lo_v = (vmin / s + 1e-9).floor();
    let nu = ((umax / s - 1e-9).ceil() - lo_u) as usize + 1;
    let nv = ((vmax / s - 1e-9).ceil() - lo_v) as usize + 1;
    let ns = slab_slice_count(width_mm, s);
    let half = (ns - 1) as f64 / 2.0;

    let origin = q0 + u * (lo_u * s) + v * (lo_v * s) - n * (half * s);
    let linear = Mat3::from_cols(n * s, u * s, v * s);
    let affine = Mat4::from_linear_translation(&linear, origin);

    // slab voxel -> source voxel, composed once
    let to_src = vol.inverse_affine().mul_mat(&affine);
    let mut data = vec![0.0; ns * nu * nv];
    for k in 0..nv {
        for j in 0..nu {
            for i in 0..ns {
                let p = to_src.transform_point(Vec3::new(i as f64, j as f64, k as f64));
                data[i + ns * (j + nu * k)] = match interpolation {
                    Interpolation::Trilinear => trilinear(vol, p),
                    Interpolation::Nearest => nearest(vol, p),
                };
            }
        }
    }
    let datatype = match interpolation {
        Interpolation::Trilinear => DataType::F64,
        Interpolation::Nearest => vol.datatype(),
    };
    Volume::new([ns, nu, nv], [s; 3], affine, datatype, data)
}

const SNAP: f64 = 1e-9;

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < SNAP {
        r
    } else {
        x
    }
}

fn in_range(x: f64, dim: usize) -> bool {
    x >= 0.0 && x <= (dim - 1) as f64
}

fn trilinear(vol: &Volume, p: Vec3<f64>) -> f64 {
    let dims = vol.dims();
    let c = [snap(p.x), snap(p.y), snap(p.z)];
    if !(0..3).all(|a| in_range(c[a], dims[a])) {
        return 0.0;
    }
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let f = c[a].floor();
        base[a] = (f as usize).min(dims[a] - 1);
        frac[a] = c[a] - base[a] as f64;
    }
    let mut acc = 0.0;
    for corner in 0..8 {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let hi = corner >> a & 1 == 1;
            w *= if hi { frac[a] } else { 1.0 - frac[a] };
            idx[a] = if hi {
                (base[a] + 1).min(dims[a] - 1)
            } else {
                base[a]
            };
        }
        if w != 0.0 {
            acc += w * vol.get(idx[0], idx[1], idx[2]);
        }
    }
    acc
}

fn nearest(vol: &Volume, p: Vec3<f64>) -> f64 {
    let dims = vol.dims();
    let c = [p.x, p.y, p.z];
    let mut idx = [0usize; 3];
    for a in 0..3 {
        let r = c[a].round();
        if r < 0.0 || r > (dims[a] - 1) as f64 {
            return 0.0;
        }
        idx[a] = r as usize;
    }
    vol.get(idx[0], idx[1], idx[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(dims: [usize; 3]) -> Volume {
        let n = dims.iter().product();
        let data = (0..n).map(|i| i as f64).collect();
        Volume::from_grid(dims, [1.0; 3], Vec3::zero(), DataType::F64, data).unwrap()
    }

    #[test]
    fn slice_counts() {
        assert_eq!(slab_slice_count(5.0, 1.0), 5);
        assert_eq!(slab_slice_count(5.0, 0.8), 7);
        assert_eq!(slab_slice_count(5.0, 0.5), 11);
        assert_eq!(slab_slice_count(4.0, 1.0), 5);
    }

    #[test]
    fn grid_aligned_plane_copies_slices() {
        let vol = ramp([9, 6, 5]);
        let plane = Plane::new(Vec3::new(1.0, 0.0, 0.0), 4.0).unwrap();
        let slab = resample_slab(&vol, &plane, 3.0, 1.0, Interpolation::Trilinear).unwrap();
        assert_eq!(slab.dims(), [3, 6, 5]);
        for s in 0..3 {
            for j in 0..6 {
                for k in 0..5 {
                    assert_eq!(slab.get(s, j, k), vol.get(3 + s, j, k));
                }
            }
        }
    }

    #[test]
    fn constant_stays_constant() {
        let vol = Volume::from_grid(
            [10, 10, 10],
            [1.0; 3],
            Vec3::zero(),
            DataType::F64,
            vec![3.5; 1000],
        )
        .unwrap();
        let plane =
            Plane::from_point_normal(Vec3::new(5.0, 5.0, 5.0), Vec3::new(1.0, 0.2, -0.1)).unwrap();
        let slab = resample_slab(&vol, &plane, 5.0, 0.8, Interpolation::Trilinear).unwrap();
        assert_eq!(slab.dims()[0], 7);
        // every sample that lands inside the source grid is the constant
        for (idx, &v) in slab.data().iter().enumerate() {
            let [i, j, k] = slab.coords(idx);
            let w = slab.voxel_to_world(Vec3::new(i as f64, j as f64, k as f64));
            let p = vol.world_to_voxel(w);
            let inside = [p.x, p.y, p.z].iter().all(|&c| (0.0..=9.0).contains(&c));
            if inside {
                assert!((v - 3.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn plane_outside_is_an_error() {
        let vol = ramp([4, 4, 4]);
        let plane = Plane::new(Vec3::new(1.0, 0.0, 0.0), 10.0).unwrap();
        let err = resample_slab(&vol, &plane, 5.0, 1.0, Interpolation::Nearest).unwrap_err();
        assert_eq!(err.to_string(), "plane misses volume");
    }

    #[test]
    fn slab_affine_reproduces_sample_positions() {
        let vol = ramp([8, 8, 8]);
        let plane =
            Plane::from_point_normal(Vec3::new(3.0, 4.0, 4.0), Vec3::new(0.9, 0.3, 0.1)).unwrap();
        let slab = resample_slab(&vol, &plane, 5.0, 1.0, Interpolation::Trilinear).unwrap();
        let centre = slab.voxel_to_world(Vec3::new(2.0, 0.0, 0.0));
        assert!(plane.signed_distance(centre).abs() < 1e-12);
        let off = slab.voxel_to_world(Vec3::new(4.0, 3.0, 1.0));
        assert!((plane.signed_distance(off) - 2.0).abs() < 1e-12);
    }
}
