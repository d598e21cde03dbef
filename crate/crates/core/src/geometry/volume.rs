use crate::linalg::{Mat4, Vec3};
use crate::{Error, Result};

/// On-disk voxel type. Values are held as `f64` in memory, which represents
/// every supported integer type exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataType {
    U8,
    I8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl DataType {
    pub fn nifti_code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::I32 => 8,
            DataType::F32 => 16,
            DataType::F64 => 64,
            DataType::I8 => 256,
            DataType::U16 => 512,
            DataType::U32 => 768,
        }
    }

    pub fn from_nifti_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            256 => DataType::I8,
            512 => DataType::U16,
            768 => DataType::U32,
            other => return Err(Error::UnsupportedType(other)),
        })
    }

    pub fn size_bytes(self) -> usize {
        match self {
            DataType::U8 | DataType::I8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::I32 | DataType::U32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, DataType::F32 | DataType::F64)
    }
}

/// A 3D image on a regular grid with a voxel-to-world (RAS, mm) affine.
///
/// Data is stored x-fastest: `data[i + nx * (j + ny * k)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    voxel_size: [f64; 3],
    affine: Mat4<f64>,
    inverse: Mat4<f64>,
    datatype: DataType,
    data: Vec<f64>,
}

impl Volume {
    pub fn new(
        dims: [usize; 3],
        voxel_size: [f64; 3],
        affine: Mat4<f64>,
        datatype: DataType,
        data: Vec<f64>,
    ) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid(format!(
                "volume dims must be positive, got {dims:?}"
            )));
        }
        if voxel_size.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "voxel sizes must be positive, got {voxel_size:?}"
            )));
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::invalid(format!(
                "data length {} does not match dims {dims:?}",
                data.len()
            )));
        }
        let inverse = affine.inverse().ok_or(Error::SingularAffine)?;
        if datatype.is_integer() && data.iter().any(|v| v.fract() != 0.0) {
            return Err(Error::invalid("integer volume holds non-integer values"));
        }
        Ok(Self {
            dims,
            voxel_size,
            affine,
            inverse,
            datatype,
            data,
        })
    }

    /// Volume whose affine is a pure scaling by `voxel_size` followed by `origin`.
    pub fn from_grid(
        dims: [usize; 3],
        voxel_size: [f64; 3],
        origin: Vec3<f64>,
        datatype: DataType,
        data: Vec<f64>,
    ) -> Result<Self> {
        let mut a = Mat4::identity();
        for i in 0..3 {
            a.m[i][i] = voxel_size[i];
        }
        a.m[0][3] = origin.x;
        a.m[1][3] = origin.y;
        a.m[2][3] = origin.z;
        Self::new(dims, voxel_size, a, datatype, data)
    }

    pub fn zeros(dims: [usize; 3], voxel_size: [f64; 3], datatype: DataType) -> Result<Self> {
        let n = dims.iter().product();
        Self::from_grid(dims, voxel_size, Vec3::zero(), datatype, vec![0.0; n])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.voxel_size
    }

    pub fn affine(&self) -> &Mat4<f64> {
        &self.affine
    }

    pub fn inverse_affine(&self) -> &Mat4<f64> {
        &self.inverse
    }

    pub fn datatype(&self) -> DataType {
        self.datatype
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(i, j, k);
        self.data[idx] = v;
    }

    /// Inverse of [`Volume::index`].
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// World position (mm) of a continuous voxel coordinate.
    pub fn voxel_to_world(&self, p: Vec3<f64>) -> Vec3<f64> {
        self.affine.transform_point(p)
    }

    pub fn world_to_voxel(&self, p: Vec3<f64>) -> Vec3<f64> {
        self.inverse.transform_point(p)
    }

    /// True when all values are non-negative integers.
    pub fn is_label_map(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0 && v.fract() == 0.0)
    }

    pub fn require_labels(&self) -> Result<()> {
        if self.is_label_map() {
            Ok(())
        } else {
            Err(Error::invalid(
                "expected a label volume of non-negative integers",
            ))
        }
    }

    /// World positions of the eight corner voxel centres.
    pub fn corner_centres(&self) -> [Vec3<f64>; 8] {
        let mut out = [Vec3::zero(); 8];
        for (c, o) in out.iter_mut().enumerate() {
            let idx = |bit: usize, axis: usize| {
                if c & bit != 0 {
                    (self.dims[axis] - 1) as f64
                } else {
                    0.0
                }
            };
            *o = self.voxel_to_world(Vec3::new(idx(1, 0), idx(2, 1), idx(4, 2)));
        }
        out
    }

    /// Copy with the same grid and new values.
    pub fn with_data(&self, datatype: DataType, data: Vec<f64>) -> Result<Self> {
        Self::new(self.dims, self.voxel_size, self.affine, datatype, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_singular_affine() {
        let mut a = Mat4::identity();
        a.m[1][1] = 0.0;
        let err = Volume::new([2, 2, 2], [1.0; 3], a, DataType::U8, vec![0.0; 8]).unwrap_err();
        assert_eq!(err.to_string(), "singular affine");
    }

    #[test]
    fn index_coords_roundtrip() {
        let v = Volume::zeros([3, 4, 5], [1.0; 3], DataType::U8).unwrap();
        for idx in 0..v.len() {
            let [i, j, k] = v.coords(idx);
            assert_eq!(v.index(i, j, k), idx);
        }
    }

    #[test]
    fn rejects_fractional_labels() {
        assert!(Volume::from_grid(
            [1, 1, 2],
            [1.0; 3],
            Vec3::zero(),
            DataType::I16,
            vec![1.0, 1.5]
        )
        .is_err());
    }
}
