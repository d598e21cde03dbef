use serde::{Deserialize, Serialize};

use crate::geometry::Volume;
use crate::{Error, Result};

/// Binary mask on a regular 3D grid, x-fastest like [`Volume`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mask3D {
    dims: [usize; 3],
    voxel_size: [f64; 3],
    data: Vec<bool>,
}

impl Mask3D {
    pub fn new(dims: [usize; 3], voxel_size: [f64; 3], data: Vec<bool>) -> Result<Self> {
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::invalid("mask data length does not match dims"));
        }
        if voxel_size.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("voxel sizes must be positive"));
        }
        Ok(Self {
            dims,
            voxel_size,
            data,
        })
    }

    /// Voxels whose value is one of `labels`, or non-zero when `labels` is
    /// `None`.
    pub fn from_volume(vol: &Volume, labels: Option<&[u32]>) -> Self {
        let data = vol
            .data()
            .iter()
            .map(|&v| match labels {
                Some(ls) => v >= 0.0 && v.fract() == 0.0 && ls.contains(&(v as u32)),
                None => v != 0.0,
            })
            .collect();
        Self {
            dims: vol.dims(),
            voxel_size: vol.voxel_size(),
            data,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.voxel_size
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.data[self.index(i, j, k)]
    }

    /// Foreground voxels with a background (or out-of-grid) face neighbour.
    pub fn boundary(&self) -> Vec<[usize; 3]> {
        let [nx, ny, nz] = self.dims;
        let mut out = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if !self.get(i, j, k) {
                        continue;
                    }
                    let exposed = i == 0
                        || j == 0
                        || k == 0
                        || i + 1 == nx
                        || j + 1 == ny
                        || k + 1 == nz
                        || !self.get(i - 1, j, k)
                        || !self.get(i + 1, j, k)
                        || !self.get(i, j - 1, k)
                        || !self.get(i, j + 1, k)
                        || !self.get(i, j, k - 1)
                        || !self.get(i, j, k + 1);
                    if exposed {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims || self.voxel_size != other.voxel_size {
            return Err(Error::invalid("masks must share dims and voxel size"));
        }
        Ok(())
    }
}

/// Dice overlap `2|X∩Y| / (|X|+|Y|)`. Two empty masks count as a perfect
/// match (logged).
pub fn dice(x: &Mask3D, y: &Mask3D) -> Result<f64> {
    x.same_grid(y)?;
    let both = x
        .data
        .iter()
        .zip(&y.data)
        .filter(|(a, b)| **a && **b)
        .count();
    let total = x.count() + y.count();
    if total == 0 {
        log::warn!("dice of two empty masks defined as 1");
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / total as f64)
}

/// How directed boundary distances are reduced to one number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hd95Variant {
    /// One 95th percentile of both directions' distances pooled.
    #[default]
    Pooled,
    /// Larger of the two directed 95th percentiles.
    MaxDirected,
}

/// 95th-percentile symmetric boundary distance (mm).
pub fn hausdorff95(x: &Mask3D, y: &Mask3D) -> Result<f64> {
    hausdorff95_with(x, y, Hd95Variant::Pooled)
}

pub fn hausdorff95_with(x: &Mask3D, y: &Mask3D, variant: Hd95Variant) -> Result<f64> {
    x.same_grid(y)?;
    if x.count() == 0 || y.count() == 0 {
        return Err(Error::EmptyMask);
    }
    let (bx, by) = (x.boundary(), y.boundary());
    let dx = distance_map(x.dims, x.voxel_size, &by);
    let dy = distance_map(y.dims, y.voxel_size, &bx);
    let mut xy: Vec<f64> = bx
        .iter()
        .map(|&[i, j, k]| dx[x.index(i, j, k)].sqrt())
        .collect();
    let mut yx: Vec<f64> = by
        .iter()
        .map(|&[i, j, k]| dy[y.index(i, j, k)].sqrt())
        .collect();
    Ok(match variant {
        Hd95Variant::Pooled => {
            xy.append(&mut yx);
            quantile(&mut xy, 0.95)
        }
        Hd95Variant::MaxDirected => quantile(&mut xy, 0.95).max(quantile(&mut yx, 0.95)),
    })
}

/// Linearly interpolated quantile (`h = (n − 1) q`); sorts `v` in place.
pub fn quantile(v: &mut [f64], q: f64) -> f64 {
    assert!(!v.is_empty(), "quantile of an empty sample");
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Squared Euclidean distance (mm²) from every voxel to the nearest seed,
/// by separable lower envelopes of parabolas.
fn distance_map(dims: [usize; 3], spacing: [f64; 3], seeds: &[[usize; 3]]) -> Vec<f64> {
    let n: usize = dims.iter().product();
    let mut d = vec![f64::INFINITY; n];
    for &[i, j, k] in seeds {
        d[i + dims[0] * (j + dims[1] * k)] = 0.0;
    }
    let stride = [1, dims[0], dims[0] * dims[1]];
    let mut line = Vec::new();
    let mut out = Vec::new();
    for axis in 0..3 {
        let len = dims[axis];
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for u in 0..dims[a] {
            for w in 0..dims[b] {
                let base = u * stride[a] + w * stride[b];
                line.clear();
                line.extend((0..len).map(|t| d[base + t * stride[axis]]));
                envelope(&line, spacing[axis], &mut out);
                for t in 0..len {
                    d[base + t * stride[axis]] = out[t];
                }
            }
        }
    }
    d
}

/// `out[p] = min_q (s (p − q))² + f[q]`.
fn envelope(f: &[f64], s: f64, out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k: isize = -1;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        let xq = q as f64 * s;
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let xp = p as f64 * s;
            let cross = ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
            if cross <= z[k as usize] {
                k -= 1;
            } else {
                k += 1;
                v[k as usize] = q;
                z[k as usize] = cross;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if k < 0 {
        return;
    }
    let mut j = 0usize;
    for (p, o) in out.iter_mut().enumerate() {
        let xp = p as f64 * s;
        while z[j + 1] < xp {
            j += 1;
        }
        let xq = v[j] as f64 * s;
        *o = (xp - xq) * (xp - xq) + f[v[j]];
    }
}
