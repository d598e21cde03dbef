use super::{Field2D, Mask2D};
use crate::linalg::Vec2;
use crate::{Error, Result, Scalar};

/// Separable Gaussian blur of a binary mask (σ in mm, kernel truncated at
/// 4σ, half-sample symmetric reflection at the borders), clamped to [0, 1].
pub fn smooth_mask<T: Scalar>(mask: &Mask2D, sigma_mm: T) -> Result<Field2D<T>> {
    if !(sigma_mm > T::zero()) || !sigma_mm.is_finite() {
        return Err(Error::invalid("smoothing sigma must be positive"));
    }
    let [nx, ny] = mask.dims();
    let px = mask.pixel_size();
    let mut data: Vec<T> = mask
        .data()
        .iter()
        .map(|&v| T::from_u8(v).unwrap())
        .collect();

    let kx = gaussian_kernel(sigma_mm / T::lit(px[0]));
    let ky = gaussian_kernel(sigma_mm / T::lit(px[1]));
    let mut tmp = vec![T::zero(); data.len()];
    for j in 0..ny {
        for i in 0..nx {
            tmp[i + nx * j] = convolve_at(&kx, i, nx, |ii| data[ii + nx * j]);
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            data[i + nx * j] = convolve_at(&ky, j, ny, |jj| tmp[i + nx * jj]);
        }
    }
    for v in &mut data {
        *v = v.max(T::zero()).min(T::one());
    }
    let o = mask.origin();
    Ok(Field2D {
        dims: [nx, ny],
        pixel_size: [T::lit(px[0]), T::lit(px[1])],
        origin: Vec2::new(T::lit(o.x), T::lit(o.y)),
        data,
    })
}

/// Normalised kernel with radius `ceil(4σ)` (σ in pixels).
fn gaussian_kernel<T: Scalar>(sigma_px: T) -> Vec<T> {
    let radius = (T::lit(4.0) * sigma_px)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let two_s2 = T::lit(2.0) * sigma_px * sigma_px;
    let mut k: Vec<T> = (0..=2 * radius)
        .map(|m| {
            let d = T::from_usize_lossy(m) - T::from_usize_lossy(radius);
            (-(d * d) / two_s2).exp()
        })
        .collect();
    let sum: T = k.iter().copied().sum();
    for w in &mut k {
        *w /= sum;
    }
    k
}

fn convolve_at<T: Scalar>(kernel: &[T], centre: usize, n: usize, get: impl Fn(usize) -> T) -> T {
    let radius = (kernel.len() - 1) / 2;
    let mut acc = T::zero();
    for (m, &w) in kernel.iter().enumerate() {
        if w == T::zero() {
            continue;
        }
        let idx = reflect(centre as isize + m as isize - radius as isize, n);
        acc += w * get(idx);
    }
    acc
}

/// Half-sample symmetric index reflection: `d c b a | a b c d | d c b a`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Adds a one-pixel ring of zeros, keeping world positions of existing
/// samples fixed.
pub fn pad_zero<T: Scalar>(field: &Field2D<T>) -> Field2D<T> {
    let [nx, ny] = field.dims;
    let (mx, my) = (nx + 2, ny + 2);
    let mut data = vec![T::zero(); mx * my];
    for j in 0..ny {
        for i in 0..nx {
            data[(i + 1) + mx * (j + 1)] = field.get(i, j);
        }
    }
    Field2D {
        dims: [mx, my],
        pixel_size: field.pixel_size,
        origin: field.origin - Vec2::new(field.pixel_size[0], field.pixel_size[1]),
        data,
    }
}
