use std::collections::BTreeMap;

use super::{polygon_signed_area, Field2D, Polyline};
use crate::linalg::Vec2;
use crate::{Error, Result, Scalar};

/// Grid edge holding a crossing: horizontal from node `(i, j)` to
/// `(i + 1, j)`, or vertical from `(i, j)` to `(i, j + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

/// Marching-squares iso-contour enclosing the largest area, counter-clockwise,
/// in mm. Values strictly above `iso` count as inside.
///
/// Saddle cells are resolved by the cell-centre average. Pad the field with
/// [`super::pad_zero`] first if the foreground touches the border.
pub fn extract_contour<T: Scalar>(field: &Field2D<T>, iso: T) -> Result<Polyline<T>> {
    let loops = extract_contours(field, iso)?;
    let best = loops
        .into_iter()
        .map(|l| (polygon_signed_area(&l).abs(), l))
        .fold(None::<(T, Vec<Vec2<T>>)>, |acc, (a, l)| match acc {
            Some((b, _)) if b >= a => acc,
            _ => Some((a, l)),
        })
        .map(|(_, l)| l)
        .ok_or(Error::EmptyContour)?;
    let mut pts = best;
    if polygon_signed_area(&pts) < T::zero() {
        pts.reverse();
    }
    Ok(Polyline::closed(pts))
}

/// All closed iso-contours; outer boundaries are counter-clockwise, holes
/// clockwise.
pub fn extract_contours<T: Scalar>(field: &Field2D<T>, iso: T) -> Result<Vec<Vec<Vec2<T>>>> {
    let [nx, ny] = field.dims;
    if nx < 2 || ny < 2 {
        return Err(Error::EmptyContour);
    }
    let inside = |i: usize, j: usize| field.get(i, j) > iso;

    let mut next: BTreeMap<EdgeKey, EdgeKey> = BTreeMap::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let corner = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let ins = corner.map(|(a, b)| inside(a, b));
            if ins.iter().all(|&b| b) || ins.iter().all(|&b| !b) {
                continue;
            }
            let edges = [
                EdgeKey::H(i, j),
                EdgeKey::V(i + 1, j),
                EdgeKey::H(i, j + 1),
                EdgeKey::V(i, j),
            ];
            // crossings in counter-clockwise order around the cell
            let mut cross: Vec<(usize, bool)> = Vec::with_capacity(4);
            for k in 0..4 {
                if ins[k] != ins[(k + 1) % 4] {
                    cross.push((k, ins[(k + 1) % 4]));
                }
            }
            let centre_inside = if cross.len() == 4 {
                let mean = corner.iter().map(|&(a, b)| field.get(a, b)).sum::<T>() / T::lit(4.0);
                mean > iso
            } else {
                false
            };
            let m = cross.len();
            for (c, &(k, is_entry)) in cross.iter().enumerate() {
                if is_entry {
                    continue;
                }
                // inside is on the left when walking exit -> entry
                let partner = if centre_inside {
                    cross[(c + 1) % m]
                } else {
                    cross[(c + m - 1) % m]
                };
                debug_assert!(partner.1);
                next.insert(edges[k], edges[partner.0]);
            }
        }
    }
    if next.is_empty() {
        return Err(Error::EmptyContour);
    }

    let point = |e: EdgeKey| -> Vec2<T> {
        let (a, b) = match e {
            EdgeKey::H(i, j) => ((i, j), (i + 1, j)),
            EdgeKey::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (fa, fb) = (field.get(a.0, a.1), field.get(b.0, b.1));
        let t = (iso - fa) / (fb - fa);
        let pa = field.position(T::from_usize_lossy(a.0), T::from_usize_lossy(a.1));
        let pb = field.position(T::from_usize_lossy(b.0), T::from_usize_lossy(b.1));
        pa.lerp(pb, t)
    };

    let mut loops = Vec::new();
    let mut remaining = next.clone();
    while let Some((&start, _)) = remaining.iter().next() {
        let mut keys = vec![start];
        let mut cur = remaining.remove(&start).unwrap();
        while cur != start {
            keys.push(cur);
            cur = remaining.remove(&cur).ok_or(Error::ContourNotClosed)?;
        }
        let mut pts: Vec<Vec2<T>> = Vec::with_capacity(keys.len());
        for k in keys {
            let p = point(k);
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() >= 3 {
            loops.push(pts);
        }
    }
    if loops.is_empty() {
        return Err(Error::EmptyContour);
    }
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Field2D<f64> {
        let mut data = vec![];
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i as f64, j as f64));
            }
        }
        Field2D {
            dims: [nx, ny],
            pixel_size: [1.0, 1.0],
            origin: Vec2::zero(),
            data,
        }
    }

    #[test]
    fn single_pixel_diamond() {
        let f = field(3, 3, |x, y| if x == 1.0 && y == 1.0 { 1.0 } else { 0.0 });
        let c = extract_contour(&f, 0.5).unwrap();
        assert_eq!(c.len(), 4);
        assert!((c.signed_area() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn below_iso_everywhere_is_empty() {
        let f = field(4, 4, |_, _| 0.1);
        assert!(matches!(extract_contour(&f, 0.5), Err(Error::EmptyContour)));
    }

    #[test]
    fn touching_border_is_not_closed() {
        let f = field(4, 4, |x, _| if x < 2.0 { 1.0 } else { 0.0 });
        assert!(matches!(
            extract_contour(&f, 0.5),
            Err(Error::ContourNotClosed)
        ));
    }

    #[test]
    fn saddle_resolution_by_centre() {
        // diagonal pair of inside corners, centre below iso: two diamonds
        let f = field(4, 4, |x, y| {
            if (x, y) == (1.0, 1.0) || (x, y) == (2.0, 2.0) {
                1.0
            } else {
                0.0
            }
        });
        assert_eq!(extract_contours(&f, 0.5).unwrap().len(), 2);
        // centre above iso joins them
        let f = field(4, 4, |x, y| match (x, y) {
            (1.0, 1.0) | (2.0, 2.0) => 1.0,
            (1.0, 2.0) | (2.0, 1.0) => 0.45,
            _ => 0.0,
        });
        assert_eq!(extract_contours(&f, 0.5).unwrap().len(), 1);
    }
}
