//! Synthetic shapes with known geometry, used by tests, examples and the
//! acceptance suite.
//!
//! Contours are counter-clockwise with the anterior end at +x and superior
//! at +y, matching the in-plane frame of the slab resampler.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{DataType, Landmarks, Plane, Volume};
use crate::linalg::{Vec2, Vec3};
use crate::mesh::{Mask2D, Polyline};
use crate::morphometry::InPlaneLandmarks;
use crate::stats::{Group, GroupRow, GroupTable};

/// Axis-aligned `w × h` rectangle centred at the origin, starting at the
/// anterior short-edge midpoint. Long edges are split into `long_segments`
/// pieces.
pub fn rectangle(w: f64, h: f64, long_segments: usize) -> Polyline<f64> {
    let (a, b) = (w / 2.0, h / 2.0);
    let k = long_segments.max(1);
    let mut pts = vec![Vec2::new(a, 0.0), Vec2::new(a, b)];
    for i in 1..k {
        pts.push(Vec2::new(a - w * i as f64 / k as f64, b));
    }
    pts.extend([Vec2::new(-a, b), Vec2::new(-a, 0.0), Vec2::new(-a, -b)]);
    for i in 1..k {
        pts.push(Vec2::new(-a + w * i as f64 / k as f64, -b));
    }
    pts.push(Vec2::new(a, -b));
    Polyline::closed(pts)
}

/// Landmarks just beyond the two short edges of [`rectangle`].
pub fn rectangle_landmarks(w: f64) -> InPlaneLandmarks<f64> {
    in_plane_landmarks(
        Vec2::new(w / 2.0 + 1.0, 0.0),
        Vec2::new(-w / 2.0 - 1.0, 0.0),
    )
}

/// Upper half of the annulus `r_in ≤ r ≤ r_out`. The outer arc runs from
/// angle 0 to π with `n_arc` segments, then the posterior tip, the inner arc
/// back, and the anterior tip; each tip has `n_tip` segments.
pub fn half_annulus(r_in: f64, r_out: f64, n_arc: usize, n_tip: usize) -> Polyline<f64> {
    let n_tip = n_tip.max(1);
    let mut pts = Vec::new();
    for i in 0..n_arc {
        let t = PI * i as f64 / n_arc as f64;
        pts.push(Vec2::new(r_out * t.cos(), r_out * t.sin()));
    }
    for i in 0..n_tip {
        let r = r_out - (r_out - r_in) * i as f64 / n_tip as f64;
        pts.push(Vec2::new(-r, 0.0));
    }
    for i in 0..n_arc {
        let t = PI * (1.0 - i as f64 / n_arc as f64);
        pts.push(Vec2::new(r_in * t.cos(), r_in * t.sin()));
    }
    for i in 0..n_tip {
        let r = r_in + (r_out - r_in) * i as f64 / n_tip as f64;
        pts.push(Vec2::new(r, 0.0));
    }
    Polyline::closed(pts)
}

/// AC below the anterior tip midpoint, PC below the posterior one.
pub fn half_annulus_landmarks(r_in: f64, r_out: f64) -> InPlaneLandmarks<f64> {
    let m = (r_in + r_out) / 2.0;
    in_plane_landmarks(Vec2::new(m, -1.0), Vec2::new(-m, -1.0))
}

/// Regular `n`-gon inscribed in the circle of radius `r`.
pub fn disc(r: f64, n: usize) -> Polyline<f64> {
    Polyline::closed(
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect(),
    )
}

pub fn in_plane_landmarks(ac: Vec2<f64>, pc: Vec2<f64>) -> InPlaneLandmarks<f64> {
    InPlaneLandmarks { ac, pc }
}

/// Rasterises a polygon by testing pixel centres (even-odd rule).
pub fn polygon_mask(
    poly: &Polyline<f64>,
    dims: [usize; 2],
    pixel_size: [f64; 2],
    origin: Vec2<f64>,
) -> Mask2D {
    Mask2D::from_fn(dims, pixel_size, origin, |p| {
        point_in_polygon(&poly.points, p)
    })
}

pub fn point_in_polygon(pts: &[Vec2<f64>], p: Vec2<f64>) -> bool {
    let n = pts.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Disc mask of radius `r` pixels centred in a square image.
pub fn disc_mask(r: f64, size: usize) -> Mask2D {
    let c = (size as f64 - 1.0) / 2.0;
    Mask2D::from_fn([size, size], [1.0, 1.0], Vec2::zero(), |p| {
        (p.x - c).powi(2) + (p.y - c).powi(2) <= r * r
    })
}

/// C-shaped band resembling a mid-sagittal corpus callosum: an elliptic arc
/// of half-axes `(a, b)` mm and `thickness` mm, opening inferiorly, centred
/// at `centre`. Anterior is +x.
pub fn callosum_like(
    centre: Vec2<f64>,
    a: f64,
    b: f64,
    thickness: f64,
) -> impl Fn(Vec2<f64>) -> bool {
    move |p: Vec2<f64>| {
        let d = p - centre;
        let outer = (d.x / (a + thickness / 2.0)).powi(2) + (d.y / (b + thickness / 2.0)).powi(2);
        let inner = (d.x / (a - thickness / 2.0)).powi(2) + (d.y / (b - thickness / 2.0)).powi(2);
        // keep the band above a line slightly below the centre, with a
        // thicker anterior bulb
        let band = outer <= 1.0 && inner >= 1.0 && d.y >= -0.35 * b;
        let genu = (d - Vec2::new(a * 0.85, -0.2 * b)).norm() <= thickness * 0.9;
        band || genu
    }
}

/// Label volume of a synthetic head with its landmarks and mid-sagittal
/// plane.
#[derive(Clone, Debug)]
pub struct PhantomCase {
    pub labels: Volume,
    pub landmarks: Landmarks<f64>,
    pub plane: Plane<f64>,
}

/// Extra labels placed as small cubes so that centroid registration has
/// non-collinear correspondences.
pub const PHANTOM_MARKER_LABELS: [u32; 4] = [2, 3, 4, 5];

/// `dims = [nx, ny, nz]` grid of 1 mm voxels (x left-right, y anterior,
/// z superior). Every sagittal slice holds the [`callosum_like`] band
/// labelled `cc_label`, sized to the y-z extent; AC and PC sit below its
/// anterior and posterior ends on the central slice, and the mid-sagittal
/// plane is `x = (nx − 1) / 2`.
pub fn callosum_case(dims: [usize; 3], cc_label: u32) -> PhantomCase {
    let [nx, ny, nz] = dims;
    let xc = (nx as f64 - 1.0) / 2.0;
    let centre = Vec2::new(ny as f64 / 2.0, nz as f64 / 2.0);
    let a = 0.14 * ny as f64;
    let b = 0.08 * nz as f64;
    let band = callosum_like(centre, a, b, 0.3 * b);
    let markers = [
        (Vec3::new(0.2, 0.25, 0.3), PHANTOM_MARKER_LABELS[0]),
        (Vec3::new(0.8, 0.25, 0.3), PHANTOM_MARKER_LABELS[1]),
        (Vec3::new(0.5, 0.8, 0.35), PHANTOM_MARKER_LABELS[2]),
        (Vec3::new(0.5, 0.3, 0.85), PHANTOM_MARKER_LABELS[3]),
    ];
    let mut data = vec![0.0; nx * ny * nz];
    for k in 0..nz {
        for j in 0..ny {
            if band(Vec2::new(j as f64, k as f64)) {
                for i in 0..nx {
                    data[i + nx * (j + ny * k)] = f64::from(cc_label);
                }
            }
        }
    }
    for (rel, label) in markers {
        let c = [
            rel.x * (nx - 1) as f64,
            rel.y * (ny - 1) as f64,
            rel.z * (nz - 1) as f64,
        ];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let d = [i as f64 - c[0], j as f64 - c[1], k as f64 - c[2]];
                    if d.iter().all(|x| x.abs() <= 1.0) {
                        data[i + nx * (j + ny * k)] = f64::from(label);
                    }
                }
            }
        }
    }
    let labels = Volume::from_grid(dims, [1.0; 3], Vec3::zero(), DataType::U8, data)
        .expect("phantom grid is valid");
    let ac = centre + Vec2::new(0.85 * a, -0.6 * b);
    let pc = centre + Vec2::new(-a, -0.6 * b);
    PhantomCase {
        labels,
        landmarks: Landmarks::new(Vec3::new(xc, ac.x, ac.y), Vec3::new(xc, pc.x, pc.y))
            .expect("distinct landmarks"),
        plane: Plane::new(Vec3::new(1.0, 0.0, 0.0), xc).expect("unit normal"),
    }
}

/// Parameters of a synthetic two-group thickness study.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticStudy {
    pub seed: u64,
    pub per_group: usize,
    pub positions: usize,
    /// Inclusive position range where patients are thinner.
    pub band: (usize, usize),
    /// Relative thickness loss of patients inside `band`.
    pub deficit: f64,
    /// Standard deviation (positions) of the Gaussian kernel that smooths
    /// each subject's profile noise; 0 gives independent noise.
    pub smoothing: f64,
}

impl Default for SyntheticStudy {
    fn default() -> Self {
        Self {
            seed: 1,
            per_group: 100,
            positions: 100,
            band: (40, 60),
            deficit: 0.2,
            smoothing: 2.0,
        }
    }
}

/// Group table of thickness profiles: a smooth mean profile (thick genu and
/// splenium), linear covariate effects, a per-subject offset and smooth
/// per-subject noise. Patients come first.
pub fn synthetic_group_table(study: &SyntheticStudy) -> GroupTable {
    let mut rng = ChaCha8Rng::seed_from_u64(study.seed);
    let white = Normal::new(0.0, 0.4).expect("valid normal");
    let offset = Normal::new(0.0, 0.2).expect("valid normal");
    let n = study.positions;
    let kernel: Vec<f64> = if study.smoothing > 0.0 {
        let r = (3.0 * study.smoothing).ceil() as i64;
        (-r..=r)
            .map(|k| (-(k as f64).powi(2) / (2.0 * study.smoothing.powi(2))).exp())
            .collect()
    } else {
        vec![1.0]
    };
    let r = (kernel.len() / 2) as i64;
    let mut rows = Vec::with_capacity(2 * study.per_group);
    for i in 0..2 * study.per_group {
        let group = if i < study.per_group {
            Group::Patient
        } else {
            Group::Control
        };
        let age: f64 = rng.gen_range(20.0..80.0);
        let sex = f64::from(rng.gen_range(0..2u8));
        let tbv: f64 = rng.gen_range(1.0e6..1.6e6);
        let shift = offset.sample(&mut rng);
        let eps: Vec<f64> = (0..n).map(|_| white.sample(&mut rng)).collect();
        let values = (0..n)
            .map(|p| {
                let (mut acc, mut wsum) = (0.0, 0.0);
                for (k, w) in kernel.iter().enumerate() {
                    let q = p as i64 + k as i64 - r;
                    if (0..n as i64).contains(&q) {
                        acc += w * eps[q as usize];
                        wsum += w;
                    }
                }
                let x = (p as f64 + 0.5) / n as f64;
                let mean = 3.0 + 1.5 * (2.0 * PI * x).cos().powi(2);
                let covariates = -0.005 * (age - 50.0) + 0.1 * sex + 2e-7 * (tbv - 1.3e6);
                let thinner = group == Group::Patient && (study.band.0..=study.band.1).contains(&p);
                let scale = if thinner { 1.0 - study.deficit } else { 1.0 };
                Some((mean + covariates + shift) * scale + acc / wsum)
            })
            .collect();
        rows.push(GroupRow {
            case_id: format!("case{i:03}"),
            group,
            age,
            sex,
            total_brain_volume: tbv,
            values,
        });
    }
    GroupTable::new((0..n).map(|p| format!("t{p:03}")).collect(), rows)
        .expect("synthetic table is well formed")
}
