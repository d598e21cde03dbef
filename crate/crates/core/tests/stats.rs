use ccmorph::phantom::{self, SyntheticStudy};
use ccmorph::stats::{
    bh_correct, hausdorff95, ols_fit, thickness_group_map, Group, GroupRow, GroupTable, Mask3D,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Mask3D {
    // a few random balls, so the masks have real boundaries
    let mut data = vec![false; n * n * n];
    for _ in 0..3 {
        let c = [
            rng.gen_range(0.0..n as f64),
            rng.gen_range(0.0..n as f64),
            rng.gen_range(0.0..n as f64),
        ];
        let r: f64 = rng.gen_range(2.0..6.0);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let d2 = (i as f64 - c[0]).powi(2)
                        + (j as f64 - c[1]).powi(2)
                        + (k as f64 - c[2]).powi(2);
                    if d2 <= r * r {
                        data[i + n * (j + n * k)] = true;
                    }
                }
            }
        }
    }
    Mask3D::new([n, n, n], [1.0; 3], data).unwrap()
}

fn oracle_boundary(m: &Mask3D) -> Vec<[i64; 3]> {
    let [nx, ny, nz] = m.dims().map(|d| d as i64);
    let on = |i: i64, j: i64, k: i64| {
        i >= 0
            && j >= 0
            && k >= 0
            && i < nx
            && j < ny
            && k < nz
            && m.get(i as usize, j as usize, k as usize)
    };
    let mut out = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if on(i, j, k)
                    && [
                        (1, 0, 0),
                        (-1, 0, 0),
                        (0, 1, 0),
                        (0, -1, 0),
                        (0, 0, 1),
                        (0, 0, -1),
                    ]
                    .iter()
                    .any(|&(a, b, c)| !on(i + a, j + b, k + c))
                {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

fn oracle_hd95(x: &Mask3D, y: &Mask3D) -> f64 {
    let (bx, by) = (oracle_boundary(x), oracle_boundary(y));
    let nearest = |p: &[i64; 3], set: &[[i64; 3]]| {
        set.iter()
            .map(|q| ((p[0] - q[0]).pow(2) + (p[1] - q[1]).pow(2) + (p[2] - q[2]).pow(2)) as f64)
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    };
    let mut d: Vec<f64> = bx.iter().map(|p| nearest(p, &by)).collect();
    d.extend(by.iter().map(|p| nearest(p, &bx)));
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = 0.95 * (d.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(d.len() - 1);
    d[lo] + (h - lo as f64) * (d[hi] - d[lo])
}

#[test]
fn hd95_matches_all_pairs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let x = random_mask(&mut rng, 16);
        let y = random_mask(&mut rng, 16);
        if x.count() == 0 || y.count() == 0 {
            continue;
        }
        assert_eq!(hausdorff95(&x, &y).unwrap(), oracle_hd95(&x, &y));
        assert_eq!(hausdorff95(&x, &y).unwrap(), hausdorff95(&y, &x).unwrap());
    }
}

/// Student-t CDF with 4 degrees of freedom in closed form.
fn t4_cdf(t: f64) -> f64 {
    let q = 1.0 + t * t / 4.0;
    0.5 + 0.375 * (t / q.sqrt()) * (1.0 - t * t / (12.0 * q))
}

#[test]
fn six_row_regression_by_hand() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let y = [1.1, 1.9, 3.2, 3.8, 5.3, 5.7];
    // normal equations for a straight line
    let (xm, ym) = (3.5, 3.5);
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let b1 = sxy / sxx;
    let b0 = ym - b1 * xm;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - b0 - b1 * a).powi(2))
        .sum();
    let s2 = rss / 4.0;
    let se1 = (s2 / sxx).sqrt();
    let se0 = (s2 * (1.0 / 6.0 + xm * xm / sxx)).sqrt();
    let p = |t: f64| 2.0 * (1.0 - t4_cdf(t.abs()));

    let design: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    let fit = ols_fit(&y, &design).unwrap();
    assert!((b1 - 0.965_714_285_714).abs() < 1e-9);
    assert!((fit.beta[0] - b0).abs() < 1e-9 && (fit.beta[1] - b1).abs() < 1e-9);
    assert!((fit.std_err[0] - se0).abs() < 1e-9 && (fit.std_err[1] - se1).abs() < 1e-9);
    assert!((fit.p_value[0] - p(b0 / se0)).abs() < 1e-6);
    assert!((fit.p_value[1] - p(b1 / se1)).abs() < 1e-6);
    for col in 0..2 {
        let dot: f64 = fit
            .residuals
            .iter()
            .zip(&design)
            .map(|(r, row)| r * row[col])
            .sum();
        assert!(dot.abs() < 1e-9);
    }
}

fn synthetic_table(
    seed: u64,
    per_group: usize,
    positions: usize,
    deficit: impl Fn(usize) -> f64,
) -> GroupTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut rows = Vec::new();
    for i in 0..2 * per_group {
        let group = if i < per_group {
            Group::Patient
        } else {
            Group::Control
        };
        let age: f64 = rng.gen_range(20.0..80.0);
        let sex = f64::from(rng.gen_range(0..2u8));
        let tbv: f64 = rng.gen_range(1.0e6..1.6e6);
        let values = (0..positions)
            .map(|p| {
                let base = 3.0 - 0.005 * (age - 50.0) + 0.1 * sex + 2e-7 * (tbv - 1.3e6);
                let scale = if group == Group::Patient {
                    1.0 - deficit(p)
                } else {
                    1.0
                };
                Some(base * scale + noise.sample(&mut rng))
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
    GroupTable::new((0..positions).map(|p| format!("t{p:03}")).collect(), rows).unwrap()
}

#[test]
fn null_groups_give_few_discoveries() {
    let t = synthetic_table(11, 60, 100, |_| 0.0);
    let map = thickness_group_map(&t).unwrap();
    let raw = map.iter().filter(|s| s.p < 0.05).count();
    let adj = map.iter().filter(|s| s.p_adj < 0.05).count();
    assert!((1..=10).contains(&raw), "{raw} raw discoveries");
    assert!(adj <= 1, "{adj} adjusted discoveries");
}

#[test]
fn injected_deficit_is_recovered() {
    // BH bounds the expected share of false discoveries, it does not rule
    // them out; allow at most one outside the band margin
    let t = phantom::synthetic_group_table(&SyntheticStudy {
        seed: 5,
        ..Default::default()
    });
    let map = thickness_group_map(&t).unwrap();
    let mut outside = 0;
    for s in &map {
        let sig = s.p_adj < 0.05;
        if (40..=60).contains(&s.position) {
            assert!(sig, "position {} missed", s.position);
            assert!(s.beta < 0.0);
        } else if !(38..=62).contains(&s.position) && sig {
            outside += 1;
        }
    }
    assert!(outside <= 1, "{outside} discoveries outside the band");
}

#[test]
fn constant_thickness_has_no_effect() {
    let mut t = synthetic_table(13, 10, 5, |_| 0.0);
    for r in &mut t.rows {
        r.values = vec![Some(2.5); 5];
    }
    for s in thickness_group_map(&t).unwrap() {
        assert!(s.beta.abs() < 1e-12);
    }
}

#[test]
fn missing_values_are_dropped_per_position() {
    let mut t = synthetic_table(14, 10, 3, |_| 0.0);
    t.rows[0].values[1] = None;
    t.rows[15].values[1] = None;
    let map = thickness_group_map(&t).unwrap();
    assert_eq!(
        map.iter().map(|s| s.n).collect::<Vec<_>>(),
        vec![20, 18, 20]
    );
    let csv = t.to_csv().unwrap();
    let back = GroupTable::from_csv(csv.as_bytes()).unwrap();
    assert_eq!(back.rows[0].values[1], None);
    assert_eq!(back.rows.len(), 20);
}

#[test]
fn bh_is_monotone_and_dominates() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p: Vec<f64> = (0..50).map(|_| rng.gen::<f64>().powi(3)).collect();
    let adj = bh_correct(&p);
    let mut idx: Vec<usize> = (0..50).collect();
    idx.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap());
    for w in idx.windows(2) {
        assert!(adj[w[0]] <= adj[w[1]]);
    }
    assert!(p.iter().zip(&adj).all(|(a, b)| b >= a && *b <= 1.0));
}
