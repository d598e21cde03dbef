use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Samples with `n + m` at most this size are tested by full enumeration.
pub const EXACT_LIMIT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankSum {
    /// Sum of the (mid)ranks of the first sample.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Wilcoxon rank-sum test with midranks for ties.
///
/// Small samples are tested exactly by enumerating every assignment of the
/// pooled ranks; larger ones use the normal approximation with tie and
/// continuity corrections.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<RankSum> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::InsufficientData(
            "rank-sum test needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::invalid("rank-sum samples must be finite"));
    }
    let ranks = midranks(a.iter().chain(b).copied().collect());
    let w: f64 = ranks[..n].iter().sum();
    let total = (n + m) as f64;
    let mean = n as f64 * (total + 1.0) / 2.0;
    let dev = (w - mean).abs();

    if n + m <= EXACT_LIMIT {
        let mut extreme = 0u64;
        let mut count = 0u64;
        // every n-subset of positions, as a bitmask over n + m slots
        for mask in 0u32..(1u32 << (n + m)) {
            if mask.count_ones() as usize != n {
                continue;
            }
            let s: f64 = (0..n + m)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            count += 1;
            if (s - mean).abs() >= dev - 1e-9 {
                extreme += 1;
            }
        }
        return Ok(RankSum {
            statistic: w,
            p_value: extreme as f64 / count as f64,
            exact: true,
        });
    }

    let ties = tie_sum(a.iter().chain(b).copied().collect());
    let var = n as f64 * m as f64 / 12.0 * ((total + 1.0) - ties / (total * (total - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = (dev - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(RankSum {
        statistic: w,
        p_value: p,
        exact: false,
    })
}

/// 1-based ranks with ties sharing their mean rank.
pub fn midranks(values: Vec<f64>) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// `Σ (t³ − t)` over groups of tied values.
fn tie_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut s = 0.0;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        s += t * t * t - t;
        i = j + 1;
    }
    s
}
