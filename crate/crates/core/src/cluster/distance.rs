use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Distance used for assignment, centroid displacement and silhouette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Metric {
    Euclidean,
    /// Dynamic time warping; `band` is the Sakoe-Chiba half-width in samples.
    Dtw { band: Option<usize> },
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Euclidean => write!(f, "euclidean"),
            Metric::Dtw { band: None } => write!(f, "dtw"),
            Metric::Dtw { band: Some(w) } => write!(f, "dtw(band={w})"),
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// DTW with squared-difference local cost; returns the square root of the
/// accumulated cost of the optimal alignment.
pub fn dtw(a: &[f64], b: &[f64], band: Option<usize>) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return if n == m { 0.0 } else { f64::INFINITY };
    }
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        curr.fill(f64::INFINITY);
        let (lo, hi) = band_limits(i, m, band);
        if lo > hi {
            std::mem::swap(&mut prev, &mut curr);
            continue;
        }
        let ai = a[i - 1];
        let mut left = curr[lo - 1];
        for (j, (&bj, up)) in b[lo - 1..hi].iter().zip(prev[lo - 1..=hi].windows(2)).enumerate() {
            let d = ai - bj;
            left = d * d + min2(min2(up[0], up[1]), left);
            curr[lo + j] = left;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m].sqrt()
}

/// Inclusive 1-based column range of row `i` inside the band.
fn band_limits(i: usize, m: usize, band: Option<usize>) -> (usize, usize) {
    match band {
        Some(w) => (i.saturating_sub(w).max(1), (i + w).min(m)),
        None => (1, m),
    }
}

// inputs are finite, so the NaN handling of f64::min is not needed
#[inline(always)]
fn min2(x: f64, y: f64) -> f64 {
    if x < y {
        x
    } else {
        y
    }
}

/// Optimal DTW alignment as (index into `a`, index into `b`) pairs from
/// (0, 0) to (n-1, m-1). Ties prefer the diagonal step.
pub fn dtw_path(a: &[f64], b: &[f64], band: Option<usize>) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let mut cost = vec![f64::INFINITY; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    cost[0] = 0.0;
    for i in 1..=n {
        let (lo, hi) = band_limits(i, m, band);
        if lo > hi {
            continue;
        }
        let (above, row) = cost.split_at_mut(i * (m + 1));
        let above = &above[(i - 1) * (m + 1)..];
        let ai = a[i - 1];
        let mut left = row[lo - 1];
        for j in lo..=hi {
            let d = ai - b[j - 1];
            left = d * d + min2(min2(above[j - 1], above[j]), left);
            row[j] = left;
        }
    }
    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        if i == 1 && j == 1 {
            break;
        }
        let diag = cost[idx(i - 1, j - 1)];
        let up = cost[idx(i - 1, j)];
        let left = cost[idx(i, j - 1)];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();
    path
}

/// Distance between two equal-length profiles.
pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::LengthMismatch(a.len(), b.len()));
    }
    Ok(distance_unchecked(a, b, metric))
}

pub(crate) fn distance_unchecked(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => euclidean(a, b),
        Metric::Dtw { band } => dtw(a, b, band),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Minimum squared cost over every monotone warping path, by recursion.
    fn brute_force_dtw(a: &[f64], b: &[f64], band: Option<usize>) -> f64 {
        fn walk(a: &[f64], b: &[f64], i: usize, j: usize, band: Option<usize>, acc: f64, best: &mut f64) {
            if let Some(w) = band {
                if i.abs_diff(j) > w {
                    return;
                }
            }
            let acc = acc + (a[i] - b[j]).powi(2);
            if i == a.len() - 1 && j == b.len() - 1 {
                *best = best.min(acc);
                return;
            }
            if i + 1 < a.len() && j + 1 < b.len() {
                walk(a, b, i + 1, j + 1, band, acc, best);
            }
            if i + 1 < a.len() {
                walk(a, b, i + 1, j, band, acc, best);
            }
            if j + 1 < b.len() {
                walk(a, b, i, j + 1, band, acc, best);
            }
        }
        let mut best = f64::INFINITY;
        walk(a, b, 0, 0, band, 0.0, &mut best);
        best.sqrt()
    }

    #[test]
    fn three_four_five() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0], Metric::Euclidean).unwrap(), 5.0);
    }

    #[test]
    fn dtw_self_distance_is_zero() {
        let a = [600.0, 800.0, 1200.0, 1500.0, 1490.0];
        assert_eq!(dtw(&a, &a, None), 0.0);
        assert_eq!(dtw(&a, &a, Some(0)), 0.0);
    }

    #[test]
    fn dtw_matches_brute_force_on_resampled_pair() {
        // [0,1,2] stretched to four points vs [0,0,1,2]
        let a = [0.0, 2.0 / 3.0, 4.0 / 3.0, 2.0];
        let b = [0.0, 0.0, 1.0, 2.0];
        let expected = brute_force_dtw(&a, &b, None);
        assert!((dtw(&a, &b, None) - expected).abs() < 1e-12);
        assert!((expected - (1.0f64 / 9.0 + 1.0 / 9.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn band_zero_is_euclidean() {
        let a = [1.0, 5.0, 2.0, 8.0];
        let b = [2.0, 1.0, 7.0, 3.0];
        assert!((dtw(&a, &b, Some(0)) - euclidean(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            distance(&[1.0], &[1.0, 2.0], Metric::Euclidean),
            Err(ClusterError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn path_cost_equals_distance() {
        let a = [0.0, 3.0, 1.0, 4.0, 1.0, 5.0];
        let b = [1.0, 0.0, 2.0, 4.0, 4.0, 6.0];
        for band in [None, Some(1), Some(2)] {
            let path = dtw_path(&a, &b, band);
            assert_eq!(path[0], (0, 0));
            assert_eq!(*path.last().unwrap(), (5, 5));
            let cost: f64 = path.iter().map(|&(i, j)| (a[i] - b[j]).powi(2)).sum();
            assert!((cost.sqrt() - dtw(&a, &b, band)).abs() < 1e-12);
            assert!((dtw(&a, &b, band) - brute_force_dtw(&a, &b, band)).abs() < 1e-12);
        }
    }

    fn series(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, len)
    }

    proptest! {
        #[test]
        fn metrics_symmetric_and_nonnegative(
            (a, b) in (1usize..12).prop_flat_map(|l| (series(l), series(l))),
            band in prop::option::of(0usize..4),
        ) {
            for metric in [Metric::Euclidean, Metric::Dtw { band }] {
                let ab = distance(&a, &b, metric).unwrap();
                let ba = distance(&b, &a, metric).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
                prop_assert_eq!(distance(&a, &a, metric).unwrap(), 0.0);
            }
        }

        #[test]
        fn euclidean_triangle_inequality(
            (a, b, c) in (1usize..12).prop_flat_map(|l| (series(l), series(l), series(l))),
        ) {
            let ab = euclidean(&a, &b);
            let bc = euclidean(&b, &c);
            let ac = euclidean(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn dtw_never_exceeds_euclidean(
            (a, b) in (1usize..40).prop_flat_map(|l| (series(l), series(l))),
            band in prop::option::of(0usize..6),
        ) {
            prop_assert!(dtw(&a, &b, band) <= euclidean(&a, &b) + 1e-9);
        }

        #[test]
        fn dtw_matches_exhaustive_paths(
            (a, b) in (1usize..6).prop_flat_map(|l| (series(l), series(l))),
            band in prop::option::of(0usize..3),
        ) {
            prop_assert!((dtw(&a, &b, band) - brute_force_dtw(&a, &b, band)).abs() < 1e-9);
        }
    }
}
