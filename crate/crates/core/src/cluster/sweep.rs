use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{fit_kmeans, validate_profiles, KMeansParams};
use super::profile::ProfileVector;
use super::quality::quality_metrics;
use super::ClusterError;

pub const SWEEP_FORMAT: &str = "meltline.k_sweep.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepEntry {
    pub k: usize,
    pub inertia: Option<f64>,
    pub distortion: Option<f64>,
    pub silhouette: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepReport {
    pub format: String,
    pub per_k: Vec<KSweepEntry>,
    /// Highest silhouette, ties toward smaller k.
    pub suggested_k: Option<usize>,
    pub suggestion_rule: String,
    /// Largest discrete second difference of inertia; diagnostic only.
    pub inertia_knee_k: Option<usize>,
}

/// Per-k seed derived from the master seed (splitmix64 of seed and k).
pub fn derive_seed(master: u64, k: usize) -> u64 {
    let mut z = master ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits one model per k in `k_range` and suggests the k with the best
/// silhouette. `base.k` and `base.seed` are replaced per k.
pub fn sweep_k(
    profiles: &[ProfileVector],
    k_range: std::ops::RangeInclusive<usize>,
    base: &KMeansParams,
) -> Result<KSweepReport, ClusterError> {
    validate_profiles(profiles)?;
    let (lo, hi) = (*k_range.start(), *k_range.end());
    let n = profiles.len();
    if lo < 2 || hi < lo || hi > n {
        return Err(ClusterError::InvalidKRange { lo, hi, n });
    }
    let per_k: Vec<KSweepEntry> = k_range
        .into_par_iter()
        .map(|k| {
            let params = KMeansParams {
                k,
                seed: derive_seed(base.seed, k),
                ..*base
            };
            match fit_kmeans(profiles, &params).and_then(|m| quality_metrics(&m, profiles)) {
                Ok(q) => KSweepEntry {
                    k,
                    inertia: Some(q.inertia),
                    distortion: Some(q.distortion),
                    silhouette: q.silhouette,
                    error: None,
                },
                Err(e) => KSweepEntry {
                    k,
                    inertia: None,
                    distortion: None,
                    silhouette: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let suggested_k = per_k
        .iter()
        .filter_map(|e| e.silhouette.map(|s| (e.k, s)))
        .fold(None::<(usize, f64)>, |best, (k, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((k, s)),
        })
        .map(|(k, _)| k);

    let inertias: Vec<(usize, f64)> = per_k.iter().filter_map(|e| e.inertia.map(|i| (e.k, i))).collect();
    let inertia_knee_k = inertias
        .windows(3)
        .map(|w| (w[1].0, w[0].1 - 2.0 * w[1].1 + w[2].1))
        .fold(None::<(usize, f64)>, |best, (k, d2)| match best {
            Some((_, bd)) if bd >= d2 => best,
            _ => Some((k, d2)),
        })
        .map(|(k, _)| k);

    Ok(KSweepReport {
        format: SWEEP_FORMAT.to_string(),
        per_k,
        suggested_k,
        suggestion_rule: "max-silhouette".to_string(),
        inertia_knee_k,
    })
}
