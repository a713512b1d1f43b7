use rayon::prelude::*;

use super::distance::distance_unchecked;
use super::kmeans::{validate_profiles, ClusterModel};
use super::profile::ProfileVector;
use super::ClusterError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityMetrics {
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
    /// Inertia per profile.
    pub distortion: f64,
    /// `None` when the model has a single cluster.
    pub silhouette: Option<f64>,
}

fn check_model(model: &ClusterModel, profiles: &[ProfileVector]) -> Result<(), ClusterError> {
    validate_profiles(profiles)?;
    let aligned = model.melt_ids.len() == profiles.len()
        && model.melt_ids.iter().zip(profiles).all(|(&m, p)| m == p.melt_id)
        && model.assignments.iter().all(|&c| c < model.centroids.len())
        && model.profile_length() == profiles[0].len();
    if aligned {
        Ok(())
    } else {
        Err(ClusterError::ModelMismatch)
    }
}

pub fn quality_metrics(model: &ClusterModel, profiles: &[ProfileVector]) -> Result<QualityMetrics, ClusterError> {
    check_model(model, profiles)?;
    let inertia: f64 = profiles
        .iter()
        .zip(&model.assignments)
        .map(|(p, &c)| distance_unchecked(&p.values, &model.centroids[c], model.metric).powi(2))
        .sum();
    let silhouette = match silhouette(model, profiles) {
        Ok(s) => Some(s),
        Err(ClusterError::SingleCluster) => None,
        Err(e) => return Err(e),
    };
    Ok(QualityMetrics {
        inertia,
        distortion: inertia / profiles.len() as f64,
        silhouette,
    })
}

/// Mean silhouette under the model's metric. Members of singleton clusters
/// score 0.
pub fn silhouette(model: &ClusterModel, profiles: &[ProfileVector]) -> Result<f64, ClusterError> {
    check_model(model, profiles)?;
    if model.k < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let n = profiles.len();
    let labels = &model.assignments;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { distance_unchecked(&profiles[i].values, &profiles[j].values, model.metric) })
                .collect()
        })
        .collect();
    let mut sizes = vec![0usize; model.k];
    for &c in labels {
        sizes[c] += 1;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = labels[i];
        if sizes[own] <= 1 {
            continue;
        }
        let mut sums = vec![0.0; model.k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += rows[i][j];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..model.k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Number of profiles per cluster index.
pub fn cluster_sizes(model: &ClusterModel) -> Vec<usize> {
    let mut sizes = vec![0usize; model.k];
    for &c in &model.assignments {
        sizes[c] += 1;
    }
    sizes
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(truth: &[usize], predicted: &[usize]) -> f64 {
    assert_eq!(truth.len(), predicted.len(), "labelings must have equal length");
    let n = truth.len();
    let rows = truth.iter().max().map_or(0, |m| m + 1);
    let cols = predicted.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; cols]; rows];
    for (&t, &p) in truth.iter().zip(predicted) {
        table[t][p] += 1;
    }
    let pairs = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&x| pairs(x)).sum();
    let a: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let b: f64 = (0..cols).map(|c| pairs(table.iter().map(|r| r[c]).sum())).sum();
    let total = pairs(n as u64);
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
