use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distance::{distance_unchecked, dtw_path, Metric};
use super::profile::ProfileVector;
use super::ClusterError;

/// Barycenter refinement passes per centroid update under DTW.
pub const DBA_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub metric: Metric,
    pub seed: u64,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, metric: Metric) -> Self {
        Self {
            k,
            metric,
            seed: 0,
            n_init: 10,
            max_iter: 100,
            tol: 1e-4,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.k == 0 {
            return Err(ClusterError::InvalidParams("k must be positive".into()));
        }
        if self.n_init == 0 || self.max_iter == 0 {
            return Err(ClusterError::InvalidParams(
                "n_init and max_iter must be positive".into(),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(ClusterError::InvalidParams("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Fitted clustering. `assignments[i]` is the cluster of `melt_ids[i]`, in
/// the order the profiles were supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub metric: Metric,
    pub centroids: Vec<Vec<f64>>,
    pub melt_ids: Vec<usize>,
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub iterations_run: usize,
    pub converged: bool,
    pub inertia: f64,
    /// Inertia of the selected run: the value after the first assignment,
    /// then after every centroid update.
    pub inertia_trace: Vec<f64>,
}

impl ClusterModel {
    pub fn cluster_of(&self, melt_id: usize) -> Option<usize> {
        self.melt_ids
            .iter()
            .position(|&m| m == melt_id)
            .map(|i| self.assignments[i])
    }

    /// Melt ids per cluster index.
    pub fn members(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&melt, &c) in self.melt_ids.iter().zip(&self.assignments) {
            out.entry(c).or_default().push(melt);
        }
        out
    }

    pub fn profile_length(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }
}

pub(crate) fn validate_profiles(profiles: &[ProfileVector]) -> Result<usize, ClusterError> {
    let first = profiles
        .first()
        .ok_or(ClusterError::TooFewProfiles { k: 1, n: 0 })?;
    let len = first.len();
    if len == 0 {
        return Err(ClusterError::InvalidLength { min: 1, got: 0 });
    }
    for p in profiles {
        if p.len() != len {
            return Err(ClusterError::LengthMismatch(len, p.len()));
        }
        if p.values.iter().any(|v| !v.is_finite()) {
            return Err(ClusterError::NonFinite(p.melt_id));
        }
    }
    Ok(len)
}

struct RunResult {
    inertia: f64,
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Best-of-`n_init` time-series K-means.
pub fn fit_kmeans(profiles: &[ProfileVector], params: &KMeansParams) -> Result<ClusterModel, ClusterError> {
    params.validate()?;
    validate_profiles(profiles)?;
    let n = profiles.len();
    if params.k > n {
        return Err(ClusterError::TooFewProfiles { k: params.k, n });
    }
    if params.k > 1 && profiles.iter().all(|p| p.values == profiles[0].values) {
        return Err(ClusterError::AllIdentical(params.k));
    }
    let data: Vec<&[f64]> = profiles.iter().map(|p| p.values.as_slice()).collect();

    let runs: Vec<RunResult> = (0..params.n_init)
        .into_par_iter()
        .map(|run| run_once(&data, params, run as u64))
        .collect();
    // first minimum wins, so ties resolve to the lowest run index
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("n_init >= 1");

    Ok(ClusterModel {
        k: params.k,
        metric: params.metric,
        centroids: best.centroids,
        melt_ids: profiles.iter().map(|p| p.melt_id).collect(),
        assignments: best.assignments,
        seed: params.seed,
        iterations_run: best.iterations,
        converged: best.converged,
        inertia: best.inertia,
        inertia_trace: best.trace,
    })
}

fn run_once(data: &[&[f64]], params: &KMeansParams, run: u64) -> RunResult {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(run);
    let metric = params.metric;
    let mut centroids = kmeans_plus_plus(data, params.k, metric, &mut rng);
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<usize>, Vec<Vec<f64>>)> = None;
    let mut keep_best = |inertia: f64, assignments: &[usize], centroids: &[Vec<f64>]| {
        // later states win ties, so a converged euclidean run keeps its final means
        if best.as_ref().is_none_or(|(b, _, _)| inertia <= *b) {
            best = Some((inertia, assignments.to_vec(), centroids.to_vec()));
        }
    };

    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..params.max_iter {
        iterations = iter + 1;
        let (mut assignments, mut dists) = assign(data, &centroids, metric);
        repair_empty(data, &mut assignments, &mut dists, &mut centroids);
        let assigned: f64 = dists.iter().map(|d| d * d).sum();
        if iter == 0 {
            trace.push(assigned);
        }
        keep_best(assigned, &assignments, &centroids);

        let updated = update_centroids(data, &assignments, &centroids, metric);
        let displacement = centroids
            .iter()
            .zip(&updated)
            .map(|(old, new)| distance_unchecked(old, new, metric))
            .fold(0.0, f64::max);
        centroids = updated;
        let inertia = inertia_of(data, &assignments, &centroids, metric);
        trace.push(inertia);
        keep_best(inertia, &assignments, &centroids);

        if displacement < params.tol {
            converged = true;
            break;
        }
    }
    let (inertia, assignments, centroids) = best.expect("at least one iteration");
    RunResult {
        inertia,
        assignments,
        centroids,
        iterations,
        converged,
        trace,
    }
}

fn kmeans_plus_plus(data: &[&[f64]], k: usize, metric: Metric, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let mut centroids = vec![data[rng.random_range(0..n)].to_vec()];
    let mut nearest: Vec<f64> = data
        .iter()
        .map(|x| distance_unchecked(x, &centroids[0], metric).powi(2))
        .collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&w| {
                    acc += w;
                    acc > target
                })
                .unwrap_or_else(|| nearest.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..n)
        };
        let c = data[pick].to_vec();
        for (w, x) in nearest.iter_mut().zip(data) {
            *w = w.min(distance_unchecked(x, &c, metric).powi(2));
        }
        centroids.push(c);
    }
    centroids
}

/// Nearest centroid per point (ties to the lower index) and its distance.
fn assign(data: &[&[f64]], centroids: &[Vec<f64>], metric: Metric) -> (Vec<usize>, Vec<f64>) {
    data.par_iter()
        .map(|x| {
            centroids
                .iter()
                .enumerate()
                .map(|(c, centroid)| (c, distance_unchecked(x, centroid, metric)))
                .fold((0, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best })
        })
        .unzip()
}

/// Gives every empty cluster the point farthest from its own centroid, taken
/// from a cluster that keeps at least one member.
fn repair_empty(data: &[&[f64]], assignments: &mut [usize], dists: &mut [f64], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let donor = (0..data.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            })
            .expect("n >= k leaves a cluster with a spare member");
        sizes[assignments[donor]] -= 1;
        assignments[donor] = c;
        sizes[c] = 1;
        dists[donor] = 0.0;
        centroids[c] = data[donor].to_vec();
    }
}

fn inertia_of(data: &[&[f64]], assignments: &[usize], centroids: &[Vec<f64>], metric: Metric) -> f64 {
    data.par_iter()
        .zip(assignments)
        .map(|(x, &c)| distance_unchecked(x, &centroids[c], metric).powi(2))
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

fn update_centroids(data: &[&[f64]], assignments: &[usize], centroids: &[Vec<f64>], metric: Metric) -> Vec<Vec<f64>> {
    (0..centroids.len())
        .into_par_iter()
        .map(|c| {
            let members: Vec<&[f64]> = data
                .iter()
                .zip(assignments)
                .filter(|(_, &a)| a == c)
                .map(|(x, _)| *x)
                .collect();
            if members.is_empty() {
                return centroids[c].clone();
            }
            match metric {
                Metric::Euclidean => pointwise_mean(&members),
                Metric::Dtw { band } => dba_update(&centroids[c], &members, band, DBA_ITERATIONS),
            }
        })
        .collect()
}

fn pointwise_mean(members: &[&[f64]]) -> Vec<f64> {
    let len = members[0].len();
    let mut mean = vec![0.0; len];
    for m in members {
        for (acc, v) in mean.iter_mut().zip(m.iter()) {
            *acc += v;
        }
    }
    let n = members.len() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    mean
}

/// DTW barycenter averaging: repeatedly aligns every member to the current
/// average and replaces each average point by the mean of the member values
/// aligned to it.
pub fn dba_update(initial: &[f64], members: &[&[f64]], band: Option<usize>, iterations: usize) -> Vec<f64> {
    let mut average = initial.to_vec();
    for _ in 0..iterations {
        let mut sums = vec![0.0; average.len()];
        let mut counts = vec![0usize; average.len()];
        for member in members {
            for (i, j) in dtw_path(&average, member, band) {
                sums[i] += member[j];
                counts[i] += 1;
            }
        }
        let next: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .zip(&average)
            .map(|((s, &c), &old)| if c > 0 { s / c as f64 } else { old })
            .collect();
        if next == average {
            break;
        }
        average = next;
    }
    average
}
