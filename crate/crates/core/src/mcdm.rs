//! Multi-criteria ranking of decision-matrix alternatives.
//!
//! All methods work from the vector-normalized matrix
//! `r_ij = x_ij / sqrt(Σ_i x_ij²)`. SAW and MEW score the normalized values
//! directly and therefore need every criterion to point the same way (the
//! best alternative has the lowest score for an all-cost matrix). TOPSIS,
//! mTOPSIS and VIKOR resolve direction through their ideal points.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{DecisionMatrix, Direction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McdmError {
    #[error("column {0} is all zeros")]
    ZeroColumn(usize),
    #[error("criteria mix cost and benefit directions; apply the reciprocal transform first")]
    MixedDirections,
    #[error("entry ({row}, {col}) is not positive")]
    NonPositiveEntry { row: usize, col: usize },
    #[error("TOPSIS needs at least two distinguishable alternatives")]
    SingleAlternative,
    #[error("column {0} is constant")]
    ConstantColumn(usize),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("VIKOR v must lie in [0, 1], got {0}")]
    InvalidV(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SAW")]
    Saw,
    #[serde(rename = "MEW")]
    Mew,
    #[serde(rename = "TOPSIS")]
    Topsis,
    #[serde(rename = "mTOPSIS")]
    MTopsis,
    #[serde(rename = "VIKOR")]
    Vikor,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Saw, Method::Mew, Method::Topsis, Method::MTopsis, Method::Vikor];

    pub fn name(self) -> &'static str {
        match self {
            Method::Saw => "SAW",
            Method::Mew => "MEW",
            Method::Topsis => "TOPSIS",
            Method::MTopsis => "mTOPSIS",
            Method::Vikor => "VIKOR",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    MinBest,
    MaxBest,
}

/// VIKOR intermediate values and compromise-solution conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VikorDetails {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub v: f64,
    /// Q(second) − Q(first) ≥ 1/(m − 1).
    pub acceptable_advantage: bool,
    /// The Q-best alternative is also best by S or by R.
    pub acceptable_stability: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub method: Method,
    pub alternatives: Vec<usize>,
    pub scores: Vec<f64>,
    pub orientation: Orientation,
    /// Alternative ids, best first.
    pub ranking: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vikor: Option<VikorDetails>,
}

impl MethodScores {
    fn new(method: Method, alternatives: &[usize], scores: Vec<f64>, orientation: Orientation) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            let by_score = match orientation {
                Orientation::MinBest => scores[a].total_cmp(&scores[b]),
                Orientation::MaxBest => scores[b].total_cmp(&scores[a]),
            };
            by_score.then(alternatives[a].cmp(&alternatives[b]))
        });
        Self {
            method,
            alternatives: alternatives.to_vec(),
            ranking: order.iter().map(|&i| alternatives[i]).collect(),
            scores,
            orientation,
            vikor: None,
        }
    }

    pub fn best(&self) -> usize {
        self.ranking[0]
    }

    /// 1-based rank of an alternative.
    pub fn rank_of(&self, alternative: usize) -> Option<usize> {
        self.ranking.iter().position(|&a| a == alternative).map(|p| p + 1)
    }

    pub fn score_of(&self, alternative: usize) -> Option<f64> {
        self.alternatives
            .iter()
            .position(|&a| a == alternative)
            .map(|i| self.scores[i])
    }
}

/// Vector-normalized decision matrix. Directions are carried unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub alternatives: Vec<usize>,
    pub directions: Vec<Direction>,
    pub values: Vec<Vec<f64>>,
}

pub fn normalize_vector(matrix: &DecisionMatrix) -> Result<NormalizedMatrix, McdmError> {
    let norms: Vec<f64> = (0..matrix.cols())
        .map(|j| matrix.column(j).map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(j) = norms.iter().position(|&n| n == 0.0) {
        return Err(McdmError::ZeroColumn(j));
    }
    let values = matrix
        .values
        .iter()
        .map(|row| row.iter().zip(&norms).map(|(x, n)| x / n).collect())
        .collect();
    Ok(NormalizedMatrix {
        alternatives: matrix.alternatives.clone(),
        directions: matrix.criteria.iter().map(|c| c.direction).collect(),
        values,
    })
}

/// Converts cost columns to benefit columns with `x → min_i x_ij / x_ij`.
/// Benefit columns are left as they are.
pub fn reciprocal_to_benefit(matrix: &DecisionMatrix) -> Result<DecisionMatrix, McdmError> {
    let mut out = matrix.clone();
    for (j, criterion) in matrix.criteria.iter().enumerate() {
        if criterion.direction == Direction::Benefit {
            continue;
        }
        if let Some(row) = matrix.values.iter().position(|r| r[j] <= 0.0) {
            return Err(McdmError::NonPositiveEntry { row, col: j });
        }
        let min = matrix.column(j).fold(f64::INFINITY, f64::min);
        for (i, row) in out.values.iter_mut().enumerate() {
            row[j] = min / matrix.values[i][j];
        }
        out.criteria[j].direction = Direction::Benefit;
    }
    Ok(out)
}

fn check_weights(weights: &[f64], cols: usize) -> Result<(), McdmError> {
    if weights.len() != cols {
        return Err(McdmError::WeightCount {
            expected: cols,
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(McdmError::InvalidWeights("weights must be finite and >= 0".into()));
    }
    Ok(())
}

fn uniform_orientation(directions: &[Direction]) -> Result<Orientation, McdmError> {
    match directions.first() {
        Some(&first) if directions.iter().all(|&d| d == first) => Ok(match first {
            Direction::Cost => Orientation::MinBest,
            Direction::Benefit => Orientation::MaxBest,
        }),
        _ => Err(McdmError::MixedDirections),
    }
}

/// Simple additive weighting: `Σ_j w_j r_ij`.
pub fn score_saw(norm: &NormalizedMatrix, weights: &[f64]) -> Result<MethodScores, McdmError> {
    check_weights(weights, norm.directions.len())?;
    let orientation = uniform_orientation(&norm.directions)?;
    let scores = norm
        .values
        .iter()
        .map(|row| row.iter().zip(weights).map(|(r, w)| w * r).sum())
        .collect();
    Ok(MethodScores::new(Method::Saw, &norm.alternatives, scores, orientation))
}

/// Multiplicative exponential weighting: `Π_j r_ij^{w_j}`.
pub fn score_mew(norm: &NormalizedMatrix, weights: &[f64]) -> Result<MethodScores, McdmError> {
    check_weights(weights, norm.directions.len())?;
    let orientation = uniform_orientation(&norm.directions)?;
    for (row, values) in norm.values.iter().enumerate() {
        if let Some(col) = values.iter().position(|&r| r <= 0.0) {
            return Err(McdmError::NonPositiveEntry { row, col });
        }
    }
    let scores = norm
        .values
        .iter()
        .map(|row| row.iter().zip(weights).map(|(r, w)| r.powf(*w)).product())
        .collect();
    Ok(MethodScores::new(Method::Mew, &norm.alternatives, scores, orientation))
}

/// Per-column (ideal, anti-ideal) of `values` under the column directions.
fn ideal_points(values: &[Vec<f64>], directions: &[Direction]) -> (Vec<f64>, Vec<f64>) {
    directions
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let min = values.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let max = values.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            match d {
                Direction::Cost => (min, max),
                Direction::Benefit => (max, min),
            }
        })
        .unzip()
}

fn closeness(
    method: Method,
    alternatives: &[usize],
    values: &[Vec<f64>],
    directions: &[Direction],
    distance_weights: &[f64],
) -> Result<MethodScores, McdmError> {
    if values.len() < 2 {
        return Err(McdmError::SingleAlternative);
    }
    let (ideal, anti) = ideal_points(values, directions);
    let dist = |row: &[f64], target: &[f64]| -> f64 {
        row.iter()
            .zip(target)
            .zip(distance_weights)
            .map(|((x, t), w)| w * (x - t) * (x - t))
            .sum::<f64>()
            .sqrt()
    };
    let mut scores = Vec::with_capacity(values.len());
    for row in values {
        let d_plus = dist(row, &ideal);
        let d_minus = dist(row, &anti);
        if d_plus + d_minus == 0.0 {
            return Err(McdmError::SingleAlternative);
        }
        scores.push(d_minus / (d_plus + d_minus));
    }
    Ok(MethodScores::new(method, alternatives, scores, Orientation::MaxBest))
}

/// TOPSIS on the weighted normalized matrix `v_ij = w_j r_ij`.
pub fn score_topsis(matrix: &DecisionMatrix, weights: &[f64]) -> Result<MethodScores, McdmError> {
    check_weights(weights, matrix.cols())?;
    let norm = normalize_vector(matrix)?;
    let weighted: Vec<Vec<f64>> = norm
        .values
        .iter()
        .map(|row| row.iter().zip(weights).map(|(r, w)| r * w).collect())
        .collect();
    let unit = vec![1.0; matrix.cols()];
    closeness(Method::Topsis, &norm.alternatives, &weighted, &norm.directions, &unit)
}

/// Modified TOPSIS: weights enter the distance, `sqrt(Σ_j w_j (r_ij − r*_j)²)`.
pub fn score_mtopsis(matrix: &DecisionMatrix, weights: &[f64]) -> Result<MethodScores, McdmError> {
    check_weights(weights, matrix.cols())?;
    let norm = normalize_vector(matrix)?;
    closeness(Method::MTopsis, &norm.alternatives, &norm.values, &norm.directions, weights)
}

/// VIKOR compromise ranking with group-utility weight `v`. Lower Q is better.
pub fn score_vikor(matrix: &DecisionMatrix, weights: &[f64], v: f64) -> Result<MethodScores, McdmError> {
    check_weights(weights, matrix.cols())?;
    if !(0.0..=1.0).contains(&v) {
        return Err(McdmError::InvalidV(v));
    }
    let directions: Vec<Direction> = matrix.criteria.iter().map(|c| c.direction).collect();
    let (best, worst) = ideal_points(&matrix.values, &directions);
    if let Some(j) = (0..matrix.cols()).find(|&j| best[j] == worst[j]) {
        return Err(McdmError::ConstantColumn(j));
    }
    let (s, r): (Vec<f64>, Vec<f64>) = matrix
        .values
        .iter()
        .map(|row| {
            let addends: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(j, f)| weights[j] * (best[j] - f) / (best[j] - worst[j]))
                .collect();
            (addends.iter().sum::<f64>(), addends.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        })
        .unzip();
    let span = |xs: &[f64]| {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (s_best, s_worst) = span(&s);
    let (r_best, r_worst) = span(&r);
    // a zero spread contributes nothing
    let scaled = |x: f64, lo: f64, hi: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };
    let q: Vec<f64> = s
        .iter()
        .zip(&r)
        .map(|(&si, &ri)| v * scaled(si, s_best, s_worst) + (1.0 - v) * scaled(ri, r_best, r_worst))
        .collect();

    let mut out = MethodScores::new(Method::Vikor, &matrix.alternatives, q, Orientation::MinBest);
    let m = matrix.rows();
    let pos = |alt: usize| matrix.alternatives.iter().position(|&a| a == alt).expect("known id");
    let first = pos(out.ranking[0]);
    let acceptable_advantage = if m >= 2 {
        let second = pos(out.ranking[1]);
        out.scores[second] - out.scores[first] >= 1.0 / (m - 1) as f64
    } else {
        true
    };
    let acceptable_stability = s[first] == s_best || r[first] == r_best;
    out.vikor = Some(VikorDetails {
        s,
        r,
        v,
        acceptable_advantage,
        acceptable_stability,
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub scores: Option<MethodScores>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub alternatives: Vec<usize>,
    pub methods: Vec<MethodOutcome>,
    /// Rank 1 under all five methods.
    pub unanimous_best: Option<usize>,
    /// Lowest mean rank across available methods, ties toward lower id.
    pub consensus_best: Option<usize>,
}

impl RankingTable {
    pub fn scores(&self, method: Method) -> Option<&MethodScores> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .and_then(|m| m.scores.as_ref())
    }

    /// The unanimous winner, else the consensus winner.
    pub fn best(&self) -> Option<usize> {
        self.unanimous_best.or(self.consensus_best)
    }

    /// `cluster,SAW,MEW,TOPSIS,mTOPSIS,VIKOR` with five decimals; unavailable
    /// methods leave empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster");
        for m in Method::ALL {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for &alt in &self.alternatives {
            out.push_str(&alt.to_string());
            for m in Method::ALL {
                out.push(',');
                if let Some(score) = self.scores(m).and_then(|s| s.score_of(alt)) {
                    out.push_str(&format!("{score:.5}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs all five methods. Methods that fail are kept in the table with their
/// error instead of aborting.
pub fn rank_all(matrix: &DecisionMatrix, weights: &[f64], v: f64) -> RankingTable {
    let outcomes: Vec<MethodOutcome> = Method::ALL
        .iter()
        .map(|&method| {
            let result = match method {
                Method::Saw => normalize_vector(matrix).and_then(|n| score_saw(&n, weights)),
                Method::Mew => normalize_vector(matrix).and_then(|n| score_mew(&n, weights)),
                Method::Topsis => score_topsis(matrix, weights),
                Method::MTopsis => score_mtopsis(matrix, weights),
                Method::Vikor => score_vikor(matrix, weights, v),
            };
            match result {
                Ok(scores) => MethodOutcome {
                    method,
                    scores: Some(scores),
                    error: None,
                },
                Err(e) => MethodOutcome {
                    method,
                    scores: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let available: Vec<&MethodScores> = outcomes.iter().filter_map(|o| o.scores.as_ref()).collect();
    let unanimous_best = if available.len() == Method::ALL.len() {
        let first = available[0].best();
        available.iter().all(|s| s.best() == first).then_some(first)
    } else {
        None
    };
    let consensus_best = if available.is_empty() {
        None
    } else {
        let mut sorted_ids = matrix.alternatives.clone();
        sorted_ids.sort_unstable();
        sorted_ids
            .into_iter()
            .map(|alt| {
                let total: usize = available.iter().map(|s| s.rank_of(alt).expect("ranked")).sum();
                (alt, total)
            })
            .fold(None::<(usize, usize)>, |best, (alt, total)| match best {
                Some((_, bt)) if bt <= total => best,
                _ => Some((alt, total)),
            })
            .map(|(alt, _)| alt)
    };
    RankingTable {
        alternatives: matrix.alternatives.clone(),
        methods: outcomes,
        unanimous_best,
        consensus_best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::CriterionSpec;

    fn matrix(rows: &[&[f64]], directions: &[Direction]) -> DecisionMatrix {
        let cols = directions.len();
        let criteria = directions
            .iter()
            .enumerate()
            .map(|(j, &d)| CriterionSpec {
                name: format!("c{j}"),
                direction: d,
                weight: 1.0 / cols as f64,
            })
            .collect();
        DecisionMatrix::new(
            (0..rows.len()).collect(),
            criteria,
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn unit_vector_column() {
        let m = matrix(&[&[3.0], &[4.0]], &[Direction::Cost]);
        let n = normalize_vector(&m).unwrap();
        assert_eq!(n.values, vec![vec![0.6], vec![0.8]]);
        let unit = matrix(&[&[0.6], &[0.8]], &[Direction::Cost]);
        let n = normalize_vector(&unit).unwrap();
        assert!((n.values[0][0] - 0.6).abs() < 1e-15 && (n.values[1][0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_column_rejected() {
        let m = matrix(&[&[1.0, 0.0], &[2.0, 0.0]], &[Direction::Cost, Direction::Cost]);
        assert_eq!(normalize_vector(&m), Err(McdmError::ZeroColumn(1)));
    }

    #[test]
    fn saw_single_and_identical_rows() {
        let m = matrix(&[&[2.0, 5.0]], &[Direction::Cost; 2]);
        let s = score_saw(&normalize_vector(&m).unwrap(), &[0.5, 0.5]).unwrap();
        assert_eq!(s.ranking, vec![0]);
        assert!((s.scores[0] - 1.0).abs() < 1e-15);

        let m = matrix(&[&[2.0, 5.0], &[2.0, 5.0]], &[Direction::Cost; 2]);
        let s = score_saw(&normalize_vector(&m).unwrap(), &[0.5, 0.5]).unwrap();
        assert_eq!(s.scores[0], s.scores[1]);
        assert_eq!(s.ranking, vec![0, 1]);
    }

    #[test]
    fn saw_mew_reject_mixed_directions() {
        let m = matrix(&[&[1.0, 2.0], &[2.0, 1.0]], &[Direction::Cost, Direction::Benefit]);
        let n = normalize_vector(&m).unwrap();
        assert_eq!(score_saw(&n, &[0.5, 0.5]), Err(McdmError::MixedDirections));
        assert_eq!(score_mew(&n, &[0.5, 0.5]), Err(McdmError::MixedDirections));
        let converted = reciprocal_to_benefit(&m).unwrap();
        assert_eq!(converted.values, vec![vec![1.0, 2.0], vec![0.5, 1.0]]);
        let s = score_saw(&normalize_vector(&converted).unwrap(), &[0.5, 0.5]).unwrap();
        assert_eq!(s.orientation, Orientation::MaxBest);
    }

    #[test]
    fn mew_uniform_and_degenerate_weights() {
        let m = matrix(&[&[3.0, 7.0], &[3.0, 7.0], &[3.0, 7.0]], &[Direction::Cost; 2]);
        let s = score_mew(&normalize_vector(&m).unwrap(), &[0.5, 0.5]).unwrap();
        assert!(s.scores.iter().all(|&x| (x - s.scores[0]).abs() < 1e-15));

        let m = matrix(&[&[3.0, 7.0], &[4.0, 1.0]], &[Direction::Cost; 2]);
        let n = normalize_vector(&m).unwrap();
        let s = score_mew(&n, &[1.0, 0.0]).unwrap();
        assert!((s.scores[0] - n.values[0][0]).abs() < 1e-15);
        assert!((s.scores[1] - n.values[1][0]).abs() < 1e-15);
    }

    #[test]
    fn mew_rejects_zero_entry() {
        let m = matrix(&[&[0.0, 7.0], &[4.0, 1.0]], &[Direction::Cost; 2]);
        assert_eq!(
            score_mew(&normalize_vector(&m).unwrap(), &[0.5, 0.5]),
            Err(McdmError::NonPositiveEntry { row: 0, col: 0 })
        );
    }

    #[test]
    fn topsis_endpoints() {
        let m = matrix(&[&[1.0], &[2.0]], &[Direction::Cost]);
        let s = score_topsis(&m, &[1.0]).unwrap();
        assert_eq!(s.scores, vec![1.0, 0.0]);
        assert_eq!(s.ranking, vec![0, 1]);
    }

    #[test]
    fn topsis_anti_ideal_scores_zero() {
        let m = matrix(&[&[1.0, 1.0], &[3.0, 4.0], &[2.0, 2.0]], &[Direction::Cost; 2]);
        let s = score_topsis(&m, &[0.5, 0.5]).unwrap();
        assert_eq!(s.scores[1], 0.0);
        assert_eq!(s.scores[0], 1.0);
    }

    #[test]
    fn topsis_single_alternative() {
        let m = matrix(&[&[1.0, 2.0]], &[Direction::Cost; 2]);
        assert_eq!(score_topsis(&m, &[0.5, 0.5]), Err(McdmError::SingleAlternative));
        assert_eq!(score_mtopsis(&m, &[0.5, 0.5]), Err(McdmError::SingleAlternative));
    }

    #[test]
    fn mtopsis_equals_topsis_for_one_criterion() {
        let m = matrix(&[&[1.0], &[2.5], &[4.0]], &[Direction::Benefit]);
        for w in [0.3, 1.0] {
            let a = score_topsis(&m, &[w]).unwrap();
            let b = score_mtopsis(&m, &[w]).unwrap();
            for (x, y) in a.scores.iter().zip(&b.scores) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vikor_ideal_and_endpoints() {
        let m = matrix(&[&[1.0, 1.0], &[3.0, 2.0], &[2.0, 4.0]], &[Direction::Cost; 2]);
        let s = score_vikor(&m, &[0.5, 0.5], 0.5).unwrap();
        assert_eq!(s.scores[0], 0.0);
        let d = s.vikor.as_ref().unwrap();
        assert_eq!((d.s[0], d.r[0]), (0.0, 0.0));

        let by_s = score_vikor(&m, &[0.5, 0.5], 1.0).unwrap();
        let by_r = score_vikor(&m, &[0.5, 0.5], 0.0).unwrap();
        let order = |xs: &[f64]| {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
            idx
        };
        assert_eq!(by_s.ranking, order(&d.s));
        assert_eq!(by_r.ranking, order(&d.r));
    }

    #[test]
    fn vikor_constant_column() {
        let m = matrix(&[&[1.0, 5.0], &[2.0, 5.0]], &[Direction::Cost; 2]);
        assert_eq!(score_vikor(&m, &[0.5, 0.5], 0.5), Err(McdmError::ConstantColumn(1)));
        let m = matrix(&[&[1.0, 4.0], &[2.0, 5.0]], &[Direction::Cost; 2]);
        assert!(matches!(score_vikor(&m, &[0.5, 0.5], 1.5), Err(McdmError::InvalidV(_))));
    }

    #[test]
    fn vikor_zero_spread_term_is_zero() {
        // each alternative is best on one criterion: S and R tie
        let m = matrix(&[&[1.0, 2.0], &[2.0, 1.0]], &[Direction::Cost; 2]);
        let s = score_vikor(&m, &[0.5, 0.5], 0.5).unwrap();
        assert_eq!(s.scores, vec![0.0, 0.0]);
        assert_eq!(s.ranking, vec![0, 1]);
    }

    #[test]
    fn benefit_direction_mirrors_cost() {
        let cost = matrix(&[&[1.0, 3.0], &[2.0, 1.0], &[4.0, 2.0]], &[Direction::Cost; 2]);
        let benefit = matrix(&[&[-1.0, -3.0], &[-2.0, -1.0], &[-4.0, -2.0]], &[Direction::Benefit; 2]);
        let a = score_vikor(&cost, &[0.5, 0.5], 0.5).unwrap();
        let b = score_vikor(&benefit, &[0.5, 0.5], 0.5).unwrap();
        assert_eq!(a.ranking, b.ranking);
    }

    #[test]
    fn single_criterion_all_methods_agree() {
        let m = matrix(&[&[5.0], &[2.0], &[9.0], &[4.0]], &[Direction::Cost]);
        let table = rank_all(&m, &[1.0], 0.5);
        for outcome in &table.methods {
            assert_eq!(outcome.scores.as_ref().unwrap().ranking, vec![1, 3, 0, 2], "{}", outcome.method);
        }
        assert_eq!(table.unanimous_best, Some(1));
        assert_eq!(table.consensus_best, Some(1));
    }

    #[test]
    fn failing_method_is_marked_unavailable() {
        let m = matrix(&[&[1.0, 2.0], &[2.0, 1.0], &[1.5, 1.5]], &[Direction::Cost, Direction::Benefit]);
        let table = rank_all(&m, &[0.5, 0.5], 0.5);
        assert!(table.scores(Method::Saw).is_none());
        assert!(table.methods[0].error.as_ref().unwrap().contains("mix"));
        assert!(table.scores(Method::Topsis).is_some());
        assert_eq!(table.unanimous_best, None);
        assert!(table.consensus_best.is_some());
    }

    #[test]
    fn ranking_csv_layout() {
        let m = matrix(&[&[1.0], &[2.0]], &[Direction::Cost]);
        let csv = rank_all(&m, &[1.0], 0.5).to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("cluster,SAW,MEW,TOPSIS,mTOPSIS,VIKOR"));
        assert_eq!(lines.next(), Some("0,0.44721,0.44721,1.00000,1.00000,0.00000"));
    }
}
