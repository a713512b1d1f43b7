use serde::{Deserialize, Serialize};

use super::ClusterError;
use crate::segment::{seconds_between, MeltSegment};

/// Fixed-length temperature profile of one melt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVector {
    pub melt_id: usize,
    pub values: Vec<f64>,
}

impl ProfileVector {
    pub fn new(melt_id: usize, values: Vec<f64>) -> Self {
        Self { melt_id, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Linearly interpolates the melt's temperature trace onto `length` points
/// equally spaced between its first and last sample. Both ends are kept
/// exactly.
pub fn resample_profile(segment: &MeltSegment, length: usize) -> Result<ProfileVector, ClusterError> {
    if length < 2 {
        return Err(ClusterError::InvalidLength { min: 2, got: length });
    }
    let samples = &segment.samples;
    if samples.len() < 2 {
        return Err(ClusterError::TooFewSamples(segment.id));
    }
    let origin = samples[0].0;
    let times: Vec<f64> = samples.iter().map(|(t, _)| seconds_between(&origin, t)).collect();
    let span = *times.last().expect("non-empty");
    if span <= 0.0 {
        return Err(ClusterError::DegenerateSegment(segment.id));
    }
    let temps: Vec<f64> = samples.iter().map(|(_, v)| *v).collect();
    if temps.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite(segment.id));
    }

    let mut values = Vec::with_capacity(length);
    let mut seg = 0usize;
    for k in 0..length {
        if k == length - 1 {
            values.push(*temps.last().expect("non-empty"));
            break;
        }
        let t = span * k as f64 / (length - 1) as f64;
        while seg + 2 < times.len() && times[seg + 1] <= t {
            seg += 1;
        }
        let (t0, t1) = (times[seg], times[seg + 1]);
        let frac = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        values.push(temps[seg] + frac * (temps[seg + 1] - temps[seg]));
    }
    Ok(ProfileVector::new(segment.id, values))
}

/// Rescales a profile to zero mean and unit variance. Constant profiles map
/// to all zeros.
pub fn z_normalize(profile: &ProfileVector) -> ProfileVector {
    let n = profile.values.len() as f64;
    let mean = profile.values.iter().sum::<f64>() / n;
    let var = profile.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let values = profile
        .values
        .iter()
        .map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 })
        .collect();
    ProfileVector::new(profile.melt_id, values)
}
