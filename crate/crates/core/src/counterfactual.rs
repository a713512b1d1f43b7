//! Best-practice replay: every melt re-priced as if it had run with the best
//! cluster's average duration and energy from its recorded start time.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterModel;
use crate::mcdm::RankingTable;
use crate::metrics::{
    melt_cost_and_emissions, window_cost_and_emissions, DecisionMatrix, EmissionSeries, MetricsError, PriceSeries,
};
use crate::segment::MeltSegment;

#[derive(Debug, Error)]
pub enum CounterfactualError {
    #[error("ranking produced no best cluster")]
    NoBestCluster,
    #[error("cluster {0} is not in the decision matrix")]
    UnknownCluster(usize),
    #[error("best-practice profile value {field} must be positive, got {value}")]
    NonPositiveProfile { field: &'static str, value: f64 },
    #[error("current {0} total is zero")]
    ZeroBaseline(&'static str),
    #[error("melt {0} is not assigned in the cluster model")]
    Unassigned(usize),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestPracticeProfile {
    pub cluster_id: usize,
    pub avg_duration_s: f64,
    pub avg_energy_kwh: f64,
    pub avg_kwh_per_tonne: f64,
}

impl BestPracticeProfile {
    /// Reads the first three decision-matrix columns of `cluster`.
    pub fn from_matrix(matrix: &DecisionMatrix, cluster: usize) -> Result<Self, CounterfactualError> {
        let row = matrix
            .row_of(cluster)
            .ok_or(CounterfactualError::UnknownCluster(cluster))?;
        Self::new(cluster, row[0], row[1], row[2])
    }

    pub fn new(
        cluster_id: usize,
        avg_duration_s: f64,
        avg_energy_kwh: f64,
        avg_kwh_per_tonne: f64,
    ) -> Result<Self, CounterfactualError> {
        for (field, value) in [
            ("avg_duration_s", avg_duration_s),
            ("avg_energy_kWh", avg_energy_kwh),
            ("avg_kwh_per_tonne", avg_kwh_per_tonne),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CounterfactualError::NonPositiveProfile { field, value });
            }
        }
        Ok(Self {
            cluster_id,
            avg_duration_s,
            avg_energy_kwh,
            avg_kwh_per_tonne,
        })
    }
}

pub fn best_cluster(ranking: &RankingTable) -> Result<usize, CounterfactualError> {
    ranking.best().ok_or(CounterfactualError::NoBestCluster)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeltReplay {
    pub melt_id: usize,
    pub cluster: usize,
    pub actual_energy_kwh: f64,
    pub actual_cost_dkk: f64,
    pub actual_co2_kg: f64,
    pub bp_energy_kwh: f64,
    pub bp_cost_dkk: f64,
    pub bp_co2_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTotals {
    pub electricity_cost_dkk: f64,
    pub carbon_cost_dkk: f64,
    pub co2_kg: f64,
    pub total_cost_dkk: f64,
}

impl ModeTotals {
    /// Carbon cost and total are derived from `co2_kg` and the tax.
    pub fn from_totals(electricity_cost_dkk: f64, co2_kg: f64, tax_dkk_per_kg: f64) -> Self {
        let carbon_cost_dkk = co2_kg * tax_dkk_per_kg;
        Self {
            electricity_cost_dkk,
            carbon_cost_dkk,
            co2_kg,
            total_cost_dkk: electricity_cost_dkk + carbon_cost_dkk,
        }
    }
}

/// Relative reductions in percent, full precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentChanges {
    pub electricity_cost: f64,
    pub carbon_cost: f64,
    pub co2: f64,
    pub total_cost: f64,
}

impl PercentChanges {
    pub fn as_array(&self) -> [f64; 4] {
        [self.electricity_cost, self.carbon_cost, self.co2, self.total_cost]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualReport {
    pub best: Option<BestPracticeProfile>,
    pub tax_dkk_per_kg: f64,
    pub melts: Vec<MeltReplay>,
    pub current: ModeTotals,
    pub best_practice: ModeTotals,
}

impl CounterfactualReport {
    /// A report carrying only totals, for checking the arithmetic layer.
    pub fn from_totals(current: ModeTotals, best_practice: ModeTotals, tax_dkk_per_kg: f64) -> Self {
        Self {
            best: None,
            tax_dkk_per_kg,
            melts: Vec::new(),
            current,
            best_practice,
        }
    }

    /// Rows: current practice, best practice, percentage change.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<(), CounterfactualError> {
        let pct = percent_changes(self)?;
        writeln!(w, "operating_mode,electricity_cost_DKK,carbon_cost_DKK,co2_kg,total_cost_DKK")?;
        for (label, t) in [("current practice", &self.current), ("best practice", &self.best_practice)] {
            writeln!(
                w,
                "{label},{:.2},{:.2},{:.2},{:.2}",
                t.electricity_cost_dkk, t.carbon_cost_dkk, t.co2_kg, t.total_cost_dkk
            )?;
        }
        let cells: Vec<String> = pct.as_array().iter().map(|p| format_percent(*p)).collect();
        writeln!(w, "percentage change,{}", cells.join(","))?;
        Ok(())
    }

    pub fn write_melts<W: Write>(&self, mut w: W) -> Result<(), CounterfactualError> {
        writeln!(
            w,
            "melt_id,cluster,actual_energy_kWh,actual_cost_DKK,actual_co2_kg,bp_energy_kWh,bp_cost_DKK,bp_co2_kg"
        )?;
        for m in &self.melts {
            writeln!(
                w,
                "{},{},{:.5},{:.5},{:.5},{:.5},{:.5},{:.5}",
                m.melt_id,
                m.cluster,
                m.actual_energy_kwh,
                m.actual_cost_dkk,
                m.actual_co2_kg,
                m.bp_energy_kwh,
                m.bp_cost_dkk,
                m.bp_co2_kg
            )?;
        }
        Ok(())
    }

    pub fn save(&self, table: &Path, melts: &Path) -> Result<(), CounterfactualError> {
        let mut buf = Vec::new();
        self.write_table(&mut buf)?;
        std::fs::write(table, buf)?;
        let mut buf = Vec::new();
        self.write_melts(&mut buf)?;
        std::fs::write(melts, buf)?;
        Ok(())
    }
}

/// Replays every melt, including best-cluster members, under `best`.
pub fn project_best_practice(
    segments: &[MeltSegment],
    model: &ClusterModel,
    best: &BestPracticeProfile,
    prices: &PriceSeries,
    emissions: &EmissionSeries,
    tax_dkk_per_kg: f64,
) -> Result<CounterfactualReport, CounterfactualError> {
    let mut ordered: Vec<&MeltSegment> = segments.iter().collect();
    ordered.sort_by_key(|s| s.id);
    let melts = ordered
        .par_iter()
        .map(|seg| {
            let cluster = model.cluster_of(seg.id).ok_or(CounterfactualError::Unassigned(seg.id))?;
            let actual = melt_cost_and_emissions(seg, prices, emissions)?;
            let bp = window_cost_and_emissions(
                seg.start_time,
                best.avg_duration_s,
                best.avg_energy_kwh,
                prices,
                emissions,
            )?;
            Ok(MeltReplay {
                melt_id: seg.id,
                cluster,
                actual_energy_kwh: seg.energy_kwh,
                actual_cost_dkk: actual.cost_dkk,
                actual_co2_kg: actual.co2_kg,
                bp_energy_kwh: best.avg_energy_kwh,
                bp_cost_dkk: bp.cost_dkk,
                bp_co2_kg: bp.co2_kg,
            })
        })
        .collect::<Result<Vec<_>, CounterfactualError>>()?;

    let sum = |f: fn(&MeltReplay) -> f64| melts.iter().map(f).sum::<f64>();
    let current = ModeTotals::from_totals(sum(|m| m.actual_cost_dkk), sum(|m| m.actual_co2_kg), tax_dkk_per_kg);
    let best_practice = ModeTotals::from_totals(sum(|m| m.bp_cost_dkk), sum(|m| m.bp_co2_kg), tax_dkk_per_kg);
    Ok(CounterfactualReport {
        best: Some(*best),
        tax_dkk_per_kg,
        melts,
        current,
        best_practice,
    })
}

pub fn percent_change(current: f64, best: f64) -> Option<f64> {
    (current != 0.0).then(|| (current - best) / current * 100.0)
}

pub fn percent_changes(report: &CounterfactualReport) -> Result<PercentChanges, CounterfactualError> {
    let c = &report.current;
    let b = &report.best_practice;
    let pc = |cur, best, name| percent_change(cur, best).ok_or(CounterfactualError::ZeroBaseline(name));
    Ok(PercentChanges {
        electricity_cost: pc(c.electricity_cost_dkk, b.electricity_cost_dkk, "electricity cost")?,
        carbon_cost: pc(c.carbon_cost_dkk, b.carbon_cost_dkk, "carbon cost")?,
        co2: pc(c.co2_kg, b.co2_kg, "CO2")?,
        total_cost: pc(c.total_cost_dkk, b.total_cost_dkk, "total cost")?,
    })
}

/// Half-up rounding to two decimals (ties away from zero).
pub fn round_half_up_2(x: f64) -> f64 {
    // the epsilon absorbs representation error on inputs like 8.595
    let cents = (x.abs() * 100.0 + 0.5 + 1e-9).floor();
    if cents == 0.0 {
        0.0
    } else {
        cents.copysign(x) / 100.0
    }
}

pub fn format_percent(x: f64) -> String {
    format!("{:.2}", round_half_up_2(x))
}
