//! Seeded synthetic furnace telemetry with known melt boundaries and template
//! labels, plus matching hourly price and emission series.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, DurationRound, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{
    TelemetryFrame, COOLING_WATER_FLOW, COOLING_WATER_TEMP, CURRENT, ENERGY_COUNTER, FREQUENCY, FURNACE_STATE,
    MELT_TEMPERATURE, MELT_WEIGHT, POWER, VOLTAGE,
};
use crate::metrics::HourlySeries;

const CHARGE_TEMP_C: f64 = 600.0;
const TEMP_RANGE_C: f64 = 1000.0;
const SERIES_PADDING_H: i64 = 24;

/// Shape of a melt's temperature trace over normalized time `u ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    /// Straight ramp to 1500 °C.
    Linear,
    /// Ramp to 1300 °C, a recharge dip to 900 °C, then up to 1500 °C.
    Recharge,
    /// Fast heat to 1600 °C, then a hold that cools to 1450 °C.
    Overshoot,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::Linear, Template::Recharge, Template::Overshoot];

    pub fn temperature(self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        match self {
            Template::Linear => lerp(CHARGE_TEMP_C, 1500.0, u),
            Template::Recharge => {
                if u < 0.4 {
                    lerp(CHARGE_TEMP_C, 1300.0, u / 0.4)
                } else if u < 0.55 {
                    lerp(1300.0, 900.0, (u - 0.4) / 0.15)
                } else {
                    lerp(900.0, 1500.0, (u - 0.55) / 0.45)
                }
            }
            Template::Overshoot => {
                if u < 0.6 {
                    let t = u / 0.6;
                    lerp(CHARGE_TEMP_C, 1600.0, t * (2.0 - t))
                } else {
                    lerp(1600.0, 1450.0, (u - 0.6) / 0.4)
                }
            }
        }
    }

    /// Nominal duration in minutes.
    fn duration_min(self) -> f64 {
        match self {
            Template::Linear => 85.0,
            Template::Recharge => 120.0,
            Template::Overshoot => 100.0,
        }
    }

    /// Mean furnace power in kW.
    fn power_kw(self) -> f64 {
        match self {
            Template::Linear => 4800.0,
            Template::Recharge => 4300.0,
            Template::Overshoot => 4700.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub templates: Vec<Template>,
    pub melts_per_template: usize,
    pub sample_interval_s: i64,
    /// Noise standard deviation as a fraction of the 600–1600 °C range.
    pub noise_frac: f64,
    /// Relative jitter of melt durations.
    pub duration_jitter: f64,
    pub start: DateTime<Utc>,
    /// Probability that a voltage reading is missing.
    pub voltage_dropout: f64,
    pub cooling_circuits: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            templates: Template::ALL.to_vec(),
            melts_per_template: 20,
            sample_interval_s: 60,
            noise_frac: 0.01,
            duration_jitter: 0.05,
            start: Utc.with_ymd_and_hms(2024, 1, 8, 6, 0, 0).unwrap(),
            voltage_dropout: 0.01,
            cooling_circuits: 2,
        }
    }
}

/// Generated telemetry and its ground truth.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub frame: TelemetryFrame,
    /// Template index per melt, in time order.
    pub labels: Vec<usize>,
    /// Row index of each melt's pour sample.
    pub endpoints: Vec<usize>,
    pub prices: HourlySeries,
    pub emissions: HourlySeries,
}

#[derive(Default)]
struct Columns {
    times: Vec<DateTime<Utc>>,
    cols: BTreeMap<String, Vec<Option<f64>>>,
}

impl Columns {
    fn push(&mut self, t: DateTime<Utc>, row: &[(&str, Option<f64>)]) {
        self.times.push(t);
        for (name, v) in row {
            self.cols.entry(name.to_string()).or_default().push(*v);
        }
    }
}

pub fn generate(config: &SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_frac * TEMP_RANGE_C).expect("finite sigma");
    let power_noise = Normal::new(0.0, 0.02).expect("finite sigma");

    let mut order: Vec<usize> = (0..config.templates.len())
        .flat_map(|t| std::iter::repeat_n(t, config.melts_per_template))
        .collect();
    order.shuffle(&mut rng);

    let cooling_temp: Vec<String> = (0..config.cooling_circuits)
        .map(|i| format!("{COOLING_WATER_TEMP}[{i}]"))
        .collect();
    let cooling_flow: Vec<String> = (0..config.cooling_circuits)
        .map(|i| format!("{COOLING_WATER_FLOW}[{i}]"))
        .collect();

    let step = Duration::seconds(config.sample_interval_s);
    let mut out = Columns::default();
    let mut endpoints = Vec::with_capacity(order.len());
    let mut t = config.start;
    let mut counter = 0.0;
    let mut push_row = |out: &mut Columns, rng: &mut ChaCha8Rng, t, temp: f64, power: f64, weight: f64, state: f64| {
        counter += power * config.sample_interval_s as f64 / 3600.0;
        let voltage = (!rng.random_bool(config.voltage_dropout)).then(|| 3000.0 + rng.random_range(-20.0..20.0));
        let mut row: Vec<(&str, Option<f64>)> = vec![
            (MELT_TEMPERATURE, Some(temp)),
            (MELT_WEIGHT, Some(weight)),
            (POWER, Some(power)),
            (ENERGY_COUNTER, Some(counter)),
            (VOLTAGE, voltage),
            (CURRENT, voltage.map(|v| power * 1000.0 / v)),
            (FREQUENCY, Some(250.0 + rng.random_range(-1.0..1.0))),
            (FURNACE_STATE, Some(state)),
        ];
        for (tn, fln) in cooling_temp.iter().zip(&cooling_flow) {
            row.push((tn, Some(30.0 + power / 500.0 + rng.random_range(-0.5..0.5))));
            row.push((fln, Some(40.0 + rng.random_range(-1.0..1.0))));
        }
        out.push(t, &row);
    };

    for &label in &order {
        let template = config.templates[label];
        let jitter = 1.0 + rng.random_range(-config.duration_jitter..=config.duration_jitter);
        let samples = ((template.duration_min() * 60.0 * jitter) / config.sample_interval_s as f64).round() as usize;
        let samples = samples.max(12);
        let weight = 10.0 + rng.random_range(-0.5..0.5);
        let power_level = template.power_kw() * (1.0 + rng.random_range(-0.03..0.03));
        for s in 0..samples {
            let u = s as f64 / (samples - 1) as f64;
            let mut temp = template.temperature(u) + noise.sample(&mut rng);
            if s == samples - 1 {
                // the pour sample must be hot enough to register
                temp = temp.max(1450.0);
            }
            let power = power_level * (1.0 + power_noise.sample(&mut rng));
            push_row(&mut out, &mut rng, t, temp, power.max(0.0), weight, 1.0);
            t += step;
        }
        endpoints.push(out.times.len() - 1);
        // idle gap before the next charge
        t += Duration::minutes(rng.random_range(10..=40));
    }
    // cold tail so the last pour shows a drop
    for _ in 0..5 {
        let temp = CHARGE_TEMP_C + noise.sample(&mut rng);
        push_row(&mut out, &mut rng, t, temp, 0.0, 0.0, 0.0);
        t += step;
    }

    let frame = TelemetryFrame::new(out.times.clone(), out.cols).expect("generator emits a valid frame");
    let first_hour = config.start.duration_trunc(Duration::hours(1)).expect("in range");
    let hours = ((t - first_hour).num_seconds() / 3600 + 1 + SERIES_PADDING_H) as usize;
    let (prices, emissions) = hourly_series(&mut rng, first_hour, hours);
    SynthData {
        frame,
        labels: order,
        endpoints,
        prices,
        emissions,
    }
}

/// Daily-cycle spot price (DKK/kWh) and carbon intensity (kg/kWh).
fn hourly_series(rng: &mut ChaCha8Rng, start: DateTime<Utc>, hours: usize) -> (HourlySeries, HourlySeries) {
    use std::f64::consts::TAU;
    let mut prices = Vec::with_capacity(hours);
    let mut intensity = Vec::with_capacity(hours);
    for h in 0..hours {
        let hour_of_day = (start + Duration::hours(h as i64)).timestamp() / 3600 % 24;
        let phase = TAU * hour_of_day as f64 / 24.0;
        prices.push(0.8 - 0.35 * phase.cos() + rng.random_range(-0.05..0.05));
        intensity.push(0.14 - 0.05 * (phase + 0.5).cos() + rng.random_range(-0.01..0.01));
    }
    (
        HourlySeries::hourly(start, prices).expect("hour-aligned"),
        HourlySeries::hourly(start, intensity).expect("hour-aligned"),
    )
}
