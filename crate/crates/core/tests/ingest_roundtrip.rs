use std::collections::BTreeMap;

use chrono::{Duration, TimeZone, Utc};
use proptest::prelude::*;

use meltline::ingest::{
    completeness_report, read_telemetry, TelemetryFrame, TelemetrySchema, ENERGY_COUNTER, MELT_TEMPERATURE, POWER,
};

fn frame_strategy() -> impl Strategy<Value = TelemetryFrame> {
    (1usize..40).prop_flat_map(|rows| {
        (
            prop::collection::vec(1i64..10_000, rows),
            prop::collection::vec(prop::option::weighted(0.9, -1e6f64..1e6), rows),
            prop::collection::vec(prop::option::weighted(0.5, 0.0f64..1e4), rows),
        )
            .prop_map(|(gaps, temps, power)| {
                let t0 = Utc.with_ymd_and_hms(2023, 6, 1, 0, 0, 0).unwrap();
                let mut t = t0;
                let times = gaps
                    .iter()
                    .map(|g| {
                        t += Duration::milliseconds(*g * 7);
                        t
                    })
                    .collect();
                let mut cols = BTreeMap::new();
                cols.insert(MELT_TEMPERATURE.to_string(), temps);
                cols.insert(POWER.to_string(), power);
                TelemetryFrame::new(times, cols).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(frame in frame_strategy()) {
        let mut buf = Vec::new();
        frame.write_csv(&mut buf).unwrap();
        let schema = TelemetrySchema::identity([MELT_TEMPERATURE, POWER]).unwrap();
        let back = read_telemetry(buf.as_slice(), &schema, b',').unwrap();
        prop_assert_eq!(back.timestamps(), frame.timestamps());
        prop_assert_eq!(back.column(MELT_TEMPERATURE), frame.column(MELT_TEMPERATURE));
        prop_assert_eq!(back.column(POWER), frame.column(POWER));
    }

    #[test]
    fn completeness_fractions_are_bounded(frame in frame_strategy()) {
        let report = completeness_report(&frame).unwrap();
        prop_assert_eq!(report.total_rows, frame.len());
        for (field, fraction) in &report.per_field {
            prop_assert!((0.0..=1.0).contains(fraction), "{field}: {fraction}");
        }
    }
}

#[test]
fn shuffled_rows_and_source_names() {
    let csv = "Time;Temp;kWh\n\
               2024-01-01T00:02:00Z;1510;12\n\
               2024-01-01T00:00:00;1490;10\n\
               2024-01-01T00:01:00+00:00;NaN;11\n\
               2024-01-01T00:01:00+00:00;NaN;11\n";
    let map = BTreeMap::from([
        ("timestamp".to_string(), "Time".to_string()),
        (MELT_TEMPERATURE.to_string(), "Temp".to_string()),
        (ENERGY_COUNTER.to_string(), "kWh".to_string()),
    ]);
    let schema = TelemetrySchema::new(map, []).unwrap();
    let frame = read_telemetry(csv.as_bytes(), &schema, b';').unwrap();
    assert_eq!(frame.len(), 3);
    assert_eq!(frame.metadata().duplicate_rows_removed, 1);
    assert_eq!(frame.column(MELT_TEMPERATURE).unwrap(), &[Some(1490.0), None, Some(1510.0)]);
    assert_eq!(frame.column(ENERGY_COUNTER).unwrap(), &[Some(10.0), Some(11.0), Some(12.0)]);
}
