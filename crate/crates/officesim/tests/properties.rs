//! Property tests for the arithmetic-heavy invariants.

use proptest::prelude::*;

use officesim::behavior::awareness_to_probabilities;
use officesim::metering::{aggregate_half_hourly, PowerSample};
use officesim::plan::BuildingPlan;
use officesim::population::apportion;

fn normalized_mix(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0..100.0f64, len).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / sum).collect()
    })
}

proptest! {
    #[test]
    fn apportionment_is_exact_and_tight(
        n in 0usize..500,
        mix in (2usize..6).prop_flat_map(normalized_mix),
    ) {
        let counts = apportion(n, &mix);
        prop_assert_eq!(counts.iter().sum::<usize>(), n);
        for (count, fraction) in counts.iter().zip(&mix) {
            let quota = n as f64 * fraction;
            prop_assert!(
                (*count as f64 - quota).abs() < 1.0,
                "count {} vs quota {}", count, quota
            );
        }
    }

    #[test]
    fn banding_is_total_and_monotone(a in 0.0..=100.0f64, b in 0.0..=100.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (p_off_lo, p_email_lo) = awareness_to_probabilities(lo).unwrap();
        let (p_off_hi, p_email_hi) = awareness_to_probabilities(hi).unwrap();
        prop_assert!(p_off_lo <= p_off_hi);
        prop_assert!(p_email_lo <= p_email_hi);
        prop_assert!((0.0..=1.0).contains(&p_off_lo) && (0.0..=1.0).contains(&p_email_lo));
    }

    #[test]
    fn half_hourly_binning_conserves_energy(
        samples in prop::sample::select(vec![30usize, 60, 90, 300, 1440]).prop_flat_map(|len| {
            prop::collection::vec(
                (0.0..5000.0f64, 0.0..20000.0f64, 0.0..15000.0f64),
                len,
            )
        })
    ) {
        let series: Vec<PowerSample> = samples
            .into_iter()
            .map(|(base_w, lights_w, computers_w)| PowerSample { base_w, lights_w, computers_w })
            .collect();
        let bins = aggregate_half_hourly(&series).unwrap();
        let from_bins: f64 = bins.iter().map(|b| b.wh_total).sum();
        let direct: f64 = series.iter().map(|s| s.total_w() / 60.0).sum();
        prop_assert!((from_bins - direct).abs() <= 1e-12 * direct.max(1.0));
        // Category additivity bin by bin.
        for b in &bins {
            prop_assert!((b.wh_base + b.wh_lights + b.wh_computers - b.wh_total).abs() < 1e-9);
        }
    }

    #[test]
    fn plans_round_trip_through_json(
        offices in 1usize..6,
        lights in 0u32..5,
        computers in 0u32..4,
        corridors in 0usize..3,
    ) {
        let mut rooms = Vec::new();
        for i in 0..offices {
            rooms.push(format!(
                r#"{{"id": "office-{i}", "kind": "office", "lights": {lights}, "computers": {computers}}}"#
            ));
        }
        for i in 0..corridors {
            rooms.push(format!(
                r#"{{"id": "corridor-{i}", "kind": "corridor", "lights": {lights}}}"#
            ));
        }
        let doc = format!(r#"{{"rooms": [{}]}}"#, rooms.join(","));
        let plan = BuildingPlan::from_json_str(&doc).unwrap();
        let again = BuildingPlan::from_json_str(&plan.to_json_string()).unwrap();
        prop_assert_eq!(plan, again);
    }
}
