//! Where the electricity goes: base vs lights vs computers.
//!
//! Sweeps the constant base load until the simulated share breakdown sits as
//! close as possible to the reference targets (92% base at night and on
//! weekends; 55% lights and 7% computers during weekday daytime), then prints
//! the calibrated shares per window.
//!
//! ```bash
//! cargo run -p officesim --example category_breakdown
//! ```

use officesim::engine::Scenario;
use officesim::experiment::{
    calibrate_base_load, DAY_COMPUTERS_TARGET_PCT, DAY_LIGHTS_TARGET_PCT, NIGHT_BASE_TARGET_PCT,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n_reps = 8;
    println!("calibrating the base load over {n_reps} replications...");
    let calibration = calibrate_base_load(&Scenario::default(), None, n_reps, 40_000.0, 25.0)?;
    let best = calibration.best;
    println!("calibrated base load: {} W\n", best.base_load_w);

    println!("window               base%   lights%   computers%");
    for (name, shares) in [
        ("nights and weekends", calibration.night_shares),
        ("weekday daytime", calibration.day_shares),
    ] {
        println!(
            "{name:20} {:6.1} {:9.1} {:12.1}",
            shares.base_pct, shares.lights_pct, shares.computers_pct
        );
    }

    println!("\ntargets: night base {NIGHT_BASE_TARGET_PCT}%, daytime lights {DAY_LIGHTS_TARGET_PCT}%, daytime computers {DAY_COMPUTERS_TARGET_PCT}%");
    println!(
        "tolerance-weighted squared error at the calibrated point: {:.3}",
        best.squared_error
    );
    println!("\nnearby grid points:");
    println!("base W    night base%   day lights%   day computers%   error");
    for point in calibration
        .grid
        .iter()
        .filter(|p| (p.base_load_w - best.base_load_w).abs() <= 2000.0)
        .step_by(20)
    {
        println!(
            "{:7} {:12.1} {:13.1} {:16.1} {:8.3}",
            point.base_load_w,
            point.night_base_pct,
            point.day_lights_pct,
            point.day_computers_pct,
            point.squared_error
        );
    }
    Ok(())
}
