//! One week of the default building under the automated lighting strategy.
//!
//! Runs the bundled 47-room building with 213 staff for seven simulated days,
//! prints a daily consumption table, and writes the meter, half-hourly,
//! per-appliance utilisation and event CSVs.
//!
//! ```bash
//! cargo run -p officesim --example baseline_week
//! ```

use officesim::engine::{Scenario, Simulation};
use officesim::experiment::summarize_run;
use officesim::metering::{beta_csv, half_hourly_csv, Window};
use officesim::time::Weekday;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::default();
    println!(
        "simulating {} days, seed {}, base load {} W",
        scenario.horizon_days, scenario.seed, scenario.base_load_w
    );

    let sim = Simulation::from_scenario(scenario)?;
    let started = std::time::Instant::now();
    let run = sim.run()?;
    println!(
        "done in {:?} ({} one-minute ticks)\n",
        started.elapsed(),
        run.meter.len()
    );

    println!("day        total kWh   lights kWh   computers kWh");
    for day in 0..7u64 {
        let window = Window {
            ranges: vec![(day * 1440, (day + 1) * 1440)],
        };
        let (base, lights, computers) = run.meter.window_wh(&window);
        println!(
            "{:9} {:11.1} {:12.1} {:15.1}",
            format!("{:?}", Weekday::from_day_index(day)),
            (base + lights + computers) / 1000.0,
            lights / 1000.0,
            computers / 1000.0
        );
    }

    let summary = summarize_run(&run.meter)?;
    println!(
        "\nweek total {:.1} kWh; peak {:.0} W in the half hour starting {}",
        summary.total_wh / 1000.0,
        summary.peak_w,
        summary.peak_time
    );

    let out = std::path::Path::new("out/examples/baseline_week");
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("meter.csv"), run.meter.to_csv())?;
    std::fs::write(
        out.join("half_hourly.csv"),
        half_hourly_csv(&run.half_hourly()?),
    )?;
    std::fs::write(out.join("betas.csv"), beta_csv(&run.betas()?))?;
    std::fs::write(out.join("events.csv"), run.events.to_csv())?;
    println!("wrote CSVs to {}", out.display());
    Ok(())
}
