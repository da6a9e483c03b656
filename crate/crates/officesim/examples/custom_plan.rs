//! Authoring a building plan by hand and simulating it.
//!
//! Plans are JSON documents: rooms with their lights and computers (counts or
//! explicit id lists) plus optional occupant seating. Omitting `occupants`
//! leaves seating to the capacity-aware assigner.
//!
//! ```bash
//! cargo run -p officesim --example custom_plan
//! ```

use officesim::engine::{Scenario, Simulation};
use officesim::plan::BuildingPlan;
use officesim::population::PopulationSpec;

const PLAN: &str = r#"{
    "rooms": [
        {"id": "corridor-1", "kind": "corridor", "lights": 4},
        {"id": "office-a", "kind": "office", "lights": 2, "computers": 2},
        {"id": "office-b", "kind": "office", "lights": 2, "computers": 1},
        {"id": "facility-kitchen", "kind": "facility", "lights": 2}
    ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = BuildingPlan::from_json_str(PLAN)?;
    let totals = plan.totals();
    println!(
        "plan OK: {} rooms, {} lights, {} computers",
        totals.rooms, totals.lights, totals.computers
    );

    // Five people share the two offices; three get a workstation.
    let scenario = Scenario {
        horizon_days: 1,
        base_load_w: 200.0,
        population: PopulationSpec {
            n_users: 5,
            ..PopulationSpec::default()
        },
        ..Scenario::default()
    };
    let sim = Simulation::with_plan(scenario, plan)?;
    for user in &sim.roster {
        println!(
            "  {} ({:?}/{:?}) sits in {}{}",
            user.id,
            user.work_stereotype,
            user.awareness_stereotype,
            sim.occupancy.office[&user.id],
            sim.occupancy
                .own_computer
                .get(&user.id)
                .map(|c| format!(", owns {c}"))
                .unwrap_or_default()
        );
    }

    let run = sim.run()?;
    let total_wh = run.meter.integrated_total_wh();
    println!("\none simulated Monday: {total_wh:.0} Wh total");
    println!("first events of the day:");
    for record in run.events.records.iter().take(12) {
        println!(
            "  t={:4} {:12} {}",
            record.tick,
            run.events.agent_name(record.agent),
            record.kind.name()
        );
    }
    Ok(())
}
