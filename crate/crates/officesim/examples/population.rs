//! Roster generation: stereotype apportionment and awareness bands.
//!
//! The mix fractions are apportioned exactly (largest remainder), and each
//! user draws an awareness value uniformly from their stereotype's band. Work
//! and awareness stereotypes are assigned independently of each other.
//!
//! ```bash
//! cargo run -p officesim --example population
//! ```

use officesim::behavior::awareness_to_probabilities;
use officesim::plan::default_plan;
use officesim::population::{
    assign_occupants, generate_population, AwarenessStereotype, PopulationSpec, WorkStereotype,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = PopulationSpec::default();
    let roster = generate_population(&spec, 42)?;
    println!("generated {} users (seed 42)\n", roster.len());

    println!("work stereotype      count   arrival window");
    for kind in WorkStereotype::ALL {
        let count = roster.iter().filter(|u| u.work_stereotype == kind).count();
        let (lo, hi) = kind.arrival_window();
        println!(
            "{:20} {count:5}   {:02}:{:02}-{:02}:{:02}",
            format!("{kind:?}"),
            lo / 60,
            lo % 60,
            hi / 60,
            hi % 60
        );
    }

    println!("\nawareness stereotype   count   band        p(switch off)   p(email)");
    for kind in AwarenessStereotype::ALL {
        let count = roster
            .iter()
            .filter(|u| u.awareness_stereotype == kind)
            .count();
        let (lo, hi) = kind.awareness_range();
        println!(
            "{:22} {count:5}   [{lo:3.0},{hi:3.0}] {:14.2} {:10.2}",
            format!("{kind:?}"),
            kind.p_switch_off(),
            kind.p_email()
        );
    }

    let champion = roster
        .iter()
        .max_by(|a, b| a.awareness.partial_cmp(&b.awareness).unwrap())
        .unwrap();
    let (p_off, p_email) = awareness_to_probabilities(champion.awareness)?;
    println!(
        "\nmost aware: {} at {:.1} -> switch-off {p_off}, email {p_email}",
        champion.id, champion.awareness
    );

    let occupancy = assign_occupants(&default_plan(), &roster, 42)?;
    println!(
        "seated all {} users over the default building; {} of them own a workstation",
        occupancy.office.len(),
        occupancy.own_computer.len()
    );
    Ok(())
}
