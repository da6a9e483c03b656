//! Agent-based simulation of office-building electricity consumption.
//!
//! Staff move through a building on a 1-minute clock — arriving, walking
//! corridors, working at desks, visiting facilities, leaving — and their
//! presence and habits drive passive light and computer agents. On top of a
//! constant base load, the meter splits consumption into base, lights and
//! computers, aggregates half-hourly, and reports per-appliance utilisation.
//! An experiment harness compares lighting-management strategies and
//! awareness campaigns over paired replications.
//!
//! Start with the runnable examples (`cargo run -p officesim --example <name>`):
//!
//! * `baseline_week` — a default 7-day run with CSV outputs and a summary.
//! * `strategy_comparison` — automated vs staff-controlled lighting on paired
//!   seeds.
//! * `contact_sweep` — awareness campaign (email contact rate) sweep.
//! * `category_breakdown` — base-load calibration and consumption shares.
//! * `population` — stereotype apportionment and roster generation.
//! * `small_world` — the interaction network and its path lengths.
//! * `custom_plan` — authoring, validating and running a custom building plan.
//!
//! The same functionality is scriptable through the thin `officesim` binary
//! (`simulate`, `experiment`, `validate`).

pub mod behavior;
pub mod engine;
pub mod events;
pub mod experiment;
pub mod metering;
pub mod plan;
pub mod population;
pub mod rng;
pub mod social;
pub mod time;

pub use behavior::{
    awareness_to_probabilities, sample_daily_schedule, step_computer, step_light, step_user,
    BehaviorParams, ComputerMode, LeaveKind, LightControl, LightState, UserState,
};
pub use engine::{
    run, run_replications, EngineError, LightingStrategy, RunOutput, Scenario, Simulation,
    TickObserver, TickView,
};
pub use events::EventLog;
pub use metering::{
    aggregate_half_hourly, compute_betas, decompose_shares, instantaneous_power, reconstruct_total,
    verify_reconstruction, BetaReport, CategoryShares, MeterSeries, Window,
};
pub use plan::{default_plan, load_building_plan, BuildingPlan, PlanError, RoomKind};
pub use population::{
    apportion, assign_occupants, generate_population, AwarenessStereotype, EnergyUser, Occupancy,
    PopulationSpec, WorkStereotype,
};
pub use social::{apply_contact, build_small_world, ContactEvent, SocialNetwork};
pub use time::{SimTime, Weekday};
