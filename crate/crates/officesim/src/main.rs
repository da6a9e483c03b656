//! Thin command-line front end. All functionality lives in the library; see
//! the crate examples for the richer programmatic interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use officesim::engine::{EngineError, Scenario, ScenarioError, Simulation};
use officesim::experiment::{
    run_experiment, summarize_run, ExperimentConfig, ExperimentError, ExperimentName,
    ExperimentSpec,
};
use officesim::metering::{beta_csv, half_hourly_csv};
use officesim::plan::BuildingPlan;

#[derive(Parser)]
#[command(
    name = "officesim",
    version,
    about = "Office electricity consumption simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write meter/event/beta CSVs plus a JSON summary.
    Simulate {
        /// Scenario JSON; defaults apply when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Building plan JSON; the bundled default building when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the horizon in days.
        #[arg(long)]
        days: Option<u32>,
        #[arg(long, default_value = "out/simulate")]
        out: PathBuf,
    },
    /// Run a named experiment and write its artifacts.
    Experiment {
        #[arg(long, value_parser = parse_experiment_name)]
        name: ExperimentName,
        /// Experiment config JSON (scenario overrides, n_reps, levels, plan).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the replication count.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Parse and validate a building plan, printing its totals.
    Validate {
        #[arg(long)]
        plan: PathBuf,
    },
}

fn parse_experiment_name(s: &str) -> Result<ExperimentName, String> {
    s.parse()
}

/// Exit code 1: configuration problems. Exit code 2: runtime inconsistencies.
fn exit_code_for(err: &ExperimentError) -> u8 {
    match err {
        ExperimentError::Config(_) | ExperimentError::Io(_) => 1,
        ExperimentError::Engine(e) => match e {
            EngineError::Behavior { .. } => 2,
            _ => 1,
        },
        ExperimentError::Metering(_) => 2,
    }
}

fn main() -> ExitCode {
    // Bad flags are configuration errors (exit 1); help/version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Simulate {
            scenario,
            plan,
            seed,
            days,
            out,
        } => simulate(scenario, plan, seed, days, out),
        Command::Experiment {
            name,
            config,
            reps,
            out,
        } => experiment(name, config, reps, out),
        Command::Validate { plan } => validate(plan),
    }
}

fn load_scenario(path: Option<PathBuf>) -> Result<Scenario, ExperimentError> {
    match path {
        None => Ok(Scenario::default()),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?;
            Scenario::from_json_str(&text).map_err(|e: ScenarioError| {
                ExperimentError::Config(format!("{}: {e}", p.display()))
            })
        }
    }
}

fn load_plan(path: Option<PathBuf>) -> Result<Option<BuildingPlan>, ExperimentError> {
    match path {
        None => Ok(None),
        Some(p) => BuildingPlan::load(&p)
            .map(Some)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display()))),
    }
}

fn simulate(
    scenario_path: Option<PathBuf>,
    plan_path: Option<PathBuf>,
    seed: Option<u64>,
    days: Option<u32>,
    out: PathBuf,
) -> Result<(), ExperimentError> {
    let mut scenario = load_scenario(scenario_path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(days) = days {
        scenario.horizon_days = days;
    }
    scenario.validate().map_err(EngineError::from)?;

    let sim = match load_plan(plan_path)? {
        Some(plan) => Simulation::with_plan(scenario, plan)?,
        None => Simulation::from_scenario(scenario)?,
    };
    let run = sim.run()?;

    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("meter.csv"), run.meter.to_csv())?;
    std::fs::write(
        out.join("half_hourly.csv"),
        half_hourly_csv(&run.half_hourly()?),
    )?;
    std::fs::write(out.join("betas.csv"), beta_csv(&run.betas()?))?;
    std::fs::write(out.join("events.csv"), run.events.to_csv())?;

    let summary = summarize_run(&run.meter)?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(out.join("summary.json"), json.clone() + "\n")?;

    println!("wrote {}", out.display());
    println!(
        "total {:.1} kWh (base {:.1}, lights {:.1}, computers {:.1}); peak {:.0} W at {}",
        summary.total_wh / 1000.0,
        summary.base_wh / 1000.0,
        summary.lights_wh / 1000.0,
        summary.computers_wh / 1000.0,
        summary.peak_w,
        summary.peak_time
    );
    Ok(())
}

fn experiment(
    name: ExperimentName,
    config: Option<PathBuf>,
    reps: Option<usize>,
    out: PathBuf,
) -> Result<(), ExperimentError> {
    let mut spec = match config {
        None => ExperimentSpec::new(name),
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json_str(&text)?.into_spec(name)?
        }
    };
    if let Some(reps) = reps {
        spec.n_reps = reps;
    }
    let out_dir = out.join(name.as_str());
    let summary = run_experiment(&spec, &out_dir)?;
    println!("wrote {}", out_dir.display());
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn validate(plan_path: PathBuf) -> Result<(), ExperimentError> {
    let plan = BuildingPlan::load(&plan_path)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", plan_path.display())))?;
    let totals = plan.totals();
    println!(
        "{} OK: {} rooms, {} lights, {} computers, {} users",
        plan_path.display(),
        totals.rooms,
        totals.lights,
        totals.computers,
        totals.users
    );
    Ok(())
}
