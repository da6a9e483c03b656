//! Experiment harness: reproducible multi-replication studies with CSV and
//! JSON artifacts.
//!
//! Four named experiments ship with the crate:
//!
//! * `baseline_automated` — weekly/daily consumption profiles under the
//!   sensor-automated strategy.
//! * `staff_vs_automated` — paired-seed comparison of the two lighting
//!   strategies (same roster, schedules and excursions in both arms; only the
//!   strategy differs) with a two-sided sign test.
//! * `contact_sweep` — total weekly consumption across email contact-rate
//!   levels, paired seeds across levels.
//! * `category_breakdown` — base-load calibration against the reference share
//!   targets, then consumption shares by category and window.
//!
//! Re-running an experiment with the same spec overwrites its artifacts with
//! byte-identical files.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    replication_seeds, EngineError, LightingStrategy, RunOutput, Scenario, Simulation,
};
use crate::metering::{
    decompose_shares, CategoryShares, HalfHourBin, MeterSeries, MeteringError, Window,
};
use crate::plan::BuildingPlan;
use crate::time::{SimTime, MINUTES_PER_DAY};

/// Reference share targets for base-load calibration: base share of
/// nights-and-weekends energy, and lights/computers shares of weekday-daytime
/// energy, in percent, each with the tolerance the calibration error weights
/// it by.
pub const NIGHT_BASE_TARGET_PCT: f64 = 92.0;
pub const NIGHT_BASE_TOL_PCT: f64 = 5.0;
pub const DAY_LIGHTS_TARGET_PCT: f64 = 55.0;
pub const DAY_LIGHTS_TOL_PCT: f64 = 10.0;
pub const DAY_COMPUTERS_TARGET_PCT: f64 = 7.0;
pub const DAY_COMPUTERS_TOL_PCT: f64 = 5.0;

/// A weekday counts as a peak day when its tallest half-hour rises above this
/// fraction of the week's tallest, base load excluded.
pub const PEAK_PROMINENCE: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    BaselineAutomated,
    StaffVsAutomated,
    ContactSweep,
    CategoryBreakdown,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 4] = [
        ExperimentName::BaselineAutomated,
        ExperimentName::StaffVsAutomated,
        ExperimentName::ContactSweep,
        ExperimentName::CategoryBreakdown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::BaselineAutomated => "baseline_automated",
            ExperimentName::StaffVsAutomated => "staff_vs_automated",
            ExperimentName::ContactSweep => "contact_sweep",
            ExperimentName::CategoryBreakdown => "category_breakdown",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown experiment `{s}`; expected one of {}",
                    ExperimentName::ALL.map(|n| n.as_str()).join(", ")
                )
            })
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metering(#[from] MeteringError),
    #[error("failed writing artifacts: {0}")]
    Io(#[from] std::io::Error),
    #[error("experiment config: {0}")]
    Config(String),
}

/// A fully resolved experiment: scenario, replication count, and (for sweeps)
/// the parameter levels. `scenario.seed` doubles as the replication seed base.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub scenario: Scenario,
    pub n_reps: usize,
    pub contact_levels: Vec<f64>,
    pub plan: Option<BuildingPlan>,
}

impl ExperimentSpec {
    /// Defaults for a named experiment: 20 replications, default scenario;
    /// the contact sweep runs under staff-controlled lighting (that is where
    /// awareness moves consumption) over 0, 1, 4 and 16 emails/user/day.
    pub fn new(name: ExperimentName) -> Self {
        let mut scenario = Scenario::default();
        if name == ExperimentName::ContactSweep {
            scenario.lighting_strategy = LightingStrategy::StaffControlled;
        }
        ExperimentSpec {
            name,
            scenario,
            n_reps: 20,
            contact_levels: vec![0.0, 1.0, 4.0, 16.0],
            plan: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_reps == 0 {
            return Err(ExperimentError::Config("n_reps must be >= 1".into()));
        }
        if self.name == ExperimentName::ContactSweep && self.contact_levels.len() < 2 {
            return Err(ExperimentError::Config(
                "contact_sweep needs at least 2 levels".into(),
            ));
        }
        self.scenario.validate().map_err(EngineError::from)?;
        Ok(())
    }
}

/// The JSON config file accepted by `officesim experiment --config`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<Scenario>,
    pub n_reps: Option<usize>,
    pub contact_levels: Option<Vec<f64>>,
    pub plan_path: Option<std::path::PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn into_spec(self, name: ExperimentName) -> Result<ExperimentSpec, ExperimentError> {
        let mut spec = ExperimentSpec::new(name);
        if let Some(s) = self.scenario {
            spec.scenario = s;
        }
        if let Some(n) = self.n_reps {
            spec.n_reps = n;
        }
        if let Some(levels) = self.contact_levels {
            spec.contact_levels = levels;
        }
        if let Some(path) = self.plan_path {
            spec.plan = Some(BuildingPlan::load(path).map_err(EngineError::from)?);
        }
        spec.validate()?;
        Ok(spec)
    }
}

// ---------------------------------------------------------------------------
// Run summaries

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub total_wh: f64,
    pub base_wh: f64,
    pub lights_wh: f64,
    pub computers_wh: f64,
    pub shares: CategoryShares,
    /// Tallest half-hour bin, expressed as mean power.
    pub peak_w: f64,
    pub peak_bin_start_min: u64,
    pub peak_time: String,
}

/// Per-run totals plus cross-run mean and standard deviation.
#[derive(Clone, Debug, Serialize)]
pub struct SetSummary {
    pub runs: Vec<RunSummary>,
    pub mean_total_wh: f64,
    pub stdev_total_wh: f64,
}

pub fn summarize_run(series: &MeterSeries) -> Result<RunSummary, MeteringError> {
    let bins = series.half_hourly()?;
    let window = Window::full(series.len() as u64);
    let (base_wh, lights_wh, computers_wh) = series.window_wh(&window);
    let shares = decompose_shares(series, &window)?;
    let peak = bins
        .iter()
        .max_by(|a, b| a.mean_w().partial_cmp(&b.mean_w()).unwrap())
        .ok_or(MeteringError::EmptyWindow)?;
    Ok(RunSummary {
        total_wh: base_wh + lights_wh + computers_wh,
        base_wh,
        lights_wh,
        computers_wh,
        shares,
        peak_w: peak.mean_w(),
        peak_bin_start_min: peak.start_min,
        peak_time: SimTime(peak.start_min).label(),
    })
}

pub fn summarize(series: &[&MeterSeries]) -> Result<SetSummary, MeteringError> {
    let runs: Vec<RunSummary> = series
        .iter()
        .map(|s| summarize_run(s))
        .collect::<Result<_, _>>()?;
    let totals: Vec<f64> = runs.iter().map(|r| r.total_wh).collect();
    let mean = totals.iter().sum::<f64>() / totals.len().max(1) as f64;
    let var = if totals.len() > 1 {
        totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (totals.len() - 1) as f64
    } else {
        0.0
    };
    Ok(SetSummary {
        runs,
        mean_total_wh: mean,
        stdev_total_wh: var.sqrt(),
    })
}

/// Exact two-sided sign test: probability of a count at least as extreme as
/// `k` under Binomial(n, 1/2).
pub fn sign_test_two_sided(k: usize, n: usize) -> f64 {
    assert!(k <= n && n <= 170, "exact test only for small n");
    let mut coeff = vec![0f64; n + 1];
    coeff[0] = 1.0;
    for i in 1..=n {
        for j in (1..=i).rev() {
            coeff[j] += coeff[j - 1];
        }
    }
    let denom = 2f64.powi(n as i32);
    let le: f64 = coeff[..=k].iter().sum::<f64>() / denom;
    let ge: f64 = coeff[k..].iter().sum::<f64>() / denom;
    (2.0 * le.min(ge)).min(1.0)
}

// ---------------------------------------------------------------------------
// Profiles and peak structure

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileBin {
    pub start_min: u64,
    pub mean_w: f64,
    pub min_w: f64,
    pub max_w: f64,
}

/// Cross-replication statistics per half-hour bin.
pub fn mean_profile(runs: &[RunOutput]) -> Result<Vec<ProfileBin>, MeteringError> {
    let all: Vec<Vec<HalfHourBin>> = runs
        .iter()
        .map(|r| r.half_hourly())
        .collect::<Result<_, _>>()?;
    let n_bins = all.first().map(Vec::len).unwrap_or(0);
    Ok((0..n_bins)
        .map(|b| {
            let powers: Vec<f64> = all.iter().map(|bins| bins[b].mean_w()).collect();
            ProfileBin {
                start_min: (b * 30) as u64,
                mean_w: powers.iter().sum::<f64>() / powers.len() as f64,
                min_w: powers.iter().cloned().fold(f64::INFINITY, f64::min),
                max_w: powers.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect())
}

/// Day indices whose tallest half-hour exceeds [`PEAK_PROMINENCE`] of the
/// week's tallest, measuring above the base load.
pub fn peak_days(profile: &[ProfileBin], base_load_w: f64) -> Vec<u64> {
    let bins_per_day = (MINUTES_PER_DAY / 30) as usize;
    let week_max = profile
        .iter()
        .map(|b| b.mean_w - base_load_w)
        .fold(0.0f64, f64::max);
    if week_max <= 0.0 {
        return Vec::new();
    }
    profile
        .chunks(bins_per_day)
        .enumerate()
        .filter(|(_, day)| {
            let day_max = day
                .iter()
                .map(|b| b.mean_w - base_load_w)
                .fold(0.0f64, f64::max);
            day_max >= PEAK_PROMINENCE * week_max
        })
        .map(|(d, _)| d as u64)
        .collect()
}

/// Mean power over a window, averaged across runs.
pub fn mean_window_power_w(runs: &[RunOutput], window: &Window) -> f64 {
    let mut energy_wh = 0.0;
    let mut hours = 0.0;
    for run in runs {
        let (b, l, c) = run.meter.window_wh(window);
        energy_wh += b + l + c;
        hours += window.tick_count(run.meter.len() as u64) as f64 / 60.0;
    }
    if hours > 0.0 {
        energy_wh / hours
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Base-load calibration

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CalibrationResult {
    pub base_load_w: f64,
    pub night_base_pct: f64,
    pub day_lights_pct: f64,
    pub day_computers_pct: f64,
    pub squared_error: f64,
}

/// Mean flexible window energies used by calibration (base excluded; it is
/// the swept variable).
#[derive(Clone, Copy, Debug)]
struct FlexibleEnergies {
    night_lights_wh: f64,
    night_computers_wh: f64,
    day_lights_wh: f64,
    day_computers_wh: f64,
    night_hours: f64,
    day_hours: f64,
}

impl FlexibleEnergies {
    fn window_shares(&self, base_load_w: f64) -> (CategoryShares, CategoryShares) {
        let night_base = base_load_w * self.night_hours;
        let night_total = night_base + self.night_lights_wh + self.night_computers_wh;
        let day_base = base_load_w * self.day_hours;
        let day_total = day_base + self.day_lights_wh + self.day_computers_wh;
        (
            CategoryShares {
                base_pct: 100.0 * night_base / night_total,
                lights_pct: 100.0 * self.night_lights_wh / night_total,
                computers_pct: 100.0 * self.night_computers_wh / night_total,
            },
            CategoryShares {
                base_pct: 100.0 * day_base / day_total,
                lights_pct: 100.0 * self.day_lights_wh / day_total,
                computers_pct: 100.0 * self.day_computers_wh / day_total,
            },
        )
    }
}

fn flexible_energies(runs: &[RunOutput]) -> FlexibleEnergies {
    let days = runs[0].scenario.horizon_days as u64;
    let horizon = runs[0].meter.len() as u64;
    let night = Window::nights_and_weekends(days);
    let day = Window::weekday_daytime(days);
    let n = runs.len() as f64;
    let mut acc = FlexibleEnergies {
        night_lights_wh: 0.0,
        night_computers_wh: 0.0,
        day_lights_wh: 0.0,
        day_computers_wh: 0.0,
        night_hours: night.tick_count(horizon) as f64 / 60.0,
        day_hours: day.tick_count(horizon) as f64 / 60.0,
    };
    for run in runs {
        let (_, l_n, c_n) = run.meter.window_wh(&night);
        let (_, l_d, c_d) = run.meter.window_wh(&day);
        acc.night_lights_wh += l_n / n;
        acc.night_computers_wh += c_n / n;
        acc.day_lights_wh += l_d / n;
        acc.day_computers_wh += c_d / n;
    }
    acc
}

fn shares_at(base_load_w: f64, flex: &FlexibleEnergies) -> CalibrationResult {
    let (night, day) = flex.window_shares(base_load_w);
    // Deviations are normalised by each target's tolerance so a tight target
    // counts for more than a loose one.
    CalibrationResult {
        base_load_w,
        night_base_pct: night.base_pct,
        day_lights_pct: day.lights_pct,
        day_computers_pct: day.computers_pct,
        squared_error: ((night.base_pct - NIGHT_BASE_TARGET_PCT) / NIGHT_BASE_TOL_PCT).powi(2)
            + ((day.lights_pct - DAY_LIGHTS_TARGET_PCT) / DAY_LIGHTS_TOL_PCT).powi(2)
            + ((day.computers_pct - DAY_COMPUTERS_TARGET_PCT) / DAY_COMPUTERS_TOL_PCT).powi(2),
    }
}

/// Everything the base-load calibration produces.
#[derive(Clone, Debug)]
pub struct Calibration {
    pub best: CalibrationResult,
    pub grid: Vec<CalibrationResult>,
    /// Complete window shares at the calibrated base load.
    pub night_shares: CategoryShares,
    pub day_shares: CategoryShares,
}

/// Sweep the base load over a grid and keep the point whose window shares sit
/// closest (least squares) to the reference targets. The flexible categories
/// do not depend on the base load, so the replications run once with base 0
/// and the sweep is closed-form.
pub fn calibrate_base_load(
    scenario: &Scenario,
    plan: Option<&BuildingPlan>,
    n_reps: usize,
    grid_max_w: f64,
    grid_step_w: f64,
) -> Result<Calibration, ExperimentError> {
    let mut base_zero = scenario.clone();
    base_zero.base_load_w = 0.0;
    let runs = run_arm(&base_zero, plan, n_reps)?;
    let flex = flexible_energies(&runs);

    let mut grid = Vec::new();
    let mut best: Option<CalibrationResult> = None;
    let mut b = grid_step_w.max(1.0);
    while b <= grid_max_w {
        let point = shares_at(b, &flex);
        if best.is_none_or(|prev| point.squared_error < prev.squared_error) {
            best = Some(point);
        }
        grid.push(point);
        b += grid_step_w;
    }
    let best = best.ok_or_else(|| ExperimentError::Config("empty calibration grid".into()))?;
    let (night_shares, day_shares) = flex.window_shares(best.base_load_w);
    Ok(Calibration {
        best,
        grid,
        night_shares,
        day_shares,
    })
}

// ---------------------------------------------------------------------------
// The experiments

fn run_one(scenario: Scenario, plan: Option<&BuildingPlan>) -> Result<RunOutput, EngineError> {
    match plan {
        Some(p) => Simulation::with_plan(scenario, p.clone())?.run(),
        None => Simulation::from_scenario(scenario)?.run(),
    }
}

/// One replication arm: the scenario at each derived seed.
fn run_arm(
    scenario: &Scenario,
    plan: Option<&BuildingPlan>,
    n_reps: usize,
) -> Result<Vec<RunOutput>, ExperimentError> {
    let seeds = replication_seeds(scenario.seed, n_reps);
    let runs = seeds
        .into_par_iter()
        .map(|seed| {
            let mut s = scenario.clone();
            s.seed = seed;
            run_one(s, plan)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(runs)
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentSummary {
    BaselineAutomated(BaselineSummary),
    StaffVsAutomated(PairedStrategySummary),
    ContactSweep(SweepSummary),
    CategoryBreakdown(BreakdownSummary),
}

#[derive(Clone, Debug, Serialize)]
pub struct BaselineSummary {
    pub n_reps: usize,
    pub seed_base: u64,
    pub mean_total_wh: f64,
    pub stdev_total_wh: f64,
    pub peak_w: f64,
    pub peak_time: String,
    pub weekday_peak_days: Vec<u64>,
    pub weekend_weekday_daytime_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairedStrategySummary {
    pub n_reps: usize,
    pub seed_base: u64,
    pub automated_mean_wh: f64,
    pub staff_mean_wh: f64,
    pub mean_diff_wh: f64,
    pub staff_higher_count: usize,
    pub sign_test_p: f64,
    pub mean_peak_rel_diff: f64,
    pub max_peak_rel_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub n_reps: usize,
    pub seed_base: u64,
    pub levels: Vec<f64>,
    pub mean_total_wh: Vec<f64>,
    pub nonincreasing: bool,
    pub last_below_first: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BreakdownSummary {
    pub n_reps: usize,
    pub seed_base: u64,
    pub base_load_w: f64,
    pub nights_and_weekends: CategoryShares,
    pub weekday_daytime: CategoryShares,
    pub night_base_target_pct: f64,
    pub day_lights_target_pct: f64,
    pub day_computers_target_pct: f64,
}

/// Run an experiment and write its artifacts (CSV + `summary.json`) under
/// `out_dir`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<ExperimentSummary, ExperimentError> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let summary = match spec.name {
        ExperimentName::BaselineAutomated => {
            ExperimentSummary::BaselineAutomated(baseline_automated(spec, out_dir)?)
        }
        ExperimentName::StaffVsAutomated => {
            ExperimentSummary::StaffVsAutomated(staff_vs_automated(spec, out_dir)?)
        }
        ExperimentName::ContactSweep => {
            ExperimentSummary::ContactSweep(contact_sweep(spec, out_dir)?)
        }
        ExperimentName::CategoryBreakdown => {
            ExperimentSummary::CategoryBreakdown(category_breakdown(spec, out_dir)?)
        }
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

fn baseline_automated(
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<BaselineSummary, ExperimentError> {
    let mut scenario = spec.scenario.clone();
    scenario.lighting_strategy = LightingStrategy::Automated;
    let runs = run_arm(&scenario, spec.plan.as_ref(), spec.n_reps)?;

    let profile = mean_profile(&runs)?;
    let mut weekly = String::from("bin_start_min,mean_w,min_w,max_w\n");
    for b in &profile {
        let _ = writeln!(
            weekly,
            "{},{},{},{}",
            b.start_min, b.mean_w, b.min_w, b.max_w
        );
    }
    std::fs::write(out_dir.join("weekly_profile.csv"), weekly)?;

    // Mean weekday day profile: 48 half-hours averaged over weekdays and reps.
    let bins_per_day = (MINUTES_PER_DAY / 30) as usize;
    let mut day_profile = vec![(0.0f64, 0usize); bins_per_day];
    for (i, bin) in profile.iter().enumerate() {
        let day = i / bins_per_day;
        if !crate::time::Weekday::from_day_index(day as u64).is_weekend() {
            let slot = i % bins_per_day;
            day_profile[slot].0 += bin.mean_w;
            day_profile[slot].1 += 1;
        }
    }
    let mut daily = String::from("minute_of_day,mean_w\n");
    for (slot, (sum, count)) in day_profile.iter().enumerate() {
        let _ = writeln!(daily, "{},{}", slot * 30, sum / (*count).max(1) as f64);
    }
    std::fs::write(out_dir.join("daily_profile.csv"), daily)?;

    write_totals_csv(&runs, out_dir, "totals.csv")?;

    let set = summarize(&runs.iter().map(|r| &r.meter).collect::<Vec<_>>())?;
    let days = scenario.horizon_days as u64;
    let weekday = Window::weekday_daytime(days);
    let weekend = Window::daily(
        days,
        crate::metering::DAYTIME_START_MIN,
        crate::metering::DAYTIME_END_MIN,
        true,
    );
    let weekday_power = mean_window_power_w(&runs, &weekday);
    let weekend_power = mean_window_power_w(&runs, &weekend);

    let mean_peak = profile
        .iter()
        .max_by(|a, b| a.mean_w.partial_cmp(&b.mean_w).unwrap())
        .map(|b| (b.mean_w, SimTime(b.start_min).label()))
        .unwrap_or((0.0, String::new()));

    Ok(BaselineSummary {
        n_reps: spec.n_reps,
        seed_base: scenario.seed,
        mean_total_wh: set.mean_total_wh,
        stdev_total_wh: set.stdev_total_wh,
        peak_w: mean_peak.0,
        peak_time: mean_peak.1,
        weekday_peak_days: peak_days(&profile, scenario.base_load_w),
        weekend_weekday_daytime_ratio: if weekday_power > 0.0 {
            weekend_power / weekday_power
        } else {
            0.0
        },
    })
}

fn staff_vs_automated(
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<PairedStrategySummary, ExperimentError> {
    let mut automated = spec.scenario.clone();
    automated.lighting_strategy = LightingStrategy::Automated;
    let mut staff = spec.scenario.clone();
    staff.lighting_strategy = LightingStrategy::StaffControlled;

    let auto_runs = run_arm(&automated, spec.plan.as_ref(), spec.n_reps)?;
    let staff_runs = run_arm(&staff, spec.plan.as_ref(), spec.n_reps)?;
    let seeds = replication_seeds(spec.scenario.seed, spec.n_reps);

    let mut csv = String::from(
        "rep,seed,automated_wh,staff_wh,diff_wh,automated_peak_w,staff_peak_w,peak_rel_diff\n",
    );
    let mut staff_higher = 0usize;
    let mut diffs = Vec::new();
    let mut peak_rel_diffs = Vec::new();
    let mut auto_totals = Vec::new();
    let mut staff_totals = Vec::new();
    for i in 0..spec.n_reps {
        let a = summarize_run(&auto_runs[i].meter)?;
        let s = summarize_run(&staff_runs[i].meter)?;
        if s.total_wh > a.total_wh {
            staff_higher += 1;
        }
        let peak_rel = (s.peak_w - a.peak_w).abs() / a.peak_w;
        diffs.push(s.total_wh - a.total_wh);
        peak_rel_diffs.push(peak_rel);
        auto_totals.push(a.total_wh);
        staff_totals.push(s.total_wh);
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{},{}",
            seeds[i],
            a.total_wh,
            s.total_wh,
            s.total_wh - a.total_wh,
            a.peak_w,
            s.peak_w,
            peak_rel
        );
    }
    std::fs::write(out_dir.join("paired_totals.csv"), csv)?;

    let n = spec.n_reps as f64;
    Ok(PairedStrategySummary {
        n_reps: spec.n_reps,
        seed_base: spec.scenario.seed,
        automated_mean_wh: auto_totals.iter().sum::<f64>() / n,
        staff_mean_wh: staff_totals.iter().sum::<f64>() / n,
        mean_diff_wh: diffs.iter().sum::<f64>() / n,
        staff_higher_count: staff_higher,
        sign_test_p: sign_test_two_sided(staff_higher, spec.n_reps),
        mean_peak_rel_diff: peak_rel_diffs.iter().sum::<f64>() / n,
        max_peak_rel_diff: peak_rel_diffs.iter().cloned().fold(0.0, f64::max),
    })
}

fn contact_sweep(spec: &ExperimentSpec, out_dir: &Path) -> Result<SweepSummary, ExperimentError> {
    let seeds = replication_seeds(spec.scenario.seed, spec.n_reps);
    let mut csv = String::from("contact_rate,rep,seed,total_wh\n");
    let mut means = Vec::new();
    for &level in &spec.contact_levels {
        let mut scenario = spec.scenario.clone();
        scenario.contact_rate = level;
        let runs = run_arm(&scenario, spec.plan.as_ref(), spec.n_reps)?;
        let mut level_total = 0.0;
        for (i, run) in runs.iter().enumerate() {
            let total = summarize_run(&run.meter)?.total_wh;
            level_total += total;
            let _ = writeln!(csv, "{level},{i},{},{total}", seeds[i]);
        }
        means.push(level_total / spec.n_reps as f64);
    }
    std::fs::write(out_dir.join("sweep_totals.csv"), csv)?;

    let mut means_csv = String::from("contact_rate,mean_total_wh\n");
    for (level, mean) in spec.contact_levels.iter().zip(&means) {
        let _ = writeln!(means_csv, "{level},{mean}");
    }
    std::fs::write(out_dir.join("sweep_means.csv"), means_csv)?;

    let nonincreasing = means.windows(2).all(|w| w[1] <= w[0]);
    Ok(SweepSummary {
        n_reps: spec.n_reps,
        seed_base: spec.scenario.seed,
        levels: spec.contact_levels.clone(),
        nonincreasing,
        last_below_first: means.last() < means.first(),
        mean_total_wh: means,
    })
}

fn category_breakdown(
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<BreakdownSummary, ExperimentError> {
    let calibration = calibrate_base_load(
        &spec.scenario,
        spec.plan.as_ref(),
        spec.n_reps,
        40_000.0,
        25.0,
    )?;

    let mut grid_csv =
        String::from("base_load_w,night_base_pct,day_lights_pct,day_computers_pct,squared_error\n");
    for point in &calibration.grid {
        let _ = writeln!(
            grid_csv,
            "{},{},{},{},{}",
            point.base_load_w,
            point.night_base_pct,
            point.day_lights_pct,
            point.day_computers_pct,
            point.squared_error
        );
    }
    std::fs::write(out_dir.join("calibration.csv"), grid_csv)?;

    // One representative run at the calibrated base load for plot data.
    let mut calibrated = spec.scenario.clone();
    calibrated.base_load_w = calibration.best.base_load_w;
    calibrated.seed = replication_seeds(spec.scenario.seed, 1)[0];
    let run = run_one(calibrated, spec.plan.as_ref())?;
    let bins = run.half_hourly()?;
    let mut shares_csv = String::from("bin_start_min,base_pct,lights_pct,computers_pct\n");
    for b in &bins {
        let total = b.wh_total.max(f64::MIN_POSITIVE);
        let _ = writeln!(
            shares_csv,
            "{},{},{},{}",
            b.start_min,
            100.0 * b.wh_base / total,
            100.0 * b.wh_lights / total,
            100.0 * b.wh_computers / total
        );
    }
    std::fs::write(out_dir.join("shares_halfhourly.csv"), shares_csv)?;

    let mut windows_csv = String::from("window,base_pct,lights_pct,computers_pct\n");
    for (window, shares) in [
        ("nights_and_weekends", calibration.night_shares),
        ("weekday_daytime", calibration.day_shares),
    ] {
        let _ = writeln!(
            windows_csv,
            "{window},{},{},{}",
            shares.base_pct, shares.lights_pct, shares.computers_pct
        );
    }
    std::fs::write(out_dir.join("window_shares.csv"), windows_csv)?;

    Ok(BreakdownSummary {
        n_reps: spec.n_reps,
        seed_base: spec.scenario.seed,
        base_load_w: calibration.best.base_load_w,
        nights_and_weekends: calibration.night_shares,
        weekday_daytime: calibration.day_shares,
        night_base_target_pct: NIGHT_BASE_TARGET_PCT,
        day_lights_target_pct: DAY_LIGHTS_TARGET_PCT,
        day_computers_target_pct: DAY_COMPUTERS_TARGET_PCT,
    })
}

fn write_totals_csv(runs: &[RunOutput], out_dir: &Path, file: &str) -> Result<(), ExperimentError> {
    let mut csv = String::from("rep,seed,total_wh,base_wh,lights_wh,computers_wh\n");
    for (i, run) in runs.iter().enumerate() {
        let s = summarize_run(&run.meter)?;
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{}",
            run.scenario.seed, s.total_wh, s.base_wh, s.lights_wh, s.computers_wh
        );
    }
    std::fs::write(out_dir.join(file), csv)?;
    Ok(())
}
