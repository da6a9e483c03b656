//! The three state machines: energy users, lights, computers.
//!
//! Users are the only active agents. Lights and computers are passive: lights
//! react to room occupancy (or to the departing occupant under staff-switched
//! control), computers only ever do what their owner tells them.
//!
//! All step functions are pure: next state is a function of (state, inputs,
//! draw site). The engine owns sequencing and mutation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::UserId;
use crate::population::{AwarenessStereotype, EnergyUser};
use crate::rng::{purpose, tag, RngKey};
use crate::time::Weekday;

pub const LIGHT_ON_W: f64 = 60.0;
pub const COMPUTER_ON_W: f64 = 70.0;
pub const COMPUTER_STANDBY_W: f64 = 25.0;

/// Minutes of walking before a corridor transit completes.
pub const CORRIDOR_TRANSIT_MIN: u64 = 2;
/// Minutes at the desk before the computer goes on.
pub const COMPUTER_SWITCH_ON_MIN: u64 = 2;
/// Minutes of vacancy before a sensor-automated light switches off.
pub const SENSOR_TIMEOUT_MIN: u32 = 20;
/// Per-minute probability of pausing computer work.
pub const P_COMPUTER_STOP: f64 = 0.05;
/// Absences shorter than this are temporary; nothing gets switched off.
pub const LONG_LEAVE_MIN: u64 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeaveKind {
    Temporary,
    Long,
}

impl LeaveKind {
    pub fn classify(absence_minutes: u64) -> Self {
        if absence_minutes < LONG_LEAVE_MIN {
            LeaveKind::Temporary
        } else {
            LeaveKind::Long
        }
    }
}

#[derive(Debug, Error)]
pub enum BehaviorError {
    #[error("awareness {0} outside [0, 100]")]
    OutOfRange(f64),
    #[error("command from `{from}` for a computer owned by {owner:?}")]
    NotOwner { from: UserId, owner: Option<UserId> },
    #[error("inconsistent state: {0}")]
    InconsistentState(String),
}

/// Awareness band lookup. Bands are half-open below the next boundary so the
/// whole [0, 100] range maps to exactly one stereotype.
pub fn band_for_awareness(awareness: f64) -> Result<AwarenessStereotype, BehaviorError> {
    if !(0.0..=100.0).contains(&awareness) {
        return Err(BehaviorError::OutOfRange(awareness));
    }
    Ok(if awareness >= 95.0 {
        AwarenessStereotype::EnvironmentChampion
    } else if awareness >= 70.0 {
        AwarenessStereotype::EnergySaver
    } else if awareness >= 30.0 {
        AwarenessStereotype::RegularUser
    } else {
        AwarenessStereotype::BigUser
    })
}

/// (probability of switching off unnecessary appliances, probability of
/// emailing about energy issues) for the current awareness value.
pub fn awareness_to_probabilities(awareness: f64) -> Result<(f64, f64), BehaviorError> {
    let band = band_for_awareness(awareness)?;
    Ok((band.p_switch_off(), band.p_email()))
}

fn p_switch_off(awareness: f64) -> f64 {
    band_for_awareness(awareness)
        .expect("awareness invariant")
        .p_switch_off()
}

// ---------------------------------------------------------------------------
// Daily schedules

/// Everything decided about a user's day before it starts. Minutes of day.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DaySchedule {
    pub arrival: u64,
    pub leave: u64,
    pub midday_leave: Option<MiddayLeave>,
}

/// A pre-drawn long absence in the middle of the day (meetings elsewhere).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MiddayLeave {
    pub start: u64,
    pub duration: u64,
}

/// Behavioural knobs a scenario can adjust.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorParams {
    /// Awareness above this makes switch-off (rather than standby) possible
    /// when pausing computer work.
    pub threshold: f64,
    /// Target excursions to facility rooms per working day; the per-minute
    /// hazard is this divided by the day's working span.
    pub excursions_per_day: f64,
    /// Per-day probability of one long mid-day absence.
    pub midday_leave_probability: f64,
    /// Uniform range (inclusive) for mid-day absence length, minutes.
    pub midday_leave_minutes: (u64, u64),
}

impl Default for BehaviorParams {
    fn default() -> Self {
        BehaviorParams {
            threshold: 50.0,
            excursions_per_day: 2.0,
            midday_leave_probability: 0.3,
            midday_leave_minutes: (30, 120),
        }
    }
}

/// Resolve one user-day. `day_key` must already be scoped to (user, day).
/// Weekdays always yield a schedule; weekend presence has probability
/// `p_weekend`, and a present weekend reuses the weekday windows.
pub fn sample_daily_schedule(
    user: &EnergyUser,
    weekday: Weekday,
    p_weekend: f64,
    params: &BehaviorParams,
    day_key: RngKey,
) -> Option<DaySchedule> {
    if weekday.is_weekend()
        && !day_key
            .with(tag::PURPOSE, purpose::WEEKEND_PRESENCE)
            .chance(p_weekend)
    {
        return None;
    }

    let (arr_lo, arr_hi) = user.work_stereotype.arrival_window();
    let arrival = day_key
        .with(tag::PURPOSE, purpose::ARRIVAL)
        .range_u32(arr_lo as u32, arr_hi as u32) as u64;

    let (leave_lo, leave_hi) = user.work_stereotype.leave_window();
    let lo = leave_lo.unwrap_or(arrival);
    let leave = if lo >= leave_hi {
        lo
    } else {
        day_key
            .with(tag::PURPOSE, purpose::LEAVE)
            .range_u32(lo as u32, leave_hi as u32) as u64
    };

    let midday_leave = (leave > arrival
        && params.midday_leave_probability > 0.0
        && day_key
            .with(tag::PURPOSE, purpose::MIDDAY_GATE)
            .chance(params.midday_leave_probability))
    .then(|| {
        let (dur_lo, dur_hi) = params.midday_leave_minutes;
        MiddayLeave {
            start: day_key
                .with(tag::PURPOSE, purpose::MIDDAY_START)
                .range_u32(arrival as u32, leave as u32) as u64,
            duration: day_key
                .with(tag::PURPOSE, purpose::MIDDAY_DURATION)
                .range_u32(dur_lo as u32, dur_hi as u32 + 1) as u64,
        }
    });

    Some(DaySchedule {
        arrival,
        leave,
        midday_leave,
    })
}

// ---------------------------------------------------------------------------
// Energy user state machine

/// Where a corridor transit is going.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heading {
    OwnOffice,
    /// Facility-room slot plus how long to stay there.
    OtherRoom {
        facility: usize,
        stay: u64,
    },
    /// Leaving the building; `reentry_at` is a sim-minute for mid-day leaves.
    Out {
        reentry_at: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OfficeActivity {
    WorkingWithComputer,
    WorkingWithoutComputer { since: u64 },
}

/// Top-level user states. `facility` fields index the world's facility-room
/// table, not the full room list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UserState {
    OutOfSchool { reentry_at: Option<u64> },
    InCorridor { since: u64, heading: Heading },
    InOwnOffice { activity: OfficeActivity },
    InOtherRooms { facility: usize, return_at: u64 },
}

impl UserState {
    pub fn initial() -> Self {
        UserState::OutOfSchool { reentry_at: None }
    }

    pub fn is_present(&self) -> bool {
        !matches!(self, UserState::OutOfSchool { .. })
    }
}

/// Per-day bookkeeping flags, reset at midnight.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UserDayFlags {
    pub arrived: bool,
    pub midday_taken: bool,
}

/// What the engine must know to step one user.
#[derive(Clone, Copy, Debug)]
pub struct UserStepContext {
    /// Minutes since simulation start.
    pub clock: u64,
    /// Minutes since midnight.
    pub minute_of_day: u64,
    pub owns_computer: bool,
    /// Mode of the user's own computer, if any.
    pub computer: Option<ComputerMode>,
    /// Number of facility rooms available for excursions.
    pub facility_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComputerAction {
    SwitchOn,
    SetStandby,
    SwitchOff,
}

/// Observable top-level transition, for the event log.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UserTransition {
    Arrive,
    Reenter,
    EnterOffice,
    StartExcursion { facility: usize },
    EnterOtherRoom { facility: usize },
    LeaveOtherRoom,
    Depart { leave: LeaveKind, midday: bool },
    Exit,
}

#[derive(Clone, Copy, Debug)]
pub struct UserStep {
    pub state: UserState,
    pub flags: UserDayFlags,
    pub computer: Option<ComputerAction>,
    pub transition: Option<UserTransition>,
}

/// The switch-off-or-standby branch taken when pausing computer work:
/// switch-off is only reachable above the scenario threshold, and then only
/// with the band's switch-off probability.
pub fn stop_computer_action(awareness: f64, threshold: f64, u_off: f64) -> ComputerAction {
    if awareness > threshold && u_off < p_switch_off(awareness) {
        ComputerAction::SwitchOff
    } else {
        ComputerAction::SetStandby
    }
}

/// Long-leave goodbye for the computer: switched off with the band's
/// probability, otherwise parked on standby. An already-off computer stays off.
pub fn long_leave_computer_action(
    mode: Option<ComputerMode>,
    awareness: f64,
    u_off: f64,
) -> Option<ComputerAction> {
    match mode? {
        ComputerMode::Off => None,
        ComputerMode::On | ComputerMode::StandBy => Some(if u_off < p_switch_off(awareness) {
            ComputerAction::SwitchOff
        } else {
            ComputerAction::SetStandby
        }),
    }
}

/// Advance one user by one minute. At most one top-level transition fires,
/// in priority order: departure, mid-day leave, excursion, desk activity.
/// `day_key` must be scoped to (user, day).
pub fn step_user(
    user: &EnergyUser,
    state: UserState,
    flags: UserDayFlags,
    schedule: Option<&DaySchedule>,
    ctx: &UserStepContext,
    params: &BehaviorParams,
    day_key: RngKey,
) -> UserStep {
    let mut out = UserStep {
        state,
        flags,
        computer: None,
        transition: None,
    };
    let t = ctx.clock;
    let m = ctx.minute_of_day;
    let site = |p: u64| day_key.with(tag::MINUTE, m).with(tag::PURPOSE, p);

    match state {
        UserState::OutOfSchool { reentry_at } => {
            let Some(sched) = schedule else {
                return out;
            };
            if !flags.arrived && m >= sched.arrival {
                out.flags.arrived = true;
                out.state = UserState::InCorridor {
                    since: t,
                    heading: Heading::OwnOffice,
                };
                out.transition = Some(UserTransition::Arrive);
            } else if let Some(back) = reentry_at {
                if t >= back {
                    if m < sched.leave {
                        out.state = UserState::InCorridor {
                            since: t,
                            heading: Heading::OwnOffice,
                        };
                        out.transition = Some(UserTransition::Reenter);
                    } else {
                        // Too late to come back; the day is over.
                        out.state = UserState::OutOfSchool { reentry_at: None };
                    }
                }
            }
        }

        UserState::InCorridor { since, heading } => {
            if t - since >= CORRIDOR_TRANSIT_MIN {
                match heading {
                    Heading::OwnOffice => {
                        out.state = UserState::InOwnOffice {
                            activity: OfficeActivity::WorkingWithoutComputer { since: t },
                        };
                        out.transition = Some(UserTransition::EnterOffice);
                    }
                    Heading::OtherRoom { facility, stay } => {
                        out.state = UserState::InOtherRooms {
                            facility,
                            return_at: t + stay,
                        };
                        out.transition = Some(UserTransition::EnterOtherRoom { facility });
                    }
                    Heading::Out { reentry_at } => {
                        out.state = UserState::OutOfSchool { reentry_at };
                        out.transition = Some(UserTransition::Exit);
                    }
                }
            }
        }

        UserState::InOwnOffice { activity } => {
            let Some(sched) = schedule else {
                return out;
            };
            if m >= sched.leave {
                // End of day; always a long leave.
                out.computer = long_leave_computer_action(
                    ctx.computer,
                    user.awareness,
                    site(purpose::LEAVE_OFF).uniform(),
                );
                out.state = UserState::InCorridor {
                    since: t,
                    heading: Heading::Out { reentry_at: None },
                };
                out.transition = Some(UserTransition::Depart {
                    leave: LeaveKind::Long,
                    midday: false,
                });
                return out;
            }

            if let Some(mid) = sched.midday_leave {
                if !flags.midday_taken && m >= mid.start {
                    out.flags.midday_taken = true;
                    out.computer = long_leave_computer_action(
                        ctx.computer,
                        user.awareness,
                        site(purpose::LEAVE_OFF).uniform(),
                    );
                    out.state = UserState::InCorridor {
                        since: t,
                        heading: Heading::Out {
                            reentry_at: Some(t + mid.duration),
                        },
                    };
                    out.transition = Some(UserTransition::Depart {
                        leave: LeaveKind::Long,
                        midday: true,
                    });
                    return out;
                }
            }

            let span = sched.leave.saturating_sub(sched.arrival);
            if ctx.facility_count > 0 && span > 0 {
                let hazard = params.excursions_per_day / span as f64;
                if site(purpose::EXCURSION_GATE).chance(hazard) {
                    let facility = site(purpose::EXCURSION_ROOM).pick(ctx.facility_count);
                    let stay = site(purpose::EXCURSION_STAY).range_u32(1, 11) as u64;
                    // Temporary leave: the computer is left exactly as it is.
                    out.state = UserState::InCorridor {
                        since: t,
                        heading: Heading::OtherRoom { facility, stay },
                    };
                    out.transition = Some(UserTransition::StartExcursion { facility });
                    return out;
                }
            }

            match activity {
                OfficeActivity::WorkingWithoutComputer { since } => {
                    if ctx.owns_computer && t - since >= COMPUTER_SWITCH_ON_MIN {
                        out.state = UserState::InOwnOffice {
                            activity: OfficeActivity::WorkingWithComputer,
                        };
                        out.computer = Some(ComputerAction::SwitchOn);
                    }
                }
                OfficeActivity::WorkingWithComputer => {
                    if site(purpose::COMPUTER_STOP).chance(P_COMPUTER_STOP) {
                        out.state = UserState::InOwnOffice {
                            activity: OfficeActivity::WorkingWithoutComputer { since: t },
                        };
                        out.computer = Some(stop_computer_action(
                            user.awareness,
                            params.threshold,
                            site(purpose::COMPUTER_OFF).uniform(),
                        ));
                    }
                }
            }
        }

        UserState::InOtherRooms {
            facility: _,
            return_at,
        } => {
            if t >= return_at {
                out.state = UserState::InCorridor {
                    since: t,
                    heading: Heading::OwnOffice,
                };
                out.transition = Some(UserTransition::LeaveOtherRoom);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Light state machine

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LightControl {
    SensorAutomated,
    StaffSwitched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LightState {
    pub on: bool,
    pub control: LightControl,
    /// Minutes since the room was last occupied; meaningful only while on
    /// under sensor control.
    pub vacancy_timer: u32,
}

impl LightState {
    pub fn new(control: LightControl) -> Self {
        LightState {
            on: false,
            control,
            vacancy_timer: 0,
        }
    }

    pub fn power_w(&self) -> f64 {
        if self.on {
            LIGHT_ON_W
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LightTransition {
    SwitchedOn,
    SensorTimeout,
    StaffSwitchedOff,
}

/// The staff-switched off decision made by a departing last occupant.
pub fn staff_switch_off(awareness: f64, u: f64) -> bool {
    u < p_switch_off(awareness)
}

/// Advance one light by one minute. `occupied` covers anyone present during
/// any part of the minute. `departing_awareness` is set only on the minute a
/// room's last occupant walks out, and only matters for staff-switched lights.
pub fn step_light(
    state: LightState,
    occupied: bool,
    departing_awareness: Option<f64>,
    rng: RngKey,
) -> (LightState, Option<LightTransition>) {
    let mut next = state;
    let mut transition = None;

    if occupied {
        if !next.on {
            next.on = true;
            transition = Some(LightTransition::SwitchedOn);
        }
        next.vacancy_timer = 0;
    }

    match state.control {
        LightControl::SensorAutomated => {
            if !occupied && next.on {
                next.vacancy_timer += 1;
                if next.vacancy_timer == SENSOR_TIMEOUT_MIN {
                    next.on = false;
                    transition = Some(LightTransition::SensorTimeout);
                }
            }
        }
        LightControl::StaffSwitched => {
            if let Some(awareness) = departing_awareness {
                if next.on
                    && staff_switch_off(
                        awareness,
                        rng.with(tag::PURPOSE, purpose::STAFF_LIGHT_OFF).uniform(),
                    )
                {
                    next.on = false;
                    next.vacancy_timer = 0;
                    transition = Some(LightTransition::StaffSwitchedOff);
                }
            }
        }
    }
    (next, transition)
}

// ---------------------------------------------------------------------------
// Computer state machine

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComputerMode {
    Off,
    On,
    StandBy,
}

impl ComputerMode {
    pub fn power_w(self) -> f64 {
        match self {
            ComputerMode::Off => 0.0,
            ComputerMode::On => COMPUTER_ON_W,
            ComputerMode::StandBy => COMPUTER_STANDBY_W,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComputerState {
    pub mode: ComputerMode,
    /// At most one user owns a computer; unowned machines never change state.
    pub owner: Option<UserId>,
}

impl ComputerState {
    pub fn new(owner: Option<UserId>) -> Self {
        ComputerState {
            mode: ComputerMode::Off,
            owner,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComputerCommand<'a> {
    pub by: &'a UserId,
    pub action: ComputerAction,
}

/// Apply the owner's command, if any. Computers have no autonomous behaviour.
pub fn step_computer(
    state: &ComputerState,
    command: Option<&ComputerCommand<'_>>,
) -> Result<ComputerMode, BehaviorError> {
    let Some(cmd) = command else {
        return Ok(state.mode);
    };
    if state.owner.as_ref() != Some(cmd.by) {
        return Err(BehaviorError::NotOwner {
            from: cmd.by.clone(),
            owner: state.owner.clone(),
        });
    }
    Ok(match cmd.action {
        ComputerAction::SwitchOn => ComputerMode::On,
        ComputerAction::SetStandby => ComputerMode::StandBy,
        ComputerAction::SwitchOff => ComputerMode::Off,
    })
}
