//! Simulation clock: 1-minute ticks on a weekly calendar.
//!
//! A run starts on Monday at 00:00. Ticks are minutes since that instant.

use serde::{Deserialize, Serialize};

pub const MINUTES_PER_DAY: u64 = 1440;
pub const MINUTES_PER_HOUR: u64 = 60;
pub const DAYS_PER_WEEK: u64 = 7;

/// Minutes since the start of the simulation (Monday 00:00).
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Weekday {
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
    Saturday,
    Sunday,
}

impl Weekday {
    pub fn from_day_index(day: u64) -> Self {
        match day % DAYS_PER_WEEK {
            0 => Weekday::Monday,
            1 => Weekday::Tuesday,
            2 => Weekday::Wednesday,
            3 => Weekday::Thursday,
            4 => Weekday::Friday,
            5 => Weekday::Saturday,
            _ => Weekday::Sunday,
        }
    }

    pub fn is_weekend(self) -> bool {
        matches!(self, Weekday::Saturday | Weekday::Sunday)
    }
}

impl SimTime {
    pub fn from_day_and_minute(day: u64, minute_of_day: u64) -> Self {
        SimTime(day * MINUTES_PER_DAY + minute_of_day)
    }

    pub fn minute_of_sim(self) -> u64 {
        self.0
    }

    pub fn minute_of_day(self) -> u64 {
        self.0 % MINUTES_PER_DAY
    }

    pub fn day_index(self) -> u64 {
        self.0 / MINUTES_PER_DAY
    }

    pub fn weekday(self) -> Weekday {
        Weekday::from_day_index(self.day_index())
    }

    pub fn is_weekend(self) -> bool {
        self.weekday().is_weekend()
    }

    /// "d3 14:05" style label for logs and summaries.
    pub fn label(self) -> String {
        format!(
            "d{} {:02}:{:02}",
            self.day_index(),
            self.minute_of_day() / MINUTES_PER_HOUR,
            self.minute_of_day() % MINUTES_PER_HOUR
        )
    }
}

/// Minute-of-day constant from a wall-clock hour, e.g. `hm(17, 30)` = 1050.
pub const fn hm(hour: u64, minute: u64) -> u64 {
    hour * 60 + minute
}
