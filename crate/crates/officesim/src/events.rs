//! The run event log: every state change, newline-delimited.
//!
//! External schema (stable): CSV with header `tick,agent_id,event_kind,detail`.
//! `tick` is minutes since the start of the reported horizon (warm-up days are
//! not reported; carried-over appliance states show up as events at tick 0).
//! Detail fields use `;` between key=value pairs so records never need CSV
//! quoting.

use std::fmt::Write as _;

use crate::behavior::{ComputerMode, LIGHT_ON_W};
use crate::plan::{ApplianceId, RoomId, UserId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentRef {
    User(u32),
    Light(u32),
    Computer(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LightOffCause {
    SensorTimeout,
    StaffSwitch,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    /// The day's resolved schedule (minutes of day).
    Schedule {
        arrival: u16,
        leave: u16,
    },
    Arrive {
        corridor: Option<u16>,
    },
    Reenter {
        corridor: Option<u16>,
    },
    EnterOffice {
        room: u16,
    },
    StartExcursion {
        room: u16,
    },
    EnterRoom {
        room: u16,
    },
    LeaveRoom {
        room: u16,
    },
    Depart {
        midday: bool,
    },
    Exit,
    ComputerOn,
    ComputerStandby,
    ComputerOff,
    LightOn {
        room: u16,
    },
    LightOff {
        room: u16,
        cause: LightOffCause,
    },
    Email {
        to: u32,
    },
    Awareness {
        value: f64,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Schedule { .. } => "schedule",
            EventKind::Arrive { .. } => "arrive",
            EventKind::Reenter { .. } => "reenter",
            EventKind::EnterOffice { .. } => "enter_office",
            EventKind::StartExcursion { .. } => "excursion",
            EventKind::EnterRoom { .. } => "enter_room",
            EventKind::LeaveRoom { .. } => "leave_room",
            EventKind::Depart { .. } => "depart",
            EventKind::Exit => "exit",
            EventKind::ComputerOn => "computer_on",
            EventKind::ComputerStandby => "computer_standby",
            EventKind::ComputerOff => "computer_off",
            EventKind::LightOn { .. } => "light_on",
            EventKind::LightOff { .. } => "light_off",
            EventKind::Email { .. } => "email",
            EventKind::Awareness { .. } => "awareness",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventRecord {
    pub tick: u64,
    pub agent: AgentRef,
    pub kind: EventKind,
}

/// Id tables plus the records. Indices in [`AgentRef`] and room fields point
/// into these tables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub horizon_ticks: u64,
    pub user_ids: Vec<UserId>,
    pub light_ids: Vec<ApplianceId>,
    pub computer_ids: Vec<ApplianceId>,
    pub room_ids: Vec<RoomId>,
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn agent_name(&self, agent: AgentRef) -> &str {
        match agent {
            AgentRef::User(i) => self.user_ids[i as usize].as_str(),
            AgentRef::Light(i) => self.light_ids[i as usize].as_str(),
            AgentRef::Computer(i) => self.computer_ids[i as usize].as_str(),
        }
    }

    fn room_name(&self, room: u16) -> &str {
        self.room_ids[room as usize].as_str()
    }

    fn detail(&self, kind: &EventKind) -> String {
        match kind {
            EventKind::Schedule { arrival, leave } => format!("arrival={arrival};leave={leave}"),
            EventKind::Arrive { corridor } | EventKind::Reenter { corridor } => corridor
                .map(|c| format!("room={}", self.room_name(c)))
                .unwrap_or_default(),
            EventKind::EnterOffice { room }
            | EventKind::StartExcursion { room }
            | EventKind::EnterRoom { room }
            | EventKind::LeaveRoom { room }
            | EventKind::LightOn { room } => format!("room={}", self.room_name(*room)),
            EventKind::Depart { midday } => format!("midday={midday}"),
            EventKind::Exit
            | EventKind::ComputerOn
            | EventKind::ComputerStandby
            | EventKind::ComputerOff => String::new(),
            EventKind::LightOff { room, cause } => format!(
                "room={};cause={}",
                self.room_name(*room),
                match cause {
                    LightOffCause::SensorTimeout => "sensor_timeout",
                    LightOffCause::StaffSwitch => "staff_switch",
                }
            ),
            EventKind::Email { to } => format!("to={}", self.user_ids[*to as usize]),
            EventKind::Awareness { value } => format!("value={value}"),
        }
    }

    /// Render the external CSV form.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 + self.records.len() * 48);
        out.push_str("tick,agent_id,event_kind,detail\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.tick,
                self.agent_name(r.agent),
                r.kind.name(),
                self.detail(&r.kind)
            );
        }
        out
    }

    /// Watts implied by an appliance state-change event.
    pub fn event_watts(kind: &EventKind) -> Option<f64> {
        match kind {
            EventKind::LightOn { .. } => Some(LIGHT_ON_W),
            EventKind::LightOff { .. } => Some(0.0),
            EventKind::ComputerOn => Some(ComputerMode::On.power_w()),
            EventKind::ComputerStandby => Some(ComputerMode::StandBy.power_w()),
            EventKind::ComputerOff => Some(ComputerMode::Off.power_w()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_schema_is_stable() {
        let log = EventLog {
            horizon_ticks: 10,
            user_ids: vec![UserId::new("user-001")],
            light_ids: vec![ApplianceId::new("office-01-l1")],
            computer_ids: vec![],
            room_ids: vec![RoomId::new("office-01")],
            records: vec![
                EventRecord {
                    tick: 3,
                    agent: AgentRef::User(0),
                    kind: EventKind::EnterOffice { room: 0 },
                },
                EventRecord {
                    tick: 5,
                    agent: AgentRef::Light(0),
                    kind: EventKind::LightOff {
                        room: 0,
                        cause: LightOffCause::SensorTimeout,
                    },
                },
            ],
        };
        let csv = log.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("tick,agent_id,event_kind,detail"));
        assert_eq!(lines.next(), Some("3,user-001,enter_office,room=office-01"));
        assert_eq!(
            lines.next(),
            Some("5,office-01-l1,light_off,room=office-01;cause=sensor_timeout")
        );
    }

    #[test]
    fn event_watts_table() {
        assert_eq!(
            EventLog::event_watts(&EventKind::LightOn { room: 0 }),
            Some(60.0)
        );
        assert_eq!(
            EventLog::event_watts(&EventKind::ComputerStandby),
            Some(25.0)
        );
        assert_eq!(EventLog::event_watts(&EventKind::Exit), None);
    }
}
