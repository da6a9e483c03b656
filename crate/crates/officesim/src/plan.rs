//! Building plans: rooms, appliance inventory, occupant assignment.
//!
//! A plan is a JSON document:
//!
//! ```json
//! {
//!   "rooms": [
//!     {"id": "office-01", "kind": "office", "lights": ["office-01-l1"], "computers": 1}
//!   ],
//!   "occupants": [
//!     {"user_id": "user-001", "office_id": "office-01", "computer_id": "office-01-c1"}
//!   ]
//! }
//! ```
//!
//! `lights`/`computers` accept either an explicit id list or a count (ids are
//! then generated as `<room>-l<n>` / `<room>-c<n>`). `occupants` is optional;
//! when omitted, users are placed by [`crate::population::assign_occupants`].
//! `computer_id` inside an occupant entry is optional too — without it the
//! office's unclaimed computers are handed out in id order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! id_newtype {
    ($name:ident) => {
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_newtype!(RoomId);
id_newtype!(ApplianceId);
id_newtype!(UserId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomKind {
    Office,
    Corridor,
    Facility,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Room {
    pub id: RoomId,
    pub kind: RoomKind,
    pub lights: Vec<ApplianceId>,
    pub computers: Vec<ApplianceId>,
}

/// One row of the optional `occupants` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupantEntry {
    pub user_id: UserId,
    pub office_id: RoomId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub computer_id: Option<ApplianceId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTotals {
    pub rooms: usize,
    pub lights: usize,
    pub computers: usize,
    pub users: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildingPlan {
    pub rooms: Vec<Room>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub occupants: Vec<OccupantEntry>,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("malformed plan document: {0}")]
    MalformedDocument(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("{context} references `{id}`, which is not declared anywhere")]
    DanglingApplianceRef { id: String, context: String },
    #[error("occupant `{user}` is assigned to `{room}`, which is not an office")]
    OccupantInNonOffice { user: UserId, room: RoomId },
    #[error("corridor `{0}` declares computers")]
    CorridorComputers(RoomId),
    #[error("failed to read plan: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Document form (what serde sees on input)

#[derive(Deserialize)]
#[serde(untagged)]
enum Fixtures {
    Count(u32),
    Ids(Vec<ApplianceId>),
}

impl Default for Fixtures {
    fn default() -> Self {
        Fixtures::Count(0)
    }
}

impl Fixtures {
    fn expand(self, room: &RoomId, suffix: char) -> Vec<ApplianceId> {
        match self {
            Fixtures::Ids(ids) => ids,
            Fixtures::Count(n) => (1..=n)
                .map(|i| ApplianceId(format!("{room}-{suffix}{i}")))
                .collect(),
        }
    }
}

#[derive(Deserialize)]
struct RoomDoc {
    id: RoomId,
    kind: RoomKind,
    #[serde(default)]
    lights: Fixtures,
    #[serde(default)]
    computers: Fixtures,
}

#[derive(Deserialize)]
struct PlanDoc {
    rooms: Vec<RoomDoc>,
    #[serde(default)]
    occupants: Vec<OccupantEntry>,
}

// ---------------------------------------------------------------------------

impl BuildingPlan {
    pub fn from_json_str(text: &str) -> Result<Self, PlanError> {
        let doc: PlanDoc =
            serde_json::from_str(text).map_err(|e| PlanError::MalformedDocument(e.to_string()))?;
        let rooms = doc
            .rooms
            .into_iter()
            .map(|r| Room {
                lights: r.lights.expand(&r.id, 'l'),
                computers: r.computers.expand(&r.id, 'c'),
                id: r.id,
                kind: r.kind,
            })
            .collect();
        let plan = BuildingPlan {
            rooms,
            occupants: doc.occupants,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let mut room_ids = BTreeSet::new();
        let mut appliance_ids = BTreeSet::new();
        for room in &self.rooms {
            if !room_ids.insert(&room.id) {
                return Err(PlanError::DuplicateId(room.id.0.clone()));
            }
            for id in room.lights.iter().chain(&room.computers) {
                if !appliance_ids.insert(id) {
                    return Err(PlanError::DuplicateId(id.0.clone()));
                }
            }
            if room.kind == RoomKind::Corridor && !room.computers.is_empty() {
                return Err(PlanError::CorridorComputers(room.id.clone()));
            }
        }

        let offices: BTreeMap<&RoomId, &Room> = self
            .rooms
            .iter()
            .filter(|r| r.kind == RoomKind::Office)
            .map(|r| (&r.id, r))
            .collect();
        let mut users = BTreeSet::new();
        let mut claimed = BTreeSet::new();
        for entry in &self.occupants {
            if !users.insert(&entry.user_id) {
                return Err(PlanError::DuplicateId(entry.user_id.0.clone()));
            }
            let Some(office) = offices.get(&entry.office_id) else {
                if room_ids.contains(&entry.office_id) {
                    return Err(PlanError::OccupantInNonOffice {
                        user: entry.user_id.clone(),
                        room: entry.office_id.clone(),
                    });
                }
                return Err(PlanError::DanglingApplianceRef {
                    id: entry.office_id.0.clone(),
                    context: format!("occupant `{}`", entry.user_id),
                });
            };
            if let Some(computer) = &entry.computer_id {
                if !office.computers.contains(computer) {
                    return Err(PlanError::DanglingApplianceRef {
                        id: computer.0.clone(),
                        context: format!("occupant `{}` in `{}`", entry.user_id, office.id),
                    });
                }
                if !claimed.insert(computer) {
                    return Err(PlanError::DuplicateId(computer.0.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn totals(&self) -> PlanTotals {
        PlanTotals {
            rooms: self.rooms.len(),
            lights: self.rooms.iter().map(|r| r.lights.len()).sum(),
            computers: self.rooms.iter().map(|r| r.computers.len()).sum(),
            users: self.occupants.len(),
        }
    }

    pub fn rooms_of_kind(&self, kind: RoomKind) -> impl Iterator<Item = &Room> {
        self.rooms.iter().filter(move |r| r.kind == kind)
    }

    pub fn room(&self, id: &RoomId) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == *id)
    }
}

/// Knobs for the synthetic default building. The shipped values reproduce the
/// bundled inventory totals (47 rooms, 239 lights, 180 computers, 213 users);
/// the split between rooms is an assumption, not survey data. The number of
/// per-office workstations in particular is a calibration choice: it sets how
/// much computing power tracks occupancy, and the default was picked so the
/// default scenario reproduces the documented consumption-share breakdown.
#[derive(Clone, Debug)]
pub struct DefaultPlanSpec {
    pub offices: usize,
    pub lights_per_office: usize,
    pub offices_with_computer: usize,
    pub corridors: usize,
    pub lights_per_corridor: usize,
    /// (name suffix, lights, computers) for each facility room.
    pub facilities: Vec<(&'static str, usize, usize)>,
    pub users: usize,
}

impl Default for DefaultPlanSpec {
    fn default() -> Self {
        DefaultPlanSpec {
            offices: 40,
            lights_per_office: 4,
            offices_with_computer: 24,
            corridors: 4,
            lights_per_corridor: 8,
            facilities: vec![("lab", 25, 156), ("kitchen", 12, 0), ("toilet", 10, 0)],
            users: 213,
        }
    }
}

impl DefaultPlanSpec {
    pub fn build(&self) -> BuildingPlan {
        let mut rooms = Vec::new();
        for i in 1..=self.offices {
            let id = RoomId(format!("office-{i:02}"));
            let lights = (1..=self.lights_per_office)
                .map(|n| ApplianceId(format!("{id}-l{n}")))
                .collect();
            let computers = if i <= self.offices_with_computer {
                vec![ApplianceId(format!("{id}-c1"))]
            } else {
                Vec::new()
            };
            rooms.push(Room {
                id,
                kind: RoomKind::Office,
                lights,
                computers,
            });
        }
        for i in 1..=self.corridors {
            let id = RoomId(format!("corridor-{i}"));
            let lights = (1..=self.lights_per_corridor)
                .map(|n| ApplianceId(format!("{id}-l{n}")))
                .collect();
            rooms.push(Room {
                id,
                kind: RoomKind::Corridor,
                lights,
                computers: Vec::new(),
            });
        }
        for (name, lights, computers) in &self.facilities {
            let id = RoomId(format!("facility-{name}"));
            rooms.push(Room {
                kind: RoomKind::Facility,
                lights: (1..=*lights)
                    .map(|n| ApplianceId(format!("{id}-l{n}")))
                    .collect(),
                computers: (1..=*computers)
                    .map(|n| ApplianceId(format!("{id}-c{n}")))
                    .collect(),
                id,
            });
        }

        // Users go round-robin over offices; the first occupant of an office
        // that has a workstation claims it.
        let width = digits(self.users).max(3);
        let mut occupants = Vec::new();
        for u in 0..self.users {
            let office_idx = u % self.offices;
            let office_id = RoomId(format!("office-{:02}", office_idx + 1));
            let computer_id = (u < self.offices && office_idx < self.offices_with_computer)
                .then(|| ApplianceId(format!("{office_id}-c1")));
            occupants.push(OccupantEntry {
                user_id: UserId(format!("user-{:0width$}", u + 1, width = width)),
                office_id,
                computer_id,
            });
        }

        BuildingPlan { rooms, occupants }
    }
}

fn digits(n: usize) -> usize {
    n.max(1).ilog10() as usize + 1
}

/// The building everything defaults to.
pub fn default_plan() -> BuildingPlan {
    DefaultPlanSpec::default().build()
}

/// Parse and validate a plan document.
pub fn load_building_plan(text: &str) -> Result<BuildingPlan, PlanError> {
    BuildingPlan::from_json_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_matches_inventory_totals() {
        let plan = default_plan();
        plan.validate().unwrap();
        assert_eq!(
            plan.totals(),
            PlanTotals {
                rooms: 47,
                lights: 239,
                computers: 180,
                users: 213
            }
        );
    }

    #[test]
    fn tiny_plan_totals() {
        let plan = BuildingPlan::from_json_str(
            r#"{"rooms": [{"id": "office-1", "kind": "office", "lights": ["office-1-l1"]}]}"#,
        )
        .unwrap();
        assert_eq!(
            plan.totals(),
            PlanTotals {
                rooms: 1,
                lights: 1,
                computers: 0,
                users: 0
            }
        );
    }

    #[test]
    fn count_form_expands_ids() {
        let plan = BuildingPlan::from_json_str(
            r#"{"rooms": [{"id": "r1", "kind": "office", "lights": 2, "computers": 1}]}"#,
        )
        .unwrap();
        assert_eq!(plan.rooms[0].lights[1].as_str(), "r1-l2");
        assert_eq!(plan.rooms[0].computers[0].as_str(), "r1-c1");
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let err = BuildingPlan::from_json_str(
            r#"{
                "rooms": [{"id": "office-1", "kind": "office", "lights": 1, "computers": 1}],
                "occupants": [{"user_id": "u1", "office_id": "office-1", "computer_id": "light-99"}]
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::DanglingApplianceRef { id, .. } if id == "light-99"));

        let err = BuildingPlan::from_json_str(
            r#"{
                "rooms": [{"id": "office-1", "kind": "office"}],
                "occupants": [{"user_id": "u1", "office_id": "office-9"}]
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::DanglingApplianceRef { .. }));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = BuildingPlan::from_json_str(
            r#"{"rooms": [
                {"id": "a", "kind": "office", "lights": ["x"]},
                {"id": "b", "kind": "office", "lights": ["x"]}
            ]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::DuplicateId(id) if id == "x"));
    }

    #[test]
    fn occupant_in_corridor_is_rejected() {
        let err = BuildingPlan::from_json_str(
            r#"{
                "rooms": [{"id": "c1", "kind": "corridor", "lights": 1}],
                "occupants": [{"user_id": "u1", "office_id": "c1"}]
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::OccupantInNonOffice { .. }));
    }

    #[test]
    fn corridor_computers_are_rejected() {
        let err = BuildingPlan::from_json_str(
            r#"{"rooms": [{"id": "c1", "kind": "corridor", "computers": 1}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::CorridorComputers(_)));
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(
            BuildingPlan::from_json_str("{"),
            Err(PlanError::MalformedDocument(_))
        ));
    }

    #[test]
    fn round_trips_through_json() {
        let plan = default_plan();
        let text = plan.to_json_string();
        let again = BuildingPlan::from_json_str(&text).unwrap();
        assert_eq!(plan, again);
    }
}
