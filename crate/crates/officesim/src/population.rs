//! Stereotype tables and stochastic population generation.
//!
//! Working-time and awareness stereotypes are fixed lookup tables; a roster is
//! generated by apportioning the configured mix fractions exactly (largest
//! remainder, so small populations carry no sampling noise) and shuffling the
//! two label sequences independently of each other.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::{ApplianceId, BuildingPlan, RoomId, RoomKind, UserId};
use crate::rng::{purpose, shuffle, tag, RngKey};
use crate::time::hm;

/// Arrival/leave patterns. Windows are minute-of-day, half-open.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkStereotype {
    EarlyBird,
    TimetableComplier,
    FlexibleWorker,
}

impl WorkStereotype {
    pub const ALL: [WorkStereotype; 3] = [
        WorkStereotype::EarlyBird,
        WorkStereotype::TimetableComplier,
        WorkStereotype::FlexibleWorker,
    ];

    pub fn arrival_window(self) -> (u64, u64) {
        match self {
            WorkStereotype::EarlyBird => (hm(5, 0), hm(9, 0)),
            WorkStereotype::TimetableComplier => (hm(9, 0), hm(10, 0)),
            WorkStereotype::FlexibleWorker => (hm(10, 0), hm(13, 0)),
        }
    }

    /// Leave window; `None` means the lower bound is the day's arrival time.
    pub fn leave_window(self) -> (Option<u64>, u64) {
        match self {
            WorkStereotype::EarlyBird | WorkStereotype::TimetableComplier => {
                (Some(hm(17, 0)), hm(18, 0))
            }
            WorkStereotype::FlexibleWorker => (None, hm(23, 0)),
        }
    }
}

/// Awareness bands with their switch-off/email probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AwarenessStereotype {
    EnvironmentChampion,
    EnergySaver,
    RegularUser,
    BigUser,
}

impl AwarenessStereotype {
    pub const ALL: [AwarenessStereotype; 4] = [
        AwarenessStereotype::EnvironmentChampion,
        AwarenessStereotype::EnergySaver,
        AwarenessStereotype::RegularUser,
        AwarenessStereotype::BigUser,
    ];

    /// Closed awareness range users of this stereotype are created with.
    pub fn awareness_range(self) -> (f64, f64) {
        match self {
            AwarenessStereotype::EnvironmentChampion => (95.0, 100.0),
            AwarenessStereotype::EnergySaver => (70.0, 94.0),
            AwarenessStereotype::RegularUser => (30.0, 69.0),
            AwarenessStereotype::BigUser => (0.0, 29.0),
        }
    }

    pub fn p_switch_off(self) -> f64 {
        match self {
            AwarenessStereotype::EnvironmentChampion => 0.95,
            AwarenessStereotype::EnergySaver => 0.7,
            AwarenessStereotype::RegularUser => 0.4,
            AwarenessStereotype::BigUser => 0.2,
        }
    }

    pub fn p_email(self) -> f64 {
        match self {
            AwarenessStereotype::EnvironmentChampion => 0.9,
            AwarenessStereotype::EnergySaver => 0.6,
            AwarenessStereotype::RegularUser => 0.2,
            AwarenessStereotype::BigUser => 0.05,
        }
    }
}

/// One member of staff. Awareness is the only field that moves during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyUser {
    pub id: UserId,
    pub work_stereotype: WorkStereotype,
    /// Stereotype at creation; behavioural probabilities follow the *current*
    /// awareness value, not this label.
    pub awareness_stereotype: AwarenessStereotype,
    pub awareness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationSpec {
    pub n_users: usize,
    /// Early birds, timetable compliers, flexible workers.
    pub work_mix: [f64; 3],
    /// Champions, savers, regular users, big users.
    pub awareness_mix: [f64; 4],
    /// Per-day probability of coming in on a weekend day.
    pub p_weekend: f64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            n_users: 213,
            work_mix: [0.08, 0.53, 0.39],
            awareness_mix: [0.01, 0.08, 0.31, 0.60],
            p_weekend: 0.02,
        }
    }
}

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("{name} fractions sum to {sum}, expected 1")]
    MixNotNormalized { name: &'static str, sum: f64 },
    #[error("probability {name} = {value} outside [0, 1]")]
    BadProbability { name: &'static str, value: f64 },
    #[error("not enough office capacity: {users} users, {slots} desk slots")]
    InsufficientCapacity { users: usize, slots: usize },
    #[error("plan has no office rooms")]
    NoOffices,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<(), PopulationError> {
        for (name, sum) in [
            ("work_mix", self.work_mix.iter().sum::<f64>()),
            ("awareness_mix", self.awareness_mix.iter().sum::<f64>()),
        ] {
            if (sum - 1.0).abs() > 1e-9 {
                return Err(PopulationError::MixNotNormalized { name, sum });
            }
        }
        if !(0.0..=1.0).contains(&self.p_weekend) {
            return Err(PopulationError::BadProbability {
                name: "p_weekend",
                value: self.p_weekend,
            });
        }
        Ok(())
    }
}

/// Integer counts for `n` items split by `fractions`, by largest remainder.
/// Each count differs from `n * fraction` by less than one; ties go to the
/// earlier entry.
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| n as f64 * f).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Build a roster of `spec.n_users` users. Deterministic in `seed`; the work
/// and awareness labels are shuffled independently so that the two stereotype
/// dimensions are uncorrelated.
pub fn generate_population(
    spec: &PopulationSpec,
    seed: u64,
) -> Result<Vec<EnergyUser>, PopulationError> {
    spec.validate()?;
    let key = RngKey::root(seed).with(tag::MODULE, 1);
    let n = spec.n_users;

    let mut work_labels = Vec::with_capacity(n);
    for (kind, count) in WorkStereotype::ALL.iter().zip(apportion(n, &spec.work_mix)) {
        work_labels.extend(std::iter::repeat_n(*kind, count));
    }
    let mut awareness_labels = Vec::with_capacity(n);
    for (kind, count) in AwarenessStereotype::ALL
        .iter()
        .zip(apportion(n, &spec.awareness_mix))
    {
        awareness_labels.extend(std::iter::repeat_n(*kind, count));
    }
    shuffle(&mut work_labels, key, purpose::POP_SHUFFLE_WORK);
    shuffle(&mut awareness_labels, key, purpose::POP_SHUFFLE_AWARENESS);

    let width = (n.max(1).ilog10() as usize + 1).max(3);
    Ok((0..n)
        .map(|i| {
            let stereotype = awareness_labels[i];
            let (lo, hi) = stereotype.awareness_range();
            let awareness = key
                .with(tag::PURPOSE, purpose::POP_AWARENESS)
                .with(tag::INDEX, i as u64)
                .range_f64(lo, hi);
            EnergyUser {
                id: UserId(format!("user-{:0width$}", i + 1, width = width)),
                work_stereotype: work_labels[i],
                awareness_stereotype: stereotype,
                awareness,
            }
        })
        .collect())
}

/// Where everyone sits, and which workstation (if any) is theirs.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Occupancy {
    pub office: BTreeMap<UserId, RoomId>,
    pub own_computer: BTreeMap<UserId, ApplianceId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CapacityRule {
    /// Offices hold at most max(1, workstations) users.
    Strict,
    /// Overflow users share offices round-robin without a workstation.
    Shared,
}

/// Place a roster into a plan's offices. One desk slot per workstation (one
/// slot minimum per office); slot order is shuffled by `seed`. Users beyond
/// the slot count are shared round-robin under [`CapacityRule::Shared`] and an
/// error under [`CapacityRule::Strict`].
pub fn assign_occupants_with(
    plan: &BuildingPlan,
    roster: &[EnergyUser],
    seed: u64,
    rule: CapacityRule,
) -> Result<Occupancy, PopulationError> {
    let mut offices: Vec<_> = plan.rooms_of_kind(RoomKind::Office).collect();
    offices.sort_by(|a, b| a.id.cmp(&b.id));
    if offices.is_empty() && !roster.is_empty() {
        return Err(PopulationError::NoOffices);
    }

    let mut slots: Vec<(RoomId, Option<ApplianceId>)> = Vec::new();
    for office in &offices {
        let mut computers = office.computers.clone();
        computers.sort();
        if computers.is_empty() {
            slots.push((office.id.clone(), None));
        } else {
            for c in computers {
                slots.push((office.id.clone(), Some(c)));
            }
        }
    }
    if rule == CapacityRule::Strict && roster.len() > slots.len() {
        return Err(PopulationError::InsufficientCapacity {
            users: roster.len(),
            slots: slots.len(),
        });
    }

    let key = RngKey::root(seed).with(tag::MODULE, 2);
    shuffle(&mut slots, key, purpose::ASSIGN_SHUFFLE);

    let mut sorted: Vec<&EnergyUser> = roster.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));

    let mut occupancy = Occupancy::default();
    for (i, user) in sorted.iter().enumerate() {
        if let Some((office, computer)) = slots.get(i) {
            occupancy.office.insert(user.id.clone(), office.clone());
            if let Some(c) = computer {
                occupancy.own_computer.insert(user.id.clone(), c.clone());
            }
        } else {
            let office = &offices[(i - slots.len()) % offices.len()];
            occupancy.office.insert(user.id.clone(), office.id.clone());
        }
    }
    Ok(occupancy)
}

/// [`assign_occupants_with`] under the default shared-capacity rule.
pub fn assign_occupants(
    plan: &BuildingPlan,
    roster: &[EnergyUser],
    seed: u64,
) -> Result<Occupancy, PopulationError> {
    assign_occupants_with(plan, roster, seed, CapacityRule::Shared)
}
