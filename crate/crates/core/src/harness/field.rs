//! The radial target field and per-participant trial plans.

use std::fmt;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::geometry::{OperatingPlane, Vec3, Zone, ZoneSet};
use crate::seeding;

pub const DIRECTION_COUNT: usize = 36;
pub const DIRECTION_STEP_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub direction_deg: f64,
    pub zone: Zone,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetField {
    pub plane: OperatingPlane,
    pub zones: ZoneSet,
    pub targets: Vec<Target>,
}

impl TargetField {
    pub fn origin(&self) -> Vec3 {
        self.plane.origin()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn get(&self, direction_deg: f64, zone: Zone) -> Option<&Target> {
        self.targets
            .iter()
            .find(|t| t.zone == zone && (t.direction_deg - direction_deg).abs() < 1e-9)
    }
}

/// 36 directions × 3 zones, direction-major. The geometry fully determines
/// the field, so no seed is involved.
pub fn generate_field(plane: OperatingPlane, zones: ZoneSet) -> TargetField {
    let targets = (0..DIRECTION_COUNT)
        .flat_map(|d| {
            let direction_deg = d as f64 * DIRECTION_STEP_DEG;
            zones.zones().iter().map(move |z| Target {
                direction_deg,
                zone: z.zone,
                position: plane.point_at(direction_deg, z.radius),
            })
        })
        .collect();
    TargetField {
        plane,
        zones,
        targets,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    HapticsOnly,
    AROnly,
    ARPlusHaptics,
}

impl Condition {
    pub const ALL: [Condition; 3] = [
        Condition::HapticsOnly,
        Condition::AROnly,
        Condition::ARPlusHaptics,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::HapticsOnly => "haptics_only",
            Condition::AROnly => "ar_only",
            Condition::ARPlusHaptics => "ar_haptics",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Condition::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn has_haptics(self) -> bool {
        self != Condition::AROnly
    }

    /// Whether the participant can see the target.
    pub fn has_visual_target(self) -> bool {
        self != Condition::HapticsOnly
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub condition: Condition,
    /// Index into [`TargetField::targets`].
    pub target_index: usize,
}

/// The six orderings of three conditions in lexicographic order.
pub fn condition_orders(conditions: [Condition; 3]) -> [[Condition; 3]; 6] {
    let [a, b, c] = conditions;
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// Condition blocks in the order assigned to `participant`, each holding
/// `per_condition` distinct targets drawn without replacement. Draws for
/// different conditions are independent.
pub fn sample_trial_plan(
    field: &TargetField,
    conditions: [Condition; 3],
    per_condition: usize,
    seed: u64,
    participant: u32,
) -> Vec<PlannedTrial> {
    assert!(per_condition <= field.len(), "per_condition exceeds the field size");
    let order = condition_orders(conditions)[participant as usize % 6];
    let mut plan = Vec::with_capacity(per_condition * 3);
    for condition in order {
        let mut rng = seeding::stream(seed, &[participant as u64, condition.index() as u64]);
        let mut picks = index::sample(&mut rng, field.len(), per_condition).into_vec();
        picks.shuffle(&mut rng);
        plan.extend(picks.into_iter().map(|target_index| PlannedTrial {
            condition,
            target_index,
        }));
    }
    plan
}
