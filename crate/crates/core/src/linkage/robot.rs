//! Default mechanism: a crank with two pins driving a four-bar shoulder loop
//! and a rocker that pulls the forearm link, giving a folded wing on the
//! upstroke and an extended wing on the downstroke.
//!
//! Joints: 1 crank pivot, 2 and 3 crank pins, 4 humerus lever pin, 5 shoulder,
//! 6 elbow, 7 coupler/rocker pin, 8 rocker pivot, 9 rocker tip, 10 forearm pin.
//! Angles, in order: q1 (crank), q2, q3, q5 (humerus), q6 (forearm), q8, q9.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{Arm, Chain, Closure, GaitTap, LinkageConfig, LinkageError, Vec2};

pub const ANGLE_NAMES: [&str; 7] = ["q1", "q2", "q3", "q5", "q6", "q8", "q9"];

/// One rigid link from the previous joint of a chain to joint `to`.
/// Its direction is the named angle plus `offset_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    pub to: u32,
    pub length: f64,
    pub angle: String,
    #[serde(default)]
    pub offset_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub from: u32,
    pub arms: Vec<ArmSpec>,
}

/// Two chains that must meet at `joint`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureSpec {
    pub joint: u32,
    pub a: ChainSpec,
    pub b: ChainSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PivotSpec {
    pub joint: u32,
    pub position: [f64; 2],
}

/// Linkage geometry as written in the run file. Lengths in meters, angles in
/// degrees. `reference_deg` seeds assembly; the nearest branch is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkageGeometry {
    pub angles: Vec<String>,
    pub driver: String,
    pub shoulder: String,
    pub elbow: String,
    pub reference_deg: Vec<f64>,
    pub pivots: Vec<PivotSpec>,
    pub closures: Vec<ClosureSpec>,
}

fn arm(to: u32, length: f64, angle: &str, offset_deg: f64) -> ArmSpec {
    ArmSpec { to, length, angle: angle.to_string(), offset_deg }
}

impl Default for LinkageGeometry {
    /// Default seven-angle, three-loop mechanism.
    fn default() -> Self {
        let pivot = |joint, x, y| PivotSpec { joint, position: [x, y] };
        let chain = |from, arms| ChainSpec { from, arms };
        LinkageGeometry {
            angles: ANGLE_NAMES.iter().map(|s| s.to_string()).collect(),
            driver: "q1".into(),
            shoulder: "q5".into(),
            elbow: "q6".into(),
            reference_deg: vec![0.0, 101.83, 67.23, -2.68, 22.86, 9.03, 10.16],
            pivots: vec![pivot(1, 0.010, -0.022), pivot(5, 0.0, 0.0), pivot(8, 0.00264, -0.0138)],
            closures: vec![
                ClosureSpec {
                    joint: 4,
                    a: chain(1, vec![arm(2, 0.0045, "q1", 0.0), arm(4, 0.022, "q2", 0.0)]),
                    b: chain(5, vec![arm(4, 0.010, "q5", 0.0)]),
                },
                ClosureSpec {
                    joint: 7,
                    a: chain(1, vec![arm(3, 0.0045, "q1", 232.71), arm(7, 0.014545, "q3", 0.0)]),
                    b: chain(8, vec![arm(7, 0.010392, "q8", 0.0)]),
                },
                ClosureSpec {
                    joint: 10,
                    a: chain(5, vec![arm(6, 0.060, "q5", 0.0), arm(10, 0.011330, "q6", 60.89)]),
                    b: chain(8, vec![arm(9, 0.012685, "q8", 115.18), arm(10, 0.066707, "q9", 0.0)]),
                },
            ],
        }
    }
}

impl LinkageGeometry {
    /// Assemble the mechanism. `shoulder_zero` and `elbow_zero` are radians.
    pub fn build(&self, shoulder_zero: f64, elbow_zero: f64) -> Result<LinkageConfig, LinkageError> {
        let index = |name: &str| {
            self.angles
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| LinkageError::InvalidConfig(format!("unknown angle `{name}`")))
        };
        if self.reference_deg.len() != self.angles.len() {
            return Err(LinkageError::InvalidConfig(format!(
                "reference_deg has {} entries for {} angles",
                self.reference_deg.len(),
                self.angles.len()
            )));
        }
        let mut pivots = BTreeMap::new();
        for p in &self.pivots {
            if pivots.insert(p.joint, Vec2::from(p.position)).is_some() {
                return Err(LinkageError::InvalidConfig(format!("pivot {} listed twice", p.joint)));
            }
        }
        let chain = |c: &ChainSpec| -> Result<Chain, LinkageError> {
            let arms = c
                .arms
                .iter()
                .map(|a| Ok(Arm { to: a.to, length: a.length, angle: index(&a.angle)?, offset: a.offset_deg.to_radians() }))
                .collect::<Result<_, LinkageError>>()?;
            Ok(Chain { from: c.from, arms })
        };
        let closures = self
            .closures
            .iter()
            .map(|c| Ok(Closure { joint: c.joint, a: chain(&c.a)?, b: chain(&c.b)? }))
            .collect::<Result<Vec<_>, LinkageError>>()?;
        let guess: Vec<f64> = self.reference_deg.iter().map(|d| d.to_radians()).collect();
        LinkageConfig::new(
            self.angles.clone(),
            pivots,
            closures,
            index(&self.driver)?,
            GaitTap { shoulder: index(&self.shoulder)?, elbow: index(&self.elbow)?, shoulder_zero, elbow_zero },
            DVector::from_vec(guess),
        )
    }
}

/// Default mechanism with the elbow measured from its 65° rest fold.
pub fn default_linkage() -> Result<LinkageConfig, LinkageError> {
    LinkageGeometry::default().build(0.0, 65f64.to_radians())
}
