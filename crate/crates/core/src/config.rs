//! Run configuration file (TOML). Angles are degrees in the file and radians
//! everywhere else.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aero::{QuasiSteadyCoeffs, WagnerConstants};
use crate::dynamics::{MassModel, Mount, RigidBody, Robot};
use crate::linkage::{GaitProfile, LinkageConfig, LinkageGeometry, Sinusoid};
use crate::math::{Mat3, Vec3};
use crate::sim::{AeroMode, GaitSource, SimConfig, SpeedControl};
use crate::wing::{ChordModel, Segment, SegmentPlanform, WingGeometry};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Quasisteady,
    Wagner,
}

impl From<ModeName> for AeroMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Quasisteady => AeroMode::QuasiSteady,
            ModeName::Wagner => AeroMode::Wagner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaitSourceName {
    Linkage,
    Prescribed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChordName {
    Trapezoid,
    Elliptic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Freestream speed, m/s.
    pub airspeed: f64,
    #[serde(default = "d::rho")]
    pub rho: f64,
    #[serde(default = "d::dt")]
    pub dt: f64,
    #[serde(default = "d::duration")]
    pub duration: f64,
    #[serde(default = "d::mode")]
    pub mode: ModeName,
    /// Clamp the body as on a load cell.
    #[serde(default = "d::yes")]
    pub tethered: bool,
    #[serde(default = "d::zeta_stride")]
    pub zeta_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSection {
    /// Flap frequency, Hz.
    pub frequency: f64,
    /// `linkage` drives the wing through the `[linkage]` mechanism,
    /// `prescribed` uses the sinusoids below.
    #[serde(default = "d::gait_mode")]
    pub mode: GaitSourceName,
    /// Crank-speed PI gains.
    #[serde(default = "d::kp")]
    pub kp: f64,
    #[serde(default = "d::ki")]
    pub ki: f64,
    #[serde(default = "d::shoulder_zero_deg")]
    pub shoulder_zero_deg: f64,
    #[serde(default = "d::elbow_zero_deg")]
    pub elbow_zero_deg: f64,
    #[serde(default = "d::shoulder_amplitude_deg")]
    pub shoulder_amplitude_deg: f64,
    #[serde(default = "d::shoulder_phase_deg")]
    pub shoulder_phase_deg: f64,
    #[serde(default)]
    pub shoulder_offset_deg: f64,
    #[serde(default = "d::elbow_amplitude_deg")]
    pub elbow_amplitude_deg: f64,
    #[serde(default)]
    pub elbow_phase_deg: f64,
    #[serde(default = "d::elbow_offset_deg")]
    pub elbow_offset_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MassSection {
    /// kg
    pub total: f64,
    pub body_fraction: f64,
    /// Per side.
    pub proximal_fraction: f64,
    pub distal_fraction: f64,
    /// Body treated as a flat plate, m.
    pub body_length: f64,
    pub body_width: f64,
    pub body_com: [f64; 3],
    /// m/s², acting along −z.
    pub gravity: f64,
}

impl Default for MassSection {
    fn default() -> Self {
        MassSection {
            total: 0.0195,
            body_fraction: 0.8,
            proximal_fraction: 0.06,
            distal_fraction: 0.04,
            body_length: 0.1,
            body_width: 0.03,
            body_com: [0.0; 3],
            gravity: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub length: f64,
    pub root_chord: f64,
    pub tip_chord: f64,
    pub elements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanformSection {
    /// Left shoulder hinge in body axes, m.
    pub shoulder: [f64; 3],
    pub shoulder_axis: [f64; 3],
    pub elbow_axis: [f64; 3],
    pub leading_edge: f64,
    pub incidence_deg: f64,
    pub chord_model: ChordName,
    pub proximal: SegmentSection,
    pub distal: SegmentSection,
}

impl Default for PlanformSection {
    fn default() -> Self {
        PlanformSection {
            shoulder: [0.0; 3],
            shoulder_axis: [1.0, 0.0, 0.0],
            elbow_axis: [1.0, 0.0, 0.0],
            leading_edge: 0.01,
            incidence_deg: 8.0,
            chord_model: ChordName::Trapezoid,
            proximal: SegmentSection { length: 0.06, root_chord: 0.08, tip_chord: 0.075, elements: 5 },
            distal: SegmentSection { length: 0.09, root_chord: 0.075, tip_chord: 0.03, elements: 5 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnsteadySection {
    /// Lifting-line stations across the full span (even).
    pub stations: usize,
    /// Airspeed floor, m/s.
    pub u_floor: f64,
    pub wagner: WagnerConstants,
}

impl Default for UnsteadySection {
    fn default() -> Self {
        UnsteadySection { stations: 16, u_floor: 0.05, wagner: WagnerConstants::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WakeSection {
    /// Sampling plane distance behind the trailing edge, m. Unset means
    /// one mean chord.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plane_offset: Option<f64>,
    pub nu: usize,
    pub nv: usize,
    /// Keep every this many shed rows.
    pub row_stride: usize,
}

impl Default for WakeSection {
    fn default() -> Self {
        WakeSection { plane_offset: None, nu: 41, nv: 21, row_stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    /// Low-pass cutoff for load-cell data, Hz; unset disables filtering.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_hz: Option<f64>,
    pub filter_order: usize,
    /// Discard this much of the start of the simulation, s.
    pub skip: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        CompareSection { cutoff_hz: None, filter_order: 4, skip: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimSection,
    pub gait: GaitSection,
    #[serde(default)]
    pub mass: MassSection,
    #[serde(default)]
    pub planform: PlanformSection,
    #[serde(default)]
    pub unsteady: UnsteadySection,
    #[serde(default)]
    pub quasisteady: QuasiSteadyCoeffs,
    #[serde(default)]
    pub wake: WakeSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub linkage: LinkageGeometry,
}

mod d {
    use super::{GaitSourceName, ModeName};
    pub fn rho() -> f64 {
        1.225
    }
    pub fn dt() -> f64 {
        2.5e-4
    }
    pub fn duration() -> f64 {
        2.0
    }
    pub fn mode() -> ModeName {
        ModeName::Wagner
    }
    pub fn yes() -> bool {
        true
    }
    pub fn zeta_stride() -> usize {
        40
    }
    pub fn gait_mode() -> GaitSourceName {
        GaitSourceName::Linkage
    }
    pub fn kp() -> f64 {
        20.0
    }
    pub fn ki() -> f64 {
        100.0
    }
    pub fn shoulder_zero_deg() -> f64 {
        0.0
    }
    pub fn elbow_zero_deg() -> f64 {
        65.0
    }
    pub fn shoulder_amplitude_deg() -> f64 {
        27.0
    }
    pub fn shoulder_phase_deg() -> f64 {
        90.0
    }
    pub fn elbow_amplitude_deg() -> f64 {
        20.0
    }
    pub fn elbow_offset_deg() -> f64 {
        -20.0
    }
}

fn plate(mass: f64, lx: f64, ly: f64, com: Vec3) -> RigidBody {
    RigidBody {
        mass,
        com,
        inertia: Mat3::from_diagonal(&Vec3::new(
            mass * ly * ly / 12.0,
            mass * lx * lx / 12.0,
            mass * (lx * lx + ly * ly) / 12.0,
        )),
    }
}

fn positive(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {x}")))
    }
}

fn non_negative(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative, got {x}")))
    }
}

fn unit(field: &str, v: [f64; 3]) -> Result<Vec3, ConfigError> {
    let v = Vec3::from(v);
    if v.norm() > 0.0 && v.iter().all(|x| x.is_finite()) {
        Ok(v.normalize())
    } else {
        Err(invalid(field, "must be a non-zero vector"))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_value(value: toml::Value) -> Result<Self, ConfigError> {
        let cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Effective configuration with every default written out.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.sim;
        non_negative("sim.airspeed", s.airspeed)?;
        positive("sim.rho", s.rho)?;
        positive("sim.dt", s.dt)?;
        non_negative("sim.duration", s.duration)?;
        let g = &self.gait;
        positive("gait.frequency", g.frequency)?;
        non_negative("gait.kp", g.kp)?;
        non_negative("gait.ki", g.ki)?;
        let m = &self.mass;
        positive("mass.total", m.total)?;
        positive("mass.body_fraction", m.body_fraction)?;
        positive("mass.proximal_fraction", m.proximal_fraction)?;
        positive("mass.distal_fraction", m.distal_fraction)?;
        let sum = m.body_fraction + 2.0 * (m.proximal_fraction + m.distal_fraction);
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid("mass.body_fraction", format!("body + 2·(proximal + distal) fractions must sum to 1, got {sum}")));
        }
        positive("mass.body_length", m.body_length)?;
        positive("mass.body_width", m.body_width)?;
        non_negative("mass.gravity", m.gravity)?;
        let p = &self.planform;
        unit("planform.shoulder_axis", p.shoulder_axis)?;
        unit("planform.elbow_axis", p.elbow_axis)?;
        for (name, seg) in [("proximal", &p.proximal), ("distal", &p.distal)] {
            positive(&format!("planform.{name}.length"), seg.length)?;
            positive(&format!("planform.{name}.root_chord"), seg.root_chord)?;
            positive(&format!("planform.{name}.tip_chord"), seg.tip_chord)?;
            if seg.elements < 2 {
                return Err(invalid(&format!("planform.{name}.elements"), "need at least 2 elements per segment"));
            }
        }
        let u = &self.unsteady;
        if u.stations < 2 || u.stations % 2 == 1 {
            return Err(invalid("unsteady.stations", format!("must be even and at least 2, got {}", u.stations)));
        }
        positive("unsteady.u_floor", u.u_floor)?;
        positive("unsteady.wagner.a0", u.wagner.a0)?;
        positive("unsteady.wagner.eps1", u.wagner.eps1)?;
        positive("unsteady.wagner.eps2", u.wagner.eps2)?;
        if let Some(x) = self.wake.plane_offset {
            non_negative("wake.plane_offset", x)?;
        }
        if self.wake.nu < 2 || self.wake.nv < 2 {
            return Err(invalid("wake.nu", "plane needs at least 2×2 nodes"));
        }
        if self.wake.row_stride == 0 {
            return Err(invalid("wake.row_stride", "must be at least 1"));
        }
        if let Some(c) = self.compare.cutoff_hz {
            positive("compare.cutoff_hz", c)?;
        }
        if self.compare.filter_order == 0 {
            return Err(invalid("compare.filter_order", "must be at least 1"));
        }
        non_negative("compare.skip", self.compare.skip)?;
        if g.mode == GaitSourceName::Linkage {
            for (i, c) in self.linkage.closures.iter().enumerate() {
                for (side, chain) in [("a", &c.a), ("b", &c.b)] {
                    for (j, a) in chain.arms.iter().enumerate() {
                        positive(&format!("linkage.closures[{i}].{side}.arms[{j}].length"), a.length)?;
                    }
                }
            }
            self.linkage()?;
        }
        Ok(())
    }

    pub fn wing(&self) -> WingGeometry {
        let p = &self.planform;
        let seg = |s: &SegmentSection| SegmentPlanform {
            length: s.length,
            root_chord: s.root_chord,
            tip_chord: s.tip_chord,
            elements: s.elements,
        };
        WingGeometry {
            shoulder: Vec3::from(p.shoulder),
            shoulder_axis: Vec3::from(p.shoulder_axis).normalize(),
            elbow_axis: Vec3::from(p.elbow_axis).normalize(),
            leading_edge: p.leading_edge,
            incidence: p.incidence_deg.to_radians(),
            proximal: seg(&p.proximal),
            distal: seg(&p.distal),
            chord_model: match p.chord_model {
                ChordName::Trapezoid => ChordModel::Trapezoid,
                ChordName::Elliptic => ChordModel::Elliptic,
            },
        }
    }

    /// Flat-plate inertias; each wing segment's mass sits at mid-span,
    /// 40% chord.
    pub fn robot(&self) -> Robot {
        let wing = self.wing();
        let m = &self.mass;
        let member = |seg: Segment, frac: f64| {
            let s = wing.segment(seg);
            let mid = 0.5 * s.length;
            let chord = wing.chord(seg, mid);
            plate(m.total * frac, chord, s.length, wing.local_point(seg, mid, 0.4))
        };
        Robot {
            mass: MassModel {
                body: plate(m.total * m.body_fraction, m.body_length, m.body_width, Vec3::from(m.body_com)),
                proximal: member(Segment::Proximal, m.proximal_fraction),
                distal: member(Segment::Distal, m.distal_fraction),
                gravity: Vec3::new(0.0, 0.0, -m.gravity),
            },
            wing,
        }
    }

    pub fn gait_profile(&self) -> GaitProfile {
        let g = &self.gait;
        let sine = |a: f64, p: f64, o: f64| Sinusoid { amplitude: a.to_radians(), phase: p.to_radians(), offset: o.to_radians() };
        GaitProfile {
            frequency: g.frequency,
            shoulder: sine(g.shoulder_amplitude_deg, g.shoulder_phase_deg, g.shoulder_offset_deg),
            elbow: sine(g.elbow_amplitude_deg, g.elbow_phase_deg, g.elbow_offset_deg),
        }
    }

    pub fn linkage(&self) -> Result<LinkageConfig, ConfigError> {
        let g = &self.gait;
        self.linkage
            .build(g.shoulder_zero_deg.to_radians(), g.elbow_zero_deg.to_radians())
            .map_err(|e| invalid("linkage", e.to_string()))
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let g = &self.gait;
        let gait = match g.mode {
            GaitSourceName::Prescribed => GaitSource::Prescribed(self.gait_profile()),
            GaitSourceName::Linkage => {
                GaitSource::Linkage {
                    linkage: self.linkage()?,
                    control: SpeedControl { target: TAU * g.frequency, kp: g.kp, ki: g.ki },
                }
            }
        };
        Ok(SimConfig {
            robot: self.robot(),
            gait,
            mode: self.sim.mode.into(),
            mount: if self.sim.tethered { Mount::Tethered } else { Mount::Free },
            rho: self.sim.rho,
            airspeed: self.sim.airspeed,
            dt: self.sim.dt,
            duration: self.sim.duration,
            stations: self.unsteady.stations,
            wagner: self.unsteady.wagner,
            u_floor: self.unsteady.u_floor,
            coeffs: self.quasisteady,
            zeta_stride: self.sim.zeta_stride,
        })
    }

    /// Mean chord of the extended wing, m.
    pub fn mean_chord(&self) -> f64 {
        let w = self.wing();
        w.side_area(0.0) / w.extended_semispan()
    }
}

/// Sets a dotted key (`sim.airspeed`) in a TOML document, creating tables
/// as needed.
pub fn set_dotted(doc: &mut toml::Value, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(key, "malformed key"));
    }
    let mut node = doc;
    for p in &parts[..parts.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| invalid(key, format!("`{p}` is not a table")))?;
        node = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    node.as_table_mut()
        .ok_or_else(|| invalid(key, "parent is not a table"))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
