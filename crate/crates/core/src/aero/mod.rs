//! Blade-element discretization shared by the quasi-steady and unsteady models.

pub mod quasisteady;
pub mod unsteady;

use std::f64::consts::PI;

use thiserror::Error;

use crate::dynamics::{point_velocity, BodyState, Jac3, Robot, Vec8};
use crate::math::Vec3;
use crate::wing::{Segment, Side};

pub use quasisteady::{dickinson_cd, dickinson_cl, element_force, generalized_force, QuasiSteadyCoeffs};
pub use unsteady::{UnsteadyAeroState, WagnerConstants, WingDiscretization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AeroError {
    #[error("need at least 4 blade elements per wing side, got {0}")]
    TooFewElements(usize),
    #[error("station count {0} must be even and at least 2 so no station sits on the wing root")]
    OddStations(usize),
    #[error("Fourier collocation system is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("relative airspeed at station {station} is zero and no airspeed floor is set")]
    DegenerateFlow { station: usize },
}

/// How the span is cut into elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Per-segment uniform elements (counts from the planform).
    Uniform,
    /// `m` lifting-line stations over the full span, `y = s cos θ`,
    /// `θ_k = kπ/(m+1)`, each owning the strip between neighbouring midpoints.
    Stations(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BladeElement {
    pub side: Side,
    pub segment: Segment,
    /// Arc position along the segment, m.
    pub eta: f64,
    pub chord: f64,
    /// Flattened spanwise width, m.
    pub ds: f64,
    /// Quarter-chord point in segment-local coordinates.
    pub local: Vec3,
    /// Quarter-chord point, inertial.
    pub position: Vec3,
    /// Inertial velocity of the quarter-chord point.
    pub velocity: Vec3,
    /// Chordwise (LE→TE) and top-normal unit vectors, inertial.
    pub e_y: Vec3,
    pub e_n: Vec3,
    /// Relative wind components along `(e_y, e_n)`, m/s.
    pub rel_wind: [f64; 2],
    /// Angle of attack, positive with the flow striking the underside, rad.
    pub alpha: f64,
    pub e_l: Vec3,
    pub e_d: Vec3,
    /// Inertial velocity map of the quarter-chord point (`B_kᵀ`).
    pub jacobian: Jac3,
}

impl BladeElement {
    pub fn airspeed(&self) -> f64 {
        self.rel_wind[0].hypot(self.rel_wind[1])
    }

    pub fn area(&self) -> f64 {
        self.chord * self.ds
    }

    /// Trailing-edge point on this element's centre line, inertial.
    pub fn trailing_edge(&self) -> Vec3 {
        self.position + self.e_y * (0.75 * self.chord)
    }
}

/// Aerodynamic loads summed over all elements.
#[derive(Debug, Clone, PartialEq)]
pub struct AeroLoads {
    pub generalized: Vec8,
    /// Total force, inertial, N.
    pub force: Vec3,
    /// Moment about the body origin in body axes, N·m.
    pub moment: Vec3,
    /// Sectional lift coefficient per element.
    pub cl: Vec<f64>,
    /// Bound circulation per element, m²/s.
    pub circulation: Vec<f64>,
}

impl AeroLoads {
    /// Sums element forces in index order.
    pub fn from_element_forces(elements: &[BladeElement], forces: &[Vec3], cl: Vec<f64>, circulation: Vec<f64>) -> Self {
        let mut generalized = Vec8::zeros();
        let mut force = Vec3::zeros();
        for (el, f) in elements.iter().zip(forces) {
            generalized += generalized_force(el, f);
            force += f;
        }
        let moment = Vec3::new(generalized[5], generalized[6], generalized[7]);
        AeroLoads { generalized, force, moment, cl, circulation }
    }
}

/// Where on the wing an element sits, before kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Strip {
    side: Side,
    segment: Segment,
    eta: f64,
    ds: f64,
}

fn uniform_strips(robot: &Robot, elbow: f64) -> Result<Vec<Strip>, AeroError> {
    let w = &robot.wing;
    let (np, nd) = (w.proximal.elements, w.distal.elements);
    if np + nd < 4 || np == 0 || nd == 0 {
        return Err(AeroError::TooFewElements(np + nd));
    }
    let proj = elbow.cos().max(0.0);
    let dp = w.proximal.length / np as f64;
    let dd = w.distal.length / nd as f64;
    let half: Vec<(Segment, f64, f64)> = (0..np)
        .map(|i| (Segment::Proximal, (i as f64 + 0.5) * dp, dp))
        .chain((0..nd).map(|i| (Segment::Distal, (i as f64 + 0.5) * dd, dd * proj)))
        .collect();
    let left = half.iter().rev().map(|&(segment, eta, ds)| Strip { side: Side::Left, segment, eta, ds });
    let right = half.iter().map(|&(segment, eta, ds)| Strip { side: Side::Right, segment, eta, ds });
    Ok(left.chain(right).collect())
}

/// Collocation angles `θ_k = kπ/(m+1)`, k = 1..m.
pub fn collocation_angles(m: usize) -> Vec<f64> {
    (1..=m).map(|k| k as f64 * PI / (m as f64 + 1.0)).collect()
}

/// Strip boundaries in θ: 0, midpoints between stations, π.
pub fn station_boundaries(m: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend((1..m).map(|k| (k as f64 + 0.5) * PI / (m as f64 + 1.0)));
    b.push(PI);
    b
}

/// Spanwise widths of the station strips on a span `2 s`.
pub fn station_widths(m: usize, semispan: f64) -> Vec<f64> {
    let b = station_boundaries(m);
    (0..m).map(|k| semispan * (b[k].cos() - b[k + 1].cos())).collect()
}

fn station_strips(robot: &Robot, elbow: f64, m: usize) -> Result<Vec<Strip>, AeroError> {
    if m < 2 || m % 2 == 1 {
        return Err(AeroError::OddStations(m));
    }
    let w = &robot.wing;
    let semispan = w.flattened_semispan(elbow);
    let widths = station_widths(m, semispan);
    Ok(collocation_angles(m)
        .iter()
        .zip(widths)
        .map(|(&theta, ds)| {
            let y = semispan * theta.cos();
            let side = if y > 0.0 { Side::Left } else { Side::Right };
            let r = y.abs();
            let (segment, eta) = if r <= w.proximal.length {
                (Segment::Proximal, r)
            } else {
                (Segment::Distal, ((r - w.proximal.length) / elbow.cos()).min(w.distal.length))
            };
            Strip { side, segment, eta, ds }
        })
        .collect())
}

/// Builds blade elements, ordered from the left tip to the right tip, with
/// their relative wind for the inertial freestream `freestream`.
pub fn discretize_wing(
    robot: &Robot,
    state: &BodyState,
    layout: Layout,
    freestream: &Vec3,
) -> Result<Vec<BladeElement>, AeroError> {
    let strips = match layout {
        Layout::Uniform => uniform_strips(robot, state.gait[1])?,
        Layout::Stations(m) => station_strips(robot, state.gait[1], m)?,
    };
    let wing = &robot.wing;
    let pose = wing.pose(state.gait, state.gait_rate);
    Ok(strips
        .into_iter()
        .map(|s| {
            let local = wing.local_point(s.segment, s.eta, 0.25);
            let kin = pose.point(s.side, s.segment, &local);
            let [_, chord_dir, normal] = pose.frame(s.side, s.segment);
            let e_y = state.attitude * chord_dir;
            let e_n = state.attitude * normal;
            let velocity = point_velocity(state, &kin);
            let rel = freestream - velocity;
            let rel_wind = [rel.dot(&e_y), rel.dot(&e_n)];
            let alpha = rel_wind[1].atan2(rel_wind[0]);
            let (sa, ca) = alpha.sin_cos();
            BladeElement {
                side: s.side,
                segment: s.segment,
                eta: s.eta,
                chord: wing.chord(s.segment, s.eta),
                ds: s.ds,
                local,
                position: state.position + state.attitude * kin.r,
                velocity,
                e_y,
                e_n,
                rel_wind,
                alpha,
                e_l: e_n * ca - e_y * sa,
                e_d: e_y * ca + e_n * sa,
                jacobian: kin.velocity_jacobian(&state.attitude),
            }
        })
        .collect())
}
