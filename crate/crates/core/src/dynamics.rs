//! Five-body floating-base dynamics with the wing gait imposed as a
//! holonomic constraint.
//!
//! Generalized velocities are `v = [ṗ_B (inertial), q̇_s, q̇_e, ω_B (body)]`.
//! The equations of motion are `M a = h + u_a + J_cᵀ λ` with `J_c a = y_k`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use thiserror::Error;

use crate::math::{exp_so3, skew, Mat3, Vec3};
use crate::wing::{PointKinematics, Segment, Side, WingGeometry};

pub type Vec8 = SVector<f64, 8>;
pub type Mat8 = SMatrix<f64, 8, 8>;
pub type Jac3 = SMatrix<f64, 3, 8>;

/// Condition number past which the KKT system is rejected.
pub const KKT_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("constrained dynamics are singular (condition number {condition:.3e})")]
    SingularKkt { condition: f64 },
    #[error("mass matrix is not positive definite")]
    IndefiniteMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidBody {
    pub mass: f64,
    /// Center of mass in the member's local frame, m.
    pub com: Vec3,
    /// Inertia about the center of mass in local axes, kg m².
    pub inertia: Mat3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassModel {
    pub body: RigidBody,
    /// Left-wing proximal segment; the right one is its mirror image.
    pub proximal: RigidBody,
    pub distal: RigidBody,
    /// Gravitational acceleration, inertial frame.
    pub gravity: Vec3,
}

impl MassModel {
    pub fn total_mass(&self) -> f64 {
        self.body.mass + 2.0 * (self.proximal.mass + self.distal.mass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robot {
    pub wing: WingGeometry,
    pub mass: MassModel,
}

/// Floating-base state. `attitude` maps body to inertial axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub attitude: Mat3,
    pub omega: Vec3,
    pub gait: [f64; 2],
    pub gait_rate: [f64; 2],
}

impl BodyState {
    pub fn at_rest(gait: [f64; 2]) -> Self {
        BodyState {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            attitude: Mat3::identity(),
            omega: Vec3::zeros(),
            gait,
            gait_rate: [0.0; 2],
        }
    }

    pub fn generalized_velocity(&self) -> Vec8 {
        let mut v = Vec8::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.velocity);
        v[3] = self.gait_rate[0];
        v[4] = self.gait_rate[1];
        v.fixed_rows_mut::<3>(5).copy_from(&self.omega);
        v
    }
}

/// Per-member terms entering `M` and `h`.
#[derive(Debug, Clone)]
pub struct Member {
    pub mass: f64,
    /// Inertial COM velocity map.
    pub jv: Jac3,
    /// Body-frame angular velocity map.
    pub jw: Jac3,
    /// Inertial COM acceleration at zero generalized acceleration.
    pub accel_bias: Vec3,
    /// Body-frame angular acceleration at zero generalized acceleration.
    pub angular_bias: Vec3,
    /// Inertia about the COM, body axes.
    pub inertia: Mat3,
    /// Angular velocity, body axes.
    pub omega: Vec3,
    /// COM position, inertial.
    pub position: Vec3,
}

pub const WING_MEMBERS: [(Side, Segment); 4] = [
    (Side::Left, Segment::Proximal),
    (Side::Left, Segment::Distal),
    (Side::Right, Segment::Proximal),
    (Side::Right, Segment::Distal),
];

/// Kinematics of a point fixed to a wing segment (segment-local `local`).
pub fn wing_point(robot: &Robot, state: &BodyState, side: Side, seg: Segment, local: &Vec3) -> PointKinematics {
    robot.wing.pose(state.gait, state.gait_rate).point(side, seg, local)
}

/// Inertial velocity of a point with body-relative kinematics `kin`.
pub fn point_velocity(state: &BodyState, kin: &PointKinematics) -> Vec3 {
    state.velocity + state.attitude * (state.omega.cross(&kin.r) + kin.relative_velocity(state.gait_rate))
}

/// Body, left proximal, left distal, right proximal, right distal.
pub fn members(robot: &Robot, state: &BodyState) -> Vec<Member> {
    let r_b = state.attitude;
    let w = state.omega;
    let mut out = Vec::with_capacity(5);

    let body = &robot.mass.body;
    let mut jv = Jac3::zeros();
    jv.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());
    jv.fixed_view_mut::<3, 3>(0, 5).copy_from(&(-r_b * skew(&body.com)));
    let mut jw = Jac3::zeros();
    jw.fixed_view_mut::<3, 3>(0, 5).copy_from(&Mat3::identity());
    out.push(Member {
        mass: body.mass,
        jv,
        jw,
        accel_bias: r_b * w.cross(&w.cross(&body.com)),
        angular_bias: Vec3::zeros(),
        inertia: body.inertia,
        omega: w,
        position: state.position + r_b * body.com,
    });

    let pose = robot.wing.pose(state.gait, state.gait_rate);
    for (side, seg) in WING_MEMBERS {
        let rb = match seg {
            Segment::Proximal => &robot.mass.proximal,
            Segment::Distal => &robot.mass.distal,
        };
        let kin = pose.point(side, seg, &rb.com);
        let rel_v = kin.relative_velocity(state.gait_rate);
        let rel_w = kin.relative_omega(state.gait_rate);
        let mut jw = Jac3::zeros();
        jw.fixed_view_mut::<3, 1>(0, 3).copy_from(&kin.axes[0]);
        jw.fixed_view_mut::<3, 1>(0, 4).copy_from(&kin.axes[1]);
        jw.fixed_view_mut::<3, 3>(0, 5).copy_from(&Mat3::identity());
        let accel = w.cross(&w.cross(&kin.r)) + w.cross(&rel_v) * 2.0 + kin.accel_bias;
        out.push(Member {
            mass: rb.mass,
            jv: kin.velocity_jacobian(&r_b),
            jw,
            accel_bias: r_b * accel,
            angular_bias: w.cross(&rel_w) + kin.angular_bias,
            inertia: kin.rotation * rb.inertia * kin.rotation.transpose(),
            omega: w + rel_w,
            position: state.position + r_b * kin.r,
        });
    }
    out
}

pub fn mass_matrix(robot: &Robot, state: &BodyState) -> Mat8 {
    members(robot, state)
        .iter()
        .map(|m| m.jv.transpose() * m.jv * m.mass + m.jw.transpose() * m.inertia * m.jw)
        .sum()
}

/// Gravity, Coriolis and centripetal generalized forces `h(x, v)`.
pub fn bias_forces(robot: &Robot, state: &BodyState) -> Vec8 {
    let g = robot.mass.gravity;
    members(robot, state)
        .iter()
        .map(|m| {
            m.jv.transpose() * ((g - m.accel_bias) * m.mass)
                - m.jw.transpose() * (m.inertia * m.angular_bias + m.omega.cross(&(m.inertia * m.omega)))
        })
        .sum()
}

pub fn kinetic_energy(robot: &Robot, state: &BodyState) -> f64 {
    let v = state.generalized_velocity();
    members(robot, state)
        .iter()
        .map(|m| {
            let vel = m.jv * v;
            0.5 * m.mass * vel.norm_squared() + 0.5 * m.omega.dot(&(m.inertia * m.omega))
        })
        .sum()
}

pub fn potential_energy(robot: &Robot, state: &BodyState) -> f64 {
    members(robot, state).iter().map(|m| -m.mass * robot.mass.gravity.dot(&m.position)).sum()
}

pub fn linear_momentum(robot: &Robot, state: &BodyState) -> Vec3 {
    let v = state.generalized_velocity();
    members(robot, state).iter().map(|m| m.jv * v * m.mass).sum()
}

/// Body mounting: free flight or rigidly clamped to a load cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mount {
    #[default]
    Free,
    Tethered,
}

/// `J_c` selecting the gait accelerations, optionally with the clamp rows
/// `p̈ = 0`, `ω̇ = 0` (tethered).
pub fn constraint_jacobian(mount: Mount) -> DMatrix<f64> {
    match mount {
        Mount::Free => {
            let mut j = DMatrix::zeros(2, 8);
            j[(0, 3)] = 1.0;
            j[(1, 4)] = 1.0;
            j
        }
        Mount::Tethered => DMatrix::identity(8, 8),
    }
}

/// Right-hand side of `J_c a = target`.
pub fn constraint_target(mount: Mount, y: [f64; 2]) -> DVector<f64> {
    match mount {
        Mount::Free => DVector::from_row_slice(&y),
        Mount::Tethered => DVector::from_row_slice(&[0.0, 0.0, 0.0, y[0], y[1], 0.0, 0.0, 0.0]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccelSolution {
    /// `[p̈_B, q̈_s, q̈_e, ω̇_B]`.
    pub accel: Vec8,
    /// Constraint forces, one per row of `J_c`. For the tethered mount the
    /// first three are the clamp force and the last three the clamp moment.
    pub lambda: DVector<f64>,
}

fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let ev = m.clone().symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Solves `[M −Jᵀ; J 0] [a; λ] = [rhs; target]` by block elimination:
/// `λ = (J M⁻¹ Jᵀ)⁻¹ (target − J M⁻¹ rhs)`, `a = M⁻¹ (rhs + Jᵀ λ)`.
pub fn solve_kkt(
    m: &Mat8,
    rhs: &Vec8,
    jc: &DMatrix<f64>,
    target: &DVector<f64>,
) -> Result<AccelSolution, DynamicsError> {
    let md = DMatrix::from_iterator(8, 8, m.iter().copied());
    let condition = spd_condition(&md);
    if !(condition < KKT_CONDITION_LIMIT) {
        return Err(DynamicsError::SingularKkt { condition });
    }
    let chol = md.cholesky().ok_or(DynamicsError::IndefiniteMass)?;
    let rhs = DVector::from_iterator(8, rhs.iter().copied());
    let a0 = chol.solve(&rhs);
    if jc.nrows() == 0 {
        return Ok(AccelSolution { accel: Vec8::from_iterator(a0.iter().copied()), lambda: DVector::zeros(0) });
    }
    let x = chol.solve(&jc.transpose());
    let schur = jc * &x;
    let condition = spd_condition(&schur);
    if !(condition < KKT_CONDITION_LIMIT) {
        return Err(DynamicsError::SingularKkt { condition });
    }
    let s_chol = schur.cholesky().ok_or(DynamicsError::SingularKkt { condition: f64::INFINITY })?;
    let lambda = s_chol.solve(&(target - jc * &a0));
    let a = a0 + x * &lambda;
    Ok(AccelSolution { accel: Vec8::from_iterator(a.iter().copied()), lambda })
}

/// Generalized accelerations with the gait accelerations imposed as `y`.
pub fn solve_constrained(
    robot: &Robot,
    state: &BodyState,
    u_a: &Vec8,
    y: [f64; 2],
    mount: Mount,
) -> Result<AccelSolution, DynamicsError> {
    let m = mass_matrix(robot, state);
    let rhs = bias_forces(robot, state) + u_a;
    solve_kkt(&m, &rhs, &constraint_jacobian(mount), &constraint_target(mount, y))
}

/// `R exp(dt [ω]×)`: exact for constant body rate.
pub fn integrate_rotation(r: &Mat3, omega: &Vec3, dt: f64) -> Mat3 {
    r * exp_so3(&(omega * dt))
}
