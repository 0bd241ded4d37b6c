//! Planar closed-chain linkage ("kinetic sculpture") that turns a single motor
//! input into shoulder and elbow motion.
//!
//! The mechanism is described as a set of loop closures. Each closure names a
//! joint that is reached by two serial chains starting from grounded pivots;
//! every arm of a chain has an absolute orientation `q[angle] + offset`. A
//! ternary link is two arms sharing the same angle variable. With `L` closures
//! and `n = 2L + 1` angle variables the acceleration-level constraints plus
//! `q̈_driver = u` form a square linear system.

pub mod gait;
pub mod robot;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

pub use gait::{prescribed_gait, GaitProfile, Sinusoid};
pub use robot::{default_linkage, LinkageGeometry};

pub type Vec2 = Vector2<f64>;
pub type JointPositions = BTreeMap<u32, Vec2>;

/// Residual above which the state is projected back onto the closure manifold.
pub const PROJECTION_THRESHOLD: f64 = 1e-9;
/// Loop residual beyond which a configuration counts as not assembled.
pub const ASSEMBLY_TOLERANCE: f64 = 1e-6;
/// Condition number past which the constraint Jacobian is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkageError {
    #[error("invalid linkage: {0}")]
    InvalidConfig(String),
    #[error("loop at joint {joint} cannot close (residual {residual:.3e} m)")]
    Assembly { joint: u32, residual: f64 },
    #[error("linkage is at a kinematic singularity (condition number {condition:.3e})")]
    Singular { condition: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    /// Joint at the far end of this arm.
    pub to: u32,
    pub length: f64,
    /// Index into the angle vector.
    pub angle: usize,
    /// Constant orientation offset, radians.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Grounded pivot the chain starts from.
    pub from: u32,
    pub arms: Vec<Arm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub joint: u32,
    pub a: Chain,
    pub b: Chain,
}

/// Which angle variables feed the wing joints.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTap {
    /// Shoulder angle is `q[shoulder] - shoulder_zero`.
    pub shoulder: usize,
    /// Elbow angle is `q[elbow] - q[shoulder] - elbow_zero` (relative fold).
    pub elbow: usize,
    pub shoulder_zero: f64,
    pub elbow_zero: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkageConfig {
    pub angle_names: Vec<String>,
    pub pivots: BTreeMap<u32, Vec2>,
    pub closures: Vec<Closure>,
    pub driver: usize,
    pub tap: GaitTap,
    /// Assembled reference pose (radians, unwrapped).
    pub reference: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkageState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
}

/// Shoulder/elbow signals handed to the body dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaitOutput {
    /// (q̈_s, q̈_e), rad/s².
    pub accel: [f64; 2],
    /// (q_s, q_e), rad.
    pub angle: [f64; 2],
    /// (q̇_s, q̇_e), rad/s.
    pub rate: [f64; 2],
}

fn unit(phi: f64) -> Vec2 {
    Vec2::new(phi.cos(), phi.sin())
}

fn perp(phi: f64) -> Vec2 {
    Vec2::new(-phi.sin(), phi.cos())
}

impl Chain {
    fn walk<'a>(&'a self, q: &'a DVector<f64>, start: Vec2) -> impl Iterator<Item = (u32, Vec2)> + 'a {
        self.arms.iter().scan(start, move |p, arm| {
            *p += unit(q[arm.angle] + arm.offset) * arm.length;
            Some((arm.to, *p))
        })
    }

    fn end(&self, cfg: &LinkageConfig, q: &DVector<f64>) -> Vec2 {
        let start = cfg.pivots[&self.from];
        self.walk(q, start).last().map(|(_, p)| p).unwrap_or(start)
    }

    fn add_jacobian(&self, q: &DVector<f64>, sign: f64, row: usize, jac: &mut DMatrix<f64>) {
        for arm in &self.arms {
            let d = perp(q[arm.angle] + arm.offset) * (arm.length * sign);
            jac[(row, arm.angle)] += d.x;
            jac[(row + 1, arm.angle)] += d.y;
        }
    }

    /// Σ L e(φ) φ̇², the centripetal part of the chain-end acceleration (negated).
    fn centripetal(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Vec2 {
        self.arms
            .iter()
            .map(|arm| unit(q[arm.angle] + arm.offset) * (arm.length * qd[arm.angle] * qd[arm.angle]))
            .sum()
    }
}

impl LinkageConfig {
    /// Validates the topology and assembles the reference pose on the branch
    /// nearest to `reference_guess`.
    pub fn new(
        angle_names: Vec<String>,
        pivots: BTreeMap<u32, Vec2>,
        closures: Vec<Closure>,
        driver: usize,
        tap: GaitTap,
        reference_guess: DVector<f64>,
    ) -> Result<Self, LinkageError> {
        let n = angle_names.len();
        let invalid = |msg: String| Err(LinkageError::InvalidConfig(msg));
        if 2 * closures.len() + 1 != n {
            return invalid(format!(
                "{} closures need {} angle variables, got {n}",
                closures.len(),
                2 * closures.len() + 1
            ));
        }
        if reference_guess.len() != n {
            return invalid(format!("reference pose has {} angles, expected {n}", reference_guess.len()));
        }
        for idx in [driver, tap.shoulder, tap.elbow] {
            if idx >= n {
                return invalid(format!("angle index {idx} out of range"));
            }
        }
        let mut used = vec![false; n];
        used[driver] = true;
        for c in &closures {
            for chain in [&c.a, &c.b] {
                if !pivots.contains_key(&chain.from) {
                    return invalid(format!("chain to joint {} starts at {} which is not a pivot", c.joint, chain.from));
                }
                if chain.arms.last().map(|a| a.to) != Some(c.joint) {
                    return invalid(format!("a chain of closure {} does not end at that joint", c.joint));
                }
                for arm in &chain.arms {
                    if !(arm.length > 0.0) || !arm.length.is_finite() {
                        return invalid(format!("arm to joint {} has non-positive length {}", arm.to, arm.length));
                    }
                    if arm.angle >= n {
                        return invalid(format!("arm to joint {} uses angle index {}", arm.to, arm.angle));
                    }
                    used[arm.angle] = true;
                }
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return invalid(format!("angle '{}' is not used by any arm", angle_names[i]));
        }
        let mut cfg = LinkageConfig { angle_names, pivots, closures, driver, tap, reference: reference_guess.clone() };
        cfg.reference = assemble(&cfg, reference_guess[driver], &reference_guess)?;
        Ok(cfg)
    }

    pub fn n_angles(&self) -> usize {
        self.angle_names.len()
    }

    /// Joint positions at the assembled reference pose.
    pub fn reference_positions(&self) -> JointPositions {
        forward_kinematics(self, &self.reference).expect("reference pose is assembled")
    }

    /// Rest state at the reference pose with the crank turning at `crank_rate`.
    pub fn initial_state(&self, crank_rate: f64) -> Result<LinkageState, LinkageError> {
        let mut qd = DVector::zeros(self.n_angles());
        qd[self.driver] = crank_rate;
        project_velocity(self, &self.reference, qd).map(|qd| LinkageState { q: self.reference.clone(), qd })
    }
}

/// Position residual of every closure, stacked `[x0, y0, x1, y1, ...]`.
pub fn closure_residual(cfg: &LinkageConfig, q: &DVector<f64>) -> DVector<f64> {
    let mut r = DVector::zeros(2 * cfg.closures.len());
    for (i, c) in cfg.closures.iter().enumerate() {
        let d = c.a.end(cfg, q) - c.b.end(cfg, q);
        r[2 * i] = d.x;
        r[2 * i + 1] = d.y;
    }
    r
}

/// Largest ‖p_a − p_b‖ over all closures, meters.
pub fn max_loop_residual(cfg: &LinkageConfig, q: &DVector<f64>) -> f64 {
    let r = closure_residual(cfg, q);
    (0..cfg.closures.len()).map(|i| r.fixed_rows::<2>(2 * i).norm()).fold(0.0, f64::max)
}

/// Body-frame positions of every joint. Closure joints take the position from
/// chain `a`; the call fails if chain `b` disagrees by more than
/// [`ASSEMBLY_TOLERANCE`].
pub fn forward_kinematics(cfg: &LinkageConfig, q: &DVector<f64>) -> Result<JointPositions, LinkageError> {
    let mut out: JointPositions = cfg.pivots.clone();
    for c in &cfg.closures {
        for (joint, p) in c.a.walk(q, cfg.pivots[&c.a.from]) {
            out.insert(joint, p);
        }
        let end_a = out[&c.joint];
        for (joint, p) in c.b.walk(q, cfg.pivots[&c.b.from]) {
            out.entry(joint).or_insert(p);
        }
        let residual = (end_a - c.b.end(cfg, q)).norm();
        if !(residual <= ASSEMBLY_TOLERANCE) {
            return Err(LinkageError::Assembly { joint: c.joint, residual });
        }
    }
    Ok(out)
}

/// Analytic joint velocities `ṗ_i` for joint rates `qd`.
pub fn joint_velocities(cfg: &LinkageConfig, q: &DVector<f64>, qd: &DVector<f64>) -> JointPositions {
    let mut out: JointPositions = cfg.pivots.keys().map(|&k| (k, Vec2::zeros())).collect();
    for c in &cfg.closures {
        for chain in [&c.a, &c.b] {
            let mut v = Vec2::zeros();
            for arm in &chain.arms {
                v += perp(q[arm.angle] + arm.offset) * (arm.length * qd[arm.angle]);
                out.entry(arm.to).or_insert(v);
            }
        }
    }
    out
}

/// ∂(closure residual)/∂q, shape `2L × n`.
pub fn constraint_jacobian(cfg: &LinkageConfig, q: &DVector<f64>) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(2 * cfg.closures.len(), cfg.n_angles());
    for (i, c) in cfg.closures.iter().enumerate() {
        c.a.add_jacobian(q, 1.0, 2 * i, &mut jac);
        c.b.add_jacobian(q, -1.0, 2 * i, &mut jac);
    }
    jac
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Square system `[J; e_driver] q̈ = [γ; u]` from the acceleration-level closure
/// constraints plus the motor equation.
fn acceleration_system(cfg: &LinkageConfig, state: &LinkageState, u_k: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = cfg.n_angles();
    let rows = 2 * cfg.closures.len();
    let jac = constraint_jacobian(cfg, &state.q);
    let mut a = DMatrix::zeros(n, n);
    a.rows_mut(0, rows).copy_from(&jac);
    a[(rows, cfg.driver)] = 1.0;
    let mut b = DVector::zeros(n);
    for (i, c) in cfg.closures.iter().enumerate() {
        let g = c.a.centripetal(&state.q, &state.qd) - c.b.centripetal(&state.q, &state.qd);
        b[2 * i] = g.x;
        b[2 * i + 1] = g.y;
    }
    b[rows] = u_k;
    (a, b)
}

/// Joint accelerations q̈_k for motor acceleration `u_k`.
pub fn solve_joint_accelerations(
    cfg: &LinkageConfig,
    state: &LinkageState,
    u_k: f64,
) -> Result<DVector<f64>, LinkageError> {
    let (a, b) = acceleration_system(cfg, state, u_k);
    let condition = condition_number(&a);
    if !(condition < SINGULAR_CONDITION) {
        return Err(LinkageError::Singular { condition });
    }
    let mut qdd = a.lu().solve(&b).ok_or(LinkageError::Singular { condition })?;
    // the driver row is an identity row; pin it so q̈_1 == u_k bit-for-bit
    qdd[cfg.driver] = u_k;
    Ok(qdd)
}

/// Residual of the acceleration-level constraints for a candidate q̈.
pub fn acceleration_residual(cfg: &LinkageConfig, state: &LinkageState, u_k: f64, qdd: &DVector<f64>) -> f64 {
    let (a, b) = acceleration_system(cfg, state, u_k);
    (a * qdd - b).amax()
}

fn free_columns(cfg: &LinkageConfig) -> Vec<usize> {
    (0..cfg.n_angles()).filter(|&i| i != cfg.driver).collect()
}

/// Newton solve for the closure at a fixed driver angle, starting from `guess`.
/// Converges to the assembly branch nearest the guess.
pub fn assemble(cfg: &LinkageConfig, driver_angle: f64, guess: &DVector<f64>) -> Result<DVector<f64>, LinkageError> {
    let cols = free_columns(cfg);
    let mut q = guess.clone();
    q[cfg.driver] = driver_angle;
    for _ in 0..60 {
        let r = closure_residual(cfg, &q);
        if r.amax() < 1e-14 {
            break;
        }
        let jac = constraint_jacobian(cfg, &q).select_columns(&cols);
        let Some(step) = jac.lu().solve(&(-&r)) else {
            break;
        };
        // damp large steps so Newton cannot jump to the other branch
        let scale = (0.5 / step.amax()).min(1.0);
        for (k, &c) in cols.iter().enumerate() {
            q[c] += scale * step[k];
        }
    }
    let worst = cfg
        .closures
        .iter()
        .enumerate()
        .map(|(i, c)| (c.joint, closure_residual(cfg, &q).fixed_rows::<2>(2 * i).norm()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if !(worst.1 < 1e-12) {
        return Err(LinkageError::Assembly { joint: worst.0, residual: worst.1 });
    }
    Ok(q)
}

fn project_velocity(cfg: &LinkageConfig, q: &DVector<f64>, mut qd: DVector<f64>) -> Result<DVector<f64>, LinkageError> {
    let cols = free_columns(cfg);
    let jac = constraint_jacobian(cfg, q);
    let reduced = jac.select_columns(&cols);
    let rhs = -(jac.column(cfg.driver) * qd[cfg.driver]);
    let condition = condition_number(&reduced);
    let sol = reduced.lu().solve(&rhs).ok_or(LinkageError::Singular { condition })?;
    for (k, &c) in cols.iter().enumerate() {
        qd[c] = sol[k];
    }
    Ok(qd)
}

/// Projects positions (Gauss-Newton at fixed crank angle) and then velocities
/// onto the closure manifold.
pub fn project(cfg: &LinkageConfig, state: &LinkageState) -> Result<LinkageState, LinkageError> {
    let q = assemble(cfg, state.q[cfg.driver], &state.q)?;
    let qd = project_velocity(cfg, &q, state.qd.clone())?;
    Ok(LinkageState { q, qd })
}

/// Projects only when the position or velocity residual exceeds
/// [`PROJECTION_THRESHOLD`].
pub fn project_if_needed(cfg: &LinkageConfig, state: LinkageState) -> Result<LinkageState, LinkageError> {
    let vel = (constraint_jacobian(cfg, &state.q) * &state.qd).amax();
    if max_loop_residual(cfg, &state.q) > PROJECTION_THRESHOLD || vel > PROJECTION_THRESHOLD {
        project(cfg, &state)
    } else {
        Ok(state)
    }
}

/// One RK4 step of the linkage with constant motor input, followed by drift
/// correction.
pub fn step_kinematics(cfg: &LinkageConfig, state: &LinkageState, u_k: f64, dt: f64) -> Result<LinkageState, LinkageError> {
    assert!(dt > 0.0, "dt must be positive");
    let f = |s: &LinkageState| -> Result<(DVector<f64>, DVector<f64>), LinkageError> {
        Ok((s.qd.clone(), solve_joint_accelerations(cfg, s, u_k)?))
    };
    let shift = |s: &LinkageState, k: &(DVector<f64>, DVector<f64>), h: f64| LinkageState {
        q: &s.q + &k.0 * h,
        qd: &s.qd + &k.1 * h,
    };
    let k1 = f(state)?;
    let k2 = f(&shift(state, &k1, 0.5 * dt))?;
    let k3 = f(&shift(state, &k2, 0.5 * dt))?;
    let k4 = f(&shift(state, &k3, dt))?;
    let next = LinkageState {
        q: &state.q + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * (dt / 6.0),
        qd: &state.qd + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * (dt / 6.0),
    };
    project_if_needed(cfg, next)
}

/// Shoulder/elbow angles, rates and accelerations for a state and its q̈.
pub fn gait_output(cfg: &LinkageConfig, state: &LinkageState, qdd: &DVector<f64>) -> GaitOutput {
    let GaitTap { shoulder: s, elbow: e, shoulder_zero, elbow_zero } = cfg.tap;
    GaitOutput {
        accel: [qdd[s], qdd[e] - qdd[s]],
        angle: [state.q[s] - shoulder_zero, state.q[e] - state.q[s] - elbow_zero],
        rate: [state.qd[s], state.qd[e] - state.qd[s]],
    }
}
