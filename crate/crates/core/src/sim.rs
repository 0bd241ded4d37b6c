//! Combined linkage, body and aerodynamic state marched with fixed-step RK4.

use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

use crate::aero::quasisteady::quasi_steady_loads;
use crate::aero::unsteady::{discretization_from_elements, unsteady_generalized_forces, Collocation};
use crate::aero::{discretize_wing, AeroError, AeroLoads, BladeElement, Layout, QuasiSteadyCoeffs, WagnerConstants};
use crate::dynamics::{solve_constrained, BodyState, DynamicsError, Mount, Robot};
use crate::linkage::{
    gait_output, max_loop_residual, prescribed_gait, project_if_needed, solve_joint_accelerations, GaitOutput,
    GaitProfile, LinkageConfig, LinkageError, LinkageState,
};
use crate::math::{dexp_inv, exp_so3, orthonormality_error, renormalize, Vec3};
use crate::wing::{Segment, Side};

/// Renormalize the attitude once `‖RᵀR − I‖_F` exceeds this.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AeroMode {
    QuasiSteady,
    Wagner,
}

impl AeroMode {
    pub fn name(self) -> &'static str {
        match self {
            AeroMode::QuasiSteady => "quasisteady",
            AeroMode::Wagner => "wagner",
        }
    }
}

/// PI loop on crank rate producing the motor acceleration `u_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedControl {
    /// Target crank rate, rad/s.
    pub target: f64,
    pub kp: f64,
    pub ki: f64,
}

impl SpeedControl {
    pub fn input(&self, crank_rate: f64, integral: f64) -> f64 {
        self.kp * (self.target - crank_rate) + self.ki * integral
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaitSource {
    Linkage { linkage: LinkageConfig, control: SpeedControl },
    Prescribed(GaitProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub robot: Robot,
    pub gait: GaitSource,
    pub mode: AeroMode,
    pub mount: Mount,
    pub rho: f64,
    /// Freestream speed along −x, m/s.
    pub airspeed: f64,
    pub dt: f64,
    pub duration: f64,
    /// Lifting-line station count (wagner mode).
    pub stations: usize,
    pub wagner: WagnerConstants,
    pub u_floor: f64,
    pub coeffs: QuasiSteadyCoeffs,
    /// Record ζ every this many steps (0 disables).
    pub zeta_stride: usize,
}

impl SimConfig {
    pub fn freestream(&self) -> Vec3 {
        Vec3::new(-self.airspeed, 0.0, 0.0)
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }

    fn layout(&self) -> Layout {
        match self.mode {
            AeroMode::QuasiSteady => Layout::Uniform,
            AeroMode::Wagner => Layout::Stations(self.stations),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation setup: {0}")]
    Invalid(String),
    #[error("t = {t:.6} s: {source}")]
    Linkage { t: f64, source: LinkageError },
    #[error("t = {t:.6} s: {source}")]
    Dynamics { t: f64, source: DynamicsError },
    #[error("t = {t:.6} s: {source}")]
    Aero { t: f64, source: AeroError },
    #[error("t = {t:.6} s: non-finite value in the {block} state")]
    NonFinite { t: f64, block: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub t: f64,
    pub linkage: Option<LinkageState>,
    /// Integral of the crank-rate error.
    pub integral: f64,
    pub body: BodyState,
    pub zeta: DVector<f64>,
}

/// Time derivative of [`FullState`]; `omega` is the attitude rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub q: Option<(DVector<f64>, DVector<f64>)>,
    pub integral: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub gait: [f64; 2],
    pub gait_rate: [f64; 2],
    pub omega: Vec3,
    pub omega_dot: Vec3,
    pub zeta: DVector<f64>,
}

/// Quantities evaluated alongside a derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutputs {
    pub loads: AeroLoads,
    pub gait: GaitOutput,
    pub u_k: f64,
    pub constraint_residual: f64,
    pub elements: Vec<BladeElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceSample {
    pub t: f64,
    pub lift: f64,
    pub drag: f64,
    pub side: f64,
    /// Roll, pitch, yaw moments about the body origin, body axes, N·m.
    pub moment: [f64; 3],
    /// Shoulder and elbow angle, rad.
    pub gait: [f64; 2],
}

/// Circulation and trailing-edge geometry at one step, for wake building.
#[derive(Debug, Clone, PartialEq)]
pub struct WakeSlice {
    pub t: f64,
    /// Bound circulation per element, left tip to right tip.
    pub circulation: Vec<f64>,
    /// Trailing-edge points at element boundaries (n + 1).
    pub edges: Vec<Vec3>,
    /// Mean relative wind at the two root elements, inertial.
    pub root_wind: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForceRecord {
    pub mode: AeroMode,
    pub dt: f64,
    pub airspeed: f64,
    pub samples: Vec<ForceSample>,
    /// Sectional lift coefficient per element at every step.
    pub cl: Vec<Vec<f64>>,
    /// `(t, ζ)` at the configured stride.
    pub zeta: Vec<(f64, Vec<f64>)>,
    pub wake: Vec<WakeSlice>,
    pub max_constraint_residual: f64,
    pub max_loop_residual: f64,
}

impl ForceRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn lift(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lift).collect()
    }

    pub fn drag(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.drag).collect()
    }
}

fn check_finite(state: &FullState) -> Result<(), SimError> {
    let t = state.t;
    let body = &state.body;
    let body_ok = body.position.iter().chain(body.velocity.iter()).chain(body.attitude.iter()).chain(body.omega.iter())
        .chain(body.gait.iter())
        .chain(body.gait_rate.iter())
        .all(|x| x.is_finite());
    if !body_ok {
        return Err(SimError::NonFinite { t, block: "body" });
    }
    if let Some(l) = &state.linkage {
        if !(l.q.iter().chain(l.qd.iter()).all(|x| x.is_finite()) && state.integral.is_finite()) {
            return Err(SimError::NonFinite { t, block: "linkage" });
        }
    }
    if !state.zeta.iter().all(|x| x.is_finite()) {
        return Err(SimError::NonFinite { t, block: "aero" });
    }
    Ok(())
}

pub struct Simulator {
    pub cfg: SimConfig,
    colloc: Option<Arc<Collocation>>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        if !(cfg.dt > 0.0) {
            return Err(SimError::Invalid(format!("dt must be positive, got {}", cfg.dt)));
        }
        if !(cfg.duration >= 0.0) || !(cfg.airspeed >= 0.0) || !(cfg.rho > 0.0) {
            return Err(SimError::Invalid("duration and airspeed must be non-negative, rho positive".into()));
        }
        let colloc = match cfg.mode {
            AeroMode::Wagner => {
                if cfg.stations < 2 || cfg.stations % 2 == 1 {
                    return Err(SimError::Invalid(format!("station count {} must be even and ≥ 2", cfg.stations)));
                }
                Some(Arc::new(Collocation::new(cfg.stations)))
            }
            AeroMode::QuasiSteady => None,
        };
        Ok(Simulator { cfg, colloc })
    }

    fn zeta_len(&self) -> usize {
        match self.cfg.mode {
            AeroMode::Wagner => 3 * self.cfg.stations,
            AeroMode::QuasiSteady => 0,
        }
    }

    /// Rest body, gait at its t = 0 value, ζ = 0.
    pub fn initial_state(&self) -> Result<FullState, SimError> {
        let (linkage, gait) = match &self.cfg.gait {
            GaitSource::Linkage { linkage, control } => {
                let s = linkage.initial_state(control.target).map_err(|source| SimError::Linkage { t: 0.0, source })?;
                let qdd = solve_joint_accelerations(linkage, &s, 0.0).map_err(|source| SimError::Linkage { t: 0.0, source })?;
                let g = gait_output(linkage, &s, &qdd);
                (Some(s), g)
            }
            GaitSource::Prescribed(p) => (None, prescribed_gait(0.0, p)),
        };
        let body = BodyState { gait_rate: gait.rate, ..BodyState::at_rest(gait.angle) };
        Ok(FullState { t: 0.0, linkage, integral: 0.0, body, zeta: DVector::zeros(self.zeta_len()) })
    }

    fn gait(&self, state: &FullState) -> Result<(GaitOutput, f64, Option<DVector<f64>>), SimError> {
        match (&self.cfg.gait, &state.linkage) {
            (GaitSource::Linkage { linkage, control }, Some(ls)) => {
                let u_k = control.input(ls.qd[linkage.driver], state.integral);
                let qdd = solve_joint_accelerations(linkage, ls, u_k).map_err(|source| SimError::Linkage { t: state.t, source })?;
                Ok((gait_output(linkage, ls, &qdd), u_k, Some(qdd)))
            }
            (GaitSource::Prescribed(p), _) => Ok((prescribed_gait(state.t, p), 0.0, None)),
            _ => Err(SimError::Invalid("linkage gait without linkage state".into())),
        }
    }

    /// Aerodynamic loads and `ζ̇` at a state.
    pub fn aero(&self, state: &FullState) -> Result<(AeroLoads, Vec<BladeElement>, DVector<f64>), SimError> {
        let cfg = &self.cfg;
        let t = state.t;
        let elements = discretize_wing(&cfg.robot, &state.body, cfg.layout(), &cfg.freestream())
            .map_err(|source| SimError::Aero { t, source })?;
        match (cfg.mode, &self.colloc) {
            (AeroMode::Wagner, Some(colloc)) => {
                let wing = &cfg.robot.wing;
                let disc = discretization_from_elements(
                    &elements,
                    wing.flattened_semispan(state.body.gait[1]),
                    wing.root_chord(),
                    cfg.airspeed.max(cfg.u_floor),
                    colloc.clone(),
                );
                let zeta = crate::aero::UnsteadyAeroState(state.zeta.clone());
                let (loads, rates) =
                    unsteady_generalized_forces(&disc, &cfg.wagner, &zeta, &elements, cfg.rho, &cfg.coeffs, cfg.u_floor)
                        .map_err(|source| SimError::Aero { t, source })?;
                Ok((loads, elements, rates.rates))
            }
            _ => Ok((quasi_steady_loads(&elements, cfg.rho, &cfg.coeffs), elements, DVector::zeros(0))),
        }
    }

    pub fn derivative(&self, state: &FullState) -> Result<(Derivative, StepOutputs), SimError> {
        let cfg = &self.cfg;
        let t = state.t;
        let (gait, u_k, qdd) = self.gait(state)?;
        let (loads, elements, zeta_dot) = self.aero(state)?;
        let sol = solve_constrained(&cfg.robot, &state.body, &loads.generalized, gait.accel, cfg.mount)
            .map_err(|source| SimError::Dynamics { t, source })?;
        let a = sol.accel;
        let constraint_residual = (a[3] - gait.accel[0]).abs().max((a[4] - gait.accel[1]).abs());
        let (q, integral) = match (&state.linkage, qdd, &cfg.gait) {
            (Some(ls), Some(qdd), GaitSource::Linkage { linkage, control }) => {
                (Some((ls.qd.clone(), qdd)), control.target - ls.qd[linkage.driver])
            }
            _ => (None, 0.0),
        };
        let b = &state.body;
        let d = Derivative {
            q,
            integral,
            position: b.velocity,
            velocity: Vec3::new(a[0], a[1], a[2]),
            gait: b.gait_rate,
            gait_rate: [a[3], a[4]],
            omega: b.omega,
            omega_dot: Vec3::new(a[5], a[6], a[7]),
            zeta: zeta_dot,
        };
        Ok((d, StepOutputs { loads, gait, u_k, constraint_residual, elements }))
    }

    /// `state + h·d` for vector parts; attitude `R0 exp(h·rot)`.
    fn shift(&self, s: &FullState, d: &Derivative, h: f64, rot: &Vec3) -> FullState {
        let b = &s.body;
        FullState {
            t: s.t + h,
            linkage: s.linkage.as_ref().zip(d.q.as_ref()).map(|(l, (qd, qdd))| LinkageState {
                q: &l.q + qd * h,
                qd: &l.qd + qdd * h,
            }),
            integral: s.integral + h * d.integral,
            body: BodyState {
                position: b.position + d.position * h,
                velocity: b.velocity + d.velocity * h,
                attitude: b.attitude * exp_so3(&(rot * h)),
                omega: b.omega + d.omega_dot * h,
                gait: [b.gait[0] + h * d.gait[0], b.gait[1] + h * d.gait[1]],
                gait_rate: [b.gait_rate[0] + h * d.gait_rate[0], b.gait_rate[1] + h * d.gait_rate[1]],
            },
            zeta: &s.zeta + &d.zeta * h,
        }
    }

    /// One RK4 step. Vector states use the classical tableau; the attitude
    /// uses Munthe-Kaas stages so every stage stays on SO(3).
    pub fn rk4_step(&self, s: &FullState, dt: f64) -> Result<(FullState, StepOutputs), SimError> {
        let (d1, out) = self.derivative(s)?;
        let k1 = d1.omega;
        let s2 = self.shift(s, &d1, 0.5 * dt, &k1);
        let (d2, _) = self.derivative(&s2)?;
        let k2 = dexp_inv(&(k1 * (0.5 * dt)), &d2.omega);
        let s3 = self.shift(s, &d2, 0.5 * dt, &k2);
        let (d3, _) = self.derivative(&s3)?;
        let k3 = dexp_inv(&(k2 * (0.5 * dt)), &d3.omega);
        let s4 = self.shift(s, &d3, dt, &k3);
        let (d4, _) = self.derivative(&s4)?;
        let k4 = dexp_inv(&(k3 * dt), &d4.omega);

        let avg = |f: &dyn Fn(&Derivative) -> DVector<f64>| (f(&d1) + f(&d2) * 2.0 + f(&d3) * 2.0 + f(&d4)) / 6.0;
        let v3 = |v: Vec3| DVector::from_column_slice(v.as_slice());
        let v2 = |v: [f64; 2]| DVector::from_column_slice(&v);
        let q = d1.q.as_ref().map(|_| {
            (avg(&|d: &Derivative| d.q.as_ref().unwrap().0.clone()), avg(&|d: &Derivative| d.q.as_ref().unwrap().1.clone()))
        });
        let to3 = |v: DVector<f64>| Vec3::new(v[0], v[1], v[2]);
        let to2 = |v: DVector<f64>| [v[0], v[1]];
        let mean = Derivative {
            q,
            integral: (d1.integral + 2.0 * d2.integral + 2.0 * d3.integral + d4.integral) / 6.0,
            position: to3(avg(&|d: &Derivative| v3(d.position))),
            velocity: to3(avg(&|d: &Derivative| v3(d.velocity))),
            gait: to2(avg(&|d: &Derivative| v2(d.gait))),
            gait_rate: to2(avg(&|d: &Derivative| v2(d.gait_rate))),
            omega: Vec3::zeros(),
            omega_dot: to3(avg(&|d: &Derivative| v3(d.omega_dot))),
            zeta: avg(&|d: &Derivative| d.zeta.clone()),
        };
        let rot = (k1 + k2 * 2.0 + k3 * 2.0 + k4) / 6.0;
        let mut next = self.shift(s, &mean, dt, &rot);
        next.t = s.t + dt;
        if orthonormality_error(&next.body.attitude) > RENORMALIZE_THRESHOLD {
            next.body.attitude = renormalize(&next.body.attitude);
        }
        check_finite(&next)?;
        self.sync_gait(&mut next)?;
        Ok((next, out))
    }

    /// Projects the linkage onto its closure manifold and copies the gait
    /// angles into the body state.
    fn sync_gait(&self, s: &mut FullState) -> Result<(), SimError> {
        let t = s.t;
        match (&self.cfg.gait, s.linkage.take()) {
            (GaitSource::Linkage { linkage, control }, Some(ls)) => {
                let ls = project_if_needed(linkage, ls).map_err(|source| SimError::Linkage { t, source })?;
                let u_k = control.input(ls.qd[linkage.driver], s.integral);
                let qdd = solve_joint_accelerations(linkage, &ls, u_k).map_err(|source| SimError::Linkage { t, source })?;
                let g = gait_output(linkage, &ls, &qdd);
                s.body.gait = g.angle;
                s.body.gait_rate = g.rate;
                s.linkage = Some(ls);
            }
            (GaitSource::Prescribed(p), _) => {
                let g = prescribed_gait(t, p);
                s.body.gait = g.angle;
                s.body.gait_rate = g.rate;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn run(&self) -> Result<ForceRecord, SimError> {
        self.run_with_progress(|_, _| {})
    }

    /// Runs to `duration`, calling `progress(step, total)` after each step.
    pub fn run_with_progress(&self, mut progress: impl FnMut(usize, usize)) -> Result<ForceRecord, SimError> {
        let cfg = &self.cfg;
        let n = cfg.steps();
        let mut rec = ForceRecord {
            mode: cfg.mode,
            dt: cfg.dt,
            airspeed: cfg.airspeed,
            samples: Vec::with_capacity(n),
            cl: Vec::with_capacity(n),
            zeta: Vec::new(),
            wake: Vec::with_capacity(n),
            max_constraint_residual: 0.0,
            max_loop_residual: 0.0,
        };
        if n == 0 {
            return Ok(rec);
        }
        let mut s = self.initial_state()?;
        for k in 0..n {
            // sample times are exact multiples of dt
            s.t = k as f64 * cfg.dt;
            if cfg.zeta_stride > 0 && k % cfg.zeta_stride == 0 {
                rec.zeta.push((s.t, s.zeta.iter().copied().collect()));
            }
            if let (Some(ls), GaitSource::Linkage { linkage, .. }) = (&s.linkage, &cfg.gait) {
                rec.max_loop_residual = rec.max_loop_residual.max(max_loop_residual(linkage, &ls.q));
            }
            let (next, out) = self.rk4_step(&s, cfg.dt)?;
            self.record(&mut rec, &s, &out);
            s = next;
            progress(k + 1, n);
        }
        Ok(rec)
    }

    fn record(&self, rec: &mut ForceRecord, s: &FullState, out: &StepOutputs) {
        let f = out.loads.force;
        let m = out.loads.moment;
        rec.samples.push(ForceSample {
            t: s.t,
            lift: f.z,
            drag: -f.x,
            side: f.y,
            moment: [m.x, m.y, m.z],
            gait: s.body.gait,
        });
        rec.cl.push(out.loads.cl.clone());
        rec.max_constraint_residual = rec.max_constraint_residual.max(out.constraint_residual);
        rec.wake.push(self.wake_slice(s, out));
    }

    fn wake_slice(&self, s: &FullState, out: &StepOutputs) -> WakeSlice {
        let els = &out.elements;
        let n = els.len();
        let wing = &self.cfg.robot.wing;
        let pose = wing.pose(s.body.gait, s.body.gait_rate);
        let tip = |side| {
            let local = wing.local_point(Segment::Distal, wing.distal.length, 1.0);
            s.body.position + s.body.attitude * pose.point(side, Segment::Distal, &local).r
        };
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(tip(Side::Left));
        for i in 1..n {
            edges.push((els[i - 1].trailing_edge() + els[i].trailing_edge()) * 0.5);
        }
        edges.push(tip(Side::Right));
        let wind = |e: &BladeElement| self.cfg.freestream() - e.velocity;
        let root_wind = (wind(&els[n / 2 - 1]) + wind(&els[n / 2])) * 0.5;
        WakeSlice { t: s.t, circulation: out.loads.circulation.clone(), edges, root_wind }
    }
}

/// Deterministic single run.
pub fn run(cfg: SimConfig) -> Result<ForceRecord, SimError> {
    Simulator::new(cfg)?.run()
}
