//! Unsteady lifting line with Wagner lag states.
//!
//! The span carries one Fourier series `Γ = ½ a0 c0 U Σ a_n sin nθ` with
//! `y = (S/2) cos θ`. Each collocation station carries two lag states that
//! realise Jones' two-exponential Wagner response as ODEs, so the aero state
//! is `ζ = [a (m), z1 (m), z2 (m)]`.
//!
//! `U` appears in two roles. The circulation scale uses the freestream
//! `U_ref = max(U∞, U_floor)`; the local rates (normalized time, lift
//! coefficient) use the station airspeed `U_eff = max(|v|, U_floor)`. With a
//! dominant freestream both collapse to `U`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use super::quasisteady::{dickinson_cd, element_force, QuasiSteadyCoeffs};
use super::{collocation_angles, station_widths, AeroError, AeroLoads, BladeElement};
use crate::math::Vec3;

/// Condition number above which the collocation solve is refused.
pub const COLLOCATION_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WagnerConstants {
    pub psi1: f64,
    pub psi2: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Lift-curve slope, 1/rad.
    pub a0: f64,
}

impl Default for WagnerConstants {
    fn default() -> Self {
        WagnerConstants { psi1: 0.165, psi2: 0.335, eps1: 0.0455, eps2: 0.3, a0: std::f64::consts::TAU }
    }
}

impl WagnerConstants {
    /// `Φ(0)`.
    pub fn phi0(&self) -> f64 {
        1.0 - self.psi1 - self.psi2
    }
}

/// Jones' approximation to the Wagner function at normalized time `t`.
pub fn wagner_phi(t: f64, wc: &WagnerConstants) -> f64 {
    1.0 - wc.psi1 * (-wc.eps1 * t).exp() - wc.psi2 * (-wc.eps2 * t).exp()
}

/// Station angles with the factored `sin(nθ_k)` matrix. Depends only on `m`.
#[derive(Debug, Clone)]
pub struct Collocation {
    pub theta: Vec<f64>,
    /// `S[k][n-1] = sin(n θ_k)`.
    pub sin: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// 2-norm condition number of `S`.
    pub condition: f64,
}

impl Collocation {
    pub fn new(m: usize) -> Self {
        let theta = collocation_angles(m);
        let sin = DMatrix::from_fn(m, m, |k, n| ((n + 1) as f64 * theta[k]).sin());
        let sv = sin.clone().singular_values();
        let condition = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
        let lu = sin.clone().lu();
        Collocation { theta, sin, lu, condition }
    }

    pub fn m(&self) -> usize {
        self.theta.len()
    }
}

/// Instantaneous lifting-line geometry.
#[derive(Debug, Clone)]
pub struct WingDiscretization {
    /// Full span `S`, m.
    pub span: f64,
    /// Root chord `c0`, m.
    pub c0: f64,
    /// Circulation velocity scale, m/s.
    pub u_ref: f64,
    /// Spanwise station positions, strictly decreasing.
    pub y: Vec<f64>,
    /// Chord at each station, m.
    pub chord: Vec<f64>,
    pub colloc: Arc<Collocation>,
}

impl WingDiscretization {
    pub fn new(span: f64, c0: f64, chord: Vec<f64>, u_ref: f64, colloc: Arc<Collocation>) -> Self {
        assert_eq!(chord.len(), colloc.m(), "one chord per station");
        let y = colloc.theta.iter().map(|t| 0.5 * span * t.cos()).collect();
        WingDiscretization { span, c0, u_ref, y, chord, colloc }
    }

    /// Rectangular wing of given aspect ratio.
    pub fn rectangular(aspect_ratio: f64, chord: f64, m: usize, u: f64) -> Self {
        WingDiscretization::new(aspect_ratio * chord, chord, vec![chord; m], u, Arc::new(Collocation::new(m)))
    }

    /// Elliptic planform with aspect ratio `S² / (π S c0 / 4)`.
    pub fn elliptic(aspect_ratio: f64, root_chord: f64, m: usize, u: f64) -> Self {
        let colloc = Arc::new(Collocation::new(m));
        let span = aspect_ratio * std::f64::consts::PI * root_chord / 4.0;
        let chord = colloc.theta.iter().map(|t| root_chord * t.sin()).collect();
        WingDiscretization::new(span, root_chord, chord, u, colloc)
    }

    pub fn m(&self) -> usize {
        self.colloc.m()
    }

    pub fn theta(&self) -> &[f64] {
        &self.colloc.theta
    }

    /// Strip widths between station midpoints, summing to `S`.
    pub fn widths(&self) -> Vec<f64> {
        station_widths(self.m(), 0.5 * self.span)
    }

    /// Wing-level lift coefficient `Σ C_L c Δs / Σ c Δs`.
    pub fn total_lift_coefficient(&self, cl: &[f64]) -> f64 {
        let w = self.widths();
        let area: f64 = self.chord.iter().zip(&w).map(|(c, d)| c * d).sum();
        cl.iter().zip(&self.chord).zip(&w).map(|((l, c), d)| l * c * d).sum::<f64>() / area
    }

    fn gamma_scale(&self, wc: &WagnerConstants) -> f64 {
        0.5 * wc.a0 * self.c0 * self.u_ref
    }
}

/// `ζ = [a, z1, z2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsteadyAeroState(pub DVector<f64>);

impl UnsteadyAeroState {
    pub fn zeros(m: usize) -> Self {
        UnsteadyAeroState(DVector::zeros(3 * m))
    }

    pub fn from_parts(a: &[f64], z1: &[f64], z2: &[f64]) -> Self {
        UnsteadyAeroState(DVector::from_iterator(a.len() * 3, a.iter().chain(z1).chain(z2).copied()))
    }

    pub fn m(&self) -> usize {
        self.0.len() / 3
    }

    pub fn a(&self) -> &[f64] {
        &self.0.as_slice()[..self.m()]
    }

    pub fn z1(&self) -> &[f64] {
        let m = self.m();
        &self.0.as_slice()[m..2 * m]
    }

    pub fn z2(&self) -> &[f64] {
        let m = self.m();
        &self.0.as_slice()[2 * m..]
    }
}

/// `Γ(y)` from the Fourier coefficients; zero at and beyond the tips.
pub fn circulation(disc: &WingDiscretization, wc: &WagnerConstants, a: &[f64], y: f64) -> f64 {
    let x = 2.0 * y / disc.span;
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let theta = x.acos();
    disc.gamma_scale(wc) * a.iter().enumerate().map(|(n, an)| an * ((n + 1) as f64 * theta).sin()).sum::<f64>()
}

/// `Γ` at every station.
pub fn station_circulation(disc: &WingDiscretization, wc: &WagnerConstants, a: &[f64]) -> Vec<f64> {
    let s = &disc.colloc.sin * DVector::from_column_slice(a);
    s.iter().map(|v| v * disc.gamma_scale(wc)).collect()
}

/// Induced downwash `w_y(θ_k) = −(a0 c0 U)/(4S) Σ n a_n sin nθ_k / sin θ_k`.
pub fn induced_downwash(disc: &WingDiscretization, wc: &WagnerConstants, a: &[f64]) -> Vec<f64> {
    let k = -wc.a0 * disc.c0 * disc.u_ref / (4.0 * disc.span);
    disc.theta()
        .iter()
        .map(|&t| {
            let sum: f64 = a.iter().enumerate().map(|(n, an)| (n + 1) as f64 * an * ((n + 1) as f64 * t).sin()).sum();
            k * sum / t.sin()
        })
        .collect()
}

/// `ż_i = (ψ_i ε_i U/b) w − (ε_i U/b) z_i`.
pub fn lag_state_rates(z1: f64, z2: f64, w: f64, u_eff: f64, b: f64, wc: &WagnerConstants) -> (f64, f64) {
    let r1 = wc.eps1 * u_eff / b;
    let r2 = wc.eps2 * u_eff / b;
    (wc.psi1 * r1 * w - r1 * z1, wc.psi2 * r2 * w - r2 * z2)
}

/// `C_L = (a0/U)(w Φ(0) + z1 + z2)`.
pub fn sectional_cl(w: f64, z1: f64, z2: f64, u_eff: f64, wc: &WagnerConstants) -> f64 {
    wc.a0 / u_eff * (w * wc.phi0() + z1 + z2)
}

/// Solves, at every station `k`,
/// `(c0 U_ref / c_k) Σ a_n sin nθ_k + (c0 U_ref / U_eff,k) Σ ȧ_n sin nθ_k = Φ(0) w_k + z1_k + z2_k`
/// for `ȧ`: the two sectional lift expressions set equal.
pub fn fourier_rates(
    disc: &WingDiscretization,
    wc: &WagnerConstants,
    zeta: &UnsteadyAeroState,
    w: &[f64],
    u_eff: &[f64],
) -> Result<DVector<f64>, AeroError> {
    let colloc = &disc.colloc;
    let weights: Vec<f64> = u_eff.iter().map(|u| disc.c0 * disc.u_ref / u).collect();
    let (wmin, wmax) = weights.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let condition = colloc.condition * wmax / wmin;
    if !(condition <= COLLOCATION_CONDITION_LIMIT) {
        return Err(AeroError::IllConditioned { condition });
    }
    let sa = &colloc.sin * DVector::from_column_slice(zeta.a());
    let (z1, z2) = (zeta.z1(), zeta.z2());
    let rhs = DVector::from_fn(disc.m(), |k, _| {
        let steady = disc.c0 * disc.u_ref / disc.chord[k] * sa[k];
        (wc.phi0() * w[k] + z1[k] + z2[k] - steady) / weights[k]
    });
    colloc.lu.solve(&rhs).ok_or(AeroError::IllConditioned { condition: f64::INFINITY })
}

/// Downwash split and lift at the stations.
#[derive(Debug, Clone, PartialEq)]
pub struct DownwashDecomposition {
    pub v_n: Vec<f64>,
    pub w_y: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaRates {
    pub rates: DVector<f64>,
    pub downwash: DownwashDecomposition,
    pub cl: Vec<f64>,
}

/// `ζ̇` and sectional lift for station normal velocities `v_n` and
/// airspeeds `u_eff`.
pub fn zeta_rates(
    disc: &WingDiscretization,
    wc: &WagnerConstants,
    zeta: &UnsteadyAeroState,
    v_n: &[f64],
    u_eff: &[f64],
) -> Result<ZetaRates, AeroError> {
    let m = disc.m();
    let w_y = induced_downwash(disc, wc, zeta.a());
    let w: Vec<f64> = v_n.iter().zip(&w_y).map(|(a, b)| a + b).collect();
    let a_dot = fourier_rates(disc, wc, zeta, &w, u_eff)?;
    let mut rates = DVector::zeros(3 * m);
    rates.rows_mut(0, m).copy_from(&a_dot);
    let mut cl = Vec::with_capacity(m);
    for k in 0..m {
        let (z1, z2) = (zeta.z1()[k], zeta.z2()[k]);
        let (d1, d2) = lag_state_rates(z1, z2, w[k], u_eff[k], 0.5 * disc.chord[k], wc);
        rates[m + k] = d1;
        rates[2 * m + k] = d2;
        cl.push(sectional_cl(w[k], z1, z2, u_eff[k], wc));
    }
    Ok(ZetaRates { rates, downwash: DownwashDecomposition { v_n: v_n.to_vec(), w_y, w }, cl })
}

/// Normal velocity and floored airspeed of each element's relative wind.
pub fn unsteady_step_inputs(elements: &[BladeElement], u_floor: f64) -> Result<(Vec<f64>, Vec<f64>), AeroError> {
    let v_n = elements.iter().map(|e| e.rel_wind[1]).collect();
    let u_eff = elements
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let u = e.airspeed().max(u_floor);
            if u > 0.0 {
                Ok(u)
            } else {
                Err(AeroError::DegenerateFlow { station: k })
            }
        })
        .collect::<Result<_, _>>()?;
    Ok((v_n, u_eff))
}

/// Lifting-line geometry matching a station-layout element set on a wing
/// whose flattened semispan is `semispan`.
pub fn discretization_from_elements(
    elements: &[BladeElement],
    semispan: f64,
    root_chord: f64,
    u_ref: f64,
    colloc: Arc<Collocation>,
) -> WingDiscretization {
    WingDiscretization::new(2.0 * semispan, root_chord, elements.iter().map(|e| e.chord).collect(), u_ref, colloc)
}

/// Element forces with lift from the lag-state model and quasi-steady drag,
/// together with `ζ̇`.
pub fn unsteady_generalized_forces(
    disc: &WingDiscretization,
    wc: &WagnerConstants,
    zeta: &UnsteadyAeroState,
    elements: &[BladeElement],
    rho: f64,
    coeffs: &QuasiSteadyCoeffs,
    u_floor: f64,
) -> Result<(AeroLoads, ZetaRates), AeroError> {
    let (v_n, u_eff) = unsteady_step_inputs(elements, u_floor)?;
    let rates = zeta_rates(disc, wc, zeta, &v_n, &u_eff)?;
    let forces: Vec<Vec3> = elements
        .iter()
        .zip(&rates.cl)
        .map(|(e, &cl)| element_force(e, rho, cl, dickinson_cd(e.alpha, coeffs)))
        .collect();
    let circulation = station_circulation(disc, wc, zeta.a());
    let loads = AeroLoads::from_element_forces(elements, &forces, rates.cl.clone(), circulation);
    Ok((loads, rates))
}

/// One classical RK4 step of `ζ` with frozen `v_n` and airspeed.
pub fn step_fixed(
    disc: &WingDiscretization,
    wc: &WagnerConstants,
    zeta: &UnsteadyAeroState,
    v_n: &[f64],
    u_eff: &[f64],
    dt: f64,
) -> Result<UnsteadyAeroState, AeroError> {
    let f = |z: &DVector<f64>| zeta_rates(disc, wc, &UnsteadyAeroState(z.clone()), v_n, u_eff).map(|r| r.rates);
    let z0 = &zeta.0;
    let k1 = f(z0)?;
    let k2 = f(&(z0 + &k1 * (0.5 * dt)))?;
    let k3 = f(&(z0 + &k2 * (0.5 * dt)))?;
    let k4 = f(&(z0 + &k3 * dt))?;
    Ok(UnsteadyAeroState(z0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)))
}
