//! Blade-element forces from Dickinson's translational lift and drag fits.

use serde::{Deserialize, Serialize};

use super::{AeroLoads, BladeElement};
use crate::dynamics::Vec8;
use crate::math::Vec3;

/// `C_L = l0 + l1 sin(l2 α° − l3°)`, `C_D = d0 − d1 cos(d2 α° − d3°)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiSteadyCoeffs {
    pub cl: [f64; 4],
    pub cd: [f64; 4],
}

impl Default for QuasiSteadyCoeffs {
    fn default() -> Self {
        QuasiSteadyCoeffs { cl: [0.225, 1.58, 2.13, 7.2], cd: [1.92, 1.55, 2.04, 9.82] }
    }
}

pub fn dickinson_cl(alpha: f64, c: &QuasiSteadyCoeffs) -> f64 {
    let [l0, l1, l2, l3] = c.cl;
    l0 + l1 * (l2 * alpha.to_degrees() - l3).to_radians().sin()
}

pub fn dickinson_cd(alpha: f64, c: &QuasiSteadyCoeffs) -> f64 {
    let [d0, d1, d2, d3] = c.cd;
    d0 - d1 * (d2 * alpha.to_degrees() - d3).to_radians().cos()
}

/// `½ρ|v|² c Δs (C_L e_L + C_D e_D)`.
pub fn element_force(el: &BladeElement, rho: f64, cl: f64, cd: f64) -> Vec3 {
    let q = 0.5 * rho * (el.rel_wind[0].powi(2) + el.rel_wind[1].powi(2)) * el.area();
    el.e_l * (q * cl) + el.e_d * (q * cd)
}

/// Generalized force `B_k f` from the virtual work of `f` at the quarter chord.
pub fn generalized_force(el: &BladeElement, f: &Vec3) -> Vec8 {
    el.jacobian.transpose() * f
}

/// Quasi-steady loads on all elements.
pub fn quasi_steady_loads(elements: &[BladeElement], rho: f64, coeffs: &QuasiSteadyCoeffs) -> AeroLoads {
    let cl: Vec<f64> = elements.iter().map(|e| dickinson_cl(e.alpha, coeffs)).collect();
    let forces: Vec<Vec3> = elements
        .iter()
        .zip(&cl)
        .map(|(e, &c)| element_force(e, rho, c, dickinson_cd(e.alpha, coeffs)))
        .collect();
    let circulation = elements.iter().zip(&cl).map(|(e, &c)| 0.5 * c * e.chord * e.airspeed()).collect();
    AeroLoads::from_element_forces(elements, &forces, cl, circulation)
}

#[cfg(test)]
mod tests {
    use super::super::tests::rectangular_robot;
    use super::super::{discretize_wing, Layout};
    use super::*;
    use crate::dynamics::tests::{moving_state, test_robot};
    use crate::dynamics::BodyState;
    use crate::wing::Side;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn deg(a: f64) -> f64 {
        a.to_radians()
    }

    #[test]
    fn dickinson_reference_values() {
        let c = QuasiSteadyCoeffs::default();
        assert!((dickinson_cl(deg(3.3803), &c) - 0.225).abs() < 1e-4);
        assert!((dickinson_cl(deg(45.634), &c) - 1.805).abs() < 1e-6);
        assert!((dickinson_cl(0.0, &c) - 0.0270).abs() < 1e-4);
        assert!((dickinson_cd(deg(4.8137), &c) - 0.37).abs() < 1e-6);
        // cosine argument of 90 degrees
        assert!((dickinson_cd(deg(99.82 / 2.04), &c) - 1.92).abs() < 1e-12);
        assert!((dickinson_cd(deg(90.0), &c) - 3.461).abs() < 1e-3);
    }

    #[test]
    fn dickinson_periodicity() {
        let c = QuasiSteadyCoeffs::default();
        let (pl, pd) = (deg(360.0 / 2.13), deg(360.0 / 2.04));
        for k in -20..20 {
            let a = k as f64 * 0.173;
            assert!((dickinson_cl(a + pl, &c) - dickinson_cl(a, &c)).abs() < 1e-12);
            assert!((dickinson_cd(a + pd, &c) - dickinson_cd(a, &c)).abs() < 1e-12);
        }
    }

    fn unit_element() -> BladeElement {
        let robot = rectangular_robot(1.0);
        let mut el = discretize_wing(&robot, &BodyState::at_rest([0.0; 2]), Layout::Uniform, &Vec3::new(-1.0, 0.0, 0.0))
            .unwrap()
            .remove(0);
        el.ds = 1.0;
        el
    }

    #[test]
    fn unit_dynamic_pressure_force() {
        let el = unit_element();
        let f = element_force(&el, 1.225, 1.0, 0.0);
        assert_relative_eq!(f, el.e_l * 0.6125, epsilon = 1e-15);
        let mut fast = el.clone();
        fast.rel_wind = [2.0 * el.rel_wind[0], 2.0 * el.rel_wind[1]];
        assert_relative_eq!(element_force(&fast, 1.225, 1.0, 0.5).norm(), 4.0 * element_force(&el, 1.225, 1.0, 0.5).norm(), max_relative = 1e-14);
        let mut still = el;
        still.rel_wind = [0.0, 0.0];
        assert_eq!(element_force(&still, 1.225, 1.3, 0.4), Vec3::zeros());
    }

    #[test]
    fn generalized_force_matches_velocity_jacobian_fd() {
        let robot = test_robot();
        let s = moving_state();
        let els = discretize_wing(&robot, &s, Layout::Uniform, &Vec3::zeros()).unwrap();
        let h = 1e-6;
        for (i, el) in els.iter().enumerate() {
            let mut jac_fd = crate::dynamics::Jac3::zeros();
            for j in 0..8 {
                let mut v = s.generalized_velocity();
                let vel = |v: &Vec8| {
                    let st = BodyState {
                        velocity: v.fixed_rows::<3>(0).into(),
                        gait_rate: [v[3], v[4]],
                        omega: v.fixed_rows::<3>(5).into(),
                        ..s.clone()
                    };
                    discretize_wing(&robot, &st, Layout::Uniform, &Vec3::zeros()).unwrap()[i].velocity
                };
                v[j] += h;
                let p = vel(&v);
                v[j] -= 2.0 * h;
                let m = vel(&v);
                jac_fd.set_column(j, &((p - m) / (2.0 * h)));
            }
            let err = (el.jacobian - jac_fd).norm() / el.jacobian.norm();
            assert!(err < 1e-6, "element {i}: {err}");
        }
    }

    #[test]
    fn translational_rows_sum_to_total_force() {
        let robot = test_robot();
        let s = moving_state();
        let els = discretize_wing(&robot, &s, Layout::Uniform, &Vec3::new(-1.65, 0.0, 0.0)).unwrap();
        let loads = quasi_steady_loads(&els, 1.225, &QuasiSteadyCoeffs::default());
        for k in 0..3 {
            assert_relative_eq!(loads.generalized[k], loads.force[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn vertical_force_at_shoulder_line_gives_no_shoulder_torque() {
        let el = unit_element();
        // shoulder axis is body x; a z force on a point at y has a torque about x
        let mut at_axis = el.clone();
        at_axis.jacobian.fill_column(3, 0.0);
        let u = generalized_force(&el, &Vec3::new(0.0, 0.0, 2.0));
        assert_eq!([u[0], u[1], u[2]], [0.0, 0.0, 2.0]);
        let u_axis = generalized_force(&at_axis, &Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(u_axis[3], 0.0);
        assert_eq!(generalized_force(&el, &Vec3::zeros()), Vec8::zeros());
    }

    #[test]
    fn mirror_symmetric_flow_has_no_side_force() {
        let robot = crate::aero::tests::rectangular_robot(0.07);
        let s = BodyState { gait: [0.3, -0.5], gait_rate: [-4.0, 6.0], ..BodyState::at_rest([0.0; 2]) };
        let els = discretize_wing(&robot, &s, Layout::Uniform, &Vec3::new(-1.65, 0.0, 0.0)).unwrap();
        let loads = quasi_steady_loads(&els, 1.225, &QuasiSteadyCoeffs::default());
        assert!(loads.force.y.abs() < 1e-12);
        assert!(loads.moment.x.abs() < 1e-12 && loads.moment.z.abs() < 1e-12);
        let n = els.len();
        for i in 0..n / 2 {
            assert_eq!(els[i].side, Side::Left);
            assert_eq!(loads.cl[i], loads.cl[n - 1 - i]);
        }
    }

    proptest! {
        #[test]
        fn lift_is_perpendicular_to_wind(vy in -5.0..5.0f64, vn in -5.0..5.0f64) {
            let mut el = unit_element();
            let alpha = vn.atan2(vy);
            el.rel_wind = [vy, vn];
            el.e_l = el.e_n * alpha.cos() - el.e_y * alpha.sin();
            el.e_d = el.e_y * alpha.cos() + el.e_n * alpha.sin();
            let wind = el.e_y * vy + el.e_n * vn;
            let f = element_force(&el, 1.2, 1.0, 0.0);
            prop_assert!(f.dot(&wind).abs() < 1e-12 * (1.0 + wind.norm_squared()));
        }
    }
}
