//! Wing segment geometry and point kinematics in the body frame.
//!
//! The left wing is modelled explicitly; the right wing is its reflection
//! across the body x-z plane. Reflected quantities are produced by sign flips
//! only, so a symmetric gait yields bit-exact mirrored geometry.
//!
//! Segment-local frame: origin at the segment's hinge, +y spanwise outboard
//! (left wing), x forward, z up. At zero incidence the chord runs from the
//! leading edge toward −x and the top-side normal is +z.

use nalgebra::SMatrix;

use crate::math::{axis_angle, mirror, mirror_axial, mirror_tensor, skew, Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Proximal,
    Distal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChordModel {
    /// Linear taper between root and tip chord on each segment.
    Trapezoid,
    /// Elliptic distribution over the extended semispan, root chord from the
    /// proximal segment.
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPlanform {
    pub length: f64,
    pub root_chord: f64,
    pub tip_chord: f64,
    /// Blade elements on this segment (per side) for the uniform layout.
    pub elements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WingGeometry {
    /// Left shoulder hinge, body frame, m.
    pub shoulder: Vec3,
    /// Unit shoulder (flap) axis, body frame.
    pub shoulder_axis: Vec3,
    /// Unit elbow (fold) axis in the proximal segment frame.
    pub elbow_axis: Vec3,
    /// Leading-edge x position relative to the hinge line, m.
    pub leading_edge: f64,
    /// Geometric incidence (nose up positive), rad.
    pub incidence: f64,
    pub proximal: SegmentPlanform,
    pub distal: SegmentPlanform,
    pub chord_model: ChordModel,
}

/// Kinematics of one material point (or body-fixed frame) on a wing segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PointKinematics {
    /// Position, body frame.
    pub r: Vec3,
    /// ∂r/∂(q_s, q_e), body frame.
    pub jac: [Vec3; 2],
    /// Body-frame relative acceleration with q̈ = 0 (velocity-product terms).
    pub accel_bias: Vec3,
    /// Segment rotation relative to the body.
    pub rotation: Mat3,
    /// Relative angular velocity columns ∂ω_rel/∂(q̇_s, q̇_e), body frame.
    pub axes: [Vec3; 2],
    /// Relative angular acceleration with q̈ = 0, body frame.
    pub angular_bias: Vec3,
}

impl PointKinematics {
    pub fn relative_velocity(&self, qd: [f64; 2]) -> Vec3 {
        self.jac[0] * qd[0] + self.jac[1] * qd[1]
    }

    pub fn relative_omega(&self, qd: [f64; 2]) -> Vec3 {
        self.axes[0] * qd[0] + self.axes[1] * qd[1]
    }

    fn mirrored(&self) -> Self {
        PointKinematics {
            r: mirror(&self.r),
            jac: [mirror(&self.jac[0]), mirror(&self.jac[1])],
            accel_bias: mirror(&self.accel_bias),
            rotation: mirror_tensor(&self.rotation),
            axes: [mirror_axial(&self.axes[0]), mirror_axial(&self.axes[1])],
            angular_bias: mirror_axial(&self.angular_bias),
        }
    }

    /// 3×8 map from generalized velocities `[ṗ_B, q̇_s, q̇_e, ω_B]` to the
    /// inertial velocity of this point.
    pub fn velocity_jacobian(&self, attitude: &Mat3) -> SMatrix<f64, 3, 8> {
        let mut j = SMatrix::<f64, 3, 8>::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());
        j.fixed_view_mut::<3, 1>(0, 3).copy_from(&(attitude * self.jac[0]));
        j.fixed_view_mut::<3, 1>(0, 4).copy_from(&(attitude * self.jac[1]));
        j.fixed_view_mut::<3, 3>(0, 5).copy_from(&(-attitude * skew(&self.r)));
        j
    }
}

impl WingGeometry {
    /// Chordwise unit vector (leading to trailing edge) in segment-local axes.
    pub fn chord_dir(&self) -> Vec3 {
        Vec3::new(-self.incidence.cos(), 0.0, -self.incidence.sin())
    }

    /// Top-side unit normal in segment-local axes.
    pub fn normal_dir(&self) -> Vec3 {
        Vec3::new(-self.incidence.sin(), 0.0, self.incidence.cos())
    }

    pub fn segment(&self, seg: Segment) -> &SegmentPlanform {
        match seg {
            Segment::Proximal => &self.proximal,
            Segment::Distal => &self.distal,
        }
    }

    pub fn extended_semispan(&self) -> f64 {
        self.proximal.length + self.distal.length
    }

    /// Chord at arc position `eta` along segment `seg`, m.
    pub fn chord(&self, seg: Segment, eta: f64) -> f64 {
        match self.chord_model {
            ChordModel::Trapezoid => {
                let s = self.segment(seg);
                s.root_chord + (s.tip_chord - s.root_chord) * (eta / s.length)
            }
            ChordModel::Elliptic => {
                let along = match seg {
                    Segment::Proximal => eta,
                    Segment::Distal => self.proximal.length + eta,
                };
                let x = (along / self.extended_semispan()).clamp(-1.0, 1.0);
                self.proximal.root_chord * (1.0 - x * x).max(0.0).sqrt()
            }
        }
    }

    /// Chord at the plane of symmetry.
    pub fn root_chord(&self) -> f64 {
        self.chord(Segment::Proximal, 0.0)
    }

    /// Spanwise extent of the wing flattened onto the proximal span line:
    /// the distal segment contributes its cosine-projected length.
    pub fn flattened_semispan(&self, elbow: f64) -> f64 {
        self.proximal.length + self.distal.length * elbow.cos().max(0.0)
    }

    /// Planform area of one side for a given elbow angle (flattened).
    pub fn side_area(&self, elbow: f64) -> f64 {
        let proj = elbow.cos().max(0.0);
        integrate(|e| self.chord(Segment::Proximal, e), 0.0, self.proximal.length)
            + proj * integrate(|e| self.chord(Segment::Distal, e), 0.0, self.distal.length)
    }

    /// Local coordinates of the point at arc `eta`, chord fraction `frac`
    /// (0 = leading edge, 1 = trailing edge).
    pub fn local_point(&self, seg: Segment, eta: f64, frac: f64) -> Vec3 {
        Vec3::new(self.leading_edge, eta, 0.0) + self.chord_dir() * (frac * self.chord(seg, eta))
    }

    pub fn pose(&self, gait: [f64; 2], gait_rate: [f64; 2]) -> WingPose<'_> {
        let shoulder_rot = axis_angle(&self.shoulder_axis, gait[0]);
        let elbow = self.shoulder + shoulder_rot * Vec3::new(0.0, self.proximal.length, 0.0);
        let elbow_axis = shoulder_rot * self.elbow_axis;
        let distal_rot = shoulder_rot * axis_angle(&self.elbow_axis, gait[1]);
        WingPose { geom: self, gait_rate, shoulder_rot, distal_rot, elbow, elbow_axis }
    }
}

/// Composite Gauss-Legendre quadrature, exact for the polynomial chords and
/// accurate to ~1e-14 for the elliptic one away from the tip.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
    let n = 64;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * h;
            X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Wing configuration at a given shoulder/elbow angle and rate.
#[derive(Debug, Clone)]
pub struct WingPose<'a> {
    pub geom: &'a WingGeometry,
    pub gait_rate: [f64; 2],
    pub shoulder_rot: Mat3,
    pub distal_rot: Mat3,
    /// Left elbow hinge, body frame.
    pub elbow: Vec3,
    /// Left elbow axis, body frame.
    pub elbow_axis: Vec3,
}

impl WingPose<'_> {
    /// Kinematics of the point with segment-local coordinates `local`.
    pub fn point(&self, side: Side, seg: Segment, local: &Vec3) -> PointKinematics {
        let left = self.left_point(seg, local);
        match side {
            Side::Left => left,
            Side::Right => left.mirrored(),
        }
    }

    fn left_point(&self, seg: Segment, local: &Vec3) -> PointKinematics {
        let g = self.geom;
        let [qsd, qed] = self.gait_rate;
        let a_s = g.shoulder_axis;
        match seg {
            Segment::Proximal => {
                let r = g.shoulder + self.shoulder_rot * local;
                let arm = r - g.shoulder;
                let j0 = a_s.cross(&arm);
                let rd = j0 * qsd;
                PointKinematics {
                    r,
                    jac: [j0, Vec3::zeros()],
                    accel_bias: a_s.cross(&rd) * qsd,
                    rotation: self.shoulder_rot,
                    axes: [a_s, Vec3::zeros()],
                    angular_bias: Vec3::zeros(),
                }
            }
            Segment::Distal => {
                let a_e = self.elbow_axis;
                let r = self.elbow + self.distal_rot * local;
                let j0 = a_s.cross(&(r - g.shoulder));
                let j1 = a_e.cross(&(r - self.elbow));
                let rd = j0 * qsd + j1 * qed;
                let elbow_rate = a_s.cross(&(self.elbow - g.shoulder)) * qsd;
                let axis_rate = a_s.cross(&a_e) * qsd;
                let accel_bias =
                    a_s.cross(&rd) * qsd + (axis_rate.cross(&(r - self.elbow)) + a_e.cross(&(rd - elbow_rate))) * qed;
                PointKinematics {
                    r,
                    jac: [j0, j1],
                    accel_bias,
                    rotation: self.distal_rot,
                    axes: [a_s, a_e],
                    angular_bias: axis_rate * qed,
                }
            }
        }
    }

    /// Body-frame unit vectors (span outboard, chord LE→TE, top normal) of a segment.
    pub fn frame(&self, side: Side, seg: Segment) -> [Vec3; 3] {
        let rot = match seg {
            Segment::Proximal => self.shoulder_rot,
            Segment::Distal => self.distal_rot,
        };
        let left = [rot * Vec3::y(), rot * self.geom.chord_dir(), rot * self.geom.normal_dir()];
        match side {
            Side::Left => left,
            Side::Right => left.map(|v| mirror(&v)),
        }
    }
}
