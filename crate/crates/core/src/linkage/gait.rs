//! Prescribed sinusoidal gait, used when the linkage geometry is not modelled.

use std::f64::consts::TAU;

use super::GaitOutput;

/// `offset + amplitude * sin(2π f t + phase)`, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitProfile {
    /// Flap frequency, Hz.
    pub frequency: f64,
    pub shoulder: Sinusoid,
    pub elbow: Sinusoid,
}

impl Sinusoid {
    /// (value, first derivative, second derivative) at time `t`.
    pub fn eval(&self, omega: f64, t: f64) -> (f64, f64, f64) {
        let (s, c) = (omega * t + self.phase).sin_cos();
        (
            self.offset + self.amplitude * s,
            self.amplitude * omega * c,
            -self.amplitude * omega * omega * s,
        )
    }
}

pub fn prescribed_gait(t: f64, profile: &GaitProfile) -> GaitOutput {
    let omega = TAU * profile.frequency;
    let (qs, qsd, qsdd) = profile.shoulder.eval(omega, t);
    let (qe, qed, qedd) = profile.elbow.eval(omega, t);
    GaitOutput { accel: [qsdd, qedd], angle: [qs, qe], rate: [qsd, qed] }
}
