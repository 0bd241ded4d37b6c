//! Small rotation and vector helpers shared by the dynamics and aero code.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Reflection across the body x-z plane (left wing -> right wing).
pub const MIRROR_Y: [f64; 3] = [1.0, -1.0, 1.0];

/// Skew-symmetric matrix such that `skew(a) * b == a.cross(&b)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation of `angle` radians about a unit `axis` (Rodrigues).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let k = skew(axis);
    let (s, c) = angle.sin_cos();
    Mat3::identity() + k * s + k * k * (1.0 - c)
}

/// Exponential map so(3) -> SO(3).
pub fn exp_so3(phi: &Vec3) -> Mat3 {
    let theta2 = phi.norm_squared();
    let k = skew(phi);
    let (a, b) = if theta2 < 1e-12 {
        // series to O(theta^4)
        (1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Mat3::identity() + k * a + k * k * b
}

/// Logarithm SO(3) -> so(3), valid for rotation angles below pi.
pub fn log_so3(r: &Mat3) -> Vec3 {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let w = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if theta < 1e-8 {
        w * 0.5
    } else {
        w * (theta / (2.0 * theta.sin()))
    }
}

/// Inverse of the left-trivialized differential of `exp`, truncated after the
/// second commutator. Maps a body angular velocity to the rate of the Lie
/// algebra coordinate `u` in `R = R0 exp(u)`.
pub fn dexp_inv(u: &Vec3, omega: &Vec3) -> Vec3 {
    let c = u.cross(omega);
    omega + c * 0.5 + u.cross(&c) / 12.0
}

/// Frobenius norm of `RᵀR − I`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

/// Nearest rotation via Gram-Schmidt on the columns.
pub fn renormalize(r: &Mat3) -> Mat3 {
    let x = r.column(0).normalize();
    let y = (r.column(1) - x * x.dot(&r.column(1))).normalize();
    let z = x.cross(&y);
    Mat3::from_columns(&[x, y, z])
}

pub fn mirror(v: &Vec3) -> Vec3 {
    Vec3::new(v.x * MIRROR_Y[0], v.y * MIRROR_Y[1], v.z * MIRROR_Y[2])
}

/// Mirror of a pseudovector (angular velocity, rotation axis).
pub fn mirror_axial(v: &Vec3) -> Vec3 {
    -mirror(v)
}

/// `M A M` for the y-reflection `M`.
pub fn mirror_tensor(a: &Mat3) -> Mat3 {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[(i, j)] *= MIRROR_Y[i] * MIRROR_Y[j];
        }
    }
    out
}
