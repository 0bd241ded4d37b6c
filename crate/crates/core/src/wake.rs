//! Frozen vortex-lattice wake rebuilt from the shed circulation history and
//! sampled with the Biot-Savart law.

use std::f64::consts::PI;

use thiserror::Error;

use crate::math::Vec3;
use crate::sim::WakeSlice;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WakeError {
    #[error("no circulation history to build a wake from")]
    EmptyHistory,
    #[error("inconsistent wake history at slice {0}")]
    Inconsistent(usize),
    #[error("invalid sampling plane: {0}")]
    InvalidPlane(String),
}

/// Straight vortex filament from `a` to `b`, strength `gamma` (m²/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filament {
    pub a: Vec3,
    pub b: Vec3,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WakeSheet {
    /// Shed time of each lattice row, oldest first.
    pub times: Vec<f64>,
    /// Bound circulation per element at each shed time.
    pub circulation: Vec<Vec<f64>>,
    /// Convected lattice nodes, `nodes[row][edge]`.
    pub nodes: Vec<Vec<Vec3>>,
    /// Spanwise filaments (row-major), then streamwise ones.
    pub filaments: Vec<Filament>,
    /// Number of spanwise filaments at the front of `filaments`.
    pub spanwise: usize,
    pub convection: Vec3,
    /// Set when the transport velocity had to be taken from the wing root.
    pub degenerate: bool,
}

impl WakeSheet {
    pub fn from_filaments(filaments: Vec<Filament>) -> Self {
        WakeSheet {
            times: Vec::new(),
            circulation: Vec::new(),
            nodes: Vec::new(),
            filaments,
            spanwise: 0,
            convection: Vec3::zeros(),
            degenerate: false,
        }
    }

    /// Bound segment `a → b` with trailing legs of length `length` along `dir`.
    pub fn horseshoe(a: Vec3, b: Vec3, gamma: f64, dir: Vec3, length: f64) -> Self {
        let d = dir.normalize() * length;
        WakeSheet::from_filaments(vec![
            Filament { a: a + d, b: a, gamma },
            Filament { a, b, gamma },
            Filament { a: b, b: b + d, gamma },
        ])
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut s = self.clone();
        for f in &mut s.filaments {
            f.gamma *= k;
        }
        s
    }

    pub fn merged(&self, other: &WakeSheet) -> Self {
        let mut s = WakeSheet::from_filaments(self.filaments.iter().chain(&other.filaments).copied().collect());
        s.degenerate = self.degenerate || other.degenerate;
        s
    }

    /// Induced velocity at `p` with core radius `delta`.
    pub fn velocity(&self, p: &Vec3, delta: f64) -> Vec3 {
        self.filaments.iter().fold(Vec3::zeros(), |acc, f| acc + biot_savart_segment(p, f, delta))
    }
}

/// Finite-segment Biot-Savart with a Rankine core of radius `delta`.
/// Points on the segment's line give zero.
pub fn biot_savart_segment(p: &Vec3, f: &Filament, delta: f64) -> Vec3 {
    let r0 = f.b - f.a;
    let r1 = p - f.a;
    let r2 = p - f.b;
    let cross = r1.cross(&r2);
    let c2 = cross.norm_squared();
    let l2 = r0.norm_squared();
    let (n1, n2) = (r1.norm(), r2.norm());
    if l2 == 0.0 || n1 == 0.0 || n2 == 0.0 || c2 <= 1e-24 * l2 * n1 * n1 {
        return Vec3::zeros();
    }
    let k = f.gamma / (4.0 * PI * c2) * r0.dot(&(r1 / n1 - r2 / n2));
    let d2 = c2 / l2;
    let core = if d2 < delta * delta { d2 / (delta * delta) } else { 1.0 };
    cross * (k * core)
}

/// Builds the lattice from the history. Row `j` sits at the trailing edge
/// recorded at `t_j`, convected by `V (T − t_j)` where `T` is the newest
/// time. Ring `j` lies between rows `j` and `j + 1` with the element's
/// circulation at `t_{j+1}`; spanwise filaments run from +y to −y and
/// streamwise ones downstream, so positive circulation carries positive lift
/// in a −x freestream.
pub fn shed_wake(history: &[WakeSlice], freestream: &Vec3) -> Result<WakeSheet, WakeError> {
    let last = history.last().ok_or(WakeError::EmptyHistory)?;
    let n = last.circulation.len();
    for (j, s) in history.iter().enumerate() {
        if s.circulation.len() != n || s.edges.len() != n + 1 {
            return Err(WakeError::Inconsistent(j));
        }
    }
    let degenerate = freestream.norm() == 0.0;
    let convection = if degenerate {
        history.iter().fold(Vec3::zeros(), |acc, s| acc + s.root_wind) / history.len() as f64
    } else {
        *freestream
    };
    let t_end = last.t;
    let nodes: Vec<Vec<Vec3>> =
        history.iter().map(|s| s.edges.iter().map(|e| e + convection * (t_end - s.t)).collect()).collect();
    let rows = history.len();
    let ring = |j: usize, i: usize| history[j + 1].circulation[i];

    let mut filaments = Vec::new();
    for j in 0..rows {
        for i in 0..n {
            let gamma = match (j == 0, j + 1 == rows) {
                (_, true) if rows == 1 => continue,
                (_, true) => ring(j - 1, i),
                (true, false) => -ring(0, i),
                (false, false) => ring(j - 1, i) - ring(j, i),
            };
            filaments.push(Filament { a: nodes[j][i + 1], b: nodes[j][i], gamma });
        }
    }
    let spanwise = filaments.len();
    for j in 0..rows.saturating_sub(1) {
        for i in 0..=n {
            let left = if i > 0 { ring(j, i - 1) } else { 0.0 };
            let right = if i < n { ring(j, i) } else { 0.0 };
            filaments.push(Filament { a: nodes[j + 1][i], b: nodes[j][i], gamma: right - left });
        }
    }
    Ok(WakeSheet {
        times: history.iter().map(|s| s.t).collect(),
        circulation: history.iter().map(|s| s.circulation.clone()).collect(),
        nodes,
        filaments,
        spanwise,
        convection,
        degenerate,
    })
}

/// Every `stride`-th slice of `history[..=last]`, always keeping `last`.
pub fn decimate(history: &[WakeSlice], stride: usize, last: usize) -> Vec<WakeSlice> {
    let stride = stride.max(1);
    let mut out: Vec<WakeSlice> = history[..=last].iter().rev().step_by(stride).cloned().collect();
    out.reverse();
    out
}

/// Rectangular grid `origin + i du u + j dv v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSpec {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub nu: usize,
    pub nv: usize,
    pub du: f64,
    pub dv: f64,
}

impl PlaneSpec {
    pub fn validate(&self) -> Result<(), WakeError> {
        if self.nu < 2 || self.nv < 2 {
            return Err(WakeError::InvalidPlane(format!("need at least 2×2 nodes, got {}×{}", self.nu, self.nv)));
        }
        if !(self.du > 0.0 && self.dv > 0.0) {
            return Err(WakeError::InvalidPlane("grid spacing must be positive".into()));
        }
        if (self.u.norm() - 1.0).abs() > 1e-9 || (self.v.norm() - 1.0).abs() > 1e-9 || self.u.dot(&self.v).abs() > 1e-9 {
            return Err(WakeError::InvalidPlane("axes must be orthonormal".into()));
        }
        Ok(())
    }

    pub fn node(&self, i: usize, j: usize) -> Vec3 {
        self.origin + self.u * (i as f64 * self.du) + self.v * (j as f64 * self.dv)
    }

    pub fn normal(&self) -> Vec3 {
        self.u.cross(&self.v)
    }

    /// Cross-stream (y-z) plane `offset` behind the newest trailing edge,
    /// covering 1.25 times the newest span.
    pub fn behind(sheet: &WakeSheet, offset: f64, nu: usize, nv: usize) -> Result<Self, WakeError> {
        let edge = sheet.nodes.last().ok_or(WakeError::EmptyHistory)?;
        let x = edge.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - offset;
        let (lo, hi) = edge.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
        let half = 0.625 * (hi - lo).max(1e-3);
        let zc = edge.iter().map(|p| p.z).sum::<f64>() / edge.len() as f64;
        let du = 2.0 * half / (nu.max(2) - 1) as f64;
        let dv = du;
        let height = dv * (nv.max(2) - 1) as f64;
        Ok(PlaneSpec {
            origin: Vec3::new(x, -half, zc - 0.5 * height),
            u: Vec3::y(),
            v: Vec3::z(),
            nu,
            nv,
            du,
            dv,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WakeGrid {
    pub plane: PlaneSpec,
    /// Time stamp of the sheet (newest shed time).
    pub time: f64,
    /// Induced velocity per node, index `j * nu + i`.
    pub velocity: Vec<Vec3>,
    /// In-plane curl `∂v_v/∂u − ∂v_u/∂v` per node.
    pub curl: Vec<f64>,
    pub degenerate: bool,
}

impl WakeGrid {
    pub fn at(&self, i: usize, j: usize) -> (Vec3, f64) {
        let k = j * self.plane.nu + i;
        (self.velocity[k], self.curl[k])
    }
}

fn derivative(f: impl Fn(usize) -> f64, k: usize, n: usize, h: f64) -> f64 {
    if k == 0 {
        (f(1) - f(0)) / h
    } else if k + 1 == n {
        (f(k) - f(k - 1)) / h
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

/// Core radius as a fraction of the grid spacing.
pub const CORE_FRACTION: f64 = 0.25;

/// Samples the induced field on a plane. Rows are evaluated on scoped
/// threads; each node's sum runs in filament order, so results do not depend
/// on the thread count.
pub fn sample_plane(sheet: &WakeSheet, plane: &PlaneSpec) -> Result<WakeGrid, WakeError> {
    plane.validate()?;
    let delta = CORE_FRACTION * plane.du.min(plane.dv);
    let (nu, nv) = (plane.nu, plane.nv);
    let mut velocity = vec![Vec3::zeros(); nu * nv];
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(nv);
    let rows_per = nv.div_ceil(threads);
    std::thread::scope(|scope| {
        for (c, chunk) in velocity.chunks_mut(rows_per * nu).enumerate() {
            scope.spawn(move || {
                for (k, out) in chunk.iter_mut().enumerate() {
                    let idx = c * rows_per * nu + k;
                    *out = sheet.velocity(&plane.node(idx % nu, idx / nu), delta);
                }
            });
        }
    });
    let (u, v) = (plane.u, plane.v);
    let mut curl = vec![0.0; nu * nv];
    for j in 0..nv {
        for i in 0..nu {
            let dvv_du = derivative(|a| velocity[j * nu + a].dot(&v), i, nu, plane.du);
            let dvu_dv = derivative(|b| velocity[b * nu + i].dot(&u), j, nv, plane.dv);
            curl[j * nu + i] = dvv_du - dvu_dv;
        }
    }
    Ok(WakeGrid { plane: plane.clone(), time: sheet.times.last().copied().unwrap_or(0.0), velocity, curl, degenerate: sheet.degenerate })
}
