//! CSV and TOML writers. Floats use Rust's shortest round-trip formatting,
//! so identical inputs give identical bytes and re-reading is exact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::compare::ComparisonReport;
use crate::loadcell::{LoadCellTrace, HEADER};
use crate::sim::{ForceRecord, ForceSample};
use crate::wake::WakeGrid;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub const FORCE_HEADER: &str = "t_s,lift_N,drag_N,side_N,mx_Nm,my_Nm,mz_Nm,shoulder_rad,elbow_rad";
pub const GRID_HEADER: &str = "x_m,y_m,z_m,vx_mps,vy_mps,vz_mps,curl_per_s";

pub fn write_text(path: &Path, text: &str) -> Result<(), ExportError> {
    let io = |source| ExportError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

fn join(vals: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::new();
    for (i, v) in vals.into_iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:?}").unwrap();
    }
    s
}

pub fn force_record_csv(record: &ForceRecord) -> String {
    let mut out = format!("{FORCE_HEADER}\n");
    for s in &record.samples {
        out += &join([s.t, s.lift, s.drag, s.side, s.moment[0], s.moment[1], s.moment[2], s.gait[0], s.gait[1]]);
        out.push('\n');
    }
    out
}

pub fn parse_force_csv(text: &str, path: &Path) -> Result<Vec<ForceSample>, ExportError> {
    let bad = |message: String| ExportError::Format { path: path.to_path_buf(), message };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(FORCE_HEADER.split(',')) {
        return Err(bad(format!("expected header `{FORCE_HEADER}`")));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let v = rec.iter().map(|s| s.parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")))).collect::<Result<Vec<_>, _>>()?;
            Ok(ForceSample { t: v[0], lift: v[1], drag: v[2], side: v[3], moment: [v[4], v[5], v[6]], gait: [v[7], v[8]] })
        })
        .collect()
}

pub fn read_force_csv(path: &Path) -> Result<Vec<ForceSample>, ExportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ExportError::Io { path: path.to_path_buf(), source })?;
    parse_force_csv(&text, path)
}

/// Sectional lift coefficient per element at each step.
pub fn cl_csv(record: &ForceRecord) -> String {
    let n = record.cl.first().map_or(0, Vec::len);
    let mut out = String::from("t_s");
    for k in 0..n {
        write!(out, ",cl_{k}").unwrap();
    }
    out.push('\n');
    for (s, cl) in record.samples.iter().zip(&record.cl) {
        out += &join(std::iter::once(s.t).chain(cl.iter().copied()));
        out.push('\n');
    }
    out
}

/// ζ snapshots, columns `a_k`, then `z1_k`, then `z2_k`.
pub fn zeta_csv(record: &ForceRecord) -> String {
    let m = record.zeta.first().map_or(0, |z| z.1.len() / 3);
    let mut out = String::from("t_s");
    for name in ["a", "z1", "z2"] {
        for k in 0..m {
            write!(out, ",{name}_{k}").unwrap();
        }
    }
    out.push('\n');
    for (t, z) in &record.zeta {
        out += &join(std::iter::once(*t).chain(z.iter().copied()));
        out.push('\n');
    }
    out
}

pub fn loadcell_csv(trace: &LoadCellTrace) -> String {
    let mut out = String::new();
    if let Some(u) = trace.airspeed {
        writeln!(out, "# airspeed_mps = {u}").unwrap();
    }
    if let Some(f) = trace.flap_frequency {
        writeln!(out, "# flap_frequency_hz = {f}").unwrap();
    }
    out += &HEADER.join(",");
    out.push('\n');
    for i in 0..trace.t.len() {
        let (f, tq) = (trace.force[i], trace.torque[i]);
        out += &join([trace.t[i], f[0], f[1], f[2], tq[0], tq[1], tq[2]]);
        out.push('\n');
    }
    out
}

pub fn report_toml(reports: &[ComparisonReport]) -> String {
    #[derive(serde::Serialize)]
    struct Doc<'a> {
        report: &'a [ComparisonReport],
    }
    // NaN bins (no samples) are not representable in TOML
    let clean: Vec<ComparisonReport> = reports
        .iter()
        .map(|r| {
            let mut r = r.clone();
            for v in [&mut r.cycle.sim_lift, &mut r.cycle.sim_drag, &mut r.cycle.measured_lift, &mut r.cycle.measured_drag] {
                v.iter_mut().filter(|x| x.is_nan()).for_each(|x| *x = 0.0);
            }
            r
        })
        .collect();
    toml::to_string(&Doc { report: &clean }).expect("report serializes")
}

pub fn wake_grid_csv(grid: &WakeGrid) -> String {
    let p = &grid.plane;
    let v3 = |v: &crate::math::Vec3| format!("[{}, {}, {}]", v.x, v.y, v.z);
    let mut out = String::new();
    writeln!(out, "# time_s = {}", grid.time).unwrap();
    writeln!(out, "# origin_m = {}", v3(&p.origin)).unwrap();
    writeln!(out, "# u_axis = {}", v3(&p.u)).unwrap();
    writeln!(out, "# v_axis = {}", v3(&p.v)).unwrap();
    writeln!(out, "# nu = {}", p.nu).unwrap();
    writeln!(out, "# nv = {}", p.nv).unwrap();
    writeln!(out, "# du_m = {}", p.du).unwrap();
    writeln!(out, "# dv_m = {}", p.dv).unwrap();
    writeln!(out, "# degenerate_convection = {}", grid.degenerate).unwrap();
    writeln!(out, "# units = \"positions m, velocities m/s, curl 1/s (about u x v)\"").unwrap();
    writeln!(out, "{GRID_HEADER}").unwrap();
    for j in 0..p.nv {
        for i in 0..p.nu {
            let x = p.node(i, j);
            let (v, c) = grid.at(i, j);
            out += &join([x.x, x.y, x.z, v.x, v.y, v.z, c]);
            out.push('\n');
        }
    }
    out
}
