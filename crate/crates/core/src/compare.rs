//! Simulated forces against load-cell measurements: resampling, phase
//! alignment by cross-correlation and RMS errors.

use serde::Serialize;
use thiserror::Error;

use crate::loadcell::{detect_frequency, interpolate, LoadCellTrace};
use crate::sim::ForceRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("overlap of {overlap:.4} s is shorter than two flap periods ({required:.4} s)")]
    InsufficientOverlap { overlap: f64, required: f64 },
    #[error("no flapping frequency found in either signal")]
    NonFlapping,
    #[error("empty {0}")]
    Empty(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    /// Simulation time to discard at the start, s.
    pub skip: f64,
    /// Low-pass the measurement at this cutoff, Hz.
    pub cutoff: Option<f64>,
    pub filter_order: usize,
    /// Phase bins in the cycle-averaged curves.
    pub bins: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { skip: 0.0, cutoff: None, filter_order: 4, bins: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleAverage {
    /// Bin centres as a fraction of the flap period.
    pub phase: Vec<f64>,
    pub sim_lift: Vec<f64>,
    pub sim_drag: Vec<f64>,
    pub measured_lift: Vec<f64>,
    pub measured_drag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub mode: String,
    /// RMS of measured x force minus simulated lift, N.
    pub rms_lift: f64,
    /// RMS of measured z force minus simulated drag, N.
    pub rms_drag: f64,
    /// From the measurement when it flaps, else the simulation, Hz.
    pub detected_frequency: f64,
    /// Measurement time minus simulation time of matching samples, s.
    pub offset: f64,
    pub grid_dt: f64,
    pub samples: usize,
    pub dropped_nan: usize,
    pub cycle: CycleAverage,
}

/// Integer lag `L` in `[-max_lag, max_lag]` maximizing the Pearson
/// correlation of `a[i]` with `b[i + L]` over their overlap. Ties keep the
/// smaller `|L|`.
pub fn align(a: &[f64], b: &[f64], max_lag: usize) -> isize {
    let n = a.len().min(b.len()) as isize;
    let corr = |lag: isize| {
        let lo = 0.max(-lag);
        let hi = n.min(n - lag);
        if hi - lo < 2 {
            return f64::NEG_INFINITY;
        }
        let idx = lo..hi;
        let m = (hi - lo) as f64;
        let ma = idx.clone().map(|i| a[i as usize]).sum::<f64>() / m;
        let mb = idx.clone().map(|i| b[(i + lag) as usize]).sum::<f64>() / m;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in idx {
            let (x, y) = (a[i as usize] - ma, b[(i + lag) as usize] - mb);
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        if saa == 0.0 || sbb == 0.0 {
            return 0.0;
        }
        sab / (saa.sqrt() * sbb.sqrt())
    };
    let mut best = (0isize, corr(0));
    for k in 1..=max_lag as isize {
        for lag in [k, -k] {
            let c = corr(lag);
            if c > best.1 {
                best = (lag, c);
            }
        }
    }
    best.0
}

fn rms(d: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = d.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

pub fn compare(record: &ForceRecord, trace: &LoadCellTrace, opts: &CompareOptions) -> Result<ComparisonReport, CompareError> {
    let trace = match opts.cutoff {
        Some(c) => trace.filtered(c, opts.filter_order),
        None => trace.clone(),
    };
    let keep: Vec<_> = record.samples.iter().filter(|s| s.t >= opts.skip).collect();
    if keep.len() < 2 {
        return Err(CompareError::Empty("simulation record"));
    }
    if trace.t.len() < 2 {
        return Err(CompareError::Empty("load-cell trace"));
    }
    let st: Vec<f64> = keep.iter().map(|s| s.t).collect();
    let s_lift: Vec<f64> = keep.iter().map(|s| s.lift).collect();
    let s_drag: Vec<f64> = keep.iter().map(|s| s.drag).collect();
    let (m_lift, m_drag) = (trace.lift(), trace.drag());

    let freq = trace
        .detect_frequency()
        .or_else(|| detect_frequency(&st, &s_lift))
        .or(trace.flap_frequency)
        .ok_or(CompareError::NonFlapping)?;
    let dt = record.dt.max(trace.median_dt().unwrap_or(record.dt));
    let start = st[0].max(trace.t[0]);
    let end = st[st.len() - 1].min(trace.t[trace.t.len() - 1]);
    let overlap = end - start;
    let required = 2.0 / freq;
    if overlap < required * (1.0 - 1e-9) {
        return Err(CompareError::InsufficientOverlap { overlap: overlap.max(0.0), required });
    }
    let n = (overlap / dt + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|k| start + k as f64 * dt).collect();
    let resample = |t: &[f64], x: &[f64]| grid.iter().map(|&g| interpolate(t, x, g)).collect::<Vec<_>>();
    let (sl, sd) = (resample(&st, &s_lift), resample(&st, &s_drag));
    let (ml, md) = (resample(&trace.t, &m_lift), resample(&trace.t, &m_drag));

    let max_lag = ((0.5 / (freq * dt)).floor() as usize).min(n / 2);
    let lag = align(&sl, &ml, max_lag);
    let pairs: Vec<(usize, usize)> = (0..n as isize)
        .filter(|&i| i + lag >= 0 && i + lag < n as isize)
        .map(|i| (i as usize, (i + lag) as usize))
        .collect();
    let rms_lift = rms(pairs.iter().map(|&(i, j)| ml[j] - sl[i]));
    let rms_drag = rms(pairs.iter().map(|&(i, j)| md[j] - sd[i]));

    let bins = opts.bins.max(1);
    let mut acc = vec![[0.0; 4]; bins];
    let mut count = vec![0usize; bins];
    for &(i, j) in &pairs {
        let phase = ((grid[i] - grid[0]) * freq).rem_euclid(1.0);
        let b = ((phase * bins as f64) as usize).min(bins - 1);
        acc[b][0] += sl[i];
        acc[b][1] += sd[i];
        acc[b][2] += ml[j];
        acc[b][3] += md[j];
        count[b] += 1;
    }
    let col = |k: usize| acc.iter().zip(&count).map(|(a, &c)| if c > 0 { a[k] / c as f64 } else { f64::NAN }).collect();
    let cycle = CycleAverage {
        phase: (0..bins).map(|b| (b as f64 + 0.5) / bins as f64).collect(),
        sim_lift: col(0),
        sim_drag: col(1),
        measured_lift: col(2),
        measured_drag: col(3),
    };
    Ok(ComparisonReport {
        mode: record.mode.name().to_string(),
        rms_lift,
        rms_drag,
        detected_frequency: freq,
        offset: lag as f64 * dt,
        grid_dt: dt,
        samples: pairs.len(),
        dropped_nan: trace.dropped_nan,
        cycle,
    })
}

/// The record as a load-cell trace: lift on x, side force on y, drag on z,
/// moments converted to N·mm.
pub fn record_as_trace(record: &ForceRecord) -> LoadCellTrace {
    LoadCellTrace {
        t: record.samples.iter().map(|s| s.t).collect(),
        force: record.samples.iter().map(|s| [s.lift, s.side, s.drag]).collect(),
        torque: record.samples.iter().map(|s| s.moment.map(|m| m * 1e3)).collect(),
        airspeed: Some(record.airspeed),
        flap_frequency: None,
        dropped_nan: 0,
    }
}
