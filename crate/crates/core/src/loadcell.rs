//! Load-cell CSV ingestion, flap-frequency detection and zero-phase
//! Butterworth filtering.
//!
//! Expected layout: optional `# key = value` metadata lines, then the header
//! `t_s,fx_N,fy_N,fz_N,tx_Nmm,ty_Nmm,tz_Nmm`, then one row per sample.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

pub const HEADER: [&str; 7] = ["t_s", "fx_N", "fy_N", "fz_N", "tx_Nmm", "ty_Nmm", "tz_Nmm"];
/// Highest sample rate the data-acquisition unit produces, Hz.
pub const MAX_SAMPLE_RATE: f64 = 7000.0;
/// Gaps larger than this multiple of the median step are rejected.
pub const GAP_FACTOR: f64 = 5.0;

#[derive(Debug, Error)]
pub enum LoadCellError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("format error: {0}")]
    Format(String),
    #[error("time gap of {gap:.6} s at t = {t:.6} s exceeds {factor}× the median step {median:.6} s")]
    Gap { t: f64, gap: f64, median: f64, factor: f64 },
    #[error("sample rate {rate:.1} Hz exceeds the {limit} Hz acquisition limit")]
    SampleRate { rate: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadCellTrace {
    pub t: Vec<f64>,
    /// Forces, N.
    pub force: Vec<[f64; 3]>,
    /// Torques, N·mm.
    pub torque: Vec<[f64; 3]>,
    pub airspeed: Option<f64>,
    /// Nominal flap frequency from the metadata, Hz.
    pub flap_frequency: Option<f64>,
    /// Rows dropped because they contained NaN.
    pub dropped_nan: usize,
}

impl LoadCellTrace {
    pub fn channel(&self, k: usize) -> Vec<f64> {
        self.force.iter().map(|f| f[k]).collect()
    }

    /// Load-cell x channel, compared with simulated lift.
    pub fn lift(&self) -> Vec<f64> {
        self.channel(0)
    }

    /// Load-cell z channel, compared with simulated drag.
    pub fn drag(&self) -> Vec<f64> {
        self.channel(2)
    }

    pub fn median_dt(&self) -> Option<f64> {
        median_step(&self.t)
    }

    /// Flap frequency from the force channel with the larger variance.
    pub fn detect_frequency(&self) -> Option<f64> {
        let (a, b) = (self.lift(), self.drag());
        let x = if variance(&a) >= variance(&b) { a } else { b };
        detect_frequency(&self.t, &x)
    }

    /// Zero-phase low-pass of every channel.
    pub fn filtered(&self, cutoff: f64, order: usize) -> Self {
        let Some(dt) = self.median_dt() else { return self.clone() };
        let fs = 1.0 / dt;
        let mut out = self.clone();
        for k in 0..3 {
            let f = filtfilt(&self.channel(k), cutoff, fs, order);
            let tq = filtfilt(&self.torque.iter().map(|v| v[k]).collect::<Vec<_>>(), cutoff, fs, order);
            for i in 0..self.t.len() {
                out.force[i][k] = f[i];
                out.torque[i][k] = tq[i];
            }
        }
        out
    }
}

fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

pub fn median_step(t: &[f64]) -> Option<f64> {
    if t.len() < 2 {
        return None;
    }
    let mut d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    Some(if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) })
}

pub fn ingest_loadcell(path: &Path) -> Result<LoadCellTrace, LoadCellError> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| LoadCellError::Io { path: path.display().to_string(), source })?;
    parse_loadcell(&text)
}

fn parse_meta(line: &str) -> Option<(String, String)> {
    let body = line.trim_start_matches('#').trim();
    let (k, v) = body.split_once('=')?;
    Some((k.trim().to_string(), v.trim().to_string()))
}

pub fn parse_loadcell(text: &str) -> Result<LoadCellTrace, LoadCellError> {
    let mut trace = LoadCellTrace::default();
    for line in text.lines().map(str::trim).take_while(|l| l.is_empty() || l.starts_with('#')) {
        let Some((k, v)) = parse_meta(line) else { continue };
        let num = || v.parse::<f64>().map_err(|_| LoadCellError::Format(format!("metadata `{k}` is not a number: {v}")));
        match k.as_str() {
            "airspeed_mps" => trace.airspeed = Some(num()?),
            "flap_frequency_hz" => trace.flap_frequency = Some(num()?),
            _ => {}
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| LoadCellError::Format(e.to_string()))?.clone();
    if header.is_empty() {
        return Err(LoadCellError::Format("empty file".into()));
    }
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(LoadCellError::Format(format!(
            "expected header `{}`, found `{}`",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| LoadCellError::Format(e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(row as u64 + 2);
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| LoadCellError::Format(format!("line {line}: `{s}` is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.iter().any(|v| v.is_nan()) {
            trace.dropped_nan += 1;
            continue;
        }
        if vals.iter().any(|v| v.is_infinite()) {
            return Err(LoadCellError::Format(format!("line {line}: infinite value")));
        }
        if let Some(&last) = trace.t.last() {
            if vals[0] <= last {
                return Err(LoadCellError::Format(format!("line {line}: time {} not after {last}", vals[0])));
            }
        }
        trace.t.push(vals[0]);
        trace.force.push([vals[1], vals[2], vals[3]]);
        trace.torque.push([vals[4], vals[5], vals[6]]);
    }
    if trace.t.is_empty() {
        return Err(LoadCellError::Format("no samples".into()));
    }
    if let Some(median) = trace.median_dt() {
        if 1.0 / median > MAX_SAMPLE_RATE * (1.0 + 1e-9) {
            return Err(LoadCellError::SampleRate { rate: 1.0 / median, limit: MAX_SAMPLE_RATE });
        }
        if let Some(w) = trace.t.windows(2).find(|w| w[1] - w[0] > GAP_FACTOR * median) {
            return Err(LoadCellError::Gap { t: w[0], gap: w[1] - w[0], median, factor: GAP_FACTOR });
        }
    }
    Ok(trace)
}

/// Linear interpolation of `(t, x)` at `at`, clamped to the end values.
pub fn interpolate(t: &[f64], x: &[f64], at: f64) -> f64 {
    let i = t.partition_point(|&s| s <= at);
    if i == 0 {
        return x[0];
    }
    if i == t.len() {
        return x[t.len() - 1];
    }
    let (t0, t1) = (t[i - 1], t[i]);
    let w = (at - t0) / (t1 - t0);
    x[i - 1] + w * (x[i] - x[i - 1])
}

/// Dominant frequency by a Hann-windowed, 8× zero-padded FFT with parabolic
/// peak interpolation. `None` for flat signals or when the peak is below one
/// cycle per record.
pub fn detect_frequency(t: &[f64], x: &[f64]) -> Option<f64> {
    let dt = median_step(t)?;
    let n = ((t[t.len() - 1] - t[0]) / dt).round() as usize + 1;
    if n < 8 {
        return None;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if variance(x).sqrt() <= 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    let len = (8 * n).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (k, b) in buf.iter_mut().take(n).enumerate() {
        let hann = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
        b.re = (interpolate(t, x, t[0] + k as f64 * dt) - mean) * hann;
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|c| c.norm()).collect();
    let df = 1.0 / (len as f64 * dt);
    // below one cycle per record
    let start = len.div_ceil(n).max(1);
    let (k, &peak) = mag.iter().enumerate().skip(start).max_by(|a, b| a.1.total_cmp(b.1))?;
    if peak <= 0.0 || k + 1 >= mag.len() {
        return None;
    }
    let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let f = (k as f64 + shift) * df;
    (f * (t[t.len() - 1] - t[0]) >= 1.0).then_some(f)
}

/// Second-order sections `(b0, b1, b2, a1, a2)` of a digital Butterworth
/// low-pass (bilinear transform, prewarped at the cutoff).
pub fn butterworth_sections(cutoff: f64, fs: f64, order: usize) -> Vec<[f64; 5]> {
    let w0 = 2.0 * PI * cutoff / fs;
    let (sw, cw) = w0.sin_cos();
    let mut out = Vec::new();
    for k in 0..order / 2 {
        // pole angle from the negative real axis
        let theta = PI * (order - 2 * k - 1) as f64 / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.cos());
        let alpha = sw / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 - cw) / 2.0 / a0;
        out.push([b0, 2.0 * b0, b0, -2.0 * cw / a0, (1.0 - alpha) / a0]);
    }
    if order % 2 == 1 {
        let k = (w0 / 2.0).tan();
        let b = k / (1.0 + k);
        out.push([b, b, 0.0, (k - 1.0) / (k + 1.0), 0.0]);
    }
    out
}

/// Transposed direct form II, started from the steady state for input `x[0]`.
fn sosfilt(sections: &[[f64; 5]], x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in sections {
        let [b0, b1, b2, a1, a2] = *s;
        let x0 = y[0];
        let gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
        let mut z2 = (b2 - a2 * gain) * x0;
        let mut z1 = (b1 - a1 * gain) * x0 + z2;
        for v in y.iter_mut() {
            let input = *v;
            let out = b0 * input + z1;
            z1 = b1 * input - a1 * out + z2;
            z2 = b2 * input - a2 * out;
            *v = out;
        }
    }
    y
}

/// Forward-backward filtering with odd reflection at both ends.
pub fn filtfilt(x: &[f64], cutoff: f64, fs: f64, order: usize) -> Vec<f64> {
    let n = x.len();
    if n < 2 || cutoff >= 0.5 * fs {
        return x.to_vec();
    }
    let sections = butterworth_sections(cutoff, fs, order);
    let pad = (3 * (2 * sections.len() + 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
    let mut y = sosfilt(&sections, &ext);
    y.reverse();
    let mut y = sosfilt(&sections, &y);
    y.reverse();
    y[pad..pad + n].to_vec()
}
