//! Command-line front end. Exit codes: 0 success, 1 I/O failure, 2 bad
//! configuration or input data, 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::compare::{compare, CompareError, CompareOptions, ComparisonReport};
use crate::config::{set_dotted, ConfigError, RunConfig};
use crate::export::{cl_csv, force_record_csv, report_toml, wake_grid_csv, write_text, zeta_csv, ExportError};
use crate::loadcell::{ingest_loadcell, LoadCellError};
use crate::sim::{AeroMode, ForceRecord, SimError, Simulator};
use crate::wake::{decimate, sample_plane, shed_wake, PlaneSpec, WakeError};

#[derive(Parser, Debug)]
#[command(name = "flapsim", version, about = "Flapping-wing robot simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Quasisteady,
    Wagner,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one simulation and export the force record.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Run both aerodynamic models against a load-cell trace.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        loadcell: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the shed wake and sample it on a cross-stream plane.
    Wake {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Distance of the plane behind the trailing edge, m.
        #[arg(long)]
        plane_offset: Option<f64>,
        /// Number of grids spread over the last flap period.
        #[arg(long, default_value_t = 1)]
        slices: usize,
    },
    /// Run one simulation per value of a config key, concurrently.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `section.key=start:stop:count` or `section.key=v1,v2,...`.
        #[arg(long)]
        vary: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<LoadCellError> for CliError {
    fn from(e: LoadCellError) -> Self {
        match e {
            LoadCellError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<CompareError> for CliError {
    fn from(e: CompareError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<WakeError> for CliError {
    fn from(e: WakeError) -> Self {
        match e {
            WakeError::InvalidPlane(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn progress(label: &str) -> impl FnMut(usize, usize) + '_ {
    let mut last = usize::MAX;
    move |k, n| {
        let pct = 100 * k / n.max(1);
        if pct / 10 != last / 10 || k == n {
            last = pct;
            let _ = write!(std::io::stderr(), "\r{label}: {pct:3}%");
            if k == n {
                let _ = writeln!(std::io::stderr());
            }
        }
    }
}

pub fn run_config(cfg: &RunConfig, mode: Option<AeroMode>, label: &str, quiet: bool) -> Result<ForceRecord, CliError> {
    let mut sc = cfg.sim_config()?;
    if let Some(m) = mode {
        sc.mode = m;
    }
    let sim = Simulator::new(sc)?;
    let rec = if quiet { sim.run()? } else { sim.run_with_progress(progress(label))? };
    Ok(rec)
}

fn write_record(dir: &Path, suffix: &str, rec: &ForceRecord) -> Result<(), CliError> {
    write_text(&dir.join(format!("forces{suffix}.csv")), &force_record_csv(rec))?;
    write_text(&dir.join(format!("cl{suffix}.csv")), &cl_csv(rec))?;
    if rec.mode == AeroMode::Wagner {
        write_text(&dir.join(format!("zeta{suffix}.csv")), &zeta_csv(rec))?;
    }
    Ok(())
}

fn echo(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    Ok(write_text(&out.join("effective_config.toml"), &cfg.echo())?)
}

pub fn simulate(config: &Path, out: &Path, mode: Option<ModeArg>) -> Result<ForceRecord, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(m) = mode {
        cfg.sim.mode = match m {
            ModeArg::Quasisteady => crate::config::ModeName::Quasisteady,
            ModeArg::Wagner => crate::config::ModeName::Wagner,
        };
    }
    echo(&cfg, out)?;
    let rec = run_config(&cfg, None, "simulate", false)?;
    write_record(out, "", &rec)?;
    Ok(rec)
}

pub fn compare_cmd(config: &Path, loadcell: &Path, out: &Path) -> Result<Vec<ComparisonReport>, CliError> {
    let cfg = RunConfig::load(config)?;
    let trace = ingest_loadcell(loadcell)?;
    echo(&cfg, out)?;
    let opts = CompareOptions {
        skip: cfg.compare.skip,
        cutoff: cfg.compare.cutoff_hz,
        filter_order: cfg.compare.filter_order,
        ..CompareOptions::default()
    };
    let mut reports = Vec::new();
    for mode in [AeroMode::QuasiSteady, AeroMode::Wagner] {
        let rec = run_config(&cfg, Some(mode), mode.name(), false)?;
        write_record(out, &format!("_{}", mode.name()), &rec)?;
        reports.push(compare(&rec, &trace, &opts)?);
    }
    write_text(&out.join("report.toml"), &report_toml(&reports))?;
    for r in &reports {
        eprintln!("{}: rms lift {:.4} N, rms drag {:.4} N, offset {:.4} s", r.mode, r.rms_lift, r.rms_drag, r.offset);
    }
    Ok(reports)
}

pub fn wake_cmd(config: &Path, out: &Path, plane_offset: Option<f64>, slices: usize) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    if let Some(x) = plane_offset {
        if !(x.is_finite() && x >= 0.0) {
            return Err(CliError::Config(format!("--plane-offset must be non-negative, got {x}")));
        }
    }
    echo(&cfg, out)?;
    let rec = run_config(&cfg, None, "wake", false)?;
    if rec.wake.is_empty() {
        return Err(WakeError::EmptyHistory.into());
    }
    let offset = plane_offset.or(cfg.wake.plane_offset).unwrap_or_else(|| cfg.mean_chord());
    let freestream = cfg.sim_config()?.freestream();
    let n = rec.wake.len();
    let period_steps = ((1.0 / cfg.gait.frequency) / rec.dt).round() as usize;
    let slices = slices.max(1);
    for s in 0..slices {
        let back = period_steps * (slices - 1 - s) / slices;
        let last = n - 1 - back.min(n - 1);
        let sheet = shed_wake(&decimate(&rec.wake, cfg.wake.row_stride, last), &freestream)?;
        let plane = PlaneSpec::behind(&sheet, offset, cfg.wake.nu, cfg.wake.nv)?;
        let grid = sample_plane(&sheet, &plane)?;
        if grid.degenerate && s == 0 {
            eprintln!("warning: zero freestream; wake convected with the mean wing-root velocity");
        }
        let name = if slices == 1 { "wake_grid.csv".to_string() } else { format!("wake_grid_{s:03}.csv") };
        write_text(&out.join(name), &wake_grid_csv(&grid))?;
    }
    Ok(())
}

/// Values from `start:stop:count` or a comma list.
pub fn parse_range(text: &str) -> Result<Vec<toml::Value>, CliError> {
    let bad = || CliError::Config(format!("cannot parse range `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        return Ok((0..n)
            .map(|k| toml::Value::Float(if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 }))
            .collect());
    }
    text.split(',')
        .map(|s| {
            let s = s.trim();
            if let Ok(i) = s.parse::<i64>() {
                Ok(toml::Value::Integer(i))
            } else if let Ok(f) = s.parse::<f64>() {
                Ok(toml::Value::Float(f))
            } else if s.is_empty() {
                Err(bad())
            } else {
                Ok(toml::Value::String(s.to_string()))
            }
        })
        .collect()
}

pub fn sweep(config: &Path, vary: &str, out: &Path) -> Result<Vec<ForceRecord>, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::Io(format!("cannot read {}: {e}", config.display())))?;
    let base: toml::Value = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", config.display())))?;
    let (key, range) = vary.split_once('=').ok_or_else(|| CliError::Config(format!("--vary needs key=range, got `{vary}`")))?;
    let values = parse_range(range)?;
    let configs = values
        .iter()
        .map(|v| {
            let mut doc = base.clone();
            set_dotted(&mut doc, key.trim(), v.clone())?;
            // integer keys given as floats by a numeric range
            match RunConfig::from_value(doc.clone()) {
                Err(e) if matches!(v, toml::Value::Float(f) if f.fract() == 0.0) => {
                    let toml::Value::Float(f) = v else { unreachable!() };
                    set_dotted(&mut doc, key.trim(), toml::Value::Integer(*f as i64))?;
                    RunConfig::from_value(doc).map_err(|_| e)
                }
                r => r,
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(configs.len()).max(1);
    eprintln!("sweep: {} runs on {workers} threads", configs.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<ForceRecord, CliError>>> = (0..configs.len()).map(|_| None).collect();
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if k >= configs.len() {
                    break;
                }
                let dir = out.join(format!("run_{k:03}"));
                let r = echo(&configs[k], &dir)
                    .and_then(|_| run_config(&configs[k], None, "", true))
                    .and_then(|rec| write_record(&dir, "", &rec).map(|_| rec));
                eprintln!("sweep: run {k} {}", if r.is_ok() { "done" } else { "failed" });
                slots.lock().unwrap()[k] = Some(r);
            });
        }
    });
    let mut summary = format!("run,{key},mean_lift_N,mean_drag_N\n");
    let mut records = Vec::new();
    for (k, (r, v)) in results.into_iter().zip(&values).enumerate() {
        let rec = r.expect("every run reports")?;
        let n = rec.samples.len().max(1) as f64;
        let (l, d) = rec.samples.iter().fold((0.0, 0.0), |(l, d), s| (l + s.lift, d + s.drag));
        summary += &format!("{k},{v},{},{}\n", l / n, d / n);
        records.push(rec);
    }
    write_text(&out.join("sweep.csv"), &summary)?;
    Ok(records)
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, mode } => simulate(&config, &out, mode).map(|_| ()),
        Command::Compare { config, loadcell, out } => compare_cmd(&config, &loadcell, &out).map(|_| ()),
        Command::Wake { config, out, plane_offset, slices } => wake_cmd(&config, &out, plane_offset, slices),
        Command::Sweep { config, vary, out } => sweep(&config, &vary, &out).map(|_| ()),
    }
}
