use std::f64::consts::PI;

use flapsim::config::{set_dotted, RunConfig};
use flapsim::loadcell::detect_frequency;
use flapsim::sim::{ForceRecord, Simulator};

fn config(overrides: &[(&str, toml::Value)]) -> RunConfig {
    let mut doc: toml::Value = toml::from_str("[sim]\nairspeed = 1.65\n[gait]\nfrequency = 4.5\n").unwrap();
    for (k, v) in overrides {
        set_dotted(&mut doc, k, v.clone()).unwrap();
    }
    RunConfig::from_value(doc).unwrap()
}

fn run(cfg: &RunConfig) -> ForceRecord {
    Simulator::new(cfg.sim_config().unwrap()).unwrap().run().unwrap()
}

fn cycle_mean_lift(rec: &ForceRecord, steps_per_cycle: usize, cycle: usize) -> f64 {
    rec.samples[cycle * steps_per_cycle..(cycle + 1) * steps_per_cycle].iter().map(|s| s.lift).sum::<f64>() / steps_per_cycle as f64
}

/// Elliptic planform with the given aspect ratio over the default 0.3 m
/// span, held still at incidence `alpha_deg`.
fn still_elliptic(aspect_ratio: f64, alpha_deg: f64, airspeed: f64) -> Vec<(&'static str, toml::Value)> {
    let span: f64 = 2.0 * (0.06 + 0.09);
    let root_chord = 4.0 * span / (PI * aspect_ratio);
    vec![
        ("sim.airspeed", airspeed.into()),
        ("sim.mode", "wagner".into()),
        ("gait.mode", "prescribed".into()),
        ("gait.shoulder_amplitude_deg", 0.0.into()),
        ("gait.elbow_amplitude_deg", 0.0.into()),
        ("gait.elbow_offset_deg", 0.0.into()),
        ("planform.chord_model", "elliptic".into()),
        ("planform.proximal.length", 0.06.into()),
        ("planform.proximal.root_chord", root_chord.into()),
        ("planform.proximal.tip_chord", root_chord.into()),
        ("planform.proximal.elements", 5.into()),
        ("planform.incidence_deg", alpha_deg.into()),
    ]
}

fn elliptic_lift(aspect_ratio: f64, alpha_deg: f64, airspeed: f64) -> f64 {
    let span: f64 = 0.3;
    let area = span * span / aspect_ratio;
    let a0 = 2.0 * PI;
    let cl = a0 * alpha_deg.to_radians() / (1.0 + a0 / (PI * aspect_ratio));
    0.5 * 1.225 * airspeed * airspeed * area * cl
}

#[test]
fn still_wing_converges_to_elliptic_lifting_line() {
    let mut o = still_elliptic(6.0, 2.0, 5.0);
    o.push(("sim.duration", 1.0.into()));
    o.push(("sim.dt", 5e-4.into()));
    let rec = run(&config(&o));
    let last = rec.samples.last().unwrap();
    let expect = elliptic_lift(6.0, 2.0, 5.0);
    assert!((last.lift / expect - 1.0).abs() < 0.02, "lift {} vs {expect}", last.lift);
    // converged
    let before = rec.samples[rec.samples.len() - 200].lift;
    assert!((last.lift - before).abs() < 1e-3 * expect.abs());
}

#[test]
fn slow_flapping_cycle_mean_approaches_steady_lifting_line() {
    // reduced frequency ω b / U well below 0.005
    let (f, u) = (0.25, 10.0);
    let mut o = still_elliptic(6.0, 3.0, u);
    o.extend([
        ("gait.frequency", f.into()),
        ("gait.shoulder_amplitude_deg", 4.0.into()),
        ("sim.dt", 1e-3.into()),
        ("sim.duration", (2.0 / f).into()),
    ]);
    let cfg = config(&o);
    let b = 0.5 * cfg.planform.proximal.root_chord;
    assert!(2.0 * PI * f * b / u < 0.005);
    let rec = run(&cfg);
    let per = (1.0 / (f * rec.dt)).round() as usize;
    let mean = cycle_mean_lift(&rec, per, 1);
    let expect = elliptic_lift(6.0, 3.0, u);
    assert!((mean / expect - 1.0).abs() < 0.03, "cycle mean {mean} vs {expect}");
}

#[test]
fn fine_step_flapping_becomes_periodic() {
    let f = 4.5;
    let dt = 1.0 / (f * 1e4);
    let cycles = 7;
    let cfg = config(&[
        ("gait.mode", "prescribed".into()),
        ("sim.dt", dt.into()),
        ("sim.duration", (cycles as f64 / f).into()),
    ]);
    let rec = run(&cfg);
    let per = 10_000;
    assert!(rec.samples.len() >= cycles * per);
    let (m6, m7) = (cycle_mean_lift(&rec, per, 5), cycle_mean_lift(&rec, per, 6));
    assert!(((m7 - m6) / m6).abs() < 5e-3, "cycle means {m6} {m7}");
}

#[test]
fn lift_and_drag_oscillate_at_the_flap_frequency() {
    let rec = run(&config(&[("sim.duration", 2.0.into())]));
    let (t, lift): (Vec<f64>, Vec<f64>) = rec.samples.iter().filter(|s| s.t >= 0.5).map(|s| (s.t, s.lift)).unzip();
    let drag: Vec<f64> = rec.samples.iter().filter(|s| s.t >= 0.5).map(|s| s.drag).collect();
    // one FFT bin of a 1.5 s record is 0.67 Hz
    let bin = 1.0 / (t[t.len() - 1] - t[0]);
    let fl = detect_frequency(&t, &lift).unwrap();
    assert!((fl - 4.5).abs() < bin, "{fl}");
    let fd = detect_frequency(&t, &drag).unwrap();
    // drag peaks twice per stroke cycle, so accept the fundamental or its harmonic
    assert!((fd - 4.5).abs() < bin || (fd - 9.0).abs() < bin, "{fd}");
}

#[test]
fn ten_second_linkage_run_keeps_loops_closed() {
    let rec = run(&config(&[("sim.mode", "quasisteady".into()), ("sim.dt", 1e-3.into()), ("sim.duration", 10.0.into())]));
    assert_eq!(rec.samples.len(), 10_000);
    assert!(rec.max_loop_residual < 1e-8, "{}", rec.max_loop_residual);
    assert!(rec.max_constraint_residual < 1e-8);
}

#[test]
fn identical_configs_give_identical_records() {
    let cfg = config(&[("sim.duration", 0.2.into())]);
    assert_eq!(run(&cfg), run(&cfg));
}

#[test]
fn zero_duration_is_an_empty_record() {
    let rec = run(&config(&[("sim.duration", 0.0.into())]));
    assert!(rec.samples.is_empty());
}

#[test]
fn zeta_snapshots_follow_the_stride() {
    let rec = run(&config(&[("sim.duration", 0.1.into()), ("sim.zeta_stride", 40.into())]));
    let m = 16;
    assert_eq!(rec.zeta.len(), rec.samples.len().div_ceil(40));
    assert!(rec.zeta.iter().all(|(_, z)| z.len() == 3 * m));
    assert!(rec.cl.iter().all(|c| c.len() == m));
}
