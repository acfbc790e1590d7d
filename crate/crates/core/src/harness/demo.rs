use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::PreisachDemoConfig;
use super::svg::{Plot, Series};
use super::{io_err, HarnessError};
use crate::hysteresis::{preisach_init, preisach_output, PreisachInit, PreisachMemory, PreisachParams};

/// Excitation period of `170 sin(4 pi t) + 170 sin(20 pi t + pi)`.
pub const PERIOD: f64 = 0.5;
/// Input far beyond the support of the density.
const SATURATION: f64 = 1e9;

pub fn excitation(t: f64) -> f64 {
    170.0 * (4.0 * PI * t).sin() + 170.0 * (20.0 * PI * t + PI).sin()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DemoSample {
    pub t: f64,
    pub u: f64,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreisachDemoReport {
    /// Run from the state reached by a sweep from negative saturation to the
    /// peak and back to zero.
    pub samples: Vec<DemoSample>,
    /// `max w - min w` over the last period.
    pub loop_height: f64,
    /// `|w(end) - w(end - period)| / loop_height`.
    pub closure_gap: f64,
    /// `max |w_+(t) + w_-(t)|` for runs under `H` and `-H` from demagnetized memory.
    pub symmetry_error: f64,
    /// Largest excursion of the loop outside the saturation branches.
    pub envelope_violation: f64,
}

fn run(mut m: PreisachMemory, p: &PreisachParams, times: &[f64], sign: f64) -> Vec<DemoSample> {
    times
        .iter()
        .map(|&t| {
            let u = sign * excitation(t);
            m.update(u, p);
            DemoSample { t, u, w: preisach_output(&m, p) }
        })
        .collect()
}

pub fn preisach_demo(cfg: &PreisachDemoConfig) -> Result<PreisachDemoReport, HarnessError> {
    cfg.validate()?;
    let p = PreisachParams::lorentzian_benchmark(cfg.preisach_nodes)?;
    let s = cfg.samples_per_period;
    let times: Vec<f64> = (0..=cfg.periods * s).map(|i| i as f64 * PERIOD / s as f64).collect();

    let start = preisach_init(0.0, &PreisachInit::LowerBoundThenPath(vec![-SATURATION, cfg.initial_peak]), &p)?;
    let samples = run(start, &p, &times, 1.0);

    let last = &samples[samples.len() - 1 - s..];
    let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x.w), hi.max(x.w)));
    let loop_height = hi - lo;
    let closure_gap = (last[s].w - last[0].w).abs() / loop_height;

    let demag = preisach_init(0.0, &PreisachInit::demagnetized(p.len()), &p)?;
    let plus = run(demag.clone(), &p, &times, 1.0);
    let minus = run(demag, &p, &times, -1.0);
    let symmetry_error = plus.iter().zip(&minus).map(|(a, b)| (a.w + b.w).abs()).fold(0.0, f64::max);

    let ascending = |u: f64| preisach_init(u, &PreisachInit::LowerBoundThenPath(vec![-SATURATION]), &p);
    let descending = |u: f64| preisach_init(u, &PreisachInit::LowerBoundThenPath(vec![-SATURATION, SATURATION]), &p);
    let mut envelope_violation: f64 = 0.0;
    for x in &samples {
        let below = preisach_output(&ascending(x.u)?, &p) - x.w;
        let above = x.w - preisach_output(&descending(x.u)?, &p);
        envelope_violation = envelope_violation.max(below).max(above);
    }

    Ok(PreisachDemoReport { samples, loop_height, closure_gap, symmetry_error, envelope_violation })
}

/// Writes `preisach_loop.csv` and `preisach_loop.svg`.
pub fn write_demo_outputs(report: &PreisachDemoReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("preisach_loop.csv");
    let mut w = csv::Writer::from_writer(fs::File::create(&path).map_err(io_err(&path))?);
    w.write_record(["t", "u", "w"])?;
    for s in &report.samples {
        w.write_record([format!("{:.6}", s.t), format!("{:.9e}", s.u), format!("{:.9e}", s.w)])?;
    }
    w.flush().map_err(io_err(&path))?;

    let first = report.samples[0];
    let plot = Plot {
        title: "Preisach u-w loop".into(),
        x_label: "u".into(),
        y_label: "w".into(),
        log_y: false,
        series: vec![
            Series::line("loop", report.samples.iter().map(|s| (s.u, s.w)).collect()),
            Series::dots("initial state", vec![(first.u, first.w)]),
        ],
    };
    let svg = dir.join("preisach_loop.svg");
    fs::write(&svg, plot.render()).map_err(io_err(&svg))?;
    Ok(vec![path, svg])
}
