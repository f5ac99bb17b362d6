//! Commands behind the `qpc-detector` binary.
//!
//! Every command takes a [`RunConfig`] and writes plain-text files into
//! `config.out_dir`. Files are written to a temporary sibling and renamed into
//! place, so a reader never sees half a file. All randomness comes from the
//! master seed (see [`crate::seed`]), so reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::analyze::{
    self, analyze_trace, fit_exponential, intervals_between, Histogram, IntervalFit,
};
use crate::charge::build_ensemble;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::seed;
use crate::simulate::{
    exposure_to_gate_equivalence, poisson_event_times, simulate_exposure, simulate_gate_sweep,
};
use crate::trace::Trace;
use crate::transport::{self, differential_conductance, ConductanceCurve};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_DGDV_FILE: &str = "sweep_dgdv.csv";
pub const EXPOSURE_FILE: &str = "exposure.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const FIG2A_FILE: &str = "fig2a.csv";
pub const FIG2B_FILE: &str = "fig2b.csv";
pub const FIG3_FILE: &str = "fig3.csv";

/// Command-line flags that override the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Measurement noise for both sweeps and exposures.
    pub noise: Option<f64>,
    pub wavelength: Option<f64>,
    pub duration: Option<f64>,
    pub threshold: Option<f64>,
    pub window: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(s) = self.seed {
            config.set_seed(s);
        }
        if let Some(out) = &self.out_dir {
            config.out_dir = out.clone();
        }
        if let Some(n) = self.noise {
            config.exposure.noise_sigma = n;
            config.sweep.noise_sigma = n;
        }
        if let Some(w) = self.wavelength {
            config.source.wavelength = w;
        }
        if let Some(d) = self.duration {
            config.exposure.duration = d;
        }
        if let Some(k) = self.threshold {
            config.detector.threshold = k;
        }
        if let Some(w) = self.window {
            config.detector.window = w;
        }
    }
}

/// Reads the config file (defaults when `path` is `None`) and applies the
/// overrides. Bad values surface as [`Error::Config`].
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = match path {
        Some(p) => RunConfig::parse(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut config);
    config
        .validate()
        .map_err(|e| Error::config(e.to_string()))?;
    Ok(config)
}

/// Writes `contents` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn write_out(config: &RunConfig, name: &str, contents: &str) -> Result<PathBuf> {
    let path = config.out_dir.join(name);
    write_atomic(&path, contents)?;
    Ok(path)
}

fn curve_csv(curve: &ConductanceCurve, header: &str) -> String {
    let mut s = format!("{header}\n");
    for (x, y) in curve.points() {
        let _ = writeln!(s, "{x},{y}");
    }
    s
}

/// The exposure described by `config`: a fresh ensemble from the trap seed
/// and the photon, capture and noise streams from the exposure seed.
pub fn run_exposure(config: &RunConfig) -> Result<Trace> {
    let mut ensemble = build_ensemble(&config.traps, config.trap_seed())?;
    simulate_exposure(
        &config.device,
        &mut ensemble,
        &config.source,
        &config.exposure,
    )
}

/// Gate sweep trace plus its differential conductance (when it has at
/// least three points).
pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let s = &config.sweep;
    let trace = simulate_gate_sweep(
        &config.device,
        s.v_start,
        s.v_end,
        s.n_points,
        s.noise_sigma,
        config.sweep_seed(),
    )?;
    let mut written = vec![write_out(config, SWEEP_FILE, &trace.to_text())?];
    if trace.samples.len() >= 3 {
        let curve = ConductanceCurve::new(
            transport::AxisKind::GateVoltage,
            trace
                .samples
                .iter()
                .map(|p| (p.axis, p.conductance))
                .collect(),
        )?;
        let dgdv = differential_conductance(&curve)?;
        written.push(write_out(
            config,
            SWEEP_DGDV_FILE,
            &curve_csv(&dgdv, "gate_V,dGdV_G0_per_V"),
        )?);
    }
    Ok(written)
}

/// Exposure trace with its truth events.
pub fn cmd_expose(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let trace = run_exposure(config)?;
    Ok(vec![write_out(config, EXPOSURE_FILE, &trace.to_text())?])
}

/// Reads a trace file and writes the analysis report.
pub fn cmd_analyze(config: &RunConfig, trace_path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(trace_path).map_err(|e| Error::io(trace_path, e))?;
    let trace = Trace::from_text(&text)?;
    let report = analyze_trace(&trace, &config.detector)?;
    Ok(vec![write_out(config, REPORT_FILE, &report.to_text())?])
}

/// Gate-only sweep and the noiseless exposure replotted against
/// `gate_bias + trapped gate shift`.
pub struct Fig2a {
    pub gate_only: ConductanceCurve,
    pub photo: ConductanceCurve,
}

pub fn figure_2a(config: &RunConfig) -> Result<Fig2a> {
    let s = &config.sweep;
    let gate_only = transport::sweep(s.v_start, s.v_end, s.n_points, &config.device)?;
    let mut quiet = config.clone();
    quiet.exposure.noise_sigma = 0.0;
    quiet.exposure.rts_amplitude = 0.0;
    let trace = run_exposure(&quiet)?;
    let photo = exposure_to_gate_equivalence(&trace, &config.device)?;
    Ok(Fig2a { gate_only, photo })
}

impl Fig2a {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("series,gate_V,conductance_G0\n");
        for (name, curve) in [("gate_only", &self.gate_only), ("photo", &self.photo)] {
            for (v, g) in curve.points() {
                let _ = writeln!(s, "{name},{v},{g}");
            }
        }
        s
    }
}

/// Model dG/dVg across the sweep and the detected step heights placed at
/// their operating points.
pub struct Fig2b {
    pub dgdv: ConductanceCurve,
    /// `(gate_V, height_G0, time_s)` per detected step.
    pub steps: Vec<(f64, f64, f64)>,
}

pub fn figure_2b(config: &RunConfig) -> Result<Fig2b> {
    let s = &config.sweep;
    let model = transport::ChannelModel::new(&config.device)?;
    let grid = transport::sweep(s.v_start, s.v_end, s.n_points.max(3), &config.device)?;
    let dgdv = ConductanceCurve::new(
        transport::AxisKind::GateVoltage,
        grid.axis_values()
            .map(|v| (v, model.transconductance(v)))
            .collect(),
    )?;
    let trace = run_exposure(config)?;
    let steps = analyze::detect_steps(&trace, config.detector.window, config.detector.threshold)?;
    let gates = analyze::step_operating_points(&steps, &config.device)?;
    Ok(Fig2b {
        dgdv,
        steps: steps
            .iter()
            .zip(gates)
            .map(|(st, v)| (v, st.height, st.time))
            .collect(),
    })
}

impl Fig2b {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("series,gate_V,value,time_s\n");
        for (v, g) in self.dgdv.points() {
            let _ = writeln!(s, "dGdV_G0_per_V,{v},{g},");
        }
        for (v, h, t) in &self.steps {
            let _ = writeln!(s, "step_height_G0,{v},{h},{t}");
        }
        s
    }
}

/// Interval statistics of simulated photon detections.
pub struct Fig3 {
    pub configured_mean_interval: f64,
    pub fit: IntervalFit,
    pub histogram: Histogram,
}

pub fn figure_3(config: &RunConfig) -> Result<Fig3> {
    let rate = config.source.detection_rate();
    if !(rate > 0.0) {
        return Err(Error::config(
            "interval figure needs a positive detection rate",
        ));
    }
    if config.figures.interval_events < 3 {
        return Err(Error::config("figures.interval_events must be >= 3"));
    }
    let mut rng = seed::stream(config.seed, "figures/3");
    let times = poisson_event_times(rate, config.figures.interval_events, &mut rng)?;
    let intervals = intervals_between(&times);
    let fit = fit_exponential(&intervals)?;
    let width = config.detector.bin_width.unwrap_or(fit.mean_interval / 3.0);
    Ok(Fig3 {
        configured_mean_interval: 1.0 / rate,
        fit,
        histogram: Histogram::from_intervals(&intervals, width)?,
    })
}

impl Fig3 {
    /// Histogram with the fitted exponential's expected count per bin.
    pub fn to_csv(&self) -> String {
        let f = &self.fit;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# configured_mean_interval_s={}",
            self.configured_mean_interval
        );
        let _ = writeln!(s, "# event_count={}", f.event_count);
        let _ = writeln!(s, "# mean_interval_s={}", f.mean_interval);
        let _ = writeln!(s, "# rate_per_s={}", f.rate);
        let _ = writeln!(s, "# ks_statistic={}", f.ks_statistic);
        let _ = writeln!(s, "# ks_critical_5pct={}", f.ks_critical_5pct());
        s.push_str("bin_start_s,count,fit_count\n");
        let n = f.interval_count() as f64;
        let w = self.histogram.bin_width;
        for b in &self.histogram.bins {
            let expected = n * ((-f.rate * b.start).exp() - (-f.rate * (b.start + w)).exp());
            let _ = writeln!(s, "{},{},{}", b.start, b.count, expected);
        }
        s
    }
}

/// Plot-ready data for the three figures.
pub fn cmd_reproduce_figures(config: &RunConfig) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write_out(config, FIG2A_FILE, &figure_2a(config)?.to_csv())?,
        write_out(config, FIG2B_FILE, &figure_2b(config)?.to_csv())?,
        write_out(config, FIG3_FILE, &figure_3(config)?.to_csv())?,
    ])
}
