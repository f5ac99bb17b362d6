//! Event-driven Monte Carlo of dark runs, photon exposures and gate sweeps.
//!
//! An exposure draws incident photons as a Poisson process, thins them by
//! the quantum efficiency, and hands each detected photon to the trap
//! ensemble. The conductance is sampled on a uniform clock; a capture between
//! two ticks shows up at the next tick.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::charge::{absorption_target, Layer, PhotonSource, TrapEnsemble};
use crate::error::{Error, Result};
use crate::seed;
use crate::trace::{cumulative_shift, PhotonTally, Sample, Trace, TraceSetup, TruthEvent};
use crate::transport::{self, AxisKind, ChannelModel, ConductanceCurve, DeviceParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureConfig {
    /// Seconds of illumination, starting at t = 0.
    pub duration: f64,
    pub sample_interval: f64,
    /// Seconds of dark record before t = 0.
    pub dark_lead: f64,
    pub gate_bias: f64,
    /// White Gaussian noise on conductance, units of `2e²/h`.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Let AlGaAs-absorbed holes also land in buffer micro-traps.
    pub include_buffer_traps: bool,
    /// Two-level fluctuator contaminant; 0 disables it.
    pub rts_amplitude: f64,
    /// Fluctuator switching rate (1/s) in each direction.
    pub rts_switch_rate: f64,
}

impl Default for ExposureConfig {
    fn default() -> Self {
        Self {
            duration: 6000.0,
            sample_interval: 0.5,
            dark_lead: 60.0,
            gate_bias: -1.5,
            noise_sigma: 5e-5,
            seed: 0,
            include_buffer_traps: false,
            rts_amplitude: 0.0,
            rts_switch_rate: 0.05,
        }
    }
}

impl ExposureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::domain("exposure.duration must be > 0"));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::domain("exposure.sample_interval must be > 0"));
        }
        if !(self.dark_lead >= 0.0 && self.dark_lead.is_finite()) {
            return Err(Error::domain("exposure.dark_lead must be >= 0"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::domain("exposure.noise_sigma must be >= 0"));
        }
        if !self.gate_bias.is_finite() || !self.rts_amplitude.is_finite() {
            return Err(Error::domain(
                "exposure.gate_bias and rts_amplitude must be finite",
            ));
        }
        if self.rts_amplitude != 0.0 && !(self.rts_switch_rate > 0.0) {
            return Err(Error::domain(
                "exposure.rts_switch_rate must be > 0 when the fluctuator is on",
            ));
        }
        Ok(())
    }

    /// Sample times `-dark_lead + k * sample_interval` up to `duration`.
    pub fn sample_times(&self) -> Vec<f64> {
        let start = -self.dark_lead;
        let n = ((self.duration - start) / self.sample_interval).floor() as usize;
        (0..=n)
            .map(|k| start + k as f64 * self.sample_interval)
            .filter(|&t| t <= self.duration)
            .collect()
    }
}

/// Arrival times of a homogeneous Poisson process on `[0, horizon]`.
pub fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!(
            "Poisson rate must be >= 0, got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(Vec::new());
    }
    let exp = Exp::new(rate).map_err(|e| Error::domain(e.to_string()))?;
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t > horizon {
            return Ok(out);
        }
        out.push(t);
    }
}

/// The first `count` arrival times of a homogeneous Poisson process.
pub fn poisson_event_times<R: Rng + ?Sized>(
    rate: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!(
            "Poisson rate must be > 0, got {rate}"
        )));
    }
    let exp = Exp::new(rate).map_err(|e| Error::domain(e.to_string()))?;
    let mut t = 0.0;
    Ok((0..count)
        .map(|_| {
            t += exp.sample(rng);
            t
        })
        .collect())
}

/// Symmetric two-level fluctuator: state flips at Poisson times.
struct Fluctuator {
    amplitude: f64,
    high: bool,
    next_flip: f64,
    exp: Exp<f64>,
    rng: ChaCha8Rng,
}

impl Fluctuator {
    fn new(config: &ExposureConfig) -> Result<Option<Self>> {
        if config.rts_amplitude == 0.0 {
            return Ok(None);
        }
        let exp = Exp::new(config.rts_switch_rate).map_err(|e| Error::domain(e.to_string()))?;
        let mut rng = seed::stream(config.seed, "rts");
        let next_flip = -config.dark_lead + exp.sample(&mut rng);
        Ok(Some(Self {
            amplitude: config.rts_amplitude,
            high: false,
            next_flip,
            exp,
            rng,
        }))
    }

    fn level_at(&mut self, t: f64) -> f64 {
        while self.next_flip <= t {
            self.high = !self.high;
            self.next_flip += self.exp.sample(&mut self.rng);
        }
        if self.high {
            self.amplitude
        } else {
            0.0
        }
    }
}

fn noise_source(sigma: f64) -> Result<Option<Normal<f64>>> {
    if sigma == 0.0 {
        return Ok(None);
    }
    Normal::new(0.0, sigma)
        .map(Some)
        .map_err(|e| Error::domain(e.to_string()))
}

/// Runs one exposure, leaving the ensemble in its final state. An ensemble
/// that is already saturated yields a flat trace.
pub fn simulate_exposure(
    device: &DeviceParams,
    ensemble: &mut TrapEnsemble,
    source: &PhotonSource,
    config: &ExposureConfig,
) -> Result<Trace> {
    config.validate()?;
    source.validate()?;
    let model = ChannelModel::new(device)?;
    let layer = absorption_target(source.wavelength)?;

    let mut photon_rng = seed::stream(config.seed, "photons");
    let mut capture_rng = seed::stream(config.seed, "capture");
    let mut noise_rng = seed::stream(config.seed, "noise");
    let noise = noise_source(config.noise_sigma)?;
    let mut rts = Fluctuator::new(config)?;

    let initial_gate_shift = ensemble.effective_gate_shift();
    let arrivals = poisson_arrivals(source.incident_rate, config.duration, &mut photon_rng)?;
    let mut tally = PhotonTally {
        incident: arrivals.len() as u64,
        ..PhotonTally::default()
    };
    let mut events = Vec::new();
    let mut couplings = Vec::new();
    for t in arrivals {
        let detected = photon_rng.random::<f64>() < source.quantum_efficiency;
        if !detected || layer == Layer::None {
            continue;
        }
        tally.absorbed += 1;
        if let Some(i) = ensemble.capture_with(layer, config.include_buffer_traps, &mut capture_rng)
        {
            tally.captured += 1;
            let coupling = ensemble.traps[i].coupling;
            couplings.push(coupling);
            events.push(TruthEvent {
                time: t,
                coupling,
                gate_shift: cumulative_shift(initial_gate_shift, &couplings),
            });
        }
    }

    let mut samples = Vec::new();
    let mut next_event = 0;
    let mut shift = initial_gate_shift;
    let mut level = model.conductance(config.gate_bias + shift);
    for t in config.sample_times() {
        let mut moved = false;
        while next_event < events.len() && events[next_event].time <= t {
            shift = events[next_event].gate_shift;
            next_event += 1;
            moved = true;
        }
        if moved {
            level = model.conductance(config.gate_bias + shift);
        }
        let mut g = level;
        if let Some(n) = &noise {
            g += n.sample(&mut noise_rng);
        }
        if let Some(f) = rts.as_mut() {
            g += f.level_at(t);
        }
        samples.push(Sample {
            axis: t,
            conductance: g,
        });
    }

    let trace = Trace {
        device: device.clone(),
        setup: TraceSetup::Exposure {
            source: source.clone(),
            exposure: config.clone(),
            traps: ensemble.config.clone(),
            trap_seed: ensemble.rng_seed,
            initial_gate_shift,
            tally,
        },
        samples,
        truth_events: events,
    };
    trace.check()?;
    Ok(trace)
}

/// A gate sweep with additive Gaussian noise.
pub fn simulate_gate_sweep(
    device: &DeviceParams,
    v_start: f64,
    v_end: f64,
    n_points: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Trace> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::domain("noise_sigma must be >= 0"));
    }
    let curve = transport::sweep(v_start, v_end, n_points, device)?;
    let noise = noise_source(noise_sigma)?;
    let mut rng = seed::stream(seed, "noise");
    let samples = curve
        .points()
        .iter()
        .map(|&(v, g)| Sample {
            axis: v,
            conductance: match &noise {
                Some(n) => g + n.sample(&mut rng),
                None => g,
            },
        })
        .collect();
    Ok(Trace {
        device: device.clone(),
        setup: TraceSetup::GateSweep {
            v_start,
            v_end,
            n_points,
            noise_sigma,
            seed,
        },
        samples,
        truth_events: Vec::new(),
    })
}

/// Re-plots an exposure against `gate_bias + cumulative gate shift`.
///
/// Samples sharing one shift level are averaged into a single point, so a
/// noiseless exposure lands exactly on the gate-only curve.
pub fn exposure_to_gate_equivalence(
    trace: &Trace,
    _device: &DeviceParams,
) -> Result<ConductanceCurve> {
    let exposure = trace.exposure_config().ok_or_else(|| {
        Error::domain("gate equivalence needs an exposure trace with truth events")
    })?;
    if trace.samples.is_empty() {
        return ConductanceCurve::new(AxisKind::GateVoltage, Vec::new());
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut current = trace.gate_shift_at(trace.samples[0].axis);
    for s in &trace.samples {
        let shift = trace.gate_shift_at(s.axis);
        if shift != current {
            points.push((exposure.gate_bias + current, sum / count as f64));
            sum = 0.0;
            count = 0;
            current = shift;
        }
        sum += s.conductance;
        count += 1;
    }
    points.push((exposure.gate_bias + current, sum / count as f64));
    ConductanceCurve::new(AxisKind::GateVoltage, points)
}
