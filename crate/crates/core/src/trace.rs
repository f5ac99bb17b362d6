//! Sampled conductance traces and their text format.
//!
//! ```text
//! # qpc-detector trace v1
//! # kind=exposure
//! # device.temperature=4.2
//! # ...
//! time_s,conductance_G0
//! -60,0.0000123
//! ...
//! # events
//! time_s,coupling_V
//! 12.5,0.0021
//! ```
//!
//! Gate sweeps use `kind=gate_sweep`, a `gate_V,conductance_G0` table and no
//! events section. Every float is written in shortest round-trip form, so
//! reading a file back yields the identical trace.

use std::fmt::Write as _;

use crate::charge::{canonical_sum, PhotonSource, TrapConfig};
use crate::config::{KvMap, KvSection, KvValue};
use crate::error::{Error, Result};
use crate::simulate::ExposureConfig;
use crate::transport::{AxisKind, ChannelModel, DeviceParams};

const MAGIC: &str = "# qpc-detector trace v1";
const EVENTS_MARKER: &str = "# events";
const EVENTS_COLUMNS: &str = "time_s,coupling_V";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Time (s) for exposures, gate voltage (V) for sweeps.
    pub axis: f64,
    pub conductance: f64,
}

/// One captured photo-hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthEvent {
    pub time: f64,
    pub coupling: f64,
    /// Total gate shift (V) after this capture.
    pub gate_shift: f64,
}

/// Photon bookkeeping for an exposure run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhotonTally {
    pub incident: u64,
    pub absorbed: u64,
    pub captured: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSetup {
    Exposure {
        source: PhotonSource,
        exposure: ExposureConfig,
        traps: TrapConfig,
        trap_seed: u64,
        /// Gate shift already trapped when illumination began.
        initial_gate_shift: f64,
        tally: PhotonTally,
    },
    GateSweep {
        v_start: f64,
        v_end: f64,
        n_points: usize,
        noise_sigma: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub device: DeviceParams,
    pub setup: TraceSetup,
    pub samples: Vec<Sample>,
    pub truth_events: Vec<TruthEvent>,
}

impl Trace {
    pub fn axis(&self) -> AxisKind {
        match self.setup {
            TraceSetup::Exposure { .. } => AxisKind::ExposureTime,
            TraceSetup::GateSweep { .. } => AxisKind::GateVoltage,
        }
    }

    pub fn is_exposure(&self) -> bool {
        matches!(self.setup, TraceSetup::Exposure { .. })
    }

    pub fn exposure_config(&self) -> Option<&ExposureConfig> {
        match &self.setup {
            TraceSetup::Exposure { exposure, .. } => Some(exposure),
            TraceSetup::GateSweep { .. } => None,
        }
    }

    pub fn axis_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.axis).collect()
    }

    pub fn conductances(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.conductance).collect()
    }

    pub fn initial_gate_shift(&self) -> f64 {
        match self.setup {
            TraceSetup::Exposure {
                initial_gate_shift, ..
            } => initial_gate_shift,
            TraceSetup::GateSweep { .. } => 0.0,
        }
    }

    /// Gate shift in effect at time `t` (events at `t` included).
    pub fn gate_shift_at(&self, t: f64) -> f64 {
        let n = self.truth_events.partition_point(|e| e.time <= t);
        if n == 0 {
            self.initial_gate_shift()
        } else {
            self.truth_events[n - 1].gate_shift
        }
    }

    /// The signal before noise and fluctuators, rebuilt from the device and
    /// the event log (exposures) or the sweep grid (gate sweeps).
    pub fn noiseless_conductance(&self) -> Result<Vec<f64>> {
        let model = ChannelModel::new(&self.device)?;
        match &self.setup {
            TraceSetup::Exposure { exposure, .. } => {
                let mut out = Vec::with_capacity(self.samples.len());
                let mut cached: Option<(f64, f64)> = None;
                for s in &self.samples {
                    let shift = self.gate_shift_at(s.axis);
                    let g = match cached {
                        Some((sh, g)) if sh.to_bits() == shift.to_bits() => g,
                        _ => {
                            let g = model.conductance(exposure.gate_bias + shift);
                            cached = Some((shift, g));
                            g
                        }
                    };
                    out.push(g);
                }
                Ok(out)
            }
            TraceSetup::GateSweep { .. } => Ok(self
                .samples
                .iter()
                .map(|s| model.conductance(s.axis))
                .collect()),
        }
    }

    fn header_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        match &self.setup {
            TraceSetup::Exposure {
                source,
                exposure,
                traps,
                trap_seed,
                initial_gate_shift,
                tally,
            } => {
                out.push(("kind".into(), "exposure".into()));
                self.device.write_kv("device.", &mut out);
                traps.write_kv("traps.", &mut out);
                out.push(("traps.seed".into(), trap_seed.render()));
                source.write_kv("source.", &mut out);
                exposure.write_kv("exposure.", &mut out);
                out.push(("initial_gate_shift".into(), initial_gate_shift.render()));
                out.push(("tally.incident".into(), tally.incident.render()));
                out.push(("tally.absorbed".into(), tally.absorbed.render()));
                out.push(("tally.captured".into(), tally.captured.render()));
            }
            TraceSetup::GateSweep {
                v_start,
                v_end,
                n_points,
                noise_sigma,
                seed,
            } => {
                out.push(("kind".into(), "gate_sweep".into()));
                self.device.write_kv("device.", &mut out);
                out.push(("sweep.v_start".into(), v_start.render()));
                out.push(("sweep.v_end".into(), v_end.render()));
                out.push(("sweep.n_points".into(), n_points.render()));
                out.push(("sweep.noise_sigma".into(), noise_sigma.render()));
                out.push(("sweep.seed".into(), seed.render()));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push('\n');
        for (k, v) in self.header_pairs() {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "{},conductance_G0", self.axis().column_name());
        for p in &self.samples {
            let _ = writeln!(s, "{},{}", p.axis, p.conductance);
        }
        if self.is_exposure() {
            s.push_str(EVENTS_MARKER);
            s.push('\n');
            s.push_str(EVENTS_COLUMNS);
            s.push('\n');
            for e in &self.truth_events {
                let _ = writeln!(s, "{},{}", e.time, e.coupling);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim_end() == MAGIC => {}
            _ => return Err(Error::parse(1, "missing trace header line")),
        }

        let mut header = KvMap::default();
        let columns = loop {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, "unexpected end of file in header"))?;
            match line.strip_prefix("# ") {
                Some(kv) => {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::parse(n, "expected `# key=value`"))?;
                    header.insert(n, k, v)?;
                }
                None => break (n, line.trim_end()),
            }
        };

        let kind: String = take_string(&mut header, "kind")?;
        let device = DeviceParams::read_kv("device.", &mut header)?;
        let setup = match kind.as_str() {
            "exposure" => TraceSetup::Exposure {
                traps: TrapConfig::read_kv("traps.", &mut header)?,
                trap_seed: header.take("traps.seed", 0u64)?,
                source: PhotonSource::read_kv("source.", &mut header)?,
                exposure: ExposureConfig::read_kv("exposure.", &mut header)?,
                initial_gate_shift: header.take("initial_gate_shift", 0.0)?,
                tally: PhotonTally {
                    incident: header.take("tally.incident", 0u64)?,
                    absorbed: header.take("tally.absorbed", 0u64)?,
                    captured: header.take("tally.captured", 0u64)?,
                },
            },
            "gate_sweep" => TraceSetup::GateSweep {
                v_start: header.take("sweep.v_start", f64::NAN)?,
                v_end: header.take("sweep.v_end", f64::NAN)?,
                n_points: header.take("sweep.n_points", 0usize)?,
                noise_sigma: header.take("sweep.noise_sigma", 0.0)?,
                seed: header.take("sweep.seed", 0u64)?,
            },
            other => return Err(Error::parse(0, format!("unknown trace kind {other:?}"))),
        };
        header.finish()?;

        let mut trace = Trace {
            device,
            setup,
            samples: Vec::new(),
            truth_events: Vec::new(),
        };
        let expected = format!("{},conductance_G0", trace.axis().column_name());
        if columns.1 != expected {
            return Err(Error::parse(
                columns.0,
                format!("expected column header {expected:?}"),
            ));
        }

        #[derive(PartialEq)]
        enum Section {
            Samples,
            EventsHeader,
            Events,
        }
        let mut section = Section::Samples;
        let initial = trace.initial_gate_shift();
        let mut couplings = Vec::new();
        for (n, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            match section {
                Section::Samples if line == EVENTS_MARKER => {
                    if !trace.is_exposure() {
                        return Err(Error::parse(n, "gate sweeps carry no events section"));
                    }
                    section = Section::EventsHeader;
                }
                Section::Samples => {
                    let [axis, conductance] = parse_row(n, line)?;
                    trace.samples.push(Sample { axis, conductance });
                }
                Section::EventsHeader if line == EVENTS_COLUMNS => section = Section::Events,
                Section::EventsHeader => {
                    return Err(Error::parse(n, format!("expected {EVENTS_COLUMNS:?}")));
                }
                Section::Events => {
                    let [time, coupling] = parse_row(n, line)?;
                    couplings.push(coupling);
                    trace.truth_events.push(TruthEvent {
                        time,
                        coupling,
                        gate_shift: cumulative_shift(initial, &couplings),
                    });
                }
            }
        }
        if trace.is_exposure() && section != Section::Events {
            return Err(Error::parse(0, "exposure trace lacks an events section"));
        }
        trace.check()?;
        Ok(trace)
    }

    /// Structural invariants: increasing sample axis, ordered events.
    pub fn check(&self) -> Result<()> {
        if self.samples.windows(2).any(|w| !(w[1].axis > w[0].axis)) {
            return Err(Error::domain(
                "trace sample axis must be strictly increasing",
            ));
        }
        if self.truth_events.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::domain("truth events must be ordered in time"));
        }
        let expected = match &self.setup {
            TraceSetup::Exposure { exposure, .. } => exposure.sample_times().len(),
            TraceSetup::GateSweep { n_points, .. } => *n_points,
        };
        if self.samples.len() != expected {
            return Err(Error::domain(format!(
                "trace holds {} samples, its setup implies {expected}",
                self.samples.len()
            )));
        }
        let mut previous = self.initial_gate_shift();
        for e in &self.truth_events {
            if !(e.gate_shift >= previous) {
                return Err(Error::domain("gate shift must not decrease"));
            }
            previous = e.gate_shift;
        }
        if let Some(cfg) = self.exposure_config() {
            if self
                .truth_events
                .iter()
                .any(|e| e.time < 0.0 || e.time > cfg.duration || !(e.coupling > 0.0))
            {
                return Err(Error::domain(
                    "truth events must lie in [0, duration] with positive coupling",
                ));
            }
        }
        Ok(())
    }
}

/// Gate shift after capturing `couplings` on top of `initial`. The sum is
/// taken in canonical order so writer and reader agree to the last bit.
pub(crate) fn cumulative_shift(initial: f64, couplings: &[f64]) -> f64 {
    initial + canonical_sum(couplings.to_vec())
}

fn take_string(map: &mut KvMap, key: &str) -> Result<String> {
    struct Raw(String);
    impl KvValue for Raw {
        fn render(&self) -> String {
            self.0.clone()
        }
        fn parse_value(text: &str) -> Option<Self> {
            Some(Raw(text.to_string()))
        }
    }
    Ok(map.take(key, Raw(String::new()))?.0)
}

fn parse_row<const N: usize>(n: usize, line: &str) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let mut fields = line.split(',');
    for slot in out.iter_mut() {
        let field = fields
            .next()
            .ok_or_else(|| Error::parse(n, format!("expected {N} comma-separated values")))?;
        *slot = field
            .trim()
            .parse()
            .map_err(|_| Error::parse(n, format!("bad number {field:?}")))?;
    }
    if fields.next().is_some() {
        return Err(Error::parse(
            n,
            format!("expected {N} comma-separated values"),
        ));
    }
    Ok(out)
}
