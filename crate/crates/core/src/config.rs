//! Flat `key=value` configuration text with dotted section prefixes.
//!
//! ```text
//! # comment
//! seed=7
//! device.temperature=4.2
//! source.wavelength=550
//! exposure.duration=6000
//! ```
//!
//! Missing keys take their defaults; unknown keys are an error. Floats are
//! written with Rust's shortest round-trip formatting, so `parse(render(c))`
//! reproduces `c` bit for bit.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::analyze::DetectorConfig;
use crate::charge::{CouplingDistribution, PhotonSource, TrapConfig};
use crate::error::{Error, Result};
use crate::seed;
use crate::simulate::ExposureConfig;
use crate::transport::DeviceParams;

/// A scalar that can live on the right-hand side of `key=value`.
pub trait KvValue: Sized {
    fn render(&self) -> String;
    fn parse_value(text: &str) -> Option<Self>;
}

impl KvValue for f64 {
    fn render(&self) -> String {
        format!("{self}")
    }
    fn parse_value(text: &str) -> Option<Self> {
        text.parse().ok()
    }
}

impl KvValue for usize {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_value(text: &str) -> Option<Self> {
        text.parse().ok()
    }
}

impl KvValue for u64 {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_value(text: &str) -> Option<Self> {
        text.parse().ok()
    }
}

impl KvValue for bool {
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse_value(text: &str) -> Option<Self> {
        text.parse().ok()
    }
}

/// `auto` stands for `None`.
impl KvValue for Option<f64> {
    fn render(&self) -> String {
        match self {
            Some(v) => v.render(),
            None => "auto".to_string(),
        }
    }
    fn parse_value(text: &str) -> Option<Self> {
        if text == "auto" {
            Some(None)
        } else {
            f64::parse_value(text).map(Some)
        }
    }
}

impl KvValue for CouplingDistribution {
    fn render(&self) -> String {
        self.name().to_string()
    }
    fn parse_value(text: &str) -> Option<Self> {
        CouplingDistribution::from_name(text)
    }
}

impl KvValue for PathBuf {
    fn render(&self) -> String {
        self.display().to_string()
    }
    fn parse_value(text: &str) -> Option<Self> {
        Some(PathBuf::from(text))
    }
}

/// Parsed `key=value` pairs, consumed key by key.
#[derive(Debug, Default, Clone)]
pub struct KvMap {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = KvMap::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key=value", i + 1)))?;
            map.insert(i + 1, key.trim(), value.trim())?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        if key.is_empty() {
            return Err(Error::config(format!("line {line}: empty key")));
        }
        if self
            .entries
            .insert(key.to_string(), (line, value.to_string()))
            .is_some()
        {
            return Err(Error::config(format!("line {line}: duplicate key {key}")));
        }
        Ok(())
    }

    /// Removes `key`, parsing it or falling back to `default` when absent.
    pub fn take<T: KvValue>(&mut self, key: &str, default: T) -> Result<T> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some((line, text)) => T::parse_value(&text).ok_or_else(|| {
                Error::config(format!("line {line}: bad value for {key}: {text:?}"))
            }),
        }
    }

    /// Removes and returns every key starting with `prefix`.
    pub fn drain_prefix(&mut self, prefix: &str) -> Vec<(String, String)> {
        let keys: Vec<String> = self
            .entries
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect();
        keys.into_iter()
            .map(|k| {
                let (_, v) = self.entries.remove(&k).expect("key listed above");
                (k, v)
            })
            .collect()
    }

    /// Fails on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::config(format!("line {line}: unknown key {key}"))),
        }
    }
}

/// A struct stored as a block of `prefix.field=value` lines.
pub trait KvSection: Sized {
    fn write_kv(&self, prefix: &str, out: &mut Vec<(String, String)>);
    fn read_kv(prefix: &str, map: &mut KvMap) -> Result<Self>;
}

macro_rules! kv_section {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl KvSection for $ty {
            fn write_kv(&self, prefix: &str, out: &mut Vec<(String, String)>) {
                $( out.push((format!("{prefix}{}", stringify!($field)), KvValue::render(&self.$field))); )*
            }

            fn read_kv(prefix: &str, map: &mut KvMap) -> Result<Self> {
                let d = <$ty>::default();
                Ok(Self {
                    $( $field: map.take(&format!("{prefix}{}", stringify!($field)), d.$field)?, )*
                })
            }
        }
    };
}

kv_section!(DeviceParams {
    fermi_energy,
    temperature,
    mode_spacing,
    tunnel_width,
    lever_arm,
    threshold_voltage,
    num_modes,
    anomaly_enabled,
    anomaly_weight,
    anomaly_split,
    source_drain_bias,
});

kv_section!(TrapConfig {
    carrier_density,
    active_area,
    channel_capacitance,
    saturation_gate_shift,
    coupling_distribution,
    coupling_mean,
    dx_fraction,
    buffer_trap_count,
    buffer_coupling_scale,
});

kv_section!(PhotonSource {
    wavelength,
    incident_rate,
    quantum_efficiency,
});

kv_section!(ExposureConfig {
    duration,
    sample_interval,
    dark_lead,
    gate_bias,
    noise_sigma,
    seed,
    include_buffer_traps,
    rts_amplitude,
    rts_switch_rate,
});

kv_section!(DetectorConfig {
    window,
    threshold,
    bin_width,
});

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub v_start: f64,
    pub v_end: f64,
    pub n_points: usize,
    pub noise_sigma: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            v_start: -1.5,
            v_end: -1.3,
            n_points: 401,
            noise_sigma: 0.0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        crate::transport::gate_grid(self.v_start, self.v_end, self.n_points)?;
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::domain("sweep.noise_sigma must be >= 0"));
        }
        Ok(())
    }
}

kv_section!(SweepConfig {
    v_start,
    v_end,
    n_points,
    noise_sigma,
});

/// Settings for the figure-data command.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureConfig {
    /// Photon-detection events drawn for the interval-statistics figure.
    pub interval_events: usize,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self {
            interval_events: 10_000,
        }
    }
}

kv_section!(FigureConfig { interval_events });

/// Everything a command needs. `exposure.seed` is not stored: it is always
/// `sub_seed(seed, "exposure")`, and the trap ensemble uses
/// `sub_seed(seed, "traps")`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub device: DeviceParams,
    pub traps: TrapConfig,
    pub source: PhotonSource,
    pub exposure: ExposureConfig,
    pub sweep: SweepConfig,
    pub detector: DetectorConfig,
    pub figures: FigureConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut config = Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            device: DeviceParams::default(),
            traps: TrapConfig::default(),
            source: PhotonSource::default(),
            exposure: ExposureConfig::default(),
            sweep: SweepConfig::default(),
            detector: DetectorConfig::default(),
            figures: FigureConfig::default(),
        };
        config.set_seed(config.seed);
        config
    }
}

impl RunConfig {
    /// Sets the master seed and every seed derived from it.
    pub fn set_seed(&mut self, master: u64) {
        self.seed = master;
        self.exposure.seed = seed::sub_seed(master, seed::TAG_EXPOSURE);
    }

    pub fn trap_seed(&self) -> u64 {
        seed::sub_seed(self.seed, seed::TAG_TRAPS)
    }

    pub fn sweep_seed(&self) -> u64 {
        seed::sub_seed(self.seed, seed::TAG_SWEEP)
    }

    pub fn validate(&self) -> Result<()> {
        self.device.validate()?;
        self.traps.validate()?;
        self.source.validate()?;
        self.exposure.validate()?;
        self.sweep.validate()?;
        self.detector.validate()?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = KvMap::parse(text)?;
        let d = RunConfig::default();
        if let Some((key, _)) = map.drain_prefix("exposure.seed").into_iter().next() {
            return Err(Error::config(format!(
                "{key} is derived from the master seed; set `seed` instead"
            )));
        }
        let mut config = RunConfig {
            seed: map.take("seed", d.seed)?,
            out_dir: map.take("out", d.out_dir)?,
            device: DeviceParams::read_kv("device.", &mut map)?,
            traps: TrapConfig::read_kv("traps.", &mut map)?,
            source: PhotonSource::read_kv("source.", &mut map)?,
            exposure: ExposureConfig::read_kv("exposure.", &mut map)?,
            sweep: SweepConfig::read_kv("sweep.", &mut map)?,
            detector: DetectorConfig::read_kv("detector.", &mut map)?,
            figures: FigureConfig::read_kv("figures.", &mut map)?,
        };
        map.finish()?;
        config.set_seed(config.seed);
        config
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        Ok(config)
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("seed".to_string(), self.seed.render()),
            ("out".to_string(), self.out_dir.render()),
        ];
        self.device.write_kv("device.", &mut out);
        self.traps.write_kv("traps.", &mut out);
        self.source.write_kv("source.", &mut out);
        let mut exposure = Vec::new();
        self.exposure.write_kv("exposure.", &mut exposure);
        out.extend(exposure.into_iter().filter(|(k, _)| k != "exposure.seed"));
        self.sweep.write_kv("sweep.", &mut out);
        self.detector.write_kv("detector.", &mut out);
        self.figures.write_kv("figures.", &mut out);
        out
    }

    pub fn render(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
