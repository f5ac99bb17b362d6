//! Photo-hole traps and their electrostatic effect on the channel.
//!
//! Dopant traps (DX⁻ centres and neutral donors in the doped AlGaAs layer)
//! each shift the effective gate voltage by a coupling drawn from a
//! configurable distribution when they capture a hole. Buffer micro-traps in
//! the GaAs buffer layer are far from the channel and couple weakly. Capture
//! is one-way: nothing recombines within a run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::transport::ELEMENTARY_CHARGE;

/// Longest wavelength (nm) absorbed in the doped AlGaAs layer.
pub const ALGAAS_EDGE_NM: f64 = 650.0;
/// GaAs band edge (nm); longer wavelengths pass through.
pub const GAAS_EDGE_NM: f64 = 870.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingDistribution {
    Exponential,
    Constant,
    /// Uniform on `(0, 2 * mean]`.
    Uniform,
}

impl CouplingDistribution {
    pub fn name(self) -> &'static str {
        match self {
            CouplingDistribution::Exponential => "exponential",
            CouplingDistribution::Constant => "constant",
            CouplingDistribution::Uniform => "uniform",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "exponential" => Some(CouplingDistribution::Exponential),
            "constant" => Some(CouplingDistribution::Constant),
            "uniform" => Some(CouplingDistribution::Uniform),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    /// cm⁻².
    pub carrier_density: f64,
    /// cm².
    pub active_area: f64,
    /// Farads.
    pub channel_capacitance: f64,
    /// Total gate shift (V) once every dopant trap holds a hole.
    pub saturation_gate_shift: f64,
    pub coupling_distribution: CouplingDistribution,
    /// Mean dopant coupling in volts; `None` means
    /// `saturation_gate_shift / dopant_trap_count`.
    pub coupling_mean: Option<f64>,
    /// Fraction of dopant traps that are DX⁻ centres; the rest are neutral donors.
    pub dx_fraction: f64,
    pub buffer_trap_count: usize,
    /// Buffer couplings are uniform on `(0, buffer_coupling_scale]`.
    pub buffer_coupling_scale: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self {
            carrier_density: 3.3e11,
            active_area: 3e-10,
            channel_capacitance: 1e-16,
            saturation_gate_shift: 0.2,
            coupling_distribution: CouplingDistribution::Exponential,
            coupling_mean: None,
            dx_fraction: 0.5,
            buffer_trap_count: 2000,
            buffer_coupling_scale: 1e-5,
        }
    }
}

impl TrapConfig {
    /// Number of dopant traps, `round(carrier_density * active_area)`.
    pub fn dopant_trap_count(&self) -> usize {
        let n = (self.carrier_density * self.active_area).round();
        if n.is_finite() && n > 0.0 {
            n as usize
        } else {
            0
        }
    }

    pub fn mean_coupling(&self) -> f64 {
        self.coupling_mean
            .unwrap_or(self.saturation_gate_shift / self.dopant_trap_count().max(1) as f64)
    }

    /// Gate-equivalent shift of one elementary charge on the channel
    /// capacitance, `e / C`.
    pub fn single_charge_shift(&self) -> f64 {
        ELEMENTARY_CHARGE / self.channel_capacitance
    }

    pub fn validate(&self) -> Result<()> {
        if self.dopant_trap_count() == 0 {
            return Err(Error::domain(
                "carrier_density * active_area rounds to zero dopant traps",
            ));
        }
        if !(self.channel_capacitance > 0.0) {
            return Err(Error::domain("traps.channel_capacitance must be > 0"));
        }
        if !(self.saturation_gate_shift > 0.0 && self.saturation_gate_shift.is_finite()) {
            return Err(Error::domain("traps.saturation_gate_shift must be > 0"));
        }
        let mean = self.mean_coupling();
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::domain(format!(
                "dopant coupling mean must be > 0, got {mean}"
            )));
        }
        if !(0.0..=1.0).contains(&self.dx_fraction) {
            return Err(Error::domain("traps.dx_fraction must lie in [0, 1]"));
        }
        if self.buffer_trap_count > 0 && !(self.buffer_coupling_scale > 0.0) {
            return Err(Error::domain("traps.buffer_coupling_scale must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrapKind {
    DxCenter,
    NeutralDonor,
    BufferMicro,
}

impl TrapKind {
    pub fn is_dopant(self) -> bool {
        matches!(self, TrapKind::DxCenter | TrapKind::NeutralDonor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trap {
    pub kind: TrapKind,
    /// Effective gate shift (V) when occupied by a hole.
    pub coupling: f64,
    pub occupied: bool,
}

/// Illumination of the active area.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonSource {
    /// nm.
    pub wavelength: f64,
    /// Photons per second on the active area.
    pub incident_rate: f64,
    pub quantum_efficiency: f64,
}

impl Default for PhotonSource {
    fn default() -> Self {
        Self {
            wavelength: 550.0,
            incident_rate: 0.1,
            quantum_efficiency: 0.3,
        }
    }
}

impl PhotonSource {
    pub fn validate(&self) -> Result<()> {
        absorption_target(self.wavelength)?;
        if !(self.incident_rate >= 0.0 && self.incident_rate.is_finite()) {
            return Err(Error::domain("source.incident_rate must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::domain(
                "source.quantum_efficiency must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Rate of detected photons, `incident_rate * quantum_efficiency`.
    pub fn detection_rate(&self) -> f64 {
        self.incident_rate * self.quantum_efficiency
    }
}

/// Layer in which a photon of a given wavelength is absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    AlGaAs,
    GaAsBuffer,
    None,
}

pub fn absorption_target(wavelength_nm: f64) -> Result<Layer> {
    if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
        return Err(Error::domain(format!(
            "wavelength must be > 0 nm, got {wavelength_nm}"
        )));
    }
    Ok(if wavelength_nm <= ALGAAS_EDGE_NM {
        Layer::AlGaAs
    } else if wavelength_nm <= GAAS_EDGE_NM {
        Layer::GaAsBuffer
    } else {
        Layer::None
    })
}

/// Which trap kinds may capture a hole generated in `layer`.
fn eligible(layer: Layer, kind: TrapKind, include_buffer: bool) -> bool {
    match layer {
        Layer::AlGaAs => kind.is_dopant() || (include_buffer && kind == TrapKind::BufferMicro),
        Layer::GaAsBuffer => kind == TrapKind::BufferMicro,
        Layer::None => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapEnsemble {
    pub traps: Vec<Trap>,
    pub rng_seed: u64,
    pub config: TrapConfig,
}

/// Builds the trap population. Dopant traps come first, then buffer traps.
pub fn build_ensemble(config: &TrapConfig, seed: u64) -> Result<TrapEnsemble> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = config.dopant_trap_count();
    let mean = config.mean_coupling();
    let exp = Exp::new(1.0 / mean).map_err(|e| Error::domain(e.to_string()))?;

    let mut traps = Vec::with_capacity(count + config.buffer_trap_count);
    for _ in 0..count {
        let kind = if rng.random::<f64>() < config.dx_fraction {
            TrapKind::DxCenter
        } else {
            TrapKind::NeutralDonor
        };
        let coupling = match config.coupling_distribution {
            CouplingDistribution::Constant => mean,
            CouplingDistribution::Exponential => loop {
                let c = exp.sample(&mut rng);
                if c > 0.0 {
                    break c;
                }
            },
            CouplingDistribution::Uniform => 2.0 * mean * (1.0 - rng.random::<f64>()),
        };
        traps.push(Trap {
            kind,
            coupling,
            occupied: false,
        });
    }
    for _ in 0..config.buffer_trap_count {
        traps.push(Trap {
            kind: TrapKind::BufferMicro,
            coupling: config.buffer_coupling_scale * (1.0 - rng.random::<f64>()),
            occupied: false,
        });
    }
    Ok(TrapEnsemble {
        traps,
        rng_seed: seed,
        config: config.clone(),
    })
}

/// Sum of couplings in ascending order, so the result depends only on the
/// multiset of values and not on the order they were gathered in.
pub(crate) fn canonical_sum(mut couplings: Vec<f64>) -> f64 {
    couplings.sort_by(f64::total_cmp);
    couplings.iter().sum()
}

impl TrapEnsemble {
    pub fn len(&self) -> usize {
        self.traps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traps.is_empty()
    }

    pub fn occupied_count(&self) -> usize {
        self.traps.iter().filter(|t| t.occupied).count()
    }

    pub fn dopant_count(&self) -> usize {
        self.traps.iter().filter(|t| t.kind.is_dopant()).count()
    }

    pub fn dopant_coupling_sum(&self) -> f64 {
        canonical_sum(
            self.traps
                .iter()
                .filter(|t| t.kind.is_dopant())
                .map(|t| t.coupling)
                .collect(),
        )
    }

    /// Total gate shift (V) from occupied traps.
    pub fn effective_gate_shift(&self) -> f64 {
        canonical_sum(
            self.traps
                .iter()
                .filter(|t| t.occupied)
                .map(|t| t.coupling)
                .collect(),
        )
    }

    /// Number of unoccupied traps a hole from `layer` could still land in.
    pub fn available(&self, layer: Layer, include_buffer: bool) -> usize {
        self.traps
            .iter()
            .filter(|t| !t.occupied && eligible(layer, t.kind, include_buffer))
            .count()
    }

    /// Captures a hole in a uniformly chosen free eligible trap and returns
    /// its index, or `None` once every eligible trap is full.
    pub fn capture_photon<R: Rng + ?Sized>(&mut self, layer: Layer, rng: &mut R) -> Option<usize> {
        self.capture_with(layer, false, rng)
    }

    /// Like [`capture_photon`](Self::capture_photon); with `include_buffer`
    /// an AlGaAs-absorbed hole may also land in a buffer micro-trap.
    pub fn capture_with<R: Rng + ?Sized>(
        &mut self,
        layer: Layer,
        include_buffer: bool,
        rng: &mut R,
    ) -> Option<usize> {
        let free: Vec<usize> = self
            .traps
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.occupied && eligible(layer, t.kind, include_buffer))
            .map(|(i, _)| i)
            .collect();
        if free.is_empty() {
            return None;
        }
        let index = free[rng.random_range(0..free.len())];
        self.traps[index].occupied = true;
        Some(index)
    }
}
