//! Landauer conductance of a saddle-point constriction.
//!
//! Each transverse subband `n` contributes a transmission
//!
//! ```text
//! T_n(E) = 1 / (1 + exp(-2π (E - ε_n) / ħω_x))
//! ε_n(V) = E_F + ħω_y (n + 1/2) - α (V - V_th)
//! ```
//!
//! so that the bottom of the lowest subband (`ε_0 - ħω_y/2`) meets the Fermi
//! energy at the threshold voltage `V_th`. The linear-response conductance in
//! units of `2e²/h` is the thermal average `Σ_n ∫ T_n(E) (-∂f/∂E) dE`, taken
//! with composite Gauss-Legendre quadrature over `E_F ± 10 k_BT`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Boltzmann constant in meV/K.
pub const BOLTZMANN_MEV_PER_K: f64 = 8.617_333_262e-2;
/// `2e²/h` in siemens.
pub const CONDUCTANCE_QUANTUM_SIEMENS: f64 = 7.748_091_729_863_649e-5;
/// Elementary charge in coulombs.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Half-width of the thermal integration window in units of `k_BT`.
const WINDOW_KT: f64 = 10.0;
/// Upper bound on thermal quadrature panels.
const MAX_PANELS: usize = 1 << 16;
/// Bisection stops once the bracket is this narrow (V).
const INVERSION_TOLERANCE_V: f64 = 1e-13;

/// Transport-model constants. Energies in meV, voltages in volts.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub fermi_energy: f64,
    /// Kelvin.
    pub temperature: f64,
    /// Transverse subband spacing `ħω_y`.
    pub mode_spacing: f64,
    /// Longitudinal saddle curvature `ħω_x`; sets the intrinsic step width.
    pub tunnel_width: f64,
    /// meV of subband shift per volt of gate.
    pub lever_arm: f64,
    pub threshold_voltage: f64,
    pub num_modes: usize,
    pub anomaly_enabled: bool,
    pub anomaly_weight: f64,
    pub anomaly_split: f64,
    /// mV. Recorded only; transport is evaluated in linear response.
    pub source_drain_bias: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            fermi_energy: 1.8,
            temperature: 4.2,
            mode_spacing: 7.0,
            tunnel_width: 0.5,
            lever_arm: 80.0,
            threshold_voltage: -1.5,
            num_modes: 5,
            anomaly_enabled: false,
            anomaly_weight: 0.7,
            anomaly_split: 2.0,
            source_drain_bias: 0.5,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("temperature", self.temperature),
            ("mode_spacing", self.mode_spacing),
            ("tunnel_width", self.tunnel_width),
            ("lever_arm", self.lever_arm),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!(
                    "device.{name} must be > 0, got {value}"
                )));
            }
        }
        if !self.fermi_energy.is_finite() || !self.threshold_voltage.is_finite() {
            return Err(Error::domain("device energies and voltages must be finite"));
        }
        if self.num_modes == 0 {
            return Err(Error::domain("device.num_modes must be >= 1"));
        }
        if self.anomaly_enabled {
            if !(self.anomaly_weight > 0.0 && self.anomaly_weight < 1.0) {
                return Err(Error::domain(format!(
                    "device.anomaly_weight must lie in (0, 1), got {}",
                    self.anomaly_weight
                )));
            }
            if !self.anomaly_split.is_finite() {
                return Err(Error::domain("device.anomaly_split must be finite"));
            }
        }
        Ok(())
    }

    /// `k_BT` in meV.
    pub fn thermal_energy(&self) -> f64 {
        BOLTZMANN_MEV_PER_K * self.temperature
    }

    /// Saddle-point energy `ε_n` of subband `mode_index` at the given gate voltage.
    pub fn saddle_energy(&self, mode_index: usize, gate_voltage: f64) -> f64 {
        self.fermi_energy + self.mode_spacing * (mode_index as f64 + 0.5)
            - self.lever_arm * (gate_voltage - self.threshold_voltage)
    }

    /// Gate voltage beyond which every subband is open to within the
    /// thermal window. Used to bracket inversions.
    pub(crate) fn open_voltage(&self) -> f64 {
        let top = self.mode_spacing * self.num_modes as f64
            + self.anomaly_split.abs()
            + 40.0 * self.thermal_energy()
            + 40.0 * self.tunnel_width;
        self.threshold_voltage + top / self.lever_arm
    }

    /// Gate voltage below which every subband is closed.
    pub(crate) fn pinch_voltage(&self) -> f64 {
        let margin = 40.0 * self.thermal_energy() + 40.0 * self.tunnel_width;
        self.threshold_voltage - margin / self.lever_arm
    }
}

/// Numerically stable logistic `1 / (1 + e^-x)`.
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn saddle_transmission(energy: f64, saddle: f64, tunnel_width: f64) -> f64 {
    logistic(2.0 * std::f64::consts::PI * (energy - saddle) / tunnel_width)
}

/// Transmission probability of one subband at `energy` (meV).
pub fn mode_transmission(
    energy: f64,
    gate_voltage: f64,
    mode_index: usize,
    params: &DeviceParams,
) -> Result<f64> {
    if mode_index >= params.num_modes {
        return Err(Error::domain(format!(
            "mode index {mode_index} out of range for {} modes",
            params.num_modes
        )));
    }
    let saddle = params.saddle_energy(mode_index, gate_voltage);
    Ok(saddle_transmission(energy, saddle, params.tunnel_width))
}

/// Total transmission `Σ_n T_n(E)` at zero temperature, including the
/// two-component split of mode 0 when the 0.7 anomaly is enabled.
pub fn channel_transmission(energy: f64, gate_voltage: f64, params: &DeviceParams) -> f64 {
    (0..params.num_modes)
        .map(|n| mode_transmission_internal(energy, gate_voltage, n, params).0)
        .sum()
}

/// Returns `(T, dT/dV)` for one mode, with the anomaly applied to mode 0.
fn mode_transmission_internal(
    energy: f64,
    gate_voltage: f64,
    n: usize,
    params: &DeviceParams,
) -> (f64, f64) {
    let saddle = params.saddle_energy(n, gate_voltage);
    // dT/dV = T (1 - T) * 2π α / ħω_x
    let slope = 2.0 * std::f64::consts::PI * params.lever_arm / params.tunnel_width;
    let single = |eps: f64| {
        let t = saddle_transmission(energy, eps, params.tunnel_width);
        (t, t * (1.0 - t) * slope)
    };
    if n == 0 && params.anomaly_enabled {
        let w = params.anomaly_weight;
        let (t_a, d_a) = single(saddle);
        let (t_b, d_b) = single(saddle + params.anomaly_split);
        (w * t_a + (1.0 - w) * t_b, w * d_a + (1.0 - w) * d_b)
    } else {
        single(saddle)
    }
}

/// Composite Gauss-Legendre rule used for the thermal average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThermalQuadrature {
    pub panels: usize,
    pub order: usize,
}

impl Default for ThermalQuadrature {
    fn default() -> Self {
        Self {
            panels: 48,
            order: 16,
        }
    }
}

impl ThermalQuadrature {
    /// The default rule, with panels added when the transmission edge
    /// (width `ħω_x / 2π`) is narrow next to the thermal window. Panels are
    /// kept no wider than two edge widths, up to `MAX_PANELS`.
    pub fn for_device(params: &DeviceParams) -> Self {
        let base = Self::default();
        let edge = params.tunnel_width / (2.0 * std::f64::consts::PI);
        let needed = (2.0 * WINDOW_KT * params.thermal_energy() / (2.0 * edge)).ceil();
        let panels = if needed.is_finite() {
            (needed as usize).clamp(base.panels, MAX_PANELS)
        } else {
            MAX_PANELS
        };
        Self { panels, ..base }
    }

    pub fn doubled(self) -> Self {
        Self {
            panels: self.panels * 2,
            order: self.order,
        }
    }

    pub fn node_count(&self) -> usize {
        self.panels * self.order
    }
}

/// A device with its thermal quadrature precomputed.
///
/// Energies and weights of the thermal kernel `-∂f/∂E` depend only on the
/// device, so sweeps and inversions reuse them.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    params: DeviceParams,
    energies: Vec<f64>,
    weights: Vec<f64>,
    peak: OnceLock<f64>,
}

impl ChannelModel {
    pub fn new(params: &DeviceParams) -> Result<Self> {
        Self::with_quadrature(params, ThermalQuadrature::for_device(params))
    }

    pub fn with_quadrature(params: &DeviceParams, quadrature: ThermalQuadrature) -> Result<Self> {
        params.validate()?;
        let order = NonZeroUsize::new(quadrature.order)
            .ok_or_else(|| Error::domain("quadrature order must be >= 1"))?;
        if quadrature.panels == 0 {
            return Err(Error::domain("quadrature panel count must be >= 1"));
        }
        let rule = GaussLegendre::new(order);
        let kt = params.thermal_energy();
        let lo = -WINDOW_KT * kt;
        let width = 2.0 * WINDOW_KT * kt / quadrature.panels as f64;

        let mut energies = Vec::with_capacity(quadrature.node_count());
        let mut weights = Vec::with_capacity(quadrature.node_count());
        for p in 0..quadrature.panels {
            let centre = lo + width * (p as f64 + 0.5);
            for &(node, weight) in rule.as_node_weight_pairs() {
                let offset = centre + 0.5 * width * node;
                // -∂f/∂E = 1 / (4 kT cosh²(x / 2kT))
                let c = (0.5 * offset / kt).cosh();
                energies.push(params.fermi_energy + offset);
                weights.push(0.5 * width * weight / (4.0 * kt * c * c));
            }
        }
        // Normalise to the kernel mass inside the window (tanh 5 ≈ 0.99991)
        // so open modes count exactly one quantum.
        let mass: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= mass);

        Ok(Self {
            params: params.clone(),
            energies,
            weights,
            peak: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    /// Conductance in units of `2e²/h` at the given gate voltage.
    pub fn conductance(&self, gate_voltage: f64) -> f64 {
        let mut total = 0.0;
        for n in 0..self.params.num_modes {
            let mut mode = 0.0;
            for (&e, &w) in self.energies.iter().zip(&self.weights) {
                mode += w * mode_transmission_internal(e, gate_voltage, n, &self.params).0;
            }
            total += mode;
        }
        total.clamp(0.0, self.params.num_modes as f64)
    }

    /// Analytic transconductance `dG/dV_g` in `(2e²/h)/V`.
    pub fn transconductance(&self, gate_voltage: f64) -> f64 {
        let mut total = 0.0;
        for n in 0..self.params.num_modes {
            for (&e, &w) in self.energies.iter().zip(&self.weights) {
                total += w * mode_transmission_internal(e, gate_voltage, n, &self.params).1;
            }
        }
        total
    }

    /// Conductance and transconductance in one pass over the nodes.
    fn conductance_and_slope(&self, gate_voltage: f64) -> (f64, f64) {
        let mut g = 0.0;
        let mut slope = 0.0;
        for n in 0..self.params.num_modes {
            for (&e, &w) in self.energies.iter().zip(&self.weights) {
                let (t, dt) = mode_transmission_internal(e, gate_voltage, n, &self.params);
                g += w * t;
                slope += w * dt;
            }
        }
        (g.clamp(0.0, self.params.num_modes as f64), slope)
    }

    /// Inverts the (monotone) conductance curve by Newton steps, falling back
    /// to bisection whenever a step would leave the bracket. Levels outside
    /// the attainable range are clamped to the nearest end of the bracket.
    pub fn gate_for_conductance(&self, level: f64) -> f64 {
        let mut lo = self.params.pinch_voltage();
        let mut hi = self.params.open_voltage();
        if level <= self.conductance(lo) {
            return lo;
        }
        if level >= self.conductance(hi) {
            return hi;
        }
        let mut v = 0.5 * (lo + hi);
        let mut dx = hi - lo;
        let mut dx_old = dx;
        let (mut g, mut slope) = self.conductance_and_slope(v);
        for _ in 0..200 {
            let f = g - level;
            let newton_leaves = ((v - hi) * slope - f) * ((v - lo) * slope - f) > 0.0;
            let newton_slow = (2.0 * f).abs() > (dx_old * slope).abs();
            dx_old = dx;
            if newton_leaves || newton_slow {
                dx = 0.5 * (hi - lo);
                v = lo + dx;
            } else {
                dx = f / slope;
                v -= dx;
            }
            if dx.abs() < INVERSION_TOLERANCE_V {
                break;
            }
            (g, slope) = self.conductance_and_slope(v);
            if g < level {
                lo = v;
            } else {
                hi = v;
            }
        }
        v
    }

    /// Largest transconductance across the active range: a grid scan, then
    /// golden-section refinement around the best grid point. Cached.
    pub fn peak_transconductance(&self) -> f64 {
        *self.peak.get_or_init(|| {
            let lo = self.params.pinch_voltage();
            let hi = self.params.open_voltage();
            let n: usize = 400;
            let h = (hi - lo) / n as f64;
            let (best, g_best) = (0..=n)
                .map(|i| (i, self.transconductance(lo + h * i as f64)))
                .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
            let (mut a, mut b) = (
                lo + h * best.saturating_sub(1) as f64,
                lo + h * (best + 1).min(n) as f64,
            );
            let r = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let c = b - r * (b - a);
                let d = a + r * (b - a);
                if self.transconductance(c) > self.transconductance(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            g_best.max(self.transconductance(0.5 * (a + b)))
        })
    }
}

/// Conductance in units of `2e²/h`.
pub fn conductance(gate_voltage: f64, params: &DeviceParams) -> Result<f64> {
    Ok(ChannelModel::new(params)?.conductance(gate_voltage))
}

/// Converts a conductance in units of `2e²/h` to siemens.
pub fn to_siemens(conductance: f64) -> f64 {
    conductance * CONDUCTANCE_QUANTUM_SIEMENS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisKind {
    GateVoltage,
    ExposureTime,
}

impl AxisKind {
    pub fn column_name(self) -> &'static str {
        match self {
            AxisKind::GateVoltage => "gate_V",
            AxisKind::ExposureTime => "time_s",
        }
    }
}

/// An ordered curve of (axis value, conductance) points.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceCurve {
    axis: AxisKind,
    points: Vec<(f64, f64)>,
}

impl ConductanceCurve {
    pub fn new(axis: AxisKind, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::domain(
                "curve axis values must be strictly increasing",
            ));
        }
        Ok(Self { axis, points })
    }

    pub fn axis(&self) -> AxisKind {
        self.axis
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn axis_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }
}

/// Uniform gate-voltage grid from `v_start` to `v_end` inclusive.
pub(crate) fn gate_grid(v_start: f64, v_end: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(v_start.is_finite() && v_end.is_finite()) || v_start >= v_end {
        return Err(Error::domain(format!(
            "sweep range must satisfy v_start < v_end, got [{v_start}, {v_end}]"
        )));
    }
    if n_points < 2 {
        return Err(Error::domain("sweep needs at least 2 points"));
    }
    let step = (v_end - v_start) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            if i == n_points - 1 {
                v_end
            } else {
                v_start + step * i as f64
            }
        })
        .collect())
}

/// Conductance sampled on a uniform gate-voltage grid.
pub fn sweep(
    v_start: f64,
    v_end: f64,
    n_points: usize,
    params: &DeviceParams,
) -> Result<ConductanceCurve> {
    let grid = gate_grid(v_start, v_end, n_points)?;
    let model = ChannelModel::new(params)?;
    let points = grid
        .into_iter()
        .map(|v| (v, model.conductance(v)))
        .collect();
    ConductanceCurve::new(AxisKind::GateVoltage, points)
}

/// `dG/dV_g` by central differences, one-sided at the ends.
pub fn differential_conductance(curve: &ConductanceCurve) -> Result<ConductanceCurve> {
    if curve.axis() != AxisKind::GateVoltage {
        return Err(Error::domain(
            "differential conductance needs a gate-voltage axis",
        ));
    }
    let p = curve.points();
    if p.len() < 3 {
        return Err(Error::domain(
            "differential conductance needs at least 3 points",
        ));
    }
    let last = p.len() - 1;
    let slope = |a: usize, b: usize| (p[b].1 - p[a].1) / (p[b].0 - p[a].0);
    let points = (0..p.len())
        .map(|i| {
            let d = match i {
                0 => slope(0, 1),
                i if i == last => slope(last - 1, last),
                i => slope(i - 1, i + 1),
            };
            (p[i].0, d)
        })
        .collect();
    ConductanceCurve::new(AxisKind::GateVoltage, points)
}
