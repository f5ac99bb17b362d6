#![allow(clippy::excessive_precision)]

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qpc_detector::transport::{
    channel_transmission, differential_conductance, sweep, ChannelModel, DeviceParams,
    ThermalQuadrature,
};

// Thermal average of the default device at 4.2 K, from adaptive
// 30-digit integration. `WINDOW` uses the model's own E_F ± 10 k_BT window
// with the kernel renormalised on it; `FULL` integrates over the whole line.
// Columns: gate (V), anomaly off, anomaly on.
const WINDOW: [(f64, f64, f64); 6] = [
    (-1.47, 0.048866505096452801, 0.034254926230011983),
    (-1.45, 0.79199592732348766, 0.55943653702950287),
    (-1.42, 0.99968642000389791, 0.97531465039257111),
    (-1.38, 1.0815528424466756, 1.0815528333228304),
    (-1.37, 1.4337892430674046, 1.4337892430670114),
    (-1.36, 1.867311132297807, 1.867311132297807),
];
const FULL: [(f64, f64, f64); 6] = [
    (-1.47, 0.04890746630158085, 0.034297210509421795),
    (-1.45, 0.79196943253466389, 0.55943115764201127),
    (-1.42, 0.99965406220196774, 0.9752845051520314),
    (-1.38, 1.0815907840935362, 1.0815868873626424),
    (-1.37, 1.4337952523042652, 1.4337948249886894),
    (-1.36, 1.8672778112719682, 1.8672777644131169),
];

fn models() -> (ChannelModel, ChannelModel) {
    let plain = ChannelModel::new(&DeviceParams::default()).unwrap();
    let shoulder = ChannelModel::new(&DeviceParams {
        anomaly_enabled: true,
        ..DeviceParams::default()
    })
    .unwrap();
    (plain, shoulder)
}

#[test]
fn matches_windowed_oracle() {
    let (plain, shoulder) = models();
    for (v, g, ga) in WINDOW {
        assert_abs_diff_eq!(plain.conductance(v), g, epsilon = 1e-9);
        assert_abs_diff_eq!(shoulder.conductance(v), ga, epsilon = 1e-9);
    }
}

#[test]
fn window_truncation_stays_below_kernel_tail_mass() {
    // Kernel mass outside ± 10 k_BT is 2 / (1 + e^10) ≈ 9.1e-5.
    let (plain, shoulder) = models();
    for (v, g, ga) in FULL {
        assert_abs_diff_eq!(plain.conductance(v), g, epsilon = 1e-4);
        assert_abs_diff_eq!(shoulder.conductance(v), ga, epsilon = 1e-4);
    }
}

fn params() -> impl Strategy<Value = DeviceParams> {
    (
        0.5..4.0f64,
        0.5..20.0f64,
        2.0..10.0f64,
        0.1..2.0f64,
        10.0..200.0f64,
        1usize..6,
        any::<bool>(),
        0.0..1.0f64,
        0.5..3.0f64,
    )
        .prop_map(
            |(
                fermi_energy,
                temperature,
                mode_spacing,
                tunnel_width,
                lever_arm,
                num_modes,
                anomaly_enabled,
                anomaly_weight,
                anomaly_split,
            )| DeviceParams {
                fermi_energy,
                temperature,
                mode_spacing,
                tunnel_width,
                lever_arm,
                num_modes,
                anomaly_enabled,
                anomaly_weight,
                anomaly_split,
                ..DeviceParams::default()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conductance_is_bounded_and_monotone(p in params()) {
        let model = ChannelModel::new(&p).unwrap();
        let top = p.threshold_voltage + (p.mode_spacing * p.num_modes as f64 + 10.0) / p.lever_arm;
        let mut last = f64::NEG_INFINITY;
        for i in 0..=600 {
            let v = p.threshold_voltage - 0.05 + (top - p.threshold_voltage + 0.05) * i as f64 / 600.0;
            let g = model.conductance(v);
            prop_assert!((0.0..=p.num_modes as f64).contains(&g), "G = {g} at {v}");
            prop_assert!(g >= last - 1e-12, "G fell from {last} to {g} at {v}");
            last = g;
        }
    }

    #[test]
    fn quadrature_doubling_is_converged(p in params(), t in 0.0..1.0f64) {
        let coarse = ChannelModel::new(&p).unwrap();
        let fine = ChannelModel::with_quadrature(&p, ThermalQuadrature::for_device(&p).doubled()).unwrap();
        let v = p.threshold_voltage - 0.02 + t * (p.mode_spacing * p.num_modes as f64 / p.lever_arm);
        prop_assert!((coarse.conductance(v) - fine.conductance(v)).abs() < 1e-8);
    }

    #[test]
    fn analytic_slope_matches_finite_difference(p in params(), t in 0.0..1.0f64) {
        let model = ChannelModel::new(&p).unwrap();
        let v = p.threshold_voltage - 0.02 + t * (p.mode_spacing * p.num_modes as f64 / p.lever_arm);
        let h = 1e-6;
        let fd = (model.conductance(v + h) - model.conductance(v - h)) / (2.0 * h);
        let exact = model.transconductance(v);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "fd {fd} vs {exact}");
    }
}

#[test]
fn near_zero_temperature_is_the_landauer_sum() {
    let p = DeviceParams {
        temperature: 0.001,
        ..DeviceParams::default()
    };
    let model = ChannelModel::new(&p).unwrap();
    for i in 0..100 {
        let v = -1.5 + 0.2 * i as f64 / 99.0;
        let exact = channel_transmission(p.fermi_energy, v, &p);
        assert_abs_diff_eq!(model.conductance(v), exact, epsilon = 1e-6);
    }
}

#[test]
fn sweep_derivative_is_a_central_difference() {
    let p = DeviceParams::default();
    let curve = sweep(-1.5, -1.3, 401, &p).unwrap();
    let slope = differential_conductance(&curve).unwrap();
    let pts = curve.points();
    for i in 1..pts.len() - 1 {
        let fd = (pts[i + 1].1 - pts[i - 1].1) / (pts[i + 1].0 - pts[i - 1].0);
        assert_abs_diff_eq!(slope.points()[i].1, fd, epsilon = 1e-6);
    }
}
