//! Conductance against gate voltage over the default 0.2 V sweep, with the
//! plateau levels marked.

use qpc_detector::config::SweepConfig;
use qpc_detector::transport::{differential_conductance, sweep, DeviceParams};

fn main() -> qpc_detector::Result<()> {
    let device = DeviceParams::default();
    let s = SweepConfig::default();
    let curve = sweep(s.v_start, s.v_end, s.n_points, &device)?;
    let slope = differential_conductance(&curve)?;

    println!("gate_V    G (2e^2/h)   dG/dV");
    for ((v, g), (_, d)) in curve.points().iter().zip(slope.points()).step_by(20) {
        println!("{v:+.4}   {g:8.4}   {d:8.3}");
    }

    for level in [1.0, 2.0] {
        let flat = curve.values().filter(|g| (g - level).abs() <= 0.02).count();
        let span = flat as f64 / curve.len() as f64;
        println!(
            "plateau {level}: {:.0}% of the sweep within 0.02",
            100.0 * span
        );
    }
    Ok(())
}
