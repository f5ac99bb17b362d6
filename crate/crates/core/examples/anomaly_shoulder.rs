//! The 0.7 shoulder: with the anomaly enabled the first riser develops a
//! dip in dG/dV below the first plateau.

use qpc_detector::transport::{differential_conductance, sweep, DeviceParams};

fn main() -> qpc_detector::Result<()> {
    for anomaly_enabled in [false, true] {
        let device = DeviceParams {
            anomaly_enabled,
            ..DeviceParams::default()
        };
        let curve = sweep(-1.5, -1.3, 801, &device)?;
        let slope = differential_conductance(&curve)?;
        let g: Vec<f64> = curve.values().collect();
        let d: Vec<f64> = slope.values().collect();

        let minima: Vec<f64> = (1..d.len() - 1)
            .filter(|&i| d[i] < d[i - 1] && d[i] <= d[i + 1] && g[i] < 0.95)
            .map(|i| g[i])
            .collect();
        println!(
            "anomaly {anomaly_enabled:5}: dG/dV minima below the first plateau at G = {minima:.3?}"
        );
    }
    Ok(())
}
