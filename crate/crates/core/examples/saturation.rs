//! Once every dopant trap holds a hole, more light changes nothing.

use qpc_detector::analyze::{analyze_trace, detect_steps, saturation_summary};
use qpc_detector::charge::build_ensemble;
use qpc_detector::config::RunConfig;
use qpc_detector::simulate::simulate_exposure;

fn main() -> qpc_detector::Result<()> {
    let config = RunConfig::default();
    let mut ensemble = build_ensemble(&config.traps, config.trap_seed())?;

    let first = simulate_exposure(
        &config.device,
        &mut ensemble,
        &config.source,
        &config.exposure,
    )?;
    let report = analyze_trace(&first, &config.detector)?;
    println!(
        "first exposure: {} steps, rise {:.3}, saturated {}",
        report.saturation.step_count,
        report.saturation.total_rise,
        report.saturation.saturation_detected
    );
    println!(
        "occupied {} of {} dopant traps",
        ensemble.occupied_count(),
        ensemble.dopant_count()
    );

    let mut again = config.exposure.clone();
    again.seed += 1;
    again.noise_sigma = 0.0;
    let second = simulate_exposure(&config.device, &mut ensemble, &config.source, &again)?;
    let g = second.conductances();
    let spread =
        g.iter().copied().fold(f64::MIN, f64::max) - g.iter().copied().fold(f64::MAX, f64::min);
    let steps = detect_steps(&second, config.detector.window, config.detector.threshold)?;
    let summary = saturation_summary(&steps, &second)?;
    println!(
        "second exposure: {} captures, conductance spread {spread:.1e}, saturated {}",
        second.truth_events.len(),
        summary.saturation_detected
    );
    Ok(())
}
