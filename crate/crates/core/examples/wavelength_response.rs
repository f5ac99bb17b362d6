//! Photo-response at three wavelengths: discrete steps when AlGaAs absorbs,
//! a smooth drift from buffer micro-traps, nothing below the GaAs gap.

use qpc_detector::analyze::detect_steps;
use qpc_detector::charge::{absorption_target, build_ensemble};
use qpc_detector::config::RunConfig;
use qpc_detector::simulate::simulate_exposure;

fn main() -> qpc_detector::Result<()> {
    for wavelength in [550.0, 700.0, 1000.0] {
        let mut config = RunConfig::default();
        config.source.wavelength = wavelength;
        config.exposure.duration = 1200.0;

        let mut ensemble = build_ensemble(&config.traps, config.trap_seed())?;
        let trace = simulate_exposure(
            &config.device,
            &mut ensemble,
            &config.source,
            &config.exposure,
        )?;
        let steps = detect_steps(&trace, config.detector.window, config.detector.threshold)?;
        let g = trace.conductances();
        let largest = trace
            .truth_events
            .iter()
            .map(|e| e.coupling)
            .fold(0.0, f64::max);

        println!(
            "{wavelength:6.0} nm  {:?}  captures {:5}  largest coupling {:.2e} V  rise {:+.4}  detected steps {}",
            absorption_target(wavelength)?,
            trace.truth_events.len(),
            largest,
            g[g.len() - 1] - g[0],
            steps.len()
        );
    }
    Ok(())
}
