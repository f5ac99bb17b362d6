//! Step heights follow the transconductance at the operating point. With
//! equal couplings the relation is exact; with spread couplings the mean
//! implied coupling comes back out.

use qpc_detector::analyze::{correlate_heights, detect_steps};
use qpc_detector::charge::CouplingDistribution;
use qpc_detector::cli::run_exposure;
use qpc_detector::config::RunConfig;

fn main() -> qpc_detector::Result<()> {
    for (label, distribution, noise) in [
        ("constant, noiseless", CouplingDistribution::Constant, 0.0),
        (
            "exponential, default noise",
            CouplingDistribution::Exponential,
            5e-5,
        ),
    ] {
        let mut config = RunConfig::default();
        config.traps.coupling_distribution = distribution;
        config.exposure.noise_sigma = noise;

        let trace = run_exposure(&config)?;
        let steps = detect_steps(&trace, config.detector.window, config.detector.threshold)?;
        let c = correlate_heights(&steps, &trace, &config.device)?;
        println!(
            "{label}: {} steps, r = {:.4}, mean implied coupling {:.3} mV (configured {:.3} mV)",
            steps.len(),
            c.pearson_r.unwrap_or(f64::NAN),
            1e3 * c.mean_implied_coupling.unwrap_or(f64::NAN),
            1e3 * config.traps.mean_coupling()
        );
    }
    Ok(())
}
