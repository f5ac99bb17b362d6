//! Detector on a synthetic staircase, alone and with a two-sided telegraph
//! contaminant. Accepted steps are always upward; telegraph switching that
//! lands near a photon step costs recall.

use qpc_detector::analyze::{detect_steps_in, estimate_noise, score_detections};
use qpc_detector::seed::stream;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn main() -> qpc_detector::Result<()> {
    let sigma = 0.002;
    let truth: Vec<f64> = (1..=20).map(|k| 100.0 * k as f64).collect();
    let axis: Vec<f64> = (0..2200).map(f64::from).collect();

    for amplitude in [0.0, 0.01] {
        let mut rng = stream(7, "example");
        let noise = Normal::new(0.0, sigma).expect("valid sigma");
        let mut telegraph = 0.0;
        let values: Vec<f64> = axis
            .iter()
            .map(|&t| {
                if rng.random::<f64>() < 0.2 {
                    telegraph = amplitude - telegraph;
                }
                let level = truth.iter().filter(|&&s| s <= t).count() as f64 * 0.015;
                level + telegraph + noise.sample(&mut rng)
            })
            .collect();

        let steps = detect_steps_in(&axis, &values, 5, 5.0)?;
        let score = score_detections(&steps, &truth, 5.0);
        println!(
            "telegraph amplitude {amplitude}: noise estimate {:.4} (white {sigma})",
            estimate_noise(&values)
        );
        for s in steps.iter().take(3) {
            println!(
                "  t = {:6.0}  height {:.4}  confidence {:.1}",
                s.time, s.height, s.confidence
            );
        }
        println!(
            "  {} accepted, precision {:.2}, recall {:.2}, all upward: {}",
            steps.len(),
            score.precision(),
            score.recall(),
            steps.iter().all(|s| s.height > 0.0)
        );
    }
    Ok(())
}
