use proptest::prelude::*;
use qpc_detector::analyze::{
    analyze_trace, detect_steps, detect_steps_in, estimate_noise, fit_exponential,
    intervals_between, score_detections,
};
use qpc_detector::cli::run_exposure;
use qpc_detector::config::RunConfig;
use qpc_detector::seed::stream;
use qpc_detector::simulate::poisson_event_times;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Piecewise-constant staircase with Gaussian noise. Returns the axis,
/// values and the index of the first sample after each step.
fn staircase(
    heights: &[f64],
    gaps: &[usize],
    sigma: f64,
    seed: u64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let lead = 40;
    let mut edges = Vec::new();
    let mut at = lead;
    for g in gaps {
        edges.push(at);
        at += g;
    }
    let n = at + lead;
    let mut rng = stream(seed, "staircase");
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut level = 0.0;
    let mut k = 0;
    let values = (0..n)
        .map(|i| {
            while k < edges.len() && edges[k] == i {
                level += heights[k];
                k += 1;
            }
            level + noise.sample(&mut rng)
        })
        .collect();
    let axis = (0..n).map(|i| i as f64).collect();
    (axis, values, edges.iter().map(|&e| e as f64).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn detector_finds_clear_steps(
        seed in any::<u64>(),
        window in 6usize..12,
        steps in prop::collection::vec((5.0..12.0f64, 2.0..6.0f64), 5..30),
    ) {
        let sigma = 0.01;
        let heights: Vec<f64> = steps.iter().map(|s| s.0 * sigma).collect();
        let gaps: Vec<usize> = steps.iter().map(|s| (s.1 * window as f64).ceil() as usize).collect();
        let (axis, values, truth) = staircase(&heights, &gaps, sigma, seed);
        let steps = detect_steps_in(&axis, &values, window, 5.0).unwrap();
        let score = score_detections(&steps, &truth, window as f64 / 2.0);
        prop_assert!(score.recall() >= 0.95, "recall {}", score.recall());
        prop_assert!(score.precision() >= 0.95, "precision {}", score.precision());
    }

    #[test]
    fn steps_are_upward_and_ordered(seed in any::<u64>(), window in 2usize..10) {
        let mut rng = stream(seed, "walk");
        let values: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).scan(0.0, |acc, x| {
            *acc += if x < 0.01 { 0.5 } else if x > 0.99 { -0.5 } else { 0.0 };
            Some(*acc + 0.01 * (x - 0.5))
        }).collect();
        let axis: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        let steps = detect_steps_in(&axis, &values, window, 5.0).unwrap();
        prop_assert!(steps.iter().all(|s| s.height > 0.0));
        prop_assert!(steps.windows(2).all(|w| w[1].time > w[0].time));
    }
}

#[test]
fn dark_noise_rarely_triggers() {
    let mut false_positives = 0;
    for seed in 0..20 {
        let values: Vec<f64> = {
            let mut rng = stream(seed, "dark");
            let noise = Normal::new(0.0, 0.005).unwrap();
            (0..10_000).map(|_| noise.sample(&mut rng)).collect()
        };
        let axis: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        false_positives += detect_steps_in(&axis, &values, 3, 5.0).unwrap().len();
    }
    assert!(
        false_positives <= 20,
        "{false_positives} false positives in 2e5 samples"
    );
}

#[test]
fn exponential_fit_is_unbiased() {
    let rate = 0.25;
    let n = 1000;
    for rep in 0..100 {
        let times = poisson_event_times(rate, n + 1, &mut stream(rep, "mle")).unwrap();
        let fit = fit_exponential(&intervals_between(&times)).unwrap();
        let se = rate / (n as f64).sqrt();
        assert!(
            (fit.rate - rate).abs() < 3.0 * se,
            "rep {rep}: rate {}",
            fit.rate
        );
    }
}

#[test]
fn detected_heights_add_up_to_the_rise() {
    for seed in 1..5 {
        let mut config = RunConfig::default();
        config.set_seed(seed);
        let trace = run_exposure(&config).unwrap();
        let report = analyze_trace(&trace, &config.detector).unwrap();
        let detected: f64 = report.steps.iter().map(|s| s.height).sum();

        let clean = trace.noiseless_conductance().unwrap();
        let axis = trace.axis_values();
        let reach = config.detector.window as f64 * config.exposure.sample_interval;
        // Each detected step accounts for the nearest clean jump only;
        // jumps merged into a neighbour count as missed.
        let jumps: Vec<usize> = (1..clean.len())
            .filter(|&i| clean[i] > clean[i - 1])
            .collect();
        let mut claimed = vec![false; jumps.len()];
        for s in &report.steps {
            let nearest = (0..jumps.len())
                .filter(|&j| (axis[jumps[j]] - s.time).abs() <= reach)
                .min_by(|&a, &b| {
                    (axis[jumps[a]] - s.time)
                        .abs()
                        .total_cmp(&(axis[jumps[b]] - s.time).abs())
                });
            if let Some(j) = nearest {
                claimed[j] = true;
            }
        }
        let missed: f64 = jumps
            .iter()
            .zip(&claimed)
            .filter(|(_, &c)| !c)
            .map(|(&i, _)| clean[i] - clean[i - 1])
            .sum();

        let sigma = estimate_noise(&trace.conductances());
        let noise =
            3.0 * sigma * (report.steps.len() as f64 * 2.0 / config.detector.window as f64).sqrt();
        let rise = report.saturation.total_rise;
        assert!(detected <= rise + noise, "seed {seed}: {detected} > {rise}");
        assert!(
            rise - detected <= missed + noise,
            "seed {seed}: gap {} vs missed {missed}",
            rise - detected
        );
    }
}

#[test]
fn fluctuator_never_yields_downward_steps() {
    for seed in 1..4 {
        let mut config = RunConfig::default();
        config.set_seed(seed);
        config.exposure.rts_amplitude = 0.003;
        config.exposure.rts_switch_rate = 0.2;
        let trace = run_exposure(&config).unwrap();
        let steps =
            detect_steps(&trace, config.detector.window, config.detector.threshold).unwrap();
        assert!(!steps.is_empty());
        assert!(steps.iter().all(|s| s.height > 0.0));
    }
}
