//! Acceptance criteria 1 to 9. Runs as a plain binary so every criterion
//! prints exactly one PASS or FAIL line; exits non-zero if any fails.

use std::fs;
use std::time::Instant;

use qpc_detector::analyze::{
    analyze_trace, correlate_heights, detect_steps, detect_steps_in, score_detections,
    DetectionScore,
};
use qpc_detector::charge::{build_ensemble, CouplingDistribution};
use qpc_detector::cli::{self, run_exposure};
use qpc_detector::config::RunConfig;
use qpc_detector::seed::{stream, sub_seed};
use qpc_detector::simulate::simulate_exposure;
use qpc_detector::transport::{
    channel_transmission, differential_conductance, sweep, ChannelModel, ConductanceCurve,
    DeviceParams, ThermalQuadrature,
};
use qpc_detector::Result;
use rand::Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome>;

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// Longest contiguous gate span (V) over which `|G - level| <= tol`.
fn flat_span(curve: &ConductanceCurve, level: f64, tol: f64) -> f64 {
    let mut best = 0.0f64;
    let mut start: Option<f64> = None;
    for &(v, g) in curve.points() {
        if (g - level).abs() <= tol {
            let s = *start.get_or_insert(v);
            best = best.max(v - s);
        } else {
            start = None;
        }
    }
    best
}

fn plateaus() -> Result<Outcome> {
    let config = RunConfig::default();
    let s = &config.sweep;
    let clock = Instant::now();
    let curve = sweep(s.v_start, s.v_end, s.n_points, &config.device)?;
    let elapsed = clock.elapsed().as_secs_f64();
    let range = s.v_end - s.v_start;
    let one = flat_span(&curve, 1.0, 0.02) / range;
    let two = flat_span(&curve, 2.0, 0.02) / range;
    outcome(
        one >= 0.2 && two >= 0.2 && elapsed < 1.0,
        format!(
            "flat within 0.02 over {:.0}% (G=1) and {:.0}% (G=2) of the {range:.1} V sweep, {elapsed:.3} s",
            100.0 * one,
            100.0 * two
        ),
    )
}

fn shoulder() -> Result<Outcome> {
    let config = RunConfig::default();
    let device = DeviceParams {
        anomaly_enabled: true,
        ..config.device
    };
    let s = &config.sweep;
    let curve = sweep(s.v_start, s.v_end, s.n_points, &device)?;
    let slope = differential_conductance(&curve)?;
    let g: Vec<f64> = curve.values().collect();
    let d: Vec<f64> = slope.values().collect();
    let minima: Vec<f64> = (1..d.len() - 1)
        .filter(|&i| d[i] < d[i - 1] && d[i] <= d[i + 1])
        .map(|i| g[i])
        .filter(|g| (0.6..=0.8).contains(g))
        .collect();
    outcome(
        !minima.is_empty(),
        format!("dG/dV local minima with G in [0.6, 0.8]: {minima:.3?}"),
    )
}

fn equivalence() -> Result<Outcome> {
    let mut config = RunConfig::default();
    config.exposure.noise_sigma = 0.0;
    let fig = cli::figure_2a(&config)?;
    let photo = fig.photo.points();
    let top = photo.iter().map(|p| p.0).fold(config.sweep.v_end, f64::max);
    let gate_only = sweep(config.sweep.v_start, top, 2001, &config.device)?;
    let reference = gate_only.points();
    let interpolate = |v: f64| {
        let k = reference
            .partition_point(|p| p.0 < v)
            .clamp(1, reference.len() - 1);
        let (a, b) = (reference[k - 1], reference[k]);
        a.1 + (b.1 - a.1) * (v - a.0) / (b.0 - a.0)
    };
    let worst = photo
        .iter()
        .map(|&(v, g)| (g - interpolate(v)).abs())
        .fold(0.0, f64::max);

    let mut ensemble = build_ensemble(&config.traps, config.trap_seed())?;
    simulate_exposure(
        &config.device,
        &mut ensemble,
        &config.source,
        &config.exposure,
    )?;
    let saturated = ensemble.occupied_count() == ensemble.dopant_count();
    outcome(
        saturated && worst <= 0.05,
        format!(
            "{} remapped levels, worst deviation {worst:.2e} G0, ensemble saturated: {saturated}",
            photo.len()
        ),
    )
}

fn photon_statistics() -> Result<Outcome> {
    let mut config = RunConfig::default();
    config.source.incident_rate = 1.0 / 18.0 / config.source.quantum_efficiency;
    config.figures.interval_events = 10_000;
    let clock = Instant::now();
    let fig = cli::figure_3(&config)?;
    let elapsed = clock.elapsed().as_secs_f64();
    let f = &fig.fit;
    let relative = f.mean_interval / 18.0 - 1.0;
    outcome(
        relative.abs() <= 0.03 && f.passes_ks() && elapsed < 10.0,
        format!(
            "{} events, mean interval {:.3} s ({:+.2}%), KS {:.4} < {:.4}, {elapsed:.3} s",
            f.event_count,
            f.mean_interval,
            100.0 * relative,
            f.ks_statistic,
            f.ks_critical_5pct()
        ),
    )
}

fn saturation() -> Result<Outcome> {
    let config = RunConfig::default();
    let mut ensemble = build_ensemble(&config.traps, config.trap_seed())?;
    let trace = simulate_exposure(
        &config.device,
        &mut ensemble,
        &config.source,
        &config.exposure,
    )?;
    let report = analyze_trace(&trace, &config.detector)?;
    let sat = report.saturation;

    let last = trace
        .truth_events
        .last()
        .map_or(f64::NEG_INFINITY, |e| e.time);
    let clean = trace.noiseless_conductance()?;
    let after: Vec<f64> = trace
        .samples
        .iter()
        .zip(&clean)
        .filter(|(s, _)| s.axis >= last)
        .map(|(_, &g)| g)
        .collect();
    let tail_flat = after.iter().all(|&g| g == after[0]);

    let mut more = config.exposure.clone();
    more.seed = sub_seed(config.seed, "acceptance/more-light");
    more.noise_sigma = 0.0;
    let again = simulate_exposure(&config.device, &mut ensemble, &config.source, &more)?;
    let g = again.conductances();
    let further_flat = again.truth_events.is_empty() && g.iter().all(|&x| x == g[0]);

    outcome(
        sat.saturation_detected && (60..=100).contains(&sat.step_count) && tail_flat && further_flat,
        format!(
            "saturated: {}, {} detected steps, flat after last capture: {tail_flat}, second exposure flat: {further_flat}",
            sat.saturation_detected, sat.step_count
        ),
    )
}

fn height_correlation() -> Result<Outcome> {
    let mut constant = RunConfig::default();
    constant.traps.coupling_distribution = CouplingDistribution::Constant;
    constant.exposure.noise_sigma = 0.0;
    constant.exposure.sample_interval = 0.01;
    let trace = run_exposure(&constant)?;
    let steps = detect_steps(
        &trace,
        constant.detector.window,
        constant.detector.threshold,
    )?;
    let r = correlate_heights(&steps, &trace, &constant.device)?
        .pearson_r
        .unwrap_or(f64::NAN);

    let base = RunConfig::default();
    let configured = base.traps.mean_coupling();
    let runs = 64u64;
    let means: Vec<f64> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..runs)
            .map(|k| {
                let base = &base;
                scope.spawn(move || -> Result<Option<f64>> {
                    let mut c = base.clone();
                    c.set_seed(sub_seed(base.seed, &format!("acceptance/coupling/{k}")));
                    let trace = run_exposure(&c)?;
                    let report = analyze_trace(&trace, &c.detector)?;
                    Ok(report.correlation.and_then(|h| h.mean_implied_coupling))
                })
            })
            .collect();
        handles
            .into_iter()
            .filter_map(|h| h.join().expect("run finished").ok().flatten())
            .collect()
    });
    let pooled = means.iter().sum::<f64>() / means.len() as f64;
    let relative = pooled / configured - 1.0;
    outcome(
        r >= 0.999 && relative.abs() <= 0.15 && means.len() as u64 == runs,
        format!(
            "constant coupling r = {r:.5} over {} steps; mean implied coupling {:.3} mV vs configured {:.3} mV ({:+.1}%, {} runs)",
            steps.len(),
            1e3 * pooled,
            1e3 * configured,
            100.0 * relative,
            means.len()
        ),
    )
}

fn detector_quality() -> Result<Outcome> {
    let sigma = 0.005;
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let window = 8;

    let mut total = DetectionScore {
        true_positives: 0,
        false_positives: 0,
        missed: 0,
    };
    let mut worst_trace = (1.0f64, 1.0f64);
    for k in 0..40 {
        let mut rng = stream(k, "acceptance/staircase");
        let mut edges = Vec::new();
        let mut heights = Vec::new();
        let mut at = 50usize;
        for _ in 0..25 {
            edges.push(at);
            heights.push(sigma * rng.random_range(5.0..15.0));
            at += rng.random_range(2 * window..8 * window);
        }
        let n = at + 50;
        let mut level = 0.0;
        let mut e = 0;
        let values: Vec<f64> = (0..n)
            .map(|i| {
                while e < edges.len() && edges[e] == i {
                    level += heights[e];
                    e += 1;
                }
                level + noise.sample(&mut rng)
            })
            .collect();
        let axis: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let truth: Vec<f64> = edges.iter().map(|&i| i as f64).collect();
        let s = score_detections(
            &detect_steps_in(&axis, &values, window, 5.0)?,
            &truth,
            window as f64 / 2.0,
        );
        worst_trace = (
            worst_trace.0.min(s.recall()),
            worst_trace.1.min(s.precision()),
        );
        total.true_positives += s.true_positives;
        total.false_positives += s.false_positives;
        total.missed += s.missed;
    }

    let mut worst_dark = 0;
    for k in 0..20 {
        let mut rng = stream(k, "acceptance/dark");
        let values: Vec<f64> = (0..10_000).map(|_| noise.sample(&mut rng)).collect();
        let axis: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        worst_dark = worst_dark.max(detect_steps_in(&axis, &values, 3, 5.0)?.len());
    }

    let mut downward = 0;
    let mut accepted = 0;
    for k in 0..8 {
        let mut c = RunConfig::default();
        c.set_seed(sub_seed(k, "acceptance/rts"));
        c.exposure.rts_amplitude = 0.003;
        c.exposure.rts_switch_rate = 0.2;
        let trace = run_exposure(&c)?;
        let steps = detect_steps(&trace, c.detector.window, c.detector.threshold)?;
        accepted += steps.len();
        downward += steps.iter().filter(|s| s.height <= 0.0).count();
    }

    outcome(
        total.recall() >= 0.95
            && total.precision() >= 0.95
            && worst_trace.0 >= 0.95
            && worst_trace.1 >= 0.95
            && worst_dark <= 1
            && downward == 0,
        format!(
            "recall {:.3} precision {:.3} (worst trace {:.2}/{:.2}); at most {worst_dark} false positives per 1e4 dark samples; {downward} downward of {accepted} accepted with a fluctuator",
            total.recall(),
            total.precision(),
            worst_trace.0,
            worst_trace.1
        ),
    )
}

fn numerical_oracles() -> Result<Outcome> {
    let cold = DeviceParams {
        temperature: 0.001,
        ..DeviceParams::default()
    };
    let cold_model = ChannelModel::new(&cold)?;
    let mut rng = stream(0, "acceptance/gates");
    let zero_t = (0..100)
        .map(|_| {
            let v = rng.random_range(-1.52..-1.28);
            (cold_model.conductance(v) - channel_transmission(cold.fermi_energy, v, &cold)).abs()
        })
        .fold(0.0, f64::max);

    let mut doubling = 0.0f64;
    let mut derivative = 0.0f64;
    for anomaly_enabled in [false, true] {
        let p = DeviceParams {
            anomaly_enabled,
            ..DeviceParams::default()
        };
        let coarse = ChannelModel::new(&p)?;
        let fine = ChannelModel::with_quadrature(&p, ThermalQuadrature::for_device(&p).doubled())?;
        let curve = sweep(-1.52, -1.28, 241, &p)?;
        let slope = differential_conductance(&curve)?;
        let pts = curve.points();
        for i in 1..pts.len() - 1 {
            let v = pts[i].0;
            doubling = doubling.max((coarse.conductance(v) - fine.conductance(v)).abs());
            let fd = (pts[i + 1].1 - pts[i - 1].1) / (pts[i + 1].0 - pts[i - 1].0);
            derivative = derivative.max((slope.points()[i].1 - fd).abs());
            let h = 1e-6;
            let local = (coarse.conductance(v + h) - coarse.conductance(v - h)) / (2.0 * h);
            let exact = coarse.transconductance(v);
            derivative = derivative.max((local - exact).abs() / exact.abs().max(1.0));
        }
    }
    outcome(
        zero_t < 1e-6 && doubling < 1e-8 && derivative < 1e-6,
        format!("zero-temperature gap {zero_t:.1e}, quadrature doubling {doubling:.1e}, derivative mismatch {derivative:.1e}"),
    )
}

fn determinism() -> Result<Outcome> {
    let dirs = [
        tempfile::tempdir().expect("temp dir"),
        tempfile::tempdir().expect("temp dir"),
    ];
    let mut outputs = Vec::new();
    for dir in &dirs {
        let config = RunConfig {
            out_dir: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        let mut files = cli::cmd_expose(&config)?;
        files.extend(cli::cmd_analyze(
            &config,
            &dir.path().join(cli::EXPOSURE_FILE),
        )?);
        files.extend(cli::cmd_sweep(&config)?);
        let bytes: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|f| {
                let name = f
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                (name, fs::read(f).unwrap_or_default())
            })
            .collect();
        outputs.push(bytes);
    }
    let same = outputs[0] == outputs[1] && outputs[0].iter().all(|(_, b)| !b.is_empty());
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    outcome(
        same,
        format!("byte-identical across two runs: {}", names.join(", ")),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("plateau quantization", plateaus),
        ("0.7 shoulder", shoulder),
        ("gate/photo equivalence", equivalence),
        ("photon statistics", photon_statistics),
        ("saturation", saturation),
        ("step-height correlation", height_correlation),
        ("detector quality", detector_quality),
        ("numerical oracles", numerical_oracles),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {name}: {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
