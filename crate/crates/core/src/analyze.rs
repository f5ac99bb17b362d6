//! Recovering photon observables from conductance traces.
//!
//! The step detector compares the means of two adjacent windows of `w`
//! samples. For white noise of standard deviation σ the difference has
//! standard deviation `σ·√(2/w)`, so the threshold is a z-score. σ itself is
//! estimated from the median absolute first difference, which ignores the
//! handful of large jumps the detector is looking for.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::trace::Trace;
use crate::transport::{AxisKind, ChannelModel, DeviceParams};

/// Steps starting where the transconductance is below this fraction of the
/// peak are left out of the mean implied coupling: on a plateau a tiny height
/// divided by a tiny slope says more about noise than about the trap. The cut
/// uses the level before the step, which does not depend on the step's own
/// coupling.
pub const SENSITIVE_FRACTION: f64 = 0.3;

/// Minimum number of steps for a height correlation.
pub const MIN_CORRELATION_STEPS: usize = 3;

/// Statistic values at or below this are treated as exactly flat.
const FLAT_FLOOR: f64 = 1e-12;

const REPORT_MAGIC: &str = "# qpc-detector report v1";
const INSUFFICIENT: &str = "insufficient_events";
const UNDEFINED: &str = "undefined";

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Samples on each side of a candidate step.
    pub window: usize,
    /// Detection threshold in units of the window-difference noise.
    pub threshold: f64,
    /// Interval histogram bin width (s); `None` uses a third of the mean.
    pub bin_width: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window: 3,
            threshold: 5.0,
            bin_width: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::domain("detector.window must be >= 2"));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::domain("detector.threshold must be > 0"));
        }
        if let Some(b) = self.bin_width {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::domain("detector.bin_width must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    /// Axis value of the first sample after the step.
    pub time: f64,
    /// `mean(after) - mean(before)`, units of `2e²/h`.
    pub height: f64,
    /// Height in units of the estimated window-difference noise.
    pub confidence: f64,
    /// Mean level of the window before the step.
    pub baseline: f64,
}

/// Robust white-noise estimate: `1.4826 · median|Δx| / √2`.
pub fn estimate_noise(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    1.4826 * median(diffs) / std::f64::consts::SQRT_2
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Copy)]
struct ChangePoint {
    index: usize,
    diff: f64,
    before: f64,
}

/// Detects upward steps in an exposure trace.
pub fn detect_steps(trace: &Trace, window: usize, threshold: f64) -> Result<Vec<StepEvent>> {
    if trace.axis() != AxisKind::ExposureTime {
        return Err(Error::domain(
            "step detection needs an exposure trace, got a gate sweep",
        ));
    }
    detect_steps_in(
        &trace.axis_values(),
        &trace.conductances(),
        window,
        threshold,
    )
}

/// Detects upward steps in any sampled series.
///
/// Change points of either sign are found first. A downward change followed
/// by an upward change of matching size (or the reverse) is a two-sided
/// fluctuation and both are dropped. Of what remains only upward steps are
/// reported.
pub fn detect_steps_in(
    axis: &[f64],
    values: &[f64],
    window: usize,
    threshold: f64,
) -> Result<Vec<StepEvent>> {
    DetectorConfig {
        window,
        threshold,
        bin_width: None,
    }
    .validate()?;
    if axis.len() != values.len() {
        return Err(Error::domain("axis and values differ in length"));
    }
    let n = values.len();
    if n < 2 * window {
        return Err(Error::domain(format!(
            "need at least {} samples for window {window}, got {n}",
            2 * window
        )));
    }

    let w = window as f64;
    let sigma_d = estimate_noise(values) * (2.0 / w).sqrt();
    let cut = (threshold * sigma_d).max(FLAT_FLOOR);

    // stat[j] is the change between samples i-1 and i, i = window + j.
    let stat: Vec<ChangePoint> = (window..=n - window)
        .map(|i| {
            let before = values[i - window..i].iter().sum::<f64>() / w;
            let after = values[i..i + window].iter().sum::<f64>() / w;
            ChangePoint {
                index: i,
                diff: after - before,
                before,
            }
        })
        .collect();

    let mut candidates: Vec<ChangePoint> = stat
        .iter()
        .enumerate()
        .filter(|(j, c)| {
            let m = c.diff.abs();
            m > cut
                && stat
                    .get(j.wrapping_sub(1))
                    .is_none_or(|p| m >= p.diff.abs())
                && stat.get(j + 1).is_none_or(|p| m >= p.diff.abs())
        })
        .map(|(_, c)| *c)
        .collect();
    candidates.sort_by(|a, b| {
        b.diff
            .abs()
            .total_cmp(&a.diff.abs())
            .then(a.index.cmp(&b.index))
    });

    let mut accepted: Vec<ChangePoint> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|a| a.index.abs_diff(c.index) > window) {
            accepted.push(c);
        }
    }
    accepted.sort_by_key(|c| c.index);

    let mut kept = Vec::with_capacity(accepted.len());
    let mut i = 0;
    while i < accepted.len() {
        if let Some(next) = accepted.get(i + 1) {
            if is_fluctuation(&accepted[i], next, cut) {
                i += 2;
                continue;
            }
        }
        kept.push(accepted[i]);
        i += 1;
    }

    Ok(kept
        .into_iter()
        .filter(|c| c.diff > 0.0)
        .map(|c| StepEvent {
            time: axis[c.index],
            height: c.diff,
            confidence: if sigma_d > 0.0 {
                c.diff / sigma_d
            } else {
                f64::INFINITY
            },
            baseline: c.before,
        })
        .collect())
}

/// Opposite signs and magnitudes that agree to within the detection cut or
/// 20%, whichever is looser.
fn is_fluctuation(a: &ChangePoint, b: &ChangePoint, cut: f64) -> bool {
    if a.diff.signum() == b.diff.signum() {
        return false;
    }
    let larger = a.diff.abs().max(b.diff.abs());
    (a.diff + b.diff).abs() <= cut.max(0.2 * larger)
}

/// How detections line up with known event times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub missed: usize,
}

impl DetectionScore {
    pub fn precision(&self) -> f64 {
        let d = self.true_positives + self.false_positives;
        if d == 0 {
            1.0
        } else {
            self.true_positives as f64 / d as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let t = self.true_positives + self.missed;
        if t == 0 {
            1.0
        } else {
            self.true_positives as f64 / t as f64
        }
    }
}

/// Matches each true time to the nearest unused detection within
/// `tolerance` on either side. Both inputs must be sorted.
pub fn score_detections(detected: &[StepEvent], truth: &[f64], tolerance: f64) -> DetectionScore {
    let mut used = vec![false; detected.len()];
    let mut tp = 0;
    for &t in truth {
        let lo = detected.partition_point(|d| d.time < t - tolerance);
        let best = (lo..detected.len())
            .take_while(|&k| detected[k].time <= t + tolerance)
            .filter(|&k| !used[k])
            .min_by(|&a, &b| {
                (detected[a].time - t)
                    .abs()
                    .total_cmp(&(detected[b].time - t).abs())
            });
        if let Some(k) = best {
            used[k] = true;
            tp += 1;
        }
    }
    DetectionScore {
        true_positives: tp,
        false_positives: detected.len() - tp,
        missed: truth.len() - tp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub start: f64,
    pub count: usize,
}

/// Interval histogram with bins `[k·width, (k+1)·width)` from zero up to the
/// largest interval, empty bins included.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn from_intervals(intervals: &[f64], bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::domain(format!(
                "bin width must be > 0, got {bin_width}"
            )));
        }
        if intervals.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::domain("intervals must be finite and non-negative"));
        }
        let index = |x: f64| (x / bin_width).floor() as usize;
        let n_bins = intervals.iter().map(|&x| index(x) + 1).max().unwrap_or(0);
        let mut counts = vec![0usize; n_bins];
        for &x in intervals {
            counts[index(x)] += 1;
        }
        Ok(Self {
            bin_width,
            bins: counts
                .into_iter()
                .enumerate()
                .map(|(k, count)| HistogramBin {
                    start: k as f64 * bin_width,
                    count,
                })
                .collect(),
        })
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Slope of `ln(count)` against bin centre, least squares weighted by
    /// count. Empty bins are skipped. For exponential intervals this is
    /// `-rate`.
    pub fn log_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64, f64)> = self
            .bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| {
                (
                    b.start + 0.5 * self.bin_width,
                    (b.count as f64).ln(),
                    b.count as f64,
                )
            })
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let sw: f64 = pts.iter().map(|p| p.2).sum();
        let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
        let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
        let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
        Some(sxy / sxx)
    }
}

/// Differences between successive times.
pub fn intervals_between(times: &[f64]) -> Vec<f64> {
    times.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Histogram of the intervals between successive steps.
pub fn interval_histogram(events: &[StepEvent], bin_width: f64) -> Result<Histogram> {
    if events.len() < 2 {
        return Err(Error::domain(format!(
            "interval histogram needs at least 2 events, got {}",
            events.len()
        )));
    }
    let times: Vec<f64> = events.iter().map(|e| e.time).collect();
    Histogram::from_intervals(&intervals_between(&times), bin_width)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalFit {
    /// Events behind the intervals (one more than the interval count).
    pub event_count: usize,
    pub mean_interval: f64,
    pub rate: f64,
    /// Kolmogorov-Smirnov distance to `Exponential(rate)`.
    pub ks_statistic: f64,
}

impl IntervalFit {
    pub fn interval_count(&self) -> usize {
        self.event_count - 1
    }

    /// Asymptotic 5% critical value `1.36 / √n`.
    pub fn ks_critical_5pct(&self) -> f64 {
        ks_critical_5pct(self.interval_count())
    }

    pub fn passes_ks(&self) -> bool {
        self.ks_statistic < self.ks_critical_5pct()
    }
}

pub fn ks_critical_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Maximum-likelihood exponential fit.
pub fn fit_exponential(intervals: &[f64]) -> Result<IntervalFit> {
    if intervals.len() < 2 {
        return Err(Error::domain(format!(
            "exponential fit needs at least 2 intervals, got {}",
            intervals.len()
        )));
    }
    if let Some(bad) = intervals.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::domain(format!(
            "intervals must be positive, got {bad}"
        )));
    }
    let n = intervals.len();
    let mean_interval = mean(intervals);
    let rate = 1.0 / mean_interval;
    let mut sorted = intervals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let ks_statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = -(-rate * x).exp_m1();
            (cdf - i as f64 / nf).max((i + 1) as f64 / nf - cdf)
        })
        .fold(0.0, f64::max);
    Ok(IntervalFit {
        event_count: n + 1,
        mean_interval,
        rate,
        ks_statistic,
    })
}

/// Gate voltage at each step's operating point: the midpoint of the gate
/// voltages that reproduce the levels before and after the step.
pub fn step_operating_points(steps: &[StepEvent], device: &DeviceParams) -> Result<Vec<f64>> {
    let model = ChannelModel::new(device)?;
    Ok(steps
        .iter()
        .map(|s| {
            let v0 = model.gate_for_conductance(s.baseline);
            let v1 = model.gate_for_conductance(s.baseline + s.height);
            0.5 * (v0 + v1)
        })
        .collect())
}

/// Model transconductance at each step's operating point.
pub fn step_transconductance(steps: &[StepEvent], device: &DeviceParams) -> Result<Vec<f64>> {
    let model = ChannelModel::new(device)?;
    Ok(step_operating_points(steps, device)?
        .into_iter()
        .map(|v| model.transconductance(v))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightCorrelation {
    /// `None` when fewer than two steps have a defined coupling or either
    /// variable is constant.
    pub pearson_r: Option<f64>,
    /// Per step; `None` where the transconductance vanishes.
    pub implied_couplings: Vec<Option<f64>>,
    pub transconductances: Vec<f64>,
    /// Mean implied coupling over steps on the sensitive part of the curve.
    pub mean_implied_coupling: Option<f64>,
}

impl HeightCorrelation {
    pub fn defined_count(&self) -> usize {
        self.implied_couplings.iter().flatten().count()
    }
}

/// Correlates step heights with the model transconductance.
pub fn correlate_heights(
    steps: &[StepEvent],
    trace: &Trace,
    device: &DeviceParams,
) -> Result<HeightCorrelation> {
    if !trace.is_exposure() {
        return Err(Error::domain("height correlation needs an exposure trace"));
    }
    if steps.len() < MIN_CORRELATION_STEPS {
        return Err(Error::domain(format!(
            "height correlation needs at least {MIN_CORRELATION_STEPS} steps, got {}",
            steps.len()
        )));
    }
    let g = step_transconductance(steps, device)?;
    let model = ChannelModel::new(device)?;
    let peak = model.peak_transconductance();
    let implied: Vec<Option<f64>> = steps
        .iter()
        .zip(&g)
        .map(|(s, &gi)| (gi > f64::EPSILON * peak).then(|| s.height / gi))
        .collect();

    let pairs: Vec<(f64, f64)> = steps
        .iter()
        .zip(&g)
        .zip(&implied)
        .filter(|(_, c)| c.is_some())
        .map(|((s, &gi), _)| (s.height, gi))
        .collect();

    let sensitive: Vec<f64> = implied
        .iter()
        .zip(steps)
        .filter(|(_, s)| {
            model.transconductance(model.gate_for_conductance(s.baseline))
                >= SENSITIVE_FRACTION * peak
        })
        .filter_map(|(c, _)| *c)
        .collect();

    Ok(HeightCorrelation {
        pearson_r: pearson(&pairs),
        implied_couplings: implied,
        transconductances: g,
        mean_implied_coupling: (!sensitive.is_empty()).then(|| mean(&sensitive)),
    })
}

/// Pearson correlation; `None` for fewer than two points or zero variance.
pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, syy, sxy) = pairs.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &(x, y)| {
        (
            a + (x - mx).powi(2),
            b + (y - my).powi(2),
            c + (x - mx) * (y - my),
        )
    });
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationSummary {
    pub saturation_detected: bool,
    pub step_count: usize,
    /// Mean of the trailing tenth minus mean of the dark lead.
    pub total_rise: f64,
}

struct LineFit {
    slope: f64,
    std_err: f64,
}

fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    let xm = mean(x);
    let ym = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - xm) * (b - ym))
        .sum::<f64>()
        / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - ym - slope * (a - xm)).powi(2))
        .sum();
    Some(LineFit {
        slope,
        std_err: (rss / (n - 2) as f64 / sxx).sqrt(),
    })
}

/// Whether the exposure has stopped rising.
///
/// The illuminated part (t ≥ 0) is split into a trailing tenth and the rest.
/// Saturation means the tail has no steps and a slope indistinguishable from
/// zero, while the earlier part rose significantly and its step rate predicts
/// at least three steps in a tail of that length. A run without steps is
/// trivially saturated.
pub fn saturation_summary(steps: &[StepEvent], trace: &Trace) -> Result<SaturationSummary> {
    if !trace.is_exposure() {
        return Err(Error::domain("saturation summary needs an exposure trace"));
    }
    let lit: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.axis >= 0.0)
        .map(|s| (s.axis, s.conductance))
        .collect();
    let dark: Vec<f64> = trace
        .samples
        .iter()
        .filter(|s| s.axis < 0.0)
        .map(|s| s.conductance)
        .collect();
    let all = trace.conductances();
    let tenth = (all.len() / 10).max(1);
    let tail_len = (lit.len() / 10).max(1).min(lit.len());

    let reference = if dark.is_empty() {
        mean(&all[..tenth.min(all.len())])
    } else {
        mean(&dark)
    };
    let total_rise = if lit.is_empty() || all.is_empty() {
        0.0
    } else {
        mean(
            &lit[lit.len() - tail_len..]
                .iter()
                .map(|p| p.1)
                .collect::<Vec<_>>(),
        ) - reference
    };

    let saturation_detected = if steps.is_empty() {
        true
    } else if lit.len() < 20 {
        false
    } else {
        let (head, tail) = lit.split_at(lit.len() - tail_len);
        let tail_start = tail[0].0;
        let tail_span = tail[tail.len() - 1].0 - tail_start;
        let split = |p: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { p.iter().copied().unzip() };
        let (tx, ty) = split(tail);
        let (hx, hy) = split(head);
        let tail_flat = fit_line(&tx, &ty).is_some_and(|f| {
            f.slope.abs() * tail_span <= (3.0 * f.std_err * tail_span).max(FLAT_FLOOR)
        });
        let earlier_rising = fit_line(&hx, &hy)
            .is_some_and(|f| f.slope > 3.0 * f.std_err && f.slope * tail_start > FLAT_FLOOR);
        let steps_before = steps
            .iter()
            .filter(|s| s.time >= 0.0 && s.time < tail_start)
            .count();
        let steps_in_tail = steps.iter().filter(|s| s.time >= tail_start).count();
        let expected_in_tail = if tail_start > 0.0 {
            steps_before as f64 / tail_start * (tail_span + trace_step(trace))
        } else {
            0.0
        };
        tail_flat && earlier_rising && steps_in_tail == 0 && expected_in_tail >= 3.0
    };

    Ok(SaturationSummary {
        saturation_detected,
        step_count: steps.len(),
        total_rise,
    })
}

fn trace_step(trace: &Trace) -> f64 {
    trace.exposure_config().map_or(0.0, |c| c.sample_interval)
}

/// Everything [`analyze_trace`] extracts from one exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub steps: Vec<StepEvent>,
    /// Per step, model dG/dVg at the operating point.
    pub transconductances: Vec<f64>,
    /// Per step, height ÷ transconductance.
    pub implied_couplings: Vec<Option<f64>>,
    pub histogram: Option<Histogram>,
    pub interval_fit: Option<IntervalFit>,
    /// `None` below [`MIN_CORRELATION_STEPS`] steps.
    pub correlation: Option<HeightCorrelation>,
    pub saturation: SaturationSummary,
}

/// Runs the full analysis on an exposure trace, using its own device model.
pub fn analyze_trace(trace: &Trace, detector: &DetectorConfig) -> Result<AnalysisReport> {
    detector.validate()?;
    if !trace.is_exposure() {
        return Err(Error::domain(
            "wrong axis kind: analysis needs an exposure trace, got a gate sweep",
        ));
    }
    let steps = detect_steps(trace, detector.window, detector.threshold)?;
    let device = &trace.device;

    let (transconductances, implied_couplings, correlation) =
        if steps.len() >= MIN_CORRELATION_STEPS {
            let c = correlate_heights(&steps, trace, device)?;
            (
                c.transconductances.clone(),
                c.implied_couplings.clone(),
                Some(c),
            )
        } else {
            let g = step_transconductance(&steps, device)?;
            let implied = steps
                .iter()
                .zip(&g)
                .map(|(s, &gi)| (gi > 0.0).then(|| s.height / gi))
                .collect();
            (g, implied, None)
        };

    let times: Vec<f64> = steps.iter().map(|s| s.time).collect();
    let intervals = intervals_between(&times);
    let interval_fit = fit_exponential(&intervals).ok();
    let histogram = if intervals.is_empty() {
        None
    } else {
        let width = detector.bin_width.unwrap_or_else(|| mean(&intervals) / 3.0);
        Some(Histogram::from_intervals(&intervals, width)?)
    };

    Ok(AnalysisReport {
        saturation: saturation_summary(&steps, trace)?,
        steps,
        transconductances,
        implied_couplings,
        histogram,
        interval_fit,
        correlation,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| x.to_string())
}

impl AnalysisReport {
    /// Sectioned text with fixed column order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{REPORT_MAGIC}");
        let _ = writeln!(s, "[steps]");
        let _ = writeln!(
            s,
            "time_s,height_G0,confidence,transconductance_G0_per_V,implied_coupling_V"
        );
        for ((e, g), c) in self
            .steps
            .iter()
            .zip(&self.transconductances)
            .zip(&self.implied_couplings)
        {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.time,
                e.height,
                e.confidence,
                g,
                opt(*c)
            );
        }

        let _ = writeln!(s, "\n[intervals]");
        let _ = writeln!(s, "bin_start_s,count");
        match &self.histogram {
            Some(h) => {
                for b in &h.bins {
                    let _ = writeln!(s, "{},{}", b.start, b.count);
                }
            }
            None => {
                let _ = writeln!(s, "{INSUFFICIENT}");
            }
        }

        let _ = writeln!(s, "\n[fit]");
        let _ = writeln!(
            s,
            "event_count,mean_interval_s,rate_per_s,ks_statistic,ks_critical_5pct"
        );
        match &self.interval_fit {
            Some(f) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    f.event_count,
                    f.mean_interval,
                    f.rate,
                    f.ks_statistic,
                    f.ks_critical_5pct()
                );
            }
            None => {
                let _ = writeln!(s, "{INSUFFICIENT}");
            }
        }

        let _ = writeln!(s, "\n[correlation]");
        let _ = writeln!(s, "pearson_r,mean_implied_coupling_V,defined_count");
        match &self.correlation {
            Some(c) => {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    opt(c.pearson_r),
                    opt(c.mean_implied_coupling),
                    c.defined_count()
                );
            }
            None => {
                let _ = writeln!(s, "{INSUFFICIENT}");
            }
        }

        let _ = writeln!(s, "\n[saturation]");
        let _ = writeln!(s, "saturation_detected,step_count,total_rise_G0");
        let sat = &self.saturation;
        let _ = writeln!(
            s,
            "{},{},{}",
            sat.saturation_detected, sat.step_count, sat.total_rise
        );
        s
    }
}
