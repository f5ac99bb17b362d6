//! Intervals between photon detections: maximum-likelihood rate,
//! Kolmogorov-Smirnov check and a log-linear histogram.

use qpc_detector::analyze::{fit_exponential, intervals_between, Histogram};
use qpc_detector::charge::PhotonSource;
use qpc_detector::seed::stream;
use qpc_detector::simulate::poisson_event_times;

fn main() -> qpc_detector::Result<()> {
    let source = PhotonSource {
        incident_rate: 1.0 / 18.0 / 0.3,
        ..PhotonSource::default()
    };
    let mut rng = stream(1, "example");
    let times = poisson_event_times(source.detection_rate(), 10_000, &mut rng)?;
    let intervals = intervals_between(&times);
    let fit = fit_exponential(&intervals)?;

    println!(
        "mean interval {:.3} s (configured {:.3} s)",
        fit.mean_interval,
        1.0 / source.detection_rate()
    );
    println!(
        "KS {:.4} against critical {:.4}: {}",
        fit.ks_statistic,
        fit.ks_critical_5pct(),
        if fit.passes_ks() {
            "exponential"
        } else {
            "rejected"
        }
    );

    let hist = Histogram::from_intervals(&intervals, 6.0)?;
    for bin in hist.bins.iter().take(10) {
        println!(
            "{:5.0} s  {:5}  {}",
            bin.start,
            bin.count,
            "#".repeat(bin.count / 40)
        );
    }
    if let Some(slope) = hist.log_slope() {
        println!(
            "log-count slope {slope:.4} per s, rate {:.4} per s",
            fit.rate
        );
    }
    Ok(())
}
