//! One default exposure: photon bookkeeping, trapped gate shift and the
//! conductance rise, then the trace file header.

use qpc_detector::cli::run_exposure;
use qpc_detector::config::RunConfig;
use qpc_detector::trace::TraceSetup;

fn main() -> qpc_detector::Result<()> {
    let config = RunConfig::default();
    let trace = run_exposure(&config)?;

    if let TraceSetup::Exposure { tally, .. } = &trace.setup {
        println!(
            "incident {}  absorbed {}  captured {}",
            tally.incident, tally.absorbed, tally.captured
        );
    }
    let last = trace.truth_events.last().map_or(0.0, |e| e.gate_shift);
    println!(
        "trapped gate shift {:.4} V after {} captures",
        last,
        trace.truth_events.len()
    );

    let g = trace.conductances();
    println!("conductance {:.4} -> {:.4}", g[0], g[g.len() - 1]);

    let text = trace.to_text();
    for line in text.lines().take(12) {
        println!("{line}");
    }
    Ok(())
}
