//! Writes the figure data files into a directory (default `out/figures`).

use std::path::PathBuf;

use qpc_detector::cli::cmd_reproduce_figures;
use qpc_detector::config::RunConfig;

fn main() -> qpc_detector::Result<()> {
    let out_dir = std::env::args()
        .nth(1)
        .map_or_else(|| PathBuf::from("out/figures"), PathBuf::from);
    let config = RunConfig {
        out_dir,
        ..RunConfig::default()
    };
    for path in cmd_reproduce_figures(&config)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
