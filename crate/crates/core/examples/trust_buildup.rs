//! Runs the `trust-buildup` scenario and prints its trajectory and checkpoints.
//! Pass a directory to also write the emitted files.

use market_trust::scenarios::{self, ScenarioOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = scenarios::run("trust-buildup", &ScenarioOptions::default())?;
    for line in &report.summary {
        println!("{line}");
    }
    if let Some(dir) = std::env::args().nth(1) {
        for path in report.write_to(dir.as_ref())? {
            println!("wrote {}", path.display());
        }
    }
    if !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}
