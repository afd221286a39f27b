//! Runs the permutation-class study and prints its report.

use nspolar::bench::{run_permclass, ExperimentConfig};

fn main() -> nspolar::error::Result<()> {
    let cfg = ExperimentConfig { seed: Some(1), permclass_trials: 200, ..Default::default() };
    let report = run_permclass(&cfg)?;
    print!("{}", report.text);
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
