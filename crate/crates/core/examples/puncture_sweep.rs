//! Coded BER against the number of punctured cells. Punctured cells always
//! store 1 (high resistance), which lowers the sneak current for the rest.
//! Usage: puncture_sweep [ARRAYS]

use nspolar::bench::{run_puncture_sweep, stored_ones_frequency, build_crossbar_code, characterize, ExperimentConfig, StopRule};
use nspolar::construction::{ones_frequency, PermKind};
use nspolar::crossbar::CrossbarConfig;

fn main() -> nspolar::error::Result<()> {
    let arrays: u64 = std::env::args().nth(1).map_or(150, |a| a.parse().expect("array count"));
    let cfg = ExperimentConfig {
        seed: Some(1),
        rate: 0.8,
        crossbar: CrossbarConfig::with_size(32, 32, 35.0),
        np_grid: vec![0, 16, 40, 80, 120],
        training_trials: 600,
        sweep_training_trials: 400,
        sweep_stop: StopRule::fixed(arrays),
        ..Default::default()
    };
    let chars = characterize(&cfg, &cfg.crossbar, 200, None, false)?;
    let spec = build_crossbar_code(&cfg, &chars.bsc, &PermKind::OrderedBitReversal, 64)?;
    println!("stored 1-frequency with 64 punctured: {:.4} (expected {:.4})\n", stored_ones_frequency(&cfg, &spec, 200)?, ones_frequency(1024, 64));

    let report = run_puncture_sweep(&cfg)?;
    for r in &report.rows {
        println!("{:>3} Np {:>4}: BER {:.3e}  uncoded {:.3e}", r.mode, r.value, r.ber, r.uncoded_ber.unwrap_or(f64::NAN));
    }
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
