//! Non-stationary BSC comparison at a reduced scale. Pass a frame count to
//! change it (default 500).

use nspolar::bench::{run_synthetic_bsc, ExperimentConfig, StopRule};

fn main() -> nspolar::error::Result<()> {
    let frames = std::env::args().nth(1).map_or(500, |a| a.parse().expect("frame count"));
    let cfg = ExperimentConfig {
        seed: Some(1),
        p_centers: vec![0.065, 0.095],
        random_perms: 20,
        frames_per_random_perm: 25,
        stop: StopRule::fixed(frames),
        ..Default::default()
    };
    let report = run_synthetic_bsc(&cfg)?;
    println!("{:>8} {:>15} {:>15} {:>10} {:>10}", "p", "scenario", "mode", "BER", "FER");
    for r in &report.rows {
        println!("{:>8} {:>15} {:>15} {:>10.3e} {:>10.3e}", r.value, r.scenario, r.mode, r.ber, r.fer);
    }
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
