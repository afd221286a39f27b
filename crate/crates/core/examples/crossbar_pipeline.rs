//! The full storage pipeline at one wire resistance: characterize the
//! array, build codes for several permutations, store, read, decode.
//! Usage: crossbar_pipeline [RW] [ARRAYS]

use nspolar::bench::{build_crossbar_code, characterize, simulate_arrays, ArraySetup, ExperimentConfig, ModelKind, StopRule};
use nspolar::construction::PermKind;
use nspolar::crossbar::CrossbarConfig;

fn main() -> nspolar::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let rw: f64 = args.next().map_or(35.0, |a| a.parse().expect("wire resistance"));
    let arrays: u64 = args.next().map_or(200, |a| a.parse().expect("array count"));
    let cfg = ExperimentConfig {
        seed: Some(1),
        rate: 0.8,
        crossbar: CrossbarConfig::with_size(32, 32, rw),
        ..Default::default()
    };
    let chars = characterize(&cfg, &cfg.crossbar, 1000, None, true)?;
    println!("Rw {rw}: uncoded BER train {:.3e}, holdout {:.3e}", chars.train_ber, chars.holdout_ber.unwrap_or(f64::NAN));
    for mode in [ModelKind::Bsc, ModelKind::Bac] {
        for kind in [PermKind::Identity, PermKind::Ordered, PermKind::OrderedBitReversal] {
            let spec = build_crossbar_code(&cfg, chars.model(mode), &kind, 0)?;
            let setup = ArraySetup { crossbar: cfg.crossbar.clone(), thresholds: chars.thresholds.values.clone(), spec };
            let t = simulate_arrays(&cfg, &setup, StopRule::fixed(arrays))?;
            println!("  {:>3} {kind:>22}: BER {:.3e} (+-{:.1e}), FER {:.3}", mode.name(), t.ber(), t.ber_sigma(), t.fer());
        }
    }
    Ok(())
}
