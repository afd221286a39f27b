//! Builds a code over non-stationary BSCs and prints its spec file.

use nspolar::bench::synthetic_channels;
use nspolar::construction::{build_code, CodeSpec, PermKind};

fn main() -> nspolar::error::Result<()> {
    let channels = synthetic_channels(4, 0.08, 0.045)?;
    for kind in [PermKind::Identity, PermKind::BitReversal, PermKind::OrderedBitReversal] {
        let spec = build_code(&channels, 8, &kind, 0)?;
        let z = spec.reliability().z();
        let info_z: f64 = spec.information_set().iter().map(|&i| z[i]).sum();
        println!("{kind:>22}: frozen {:?}, sum of information Z {info_z:.4}", spec.frozen_set);
    }
    let punctured = build_code(&channels, 8, &PermKind::OrderedBitReversal, 2)?;
    let text = punctured.to_toml();
    assert_eq!(CodeSpec::from_toml(&text)?, punctured);
    println!("\n{text}");
    Ok(())
}
