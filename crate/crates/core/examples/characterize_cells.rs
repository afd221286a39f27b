//! Fits per-row read thresholds on simulated training arrays and compares
//! the symmetric and asymmetric cell models.

use nspolar::crossbar::CrossbarConfig;
use nspolar::estimation::{
    count_errors, estimate_bac, estimate_bsc, fallback_threshold, fit_thresholds, ThresholdMethod, TrainingSet,
};
use nspolar::rng::streams;

fn main() -> nspolar::error::Result<()> {
    let cfg = CrossbarConfig::with_size(32, 32, 35.0);
    let train = TrainingSet::generate(&cfg, 500, 11, streams::TRAINING, None)?;
    for method in [ThresholdMethod::Logistic, ThresholdMethod::Exhaustive] {
        let th = fit_thresholds(&train, method, fallback_threshold(&cfg))?;
        let ber = count_errors(&train, &th.values)?.bit_error_rate();
        println!("{method:?}: uncoded training BER {ber:.4e}, row 0 threshold {:.4} mA", th.values[0] * 1e3);
    }
    let th = fit_thresholds(&train, ThresholdMethod::Logistic, fallback_threshold(&cfg))?;
    let bsc = estimate_bsc(&train, &th)?.channels()?;
    let bac = estimate_bac(&train, &th)?.channels()?;
    println!("\ncolumn-averaged error probability, first/last 4 columns");
    for j in [0, 1, 2, 3, 28, 29, 30, 31] {
        let (mut p, mut p01, mut p10) = (0.0, 0.0, 0.0);
        for i in 0..32 {
            let c = i * 32 + j;
            p += bsc[c].flip_probability(0) / 32.0;
            p01 += bac[c].flip_probability(0) / 32.0;
            p10 += bac[c].flip_probability(1) / 32.0;
        }
        println!("  col {j:>2}: bsc {p:.4}  bac p01 {p01:.4} p10 {p10:.4}");
    }
    Ok(())
}
