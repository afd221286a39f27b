//! End-to-end crossbar experiments: characterize, construct, store, read, decode.

use std::collections::BTreeMap;

use rand::Rng;

use super::{ber_not_worse, Check, ExperimentConfig, ModelKind, Report, ResultRow, StopRule, Tally};
use crate::channels::HardObservation;
use crate::codec::{map_from_physical_with, map_to_physical, systematic_data, systematic_encode, ScDecoder};
use crate::construction::{
    build_code_from_parts, build_code_with, qup_pattern, resolve_permutation, CodeSpec, ConstructionOptions, PermKind,
    Permutation,
};
use crate::crossbar::{read_array, BitMatrix, CrossbarConfig};
use crate::error::{Error, Result};
use crate::estimation::{
    count_errors, detect, estimate_bac, estimate_bsc, fallback_threshold, fit_thresholds_with, CellCharacterization,
    Thresholds, TrainingSet,
};
use crate::rng::{stream_rng, streams};

/// Thresholds plus both error models from one training set.
#[derive(Clone, Debug)]
pub struct Characterized {
    pub thresholds: Thresholds,
    pub bsc: CellCharacterization,
    pub bac: CellCharacterization,
    pub train_ber: f64,
    /// Uncoded BER of fresh arrays under the fitted thresholds.
    pub holdout_ber: Option<f64>,
}

impl Characterized {
    pub fn model(&self, kind: ModelKind) -> &CellCharacterization {
        match kind {
            ModelKind::Bsc => &self.bsc,
            ModelKind::Bac => &self.bac,
        }
    }
}

/// Trains thresholds and cell models at `xb`. `forced_ones` marks cells that
/// always store 1, as they do when those cells are punctured.
pub fn characterize(
    cfg: &ExperimentConfig,
    xb: &CrossbarConfig,
    trials: usize,
    forced_ones: Option<&[bool]>,
    holdout: bool,
) -> Result<Characterized> {
    let seed = cfg.seed()?;
    let train = TrainingSet::generate(xb, trials, seed, streams::TRAINING, forced_ones)?;
    let thresholds =
        fit_thresholds_with(&train, cfg.threshold_method, cfg.threshold_feature, fallback_threshold(xb))?;
    let train_ber = count_errors(&train, &thresholds.values)?.bit_error_rate();
    let holdout_ber = if holdout && cfg.holdout_trials > 0 {
        let held = TrainingSet::generate(xb, cfg.holdout_trials, seed, streams::HOLDOUT, forced_ones)?;
        Some(count_errors(&held, &thresholds.values)?.bit_error_rate())
    } else {
        None
    };
    Ok(Characterized {
        bsc: estimate_bsc(&train, &thresholds)?,
        bac: estimate_bac(&train, &thresholds)?,
        thresholds,
        train_ber,
        holdout_ber,
    })
}

/// A code stored on a crossbar together with what the reader needs.
#[derive(Clone, Debug)]
pub struct ArraySetup {
    pub crossbar: CrossbarConfig,
    pub thresholds: Vec<f64>,
    pub spec: CodeSpec,
}

/// Builds the code for one permutation kind over characterized cells.
pub fn build_crossbar_code(
    cfg: &ExperimentConfig,
    chars: &CellCharacterization,
    kind: &PermKind,
    np: usize,
) -> Result<CodeSpec> {
    let channels = chars.channels()?;
    let k = cfg.dimension(channels.len());
    build_code_with(&channels, k, kind, np, ConstructionOptions { ordering_metric: cfg.ordering_metric })
}

fn check_geometry(xb: &CrossbarConfig, spec: &CodeSpec) -> Result<()> {
    if xb.cells() != spec.len() {
        return Err(Error::LengthMismatch { expected: xb.cells(), got: spec.len() });
    }
    Ok(())
}

fn random_data(seed: u64, index: u64, k: usize) -> Vec<u8> {
    let mut rng = stream_rng(seed, streams::ARRAYS, index);
    (0..k).map(|_| rng.gen_range(0..2)).collect()
}

/// Stores systematic codewords of random data, one array each, reads them
/// back and decodes. Array `a` carries the same data for every code.
pub fn simulate_arrays(cfg: &ExperimentConfig, setup: &ArraySetup, stop: StopRule) -> Result<Tally> {
    let seed = cfg.seed()?;
    let spec = &setup.spec;
    check_geometry(&setup.crossbar, spec)?;
    let cols = setup.crossbar.cols;
    let mut decoder = ScDecoder::with_check_node(spec, cfg.check_node);
    let mut tally = Tally::default();
    let stored_cells: Vec<usize> =
        (0..spec.len()).filter(|&i| !spec.puncture.is_punctured(i)).map(|i| spec.permutation.get(i)).collect();
    let mut index = 0u64;
    while !stop.done(&tally) {
        let d = random_data(seed, index, spec.k);
        let (x, _) = systematic_encode(spec, &d)?;
        let z = map_to_physical(spec, &x)?;
        let bits = BitMatrix::new(setup.crossbar.rows, cols, z)?;
        let currents = read_array(&setup.crossbar, &bits)?;
        let y: Vec<u8> =
            currents.amps.iter().enumerate().map(|(c, &a)| detect(a, setup.thresholds[c / cols])).collect();
        let raw_errors = stored_cells.iter().filter(|&&c| y[c] != bits.bits[c]).count();
        tally.record_uncoded(stored_cells.len(), raw_errors);
        let obs: Vec<HardObservation> = y.into_iter().map(HardObservation::Bit).collect();
        let llrs = map_from_physical_with(spec, &obs, cfg.llr_saturation)?;
        let x_hat = decoder.decode(&llrs)?.x_hat;
        let errors = systematic_data(spec, &x_hat).iter().zip(&d).filter(|(a, b)| a != b).count();
        tally.record(spec.k, errors);
        index += 1;
    }
    Ok(tally)
}

/// Fraction of 1s over `arrays` stored codeword arrays, punctured cells included.
pub fn stored_ones_frequency(cfg: &ExperimentConfig, spec: &CodeSpec, arrays: u64) -> Result<f64> {
    let seed = cfg.seed()?;
    let mut ones = 0u64;
    for a in 0..arrays {
        let (x, _) = systematic_encode(spec, &random_data(seed, a, spec.k))?;
        ones += map_to_physical(spec, &x)?.iter().map(|&b| u64::from(b)).sum::<u64>();
    }
    Ok(ones as f64 / (arrays * spec.len() as u64) as f64)
}

fn crossbar_at(cfg: &ExperimentConfig, rw: f64) -> CrossbarConfig {
    CrossbarConfig { wire_resistance: rw, ..cfg.crossbar.clone() }
}

/// Saved characterization when one is configured for a single point, else training.
fn characterization_for(cfg: &ExperimentConfig, xb: &CrossbarConfig) -> Result<Characterized> {
    if let (Some(path), 1) = (&cfg.characterization, cfg.rw_points().len()) {
        let saved = CellCharacterization::from_toml(&std::fs::read_to_string(path)?)?;
        if saved.rows != xb.rows || saved.cols != xb.cols {
            return Err(Error::LengthMismatch { expected: xb.cells(), got: saved.cells() });
        }
        let thresholds = Thresholds { values: saved.thresholds.clone(), flagged_rows: saved.flagged_rows.clone() };
        return Ok(Characterized {
            thresholds,
            bsc: saved.clone(),
            bac: saved,
            train_ber: f64::NAN,
            holdout_ber: None,
        });
    }
    characterize(cfg, xb, cfg.training_trials, None, false)
}

const PERM_KINDS: [(&str, PermKind); 4] = [
    ("identity", PermKind::Identity),
    ("bit-reversal", PermKind::BitReversal),
    ("ordered", PermKind::Ordered),
    ("ordered-bit-reversal", PermKind::OrderedBitReversal),
];

/// BER against wire resistance for the four permutation choices.
pub fn run_crossbar_ber(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::default();
    for rw in cfg.rw_points() {
        let xb = crossbar_at(cfg, rw);
        let chars = characterization_for(cfg, &xb)?;
        let mut tallies = BTreeMap::new();
        for (name, kind) in &PERM_KINDS {
            let spec = build_crossbar_code(cfg, chars.model(cfg.model), kind, 0)?;
            let setup = ArraySetup { crossbar: xb.clone(), thresholds: chars.thresholds.values.clone(), spec };
            let t = simulate_arrays(cfg, &setup, cfg.stop)?;
            report.rows.push(ResultRow::new(cfg, name, cfg.model.name(), "rw", rw, &t));
            tallies.insert(*name, t);
        }
        let best = tallies["ordered-bit-reversal"];
        for other in ["identity", "bit-reversal", "ordered"] {
            report.checks.push(Check::new(
                format!("rw={rw}: ordered-bit-reversal <= {other} (2 sigma)"),
                ber_not_worse(&best, &tallies[other], 2.0),
                format!("{:.3e} vs {:.3e}", best.ber(), tallies[other].ber()),
            ));
        }
        report.checks.push(Check::new(
            format!("rw={rw}: ordered <= identity (2 sigma)"),
            ber_not_worse(&tallies["ordered"], &tallies["identity"], 2.0),
            format!("{:.3e} vs {:.3e}", tallies["ordered"].ber(), tallies["identity"].ber()),
        ));
    }
    Ok(report)
}

/// Same pipeline under the symmetric and the asymmetric cell model.
pub fn run_bsc_vs_bac(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::default();
    let mut gains = Vec::new();
    let mut points = cfg.rw_points();
    points.sort_by(f64::total_cmp);
    for rw in points {
        let xb = crossbar_at(cfg, rw);
        let chars = characterize(cfg, &xb, cfg.training_trials, None, false)?;
        let mut t = Vec::new();
        for mode in [ModelKind::Bsc, ModelKind::Bac] {
            let spec = build_crossbar_code(cfg, chars.model(mode), &cfg.perm_kind, 0)?;
            let setup = ArraySetup { crossbar: xb.clone(), thresholds: chars.thresholds.values.clone(), spec };
            let tally = simulate_arrays(cfg, &setup, cfg.stop)?;
            report.rows.push(ResultRow::new(cfg, &cfg.perm_kind.to_string(), mode.name(), "rw", rw, &tally));
            t.push(tally);
        }
        report.checks.push(Check::new(
            format!("rw={rw}: bac <= bsc (2 sigma)"),
            ber_not_worse(&t[1], &t[0], 2.0),
            format!("{:.3e} vs {:.3e}", t[1].ber(), t[0].ber()),
        ));
        if t[0].bit_errors > 0 && t[1].bit_errors > 0 {
            gains.push((rw, t[0].ber() / t[1].ber()));
        }
    }
    let monotone = gains.windows(2).all(|w| w[1].1 <= w[0].1);
    report.checks.push(Check::new(
        "bsc/bac gain non-increasing in rw",
        monotone,
        gains.iter().map(|(rw, g)| format!("{rw}:{g:.3}")).collect::<Vec<_>>().join(" "),
    ));
    Ok(report)
}

/// Physical cells holding punctured codeword positions.
fn punctured_cells(permutation: &Permutation, len: usize, np: usize) -> Result<Vec<bool>> {
    let pattern = qup_pattern(len, np)?;
    let mut mask = vec![false; len];
    for i in (0..len).filter(|&i| pattern.is_punctured(i)) {
        mask[permutation.get(i)] = true;
    }
    Ok(mask)
}

/// BER against the number of punctured positions at a fixed message length.
///
/// The permutation is fixed from an unbiased characterization; for each
/// puncturing size the cells are re-characterized with the punctured cells
/// holding 1 during training, and the code is rebuilt on those estimates.
pub fn run_puncture_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let mut report = Report::default();
    let xb = cfg.crossbar.clone();
    let len = xb.cells();
    let base = characterize(cfg, &xb, cfg.training_trials, None, false)?;
    for mode in [ModelKind::Bsc, ModelKind::Bac] {
        let channels = base.model(mode).channels()?;
        let permutation = resolve_permutation(&cfg.perm_kind, &channels, cfg.ordering_metric)?;
        let mut curve = Vec::new();
        for &np in &cfg.np_grid {
            let chars = if np == 0 {
                base.clone()
            } else {
                let forced = punctured_cells(&permutation, len, np)?;
                characterize(cfg, &xb, cfg.sweep_training_trials, Some(&forced), false)?
            };
            let k = cfg.dimension(len);
            let spec =
                build_code_from_parts(&chars.model(mode).channels()?, k, permutation.clone(), qup_pattern(len, np)?)?;
            let setup = ArraySetup { crossbar: xb.clone(), thresholds: chars.thresholds.values.clone(), spec };
            let t = simulate_arrays(cfg, &setup, cfg.sweep_stop)?;
            report.rows.push(ResultRow::new(cfg, &cfg.perm_kind.to_string(), mode.name(), "np", np as f64, &t));
            curve.push((np, t));
        }
        if curve.len() >= 3 {
            let (arg, best) = curve.iter().enumerate().min_by(|a, b| a.1 .1.ber().total_cmp(&b.1 .1.ber())).unwrap();
            let first = &curve[0].1;
            let last = &curve[curve.len() - 1].1;
            report.checks.push(Check::new(
                format!("{}: some np > 0 beats np = 0", mode.name()),
                curve[1..].iter().any(|(_, t)| t.ber() < first.ber()),
                format!("best np={} ber {:.3e} vs {:.3e}", best.0, best.1.ber(), first.ber()),
            ));
            report.checks.push(Check::new(
                format!("{}: interior minimum", mode.name()),
                arg > 0 && arg + 1 < curve.len() && last.ber() > best.1.ber(),
                format!("argmin np={}, last np={} ber {:.3e}", best.0, curve[curve.len() - 1].0, last.ber()),
            ));
        }
    }
    Ok(report)
}

/// Trains at `cfg.crossbar` and writes the chosen model plus an all-LRS current map.
pub fn run_characterize(cfg: &ExperimentConfig) -> Result<Report> {
    let xb = cfg.crossbar.clone();
    let chars = characterize(cfg, &xb, cfg.training_trials, None, true)?;
    let mut report = Report::default();
    let chosen = chars.model(cfg.model);
    report.text = format!(
        "rows {} cols {} rw {} trials {}\ntraining uncoded BER {:.4e}\nholdout uncoded BER {}\nflagged rows {:?}\n",
        xb.rows,
        xb.cols,
        xb.wire_resistance,
        cfg.training_trials,
        chars.train_ber,
        chars.holdout_ber.map_or("-".to_string(), |b| format!("{b:.4e}")),
        chars.thresholds.flagged_rows,
    );
    if let Some(h) = chars.holdout_ber {
        let ok = if chars.train_ber == 0.0 { h == 0.0 } else { (h - chars.train_ber).abs() <= 0.2 * chars.train_ber };
        report.checks.push(Check::new(
            "holdout BER within 20% of training BER",
            ok,
            format!("{h:.4e} vs {:.4e}", chars.train_ber),
        ));
    }
    if let Some(out) = &cfg.output {
        std::fs::write(out, chosen.to_toml())?;
        let mut csv_path = out.clone().into_os_string();
        csv_path.push(".currents.csv");
        let map = read_array(&xb, &BitMatrix::filled(xb.rows, xb.cols, 0))?;
        map.write_csv(std::fs::File::create(&csv_path)?)?;
        report.files.push(out.clone());
        report.files.push(csv_path.into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(rw: f64) -> ExperimentConfig {
        ExperimentConfig {
            seed: Some(3),
            rate: 0.5,
            crossbar: CrossbarConfig::with_size(4, 4, rw),
            training_trials: 120,
            sweep_training_trials: 120,
            stop: StopRule::fixed(30),
            sweep_stop: StopRule::fixed(20),
            np_grid: vec![0, 2, 4],
            ..Default::default()
        }
    }

    #[test]
    fn ideal_wires_decode_perfectly() {
        let cfg = tiny_cfg(1e-6);
        let report = run_crossbar_ber(&cfg).unwrap();
        assert_eq!(report.rows.len(), 4);
        for r in &report.rows {
            assert_eq!(r.ber, 0.0);
            assert_eq!(r.uncoded_ber, Some(0.0));
        }
    }

    #[test]
    fn stored_ones_frequency_with_puncturing() {
        let cfg = tiny_cfg(10.0);
        let chars = characterize(&cfg, &cfg.crossbar, 120, None, false).unwrap();
        let spec = build_crossbar_code(&cfg, &chars.bsc, &PermKind::OrderedBitReversal, 4).unwrap();
        let f = stored_ones_frequency(&cfg, &spec, 400).unwrap();
        assert!((f - (0.5 + 4.0 / 32.0)).abs() < 3.0 * (0.25f64 / 6400.0).sqrt() * 2.0);
    }

    #[test]
    fn punctured_cells_follow_permutation() {
        let perm = Permutation::new(vec![3, 2, 1, 0]).unwrap();
        let mask = punctured_cells(&perm, 4, 1).unwrap();
        assert_eq!(mask, vec![false, false, false, true]);
    }

    #[test]
    fn sweep_runs_and_reproduces() {
        let cfg = tiny_cfg(60.0);
        let a = run_puncture_sweep(&cfg).unwrap();
        assert_eq!(a.rows.len(), 6);
        let b = run_puncture_sweep(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
    }
}
