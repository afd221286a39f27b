//! Experiment harness.
//!
//! An [`ExperimentConfig`] fully determines a run: every random draw comes
//! from a stream keyed by the config's seed, so rerunning a config reproduces
//! its [`ResultRow`]s bit for bit. Each run also evaluates a list of
//! [`Check`]s, the ordering and consistency properties the experiment is
//! expected to show.

mod array;
mod permclass;
mod synthetic;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::CheckNode;
use crate::construction::{OrderingMetric, PermKind};
use crate::crossbar::CrossbarConfig;
use crate::error::{Error, Result};
use crate::estimation::{ThresholdFeature, ThresholdMethod, DEFAULT_HOLDOUT, DEFAULT_TRIALS};

pub use array::{
    build_crossbar_code, characterize, run_bsc_vs_bac, run_characterize, run_crossbar_ber, run_puncture_sweep,
    simulate_arrays, stored_ones_frequency, ArraySetup, Characterized,
};
pub use permclass::run_permclass;
pub use synthetic::{run_construct, run_synthetic_bsc, simulate_bsc_frames, synthetic_channels, SyntheticOutcome};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    SyntheticBsc,
    CrossbarBer,
    BscVsBac,
    PunctureSweep,
    Permclass,
    Construct,
    Characterize,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SyntheticBsc => "synthetic-bsc",
            Self::CrossbarBer => "crossbar-ber",
            Self::BscVsBac => "bsc-vs-bac",
            Self::PunctureSweep => "puncture-sweep",
            Self::Permclass => "permclass",
            Self::Construct => "construct",
            Self::Characterize => "characterize",
        }
    }
}

/// Per-cell error model used for construction and decoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Bsc,
    Bac,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bsc => "bsc",
            Self::Bac => "bac",
        }
    }
}

/// When a Monte Carlo point stops: after `min_frames`, as soon as
/// `target_bit_errors` is reached, and never beyond `max_frames`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRule {
    pub min_frames: u64,
    pub max_frames: u64,
    /// 0 disables early stopping.
    pub target_bit_errors: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { min_frames: 0, max_frames: 100_000, target_bit_errors: 100 }
    }
}

impl StopRule {
    pub fn fixed(frames: u64) -> Self {
        Self { min_frames: frames, max_frames: frames, target_bit_errors: 0 }
    }

    pub fn done(&self, t: &Tally) -> bool {
        t.frames >= self.max_frames
            || (t.frames >= self.min_frames && self.target_bit_errors > 0 && t.bit_errors >= self.target_bit_errors)
    }
}

/// Everything a run needs. Keys missing from a config file take these defaults,
/// except `seed`, which is mandatory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: Option<u64>,
    /// log2 of the blocklength for synthetic runs; crossbar runs use rows * cols.
    pub n: u32,
    pub rate: f64,
    pub perm_kind: PermKind,
    pub np: usize,
    pub model: ModelKind,
    pub crossbar: CrossbarConfig,
    /// Wire resistances to sweep; empty means just `crossbar.wire_resistance`.
    pub rw_sweep: Vec<f64>,
    pub np_grid: Vec<usize>,
    pub p_centers: Vec<f64>,
    pub p_deviation: f64,
    pub stop: StopRule,
    /// Stop rule for the puncture sweep points.
    pub sweep_stop: StopRule,
    pub random_perms: usize,
    pub frames_per_random_perm: u64,
    pub training_trials: usize,
    pub sweep_training_trials: usize,
    pub holdout_trials: usize,
    pub threshold_method: ThresholdMethod,
    pub threshold_feature: ThresholdFeature,
    pub check_node: CheckNode,
    pub llr_saturation: f64,
    pub ordering_metric: OrderingMetric,
    /// Reuse a saved characterization instead of training.
    pub characterization: Option<PathBuf>,
    /// Number of golden vectors written by `construct`.
    pub golden_vectors: usize,
    pub permclass_trials: usize,
    /// Primary output file; the manifest goes next to it.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::default(),
            seed: None,
            n: 10,
            rate: 0.5,
            perm_kind: PermKind::OrderedBitReversal,
            np: 0,
            model: ModelKind::Bsc,
            crossbar: CrossbarConfig::default(),
            rw_sweep: Vec::new(),
            np_grid: (0..=120).step_by(8).collect(),
            p_centers: vec![0.05, 0.065, 0.08, 0.095, 0.11],
            p_deviation: 0.045,
            stop: StopRule::default(),
            sweep_stop: StopRule { min_frames: 0, max_frames: 2000, target_bit_errors: 0 },
            random_perms: 200,
            frames_per_random_perm: 50,
            training_trials: DEFAULT_TRIALS,
            sweep_training_trials: 1000,
            holdout_trials: DEFAULT_HOLDOUT,
            threshold_method: ThresholdMethod::Logistic,
            threshold_feature: ThresholdFeature::Current,
            check_node: CheckNode::Exact,
            llr_saturation: crate::channels::DEFAULT_LLR_SATURATION,
            ordering_metric: OrderingMetric::Capacity,
            characterization: None,
            golden_vectors: 4,
            permclass_trials: 1000,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::InvalidConfig("a seed is required".into()))
    }

    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return bad(format!("rate {} outside (0, 1]", self.rate));
        }
        if self.n == 0 || self.n > 20 {
            return bad(format!("n = {} outside 1..=20", self.n));
        }
        if self.stop.max_frames == 0 || self.stop.min_frames > self.stop.max_frames {
            return bad("stop rule needs 0 < min_frames <= max_frames".into());
        }
        if self.p_centers.iter().any(|&p| p - self.p_deviation < 0.0 || p + self.p_deviation > 0.5) {
            return bad("p_centers +- p_deviation must stay inside [0, 1/2]".into());
        }
        if self.rw_sweep.iter().any(|&r| r <= 0.0) {
            return bad("wire resistances must be positive".into());
        }
        self.crossbar.validate()
    }

    /// Message length for a blocklength: `floor(rate * len)`.
    pub fn dimension(&self, len: usize) -> usize {
        (self.rate * len as f64).floor() as usize
    }

    pub fn rw_points(&self) -> Vec<f64> {
        if self.rw_sweep.is_empty() {
            vec![self.crossbar.wire_resistance]
        } else {
            self.rw_sweep.clone()
        }
    }

    /// SHA-256 of the canonical serialization, output path excluded, as 16 hex digits.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig { output: None, ..self.clone() }.to_toml();
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Frame and bit error counts of one scenario.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub uncoded_bits: u64,
    pub uncoded_errors: u64,
}

impl Tally {
    pub fn record(&mut self, data_bits: usize, errors: usize) {
        self.frames += 1;
        self.bits += data_bits as u64;
        self.bit_errors += errors as u64;
        self.frame_errors += u64::from(errors > 0);
    }

    pub fn record_uncoded(&mut self, bits: usize, errors: usize) {
        self.uncoded_bits += bits as u64;
        self.uncoded_errors += errors as u64;
    }

    pub fn merge(&mut self, o: &Tally) {
        self.frames += o.frames;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.frame_errors += o.frame_errors;
        self.uncoded_bits += o.uncoded_bits;
        self.uncoded_errors += o.uncoded_errors;
    }

    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn uncoded_ber(&self) -> Option<f64> {
        (self.uncoded_bits > 0).then(|| ratio(self.uncoded_errors, self.uncoded_bits))
    }

    /// Binomial standard deviation of the BER estimate.
    pub fn ber_sigma(&self) -> f64 {
        let p = self.ber();
        if self.bits == 0 {
            0.0
        } else {
            (p * (1.0 - p) / self.bits as f64).sqrt()
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// `a <= b` up to `sigmas` combined binomial standard deviations.
pub fn ber_not_worse(a: &Tally, b: &Tally, sigmas: f64) -> bool {
    a.ber() <= b.ber() + sigmas * (a.ber_sigma().powi(2) + b.ber_sigma().powi(2)).sqrt()
}

/// One line of a result CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub scenario: String,
    pub mode: String,
    pub sweep: String,
    pub value: f64,
    pub ber: f64,
    pub fer: f64,
    pub uncoded_ber: Option<f64>,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub config_hash: String,
}

impl ResultRow {
    pub fn new(cfg: &ExperimentConfig, scenario: &str, mode: &str, sweep: &str, value: f64, t: &Tally) -> Self {
        Self {
            experiment: cfg.kind.name().to_string(),
            scenario: scenario.to_string(),
            mode: mode.to_string(),
            sweep: sweep.to_string(),
            value,
            ber: t.ber(),
            fer: t.fer(),
            uncoded_ber: t.uncoded_ber(),
            frames: t.frames,
            bit_errors: t.bit_errors,
            frame_errors: t.frame_errors,
            config_hash: cfg.hash(),
        }
    }
}

/// A property an experiment is expected to show.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Rows, checks and any files a run produced.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub rows: Vec<ResultRow>,
    pub checks: Vec<Check>,
    /// Free-form text for report-style experiments.
    pub text: String,
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn find(&self, scenario: &str, mode: &str, value: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.mode == mode && r.value == value)
    }
}

pub fn write_rows<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() }))
        .collect()
}

/// Contents of the manifest written next to every output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_hash: String,
    pub rows: usize,
    pub passed: bool,
    pub elapsed_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<Check>,
    pub config: ExperimentConfig,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    output.with_file_name(name)
}

/// Writes the CSV (when the run produced rows) and the manifest.
pub fn write_outputs(cfg: &ExperimentConfig, report: &mut Report, elapsed_seconds: f64) -> Result<()> {
    let Some(output) = &cfg.output else {
        return Ok(());
    };
    if !report.rows.is_empty() {
        write_rows(&report.rows, std::fs::File::create(output)?)?;
        report.files.insert(0, output.clone());
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.kind.name().to_string(),
        config_hash: cfg.hash(),
        rows: report.rows.len(),
        passed: report.passed(),
        elapsed_seconds,
        outputs: report.files.clone(),
        checks: report.checks.clone(),
        config: cfg.clone(),
    };
    let path = manifest_path(output);
    std::fs::write(&path, toml::to_string(&manifest).expect("manifest serializes"))?;
    report.files.push(path);
    Ok(())
}

/// Runs the experiment named by `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let mut report = match cfg.kind {
        ExperimentKind::SyntheticBsc => run_synthetic_bsc(cfg)?,
        ExperimentKind::CrossbarBer => run_crossbar_ber(cfg)?,
        ExperimentKind::BscVsBac => run_bsc_vs_bac(cfg)?,
        ExperimentKind::PunctureSweep => run_puncture_sweep(cfg)?,
        ExperimentKind::Permclass => run_permclass(cfg)?,
        ExperimentKind::Construct => run_construct(cfg)?,
        ExperimentKind::Characterize => run_characterize(cfg)?,
    };
    write_outputs(cfg, &mut report, start.elapsed().as_secs_f64())?;
    Ok(report)
}
