//! Cell characterization from training reads.
//!
//! Two steps: one detection threshold per wordline, fit on training currents,
//! then per-cell crossover probabilities counted under those thresholds. A
//! cell reads as 1 (high resistance) when its current is below its row's
//! threshold.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{binary_entropy, ChannelModel};
use crate::crossbar::{read_array, BitMatrix, CrossbarConfig, CurrentMap};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Default number of training arrays.
pub const DEFAULT_TRIALS: usize = 2000;
/// Default number of held-out arrays.
pub const DEFAULT_HOLDOUT: usize = 500;
/// Smallest training set accepted by the threshold fit.
pub const MIN_TRIALS: usize = 100;

/// Stored arrays and the currents read back from them.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub rows: usize,
    pub cols: usize,
    pub labels: Vec<BitMatrix>,
    pub currents: Vec<CurrentMap>,
}

impl TrainingSet {
    pub fn new(labels: Vec<BitMatrix>, currents: Vec<CurrentMap>) -> Result<Self> {
        let first = labels.first().ok_or_else(|| Error::InvalidTraining("no trials".into()))?;
        let (rows, cols) = (first.rows, first.cols);
        if labels.len() != currents.len() {
            return Err(Error::LengthMismatch { expected: labels.len(), got: currents.len() });
        }
        let ok = labels.iter().all(|b| b.rows == rows && b.cols == cols)
            && currents.iter().all(|c| c.rows == rows && c.cols == cols);
        if !ok {
            return Err(Error::InvalidTraining("trials disagree on array shape".into()));
        }
        Ok(Self { rows, cols, labels, currents })
    }

    /// Simulates `trials` uniformly random arrays. Cells marked in
    /// `forced_ones` (row-major) always store 1.
    pub fn generate(
        cfg: &CrossbarConfig,
        trials: usize,
        seed: u64,
        stream: u64,
        forced_ones: Option<&[bool]>,
    ) -> Result<Self> {
        cfg.validate()?;
        if let Some(mask) = forced_ones {
            if mask.len() != cfg.cells() {
                return Err(Error::LengthMismatch { expected: cfg.cells(), got: mask.len() });
            }
        }
        let mut labels = Vec::with_capacity(trials);
        let mut currents = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rng = stream_rng(seed, stream, t as u64);
            let bits: Vec<u8> = (0..cfg.cells())
                .map(|c| if forced_ones.is_some_and(|m| m[c]) { 1 } else { rng.gen_range(0..2) })
                .collect();
            let bits = BitMatrix::new(cfg.rows, cfg.cols, bits)?;
            currents.push(read_array(cfg, &bits)?);
            labels.push(bits);
        }
        Self::new(labels, currents)
    }

    pub fn trials(&self) -> usize {
        self.labels.len()
    }

    fn row_samples(&self, row: usize) -> Vec<(f64, u8)> {
        let mut out = Vec::with_capacity(self.trials() * self.cols);
        for (bits, amps) in self.labels.iter().zip(&self.currents) {
            for j in 0..self.cols {
                out.push((amps.get(row, j), bits.get(row, j)));
            }
        }
        out
    }
}

/// Input to the per-row logistic fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdFeature {
    #[default]
    Current,
    LogCurrent,
}

/// How thresholds are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMethod {
    #[default]
    Logistic,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    pub values: Vec<f64>,
    /// Rows whose training labels were all equal or whose fit had no slope.
    pub flagged_rows: Vec<usize>,
}

/// Decision rule shared by training and deployment.
#[inline]
pub fn detect(current: f64, threshold: f64) -> u8 {
    u8::from(current < threshold)
}

/// Threshold used when a row cannot be fit: midway between the ideal
/// low- and high-resistance currents.
pub fn fallback_threshold(cfg: &CrossbarConfig) -> f64 {
    0.5 * (cfg.v_read / cfg.r_lrs + cfg.v_read / cfg.r_hrs)
}

pub fn fit_thresholds(train: &TrainingSet, method: ThresholdMethod, fallback: f64) -> Result<Thresholds> {
    fit_thresholds_with(train, method, ThresholdFeature::default(), fallback)
}

pub fn fit_thresholds_with(
    train: &TrainingSet,
    method: ThresholdMethod,
    feature: ThresholdFeature,
    fallback: f64,
) -> Result<Thresholds> {
    if train.trials() < MIN_TRIALS {
        return Err(Error::InvalidTraining(format!("{} trials, need at least {MIN_TRIALS}", train.trials())));
    }
    let mut values = Vec::with_capacity(train.rows);
    let mut flagged_rows = Vec::new();
    for row in 0..train.rows {
        let samples = train.row_samples(row);
        let fit = match method {
            ThresholdMethod::Logistic => logistic_threshold(&samples, feature),
            ThresholdMethod::Exhaustive => exhaustive_threshold(&samples),
        };
        match fit {
            Some(t) => values.push(t),
            None => {
                values.push(fallback);
                flagged_rows.push(row);
            }
        }
    }
    Ok(Thresholds { values, flagged_rows })
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^t) without overflow
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// One-dimensional logistic regression `P(bit = 1) = s(w0 + w1 f)`, fit by
/// damped Newton steps. Returns the current where the probability is 1/2.
///
/// A tiny ridge keeps the Hessian invertible on separable rows.
pub fn logistic_threshold(samples: &[(f64, u8)], feature: ThresholdFeature) -> Option<f64> {
    const MAX_STEPS: usize = 100;
    const GRAD_TOL: f64 = 1e-10;
    const RIDGE: f64 = 1e-8;
    let ones = samples.iter().filter(|s| s.1 == 1).count();
    if ones == 0 || ones == samples.len() {
        return None;
    }
    let map = |i: f64| match feature {
        ThresholdFeature::Current => i,
        ThresholdFeature::LogCurrent => i.max(f64::MIN_POSITIVE).ln(),
    };
    let raw: Vec<f64> = samples.iter().map(|s| map(s.0)).collect();
    let m = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / m;
    let sd = (raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m).sqrt();
    if sd == 0.0 {
        return None;
    }
    let f: Vec<f64> = raw.iter().map(|v| (v - mean) / sd).collect();
    let y: Vec<f64> = samples.iter().map(|s| f64::from(s.1)).collect();
    let loss = |w: [f64; 2]| -> f64 {
        let nll: f64 = f.iter().zip(&y).map(|(&fi, &yi)| softplus(w[0] + w[1] * fi) - yi * (w[0] + w[1] * fi)).sum();
        nll / m + 0.5 * RIDGE * (w[0] * w[0] + w[1] * w[1])
    };
    let mut w = [0.0f64, 0.0];
    let mut current = loss(w);
    for _ in 0..MAX_STEPS {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&fi, &yi) in f.iter().zip(&y) {
            let p = sigmoid(w[0] + w[1] * fi);
            let r = p - yi;
            let s = p * (1.0 - p);
            g0 += r;
            g1 += r * fi;
            h00 += s;
            h01 += s * fi;
            h11 += s * fi * fi;
        }
        g0 = g0 / m + RIDGE * w[0];
        g1 = g1 / m + RIDGE * w[1];
        if g0.abs().max(g1.abs()) < GRAD_TOL {
            break;
        }
        h00 = h00 / m + RIDGE;
        h01 /= m;
        h11 = h11 / m + RIDGE;
        let det = h00 * h11 - h01 * h01;
        let step = [(h11 * g0 - h01 * g1) / det, (h00 * g1 - h01 * g0) / det];
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let cand = [w[0] - t * step[0], w[1] - t * step[1]];
            let l = loss(cand);
            if l <= current {
                w = cand;
                moved = l < current;
                current = l;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if w[1].abs() < 1e-12 {
        return None;
    }
    let boundary = mean + sd * (-w[0] / w[1]);
    Some(match feature {
        ThresholdFeature::Current => boundary,
        ThresholdFeature::LogCurrent => boundary.exp(),
    })
}

/// Threshold minimizing the empirical error count. Among equally good cuts
/// the widest gap wins; the threshold is the gap's midpoint.
pub fn exhaustive_threshold(samples: &[(f64, u8)]) -> Option<f64> {
    let ones = samples.iter().filter(|s| s.1 == 1).count();
    if ones == 0 || ones == samples.len() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    // cut m puts s[..m] below the threshold (read as 1)
    let mut errors = ones;
    let mut best: Option<(usize, f64, usize)> = None;
    for m in 1..s.len() {
        errors = if s[m - 1].1 == 1 { errors - 1 } else { errors + 1 };
        let gap = s[m].0 - s[m - 1].0;
        if gap <= 0.0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((e, g, _)) => errors < e || (errors == e && gap > g),
        };
        if better {
            best = Some((errors, gap, m));
        }
    }
    best.map(|(_, _, m)| 0.5 * (s[m - 1].0 + s[m].0))
}

/// Per-cell error counts under fixed thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCounts {
    pub rows: usize,
    pub cols: usize,
    pub trials: usize,
    pub stored0: Vec<u64>,
    pub errors0: Vec<u64>,
    pub stored1: Vec<u64>,
    pub errors1: Vec<u64>,
}

impl CellCounts {
    pub fn errors(&self, cell: usize) -> u64 {
        self.errors0[cell] + self.errors1[cell]
    }

    pub fn total_errors(&self) -> u64 {
        self.errors0.iter().chain(&self.errors1).sum()
    }

    pub fn bit_error_rate(&self) -> f64 {
        self.total_errors() as f64 / (self.trials * self.rows * self.cols) as f64
    }

    /// Raw per-cell rates `(p, p01, p10)` without clamping.
    pub fn raw_rates(&self, cell: usize) -> (f64, f64, f64) {
        let ratio = |e: u64, n: u64| if n == 0 { f64::NAN } else { e as f64 / n as f64 };
        (
            self.errors(cell) as f64 / self.trials as f64,
            ratio(self.errors0[cell], self.stored0[cell]),
            ratio(self.errors1[cell], self.stored1[cell]),
        )
    }
}

pub fn count_errors(set: &TrainingSet, thresholds: &[f64]) -> Result<CellCounts> {
    if thresholds.len() != set.rows {
        return Err(Error::LengthMismatch { expected: set.rows, got: thresholds.len() });
    }
    let cells = set.rows * set.cols;
    let mut c = CellCounts {
        rows: set.rows,
        cols: set.cols,
        trials: set.trials(),
        stored0: vec![0; cells],
        errors0: vec![0; cells],
        stored1: vec![0; cells],
        errors1: vec![0; cells],
    };
    for (bits, amps) in set.labels.iter().zip(&set.currents) {
        for i in 0..set.rows {
            for j in 0..set.cols {
                let cell = i * set.cols + j;
                let stored = bits.get(i, j);
                let wrong = u64::from(detect(amps.get(i, j), thresholds[i]) != stored);
                if stored == 0 {
                    c.stored0[cell] += 1;
                    c.errors0[cell] += wrong;
                } else {
                    c.stored1[cell] += 1;
                    c.errors1[cell] += wrong;
                }
            }
        }
    }
    Ok(c)
}

/// Keeps an estimate from `count` observations inside `[1/(2 count), 1 - 1/(2 count)]`.
pub fn clamp_estimate(errors: u64, count: u64) -> f64 {
    let n = count.max(1) as f64;
    let lo = 0.5 / n;
    (errors as f64 / n).clamp(lo, 1.0 - lo)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ErrorModel {
    Bsc { p: Vec<f64> },
    Bac { p01: Vec<f64>, p10: Vec<f64> },
}

/// Thresholds and per-cell channel estimates for one array geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCharacterization {
    pub rows: usize,
    pub cols: usize,
    pub trials: usize,
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub flagged_rows: Vec<usize>,
    /// Cells that never stored one of the two symbols during training.
    #[serde(default)]
    pub flagged_cells: Vec<usize>,
    pub model: ErrorModel,
}

pub fn estimate_bsc(train: &TrainingSet, thresholds: &Thresholds) -> Result<CellCharacterization> {
    let counts = count_errors(train, &thresholds.values)?;
    let t = counts.trials as u64;
    let p = (0..counts.rows * counts.cols).map(|c| clamp_estimate(counts.errors(c), t)).collect();
    Ok(CellCharacterization {
        rows: counts.rows,
        cols: counts.cols,
        trials: counts.trials,
        thresholds: thresholds.values.clone(),
        flagged_rows: thresholds.flagged_rows.clone(),
        flagged_cells: Vec::new(),
        model: ErrorModel::Bsc { p },
    })
}

pub fn estimate_bac(train: &TrainingSet, thresholds: &Thresholds) -> Result<CellCharacterization> {
    let counts = count_errors(train, &thresholds.values)?;
    let cells = counts.rows * counts.cols;
    let p01 = (0..cells).map(|c| clamp_estimate(counts.errors0[c], counts.stored0[c])).collect();
    let p10 = (0..cells).map(|c| clamp_estimate(counts.errors1[c], counts.stored1[c])).collect();
    let flagged_cells = (0..cells).filter(|&c| counts.stored0[c] == 0 || counts.stored1[c] == 0).collect();
    Ok(CellCharacterization {
        rows: counts.rows,
        cols: counts.cols,
        trials: counts.trials,
        thresholds: thresholds.values.clone(),
        flagged_rows: thresholds.flagged_rows.clone(),
        flagged_cells,
        model: ErrorModel::Bac { p01, p10 },
    })
}

impl CellCharacterization {
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    /// One channel per cell, row-major. Symmetric estimates above one half
    /// are kept as equal-parameter asymmetric channels so LLR signs stay right.
    pub fn channels(&self) -> Result<Vec<ChannelModel>> {
        match &self.model {
            ErrorModel::Bsc { p } => p
                .iter()
                .map(|&p| if p <= 0.5 { ChannelModel::bsc(p) } else { ChannelModel::bac(p, p) })
                .collect(),
            ErrorModel::Bac { p01, p10 } => p01.iter().zip(p10).map(|(&a, &b)| ChannelModel::bac(a, b)).collect(),
        }
    }

    /// Crossover probabilities averaged over the two stored symbols.
    pub fn mean_flip(&self) -> Vec<f64> {
        match &self.model {
            ErrorModel::Bsc { p } => p.clone(),
            ErrorModel::Bac { p01, p10 } => p01.iter().zip(p10).map(|(a, b)| 0.5 * (a + b)).collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("characterization serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        let cells = c.rows * c.cols;
        let lens: Vec<usize> = match &c.model {
            ErrorModel::Bsc { p } => vec![p.len()],
            ErrorModel::Bac { p01, p10 } => vec![p01.len(), p10.len()],
        };
        if c.thresholds.len() != c.rows || lens.iter().any(|&l| l != cells) {
            return Err(Error::Parse { line: 0, msg: "table sizes do not match rows x cols".into() });
        }
        c.channels()?;
        Ok(c)
    }
}

/// Crossover probability of the single BSC whose capacity equals the mean
/// capacity of BSCs with the given crossovers.
pub fn average_design_channel(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::InvalidTraining("no crossover probabilities".into()));
    }
    for &v in p {
        if !(0.0..=0.5).contains(&v) {
            return Err(Error::InvalidProbability { name: "p", value: v });
        }
    }
    let target = p.iter().map(|&v| binary_entropy(v)).sum::<f64>() / p.len() as f64;
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
