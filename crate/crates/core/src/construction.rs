//! Non-stationary polar code construction.
//!
//! Given one channel per physical position, a code is built in four steps:
//! pick a permutation that decides which physical channel each codeword
//! symbol travels through, evaluate the Bhattacharyya parameters of the
//! channels in codeword order (punctured positions count as useless, `Z = 1`),
//! propagate them through the polarization levels, and freeze the least
//! reliable synthesized positions.
//!
//! Permutations follow the storage convention `z[pi(i)] = x[i]`: codeword
//! symbol `i` is stored at, and read back from, physical position `pi(i)`.
//!
//! The frozen set holds the `N - k` *largest* final Bhattacharyya values.
//! Information bits go where the synthesized channels are most reliable.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelModel;
use crate::error::{Error, Result};

/// A bijection on `0..N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPermutation(format!("{map:?}")));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(len: usize) -> Self {
        Self((0..len).collect())
    }

    /// Uniformly random permutation from a seeded stream.
    pub fn random(len: usize, seed: u64) -> Self {
        let mut map: Vec<usize> = (0..len).collect();
        map.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v)
    }
}

/// `(a o b)(i) = a(b(i))`.
pub fn compose(a: &Permutation, b: &Permutation) -> Result<Permutation> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
    }
    Ok(Permutation(b.0.iter().map(|&j| a.0[j]).collect()))
}

/// Bit-reversal permutation on `n`-bit indices.
pub fn bit_reversal(n: u32) -> Permutation {
    let len = 1usize << n;
    Permutation((0..len).map(|i| reverse_bits(i, n)).collect())
}

fn reverse_bits(i: usize, n: u32) -> usize {
    if n == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - n)
    }
}

pub(crate) fn log2_len(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        Err(Error::NotPowerOfTwo(len))
    } else {
        Ok(len.trailing_zeros())
    }
}

/// Metric used to rank physical channels for the ordering permutation.
///
/// For symmetric channels both agree. For asymmetric cells they can disagree;
/// capacity is the default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingMetric {
    #[default]
    Capacity,
    Bhattacharyya,
}

/// Sorts channel indices from least to most reliable; ties keep index order.
pub fn ordering_permutation(channels: &[ChannelModel]) -> Permutation {
    ordering_permutation_by(channels, OrderingMetric::Capacity)
}

pub fn ordering_permutation_by(channels: &[ChannelModel], metric: OrderingMetric) -> Permutation {
    // keys ascend with reliability
    let keys: Vec<f64> = channels
        .iter()
        .map(|w| match metric {
            OrderingMetric::Capacity => w.symmetric_capacity(),
            OrderingMetric::Bhattacharyya => -w.bhattacharyya(),
        })
        .collect();
    let mut idx: Vec<usize> = (0..channels.len()).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    Permutation(idx)
}

/// Puncturing vector over codeword positions; 0 marks a punctured position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PuncturePattern {
    pub w: Vec<u8>,
}

impl PuncturePattern {
    pub fn none(len: usize) -> Self {
        Self { w: vec![1; len] }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn punctured_count(&self) -> usize {
        self.w.iter().filter(|&&b| b == 0).count()
    }

    pub fn is_punctured(&self, i: usize) -> bool {
        self.w[i] == 0
    }
}

/// Quasi-uniform puncturing: zero the first `np` entries, then bit-reverse.
pub fn qup_pattern(len: usize, np: usize) -> Result<PuncturePattern> {
    let n = log2_len(len)?;
    if np >= len {
        return Err(Error::TooManyPunctured { np, n: len });
    }
    let mut w = vec![1u8; len];
    for i in 0..np {
        w[reverse_bits(i, n)] = 0;
    }
    Ok(PuncturePattern { w })
}

/// Fraction of high-resistance cells when punctured cells hold 1 and the
/// rest of the codeword is uniform.
pub fn ones_frequency(len: usize, np: usize) -> f64 {
    0.5 + np as f64 / (2.0 * len as f64)
}

/// Final-stage Bhattacharyya bounds, stored as natural logs.
#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityTable {
    pub log_z: Vec<f64>,
}

impl ReliabilityTable {
    pub fn len(&self) -> usize {
        self.log_z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_z.is_empty()
    }

    pub fn z(&self) -> Vec<f64> {
        self.log_z.iter().map(|l| l.exp()).collect()
    }
}

/// `ln(a + b - ab)` from `ln a`, `ln b`, both `<= 0`.
fn log_sum_minus_product(la: f64, lb: f64) -> f64 {
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    // a + b - ab = e^hi (1 + e^(lo - hi) - e^lo)
    (hi + ((lo - hi).exp() - lo.exp()).ln_1p()).min(0.0)
}

/// Propagates initial Bhattacharyya values through all polarization levels.
///
/// At level `l` the pair `(2^l m + j, 2^l m + 2^(l-1) + j)` becomes
/// `(a + b - ab, ab)`.
pub fn zn_recursion(z0: &[f64]) -> Result<ReliabilityTable> {
    for &z in z0 {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidProbability { name: "z0", value: z });
        }
    }
    zn_recursion_log(z0.iter().map(|z| z.ln()).collect())
}

pub fn zn_recursion_log(mut log_z: Vec<f64>) -> Result<ReliabilityTable> {
    let n = log2_len(log_z.len())?;
    for level in 1..=n {
        let half = 1usize << (level - 1);
        for block in log_z.chunks_mut(half << 1) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (la, lb) = (*a, *b);
                *a = log_sum_minus_product(la, lb);
                *b = la + lb;
            }
        }
    }
    Ok(ReliabilityTable { log_z })
}

/// Indices of the `N - k` least reliable synthesized channels, ascending.
///
/// Ties on `Z` freeze the lower index first. `np` punctured positions enter
/// with `Z = 1`, so `k` may not exceed `N - np`.
pub fn select_frozen_set(table: &ReliabilityTable, k: usize, np: usize) -> Result<Vec<usize>> {
    let len = table.len();
    let available = len.saturating_sub(np);
    if k > available {
        return Err(Error::DimensionTooLarge { k, available });
    }
    let mut idx: Vec<usize> = (0..len).collect();
    idx.sort_by(|&a, &b| table.log_z[b].total_cmp(&table.log_z[a]).then(a.cmp(&b)));
    let mut frozen: Vec<usize> = idx[..len - k].to_vec();
    frozen.sort_unstable();
    Ok(frozen)
}

/// How the codeword is laid onto the physical channels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PermKind {
    Identity,
    BitReversal,
    Ordered,
    OrderedBitReversal,
    Explicit(Permutation),
    Random(u64),
}

impl std::str::FromStr for PermKind {
    type Err = Error;

    /// Accepts `identity`, `bit-reversal`, `ordered`, `ordered-bit-reversal`,
    /// `random:SEED` and `explicit:i0,i1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPermutation(format!("unknown permutation kind `{s}`"));
        Ok(match s {
            "identity" => Self::Identity,
            "bit-reversal" => Self::BitReversal,
            "ordered" => Self::Ordered,
            "ordered-bit-reversal" => Self::OrderedBitReversal,
            _ => match s.split_once(':') {
                Some(("random", seed)) => Self::Random(seed.trim().parse().map_err(|_| bad())?),
                Some(("explicit", list)) => {
                    let map = list.split(',').map(|v| v.trim().parse()).collect::<std::result::Result<Vec<usize>, _>>();
                    Self::Explicit(Permutation::new(map.map_err(|_| bad())?)?)
                }
                _ => return Err(bad()),
            },
        })
    }
}

impl std::fmt::Display for PermKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::BitReversal => write!(f, "bit-reversal"),
            Self::Ordered => write!(f, "ordered"),
            Self::OrderedBitReversal => write!(f, "ordered-bit-reversal"),
            Self::Random(seed) => write!(f, "random:{seed}"),
            Self::Explicit(p) => {
                let items: Vec<String> = p.as_slice().iter().map(ToString::to_string).collect();
                write!(f, "explicit:{}", items.join(","))
            }
        }
    }
}

/// A fully specified code: dimension, frozen set, permutation, puncturing
/// and the channel seen by each codeword position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    /// log2 of the blocklength.
    pub n: u32,
    pub k: usize,
    /// Frozen indices, ascending.
    pub frozen_set: Vec<usize>,
    /// Fixed values of the frozen indices, in `frozen_set` order.
    pub frozen_values: Vec<u8>,
    pub permutation: Permutation,
    pub puncture: PuncturePattern,
    /// `channels[i]` is the physical channel `pi(i)` that codeword symbol `i` traverses.
    pub channels: Vec<ChannelModel>,
}

/// Options that are not part of the code itself.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstructionOptions {
    pub ordering_metric: OrderingMetric,
}

/// Resolves a permutation kind against the physical channels.
pub fn resolve_permutation(
    kind: &PermKind,
    channels: &[ChannelModel],
    metric: OrderingMetric,
) -> Result<Permutation> {
    let len = channels.len();
    let n = log2_len(len)?;
    let perm = match kind {
        PermKind::Identity => Permutation::identity(len),
        PermKind::BitReversal => bit_reversal(n),
        PermKind::Ordered => ordering_permutation_by(channels, metric),
        PermKind::OrderedBitReversal => compose(&ordering_permutation_by(channels, metric), &bit_reversal(n))?,
        PermKind::Explicit(p) => {
            if p.len() != len {
                return Err(Error::LengthMismatch { expected: len, got: p.len() });
            }
            p.clone()
        }
        PermKind::Random(seed) => Permutation::random(len, *seed),
    };
    Ok(perm)
}

/// Builds a code over `channels` (physical order) with QUP puncturing of `np` positions.
pub fn build_code(channels: &[ChannelModel], k: usize, perm_kind: &PermKind, np: usize) -> Result<CodeSpec> {
    build_code_with(channels, k, perm_kind, np, ConstructionOptions::default())
}

pub fn build_code_with(
    channels: &[ChannelModel],
    k: usize,
    perm_kind: &PermKind,
    np: usize,
    options: ConstructionOptions,
) -> Result<CodeSpec> {
    let permutation = resolve_permutation(perm_kind, channels, options.ordering_metric)?;
    let puncture = qup_pattern(channels.len(), np)?;
    build_code_from_parts(channels, k, permutation, puncture)
}

/// Builds a code from an explicit permutation and puncturing vector.
pub fn build_code_from_parts(
    channels: &[ChannelModel],
    k: usize,
    permutation: Permutation,
    puncture: PuncturePattern,
) -> Result<CodeSpec> {
    let len = channels.len();
    let n = log2_len(len)?;
    if permutation.len() != len {
        return Err(Error::LengthMismatch { expected: len, got: permutation.len() });
    }
    if puncture.len() != len {
        return Err(Error::LengthMismatch { expected: len, got: puncture.len() });
    }
    let coded: Vec<ChannelModel> = (0..len).map(|i| channels[permutation.get(i)]).collect();
    let log_z0 = coded
        .iter()
        .enumerate()
        .map(|(i, w)| if puncture.is_punctured(i) { 0.0 } else { w.bhattacharyya().ln() })
        .collect();
    let table = zn_recursion_log(log_z0)?;
    let frozen_set = select_frozen_set(&table, k, puncture.punctured_count())?;
    let frozen_values = vec![0; frozen_set.len()];
    Ok(CodeSpec { n, k, frozen_set, frozen_values, permutation, puncture, channels: coded })
}

impl CodeSpec {
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-index frozen flag.
    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for &i in &self.frozen_set {
            mask[i] = true;
        }
        mask
    }

    /// Information indices, ascending.
    pub fn information_set(&self) -> Vec<usize> {
        let mask = self.frozen_mask();
        (0..self.len()).filter(|&i| !mask[i]).collect()
    }

    /// Frozen value for every index (0 at information positions).
    pub fn frozen_value_vector(&self) -> Vec<u8> {
        let mut v = vec![0; self.len()];
        for (&i, &b) in self.frozen_set.iter().zip(&self.frozen_values) {
            v[i] = b;
        }
        v
    }

    /// Recomputes the final Bhattacharyya table of this code.
    pub fn reliability(&self) -> ReliabilityTable {
        let log_z0 = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, w)| if self.puncture.is_punctured(i) { 0.0 } else { w.bhattacharyya().ln() })
            .collect();
        zn_recursion_log(log_z0).expect("blocklength validated at construction")
    }

    /// Checks internal consistency; used after deserializing.
    pub fn validate(&self) -> Result<()> {
        let len = self.len();
        for (name, got) in [
            ("permutation", self.permutation.len()),
            ("puncture", self.puncture.len()),
            ("channels", self.channels.len()),
        ] {
            if got != len {
                return Err(Error::Parse { line: 0, msg: format!("{name} has length {got}, expected {len}") });
            }
        }
        if self.frozen_set.len() + self.k != len || self.frozen_values.len() != self.frozen_set.len() {
            return Err(Error::Parse { line: 0, msg: "frozen set size must be N - k".into() });
        }
        if self.frozen_set.windows(2).any(|w| w[0] >= w[1]) || self.frozen_set.iter().any(|&i| i >= len) {
            return Err(Error::Parse { line: 0, msg: "frozen set must be ascending and in range".into() });
        }
        Ok(())
    }

    /// Serializes to the TOML code file format.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("code spec serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        spec.validate()?;
        Ok(spec)
    }
}
