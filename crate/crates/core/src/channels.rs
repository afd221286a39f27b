//! Binary-input memoryless channel models.
//!
//! Every position of a non-stationary code sees its own [`ChannelModel`]. The
//! construction needs the symmetric capacity and the Bhattacharyya parameter
//! of each one; the decoder needs hard-decision log-likelihood ratios.
//!
//! Capacities are in bits (base-2 logs). LLRs use natural logs and are
//! positive when the stored bit is more likely to be 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude that replaces an infinite LLR from a noiseless observation.
pub const DEFAULT_LLR_SATURATION: f64 = 40.0;

/// A binary-input channel with a finite output alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelModel {
    /// Erasure channel: output is the input or an erasure symbol.
    Bec { eps: f64 },
    /// Symmetric crossover channel with `p <= 1/2`.
    Bsc { p: f64 },
    /// Asymmetric crossover channel: `p01 = P(read 1 | stored 0)`,
    /// `p10 = P(read 0 | stored 1)`.
    Bac { p01: f64, p10: f64 },
}

/// A hard channel output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HardObservation {
    Bit(u8),
    Erased,
    /// Position was never transmitted; carries no information.
    Punctured,
}

fn check_prob(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

/// `x log2(x / y)` with the `0 log 0 = 0` convention.
fn plogq(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y).log2()
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

impl ChannelModel {
    pub fn bec(eps: f64) -> Result<Self> {
        check_prob("eps", eps)?;
        Ok(Self::Bec { eps })
    }

    /// Crossover channel. Rejects `p > 1/2`; use [`ChannelModel::bsc_normalized`]
    /// for estimates that may land above one half.
    pub fn bsc(p: f64) -> Result<Self> {
        check_prob("p", p)?;
        if p > 0.5 {
            return Err(Error::InvalidProbability { name: "p (> 1/2)", value: p });
        }
        Ok(Self::Bsc { p })
    }

    /// Builds a BSC from a raw crossover estimate, relabeling the outputs when
    /// the estimate exceeds one half. The flag reports whether a flip happened.
    pub fn bsc_normalized(p: f64) -> Result<(Self, bool)> {
        check_prob("p", p)?;
        if p > 0.5 {
            Ok((Self::Bsc { p: 1.0 - p }, true))
        } else {
            Ok((Self::Bsc { p }, false))
        }
    }

    pub fn bac(p01: f64, p10: f64) -> Result<Self> {
        check_prob("p01", p01)?;
        check_prob("p10", p10)?;
        if p01 >= 1.0 || p10 >= 1.0 {
            return Err(Error::InvalidProbability { name: "p01/p10 (must be < 1)", value: p01.max(p10) });
        }
        Ok(Self::Bac { p01, p10 })
    }

    /// Transition matrix as `(W(y|0), W(y|1))` over the output alphabet.
    /// BEC outputs are ordered `[0, 1, erased]`; BSC/BAC outputs are `[0, 1]`.
    pub fn transitions(&self) -> Vec<(f64, f64)> {
        match *self {
            Self::Bec { eps } => vec![(1.0 - eps, 0.0), (0.0, 1.0 - eps), (eps, eps)],
            Self::Bsc { p } => vec![(1.0 - p, p), (p, 1.0 - p)],
            Self::Bac { p01, p10 } => vec![(1.0 - p01, p10), (p01, 1.0 - p10)],
        }
    }

    /// Symmetric capacity `I(W)` in bits, evaluated as the double sum over
    /// outputs and uniform inputs.
    pub fn symmetric_capacity(&self) -> f64 {
        let cap: f64 = self
            .transitions()
            .iter()
            .map(|&(w0, w1)| {
                let wy = 0.5 * (w0 + w1);
                0.5 * plogq(w0, wy) + 0.5 * plogq(w1, wy)
            })
            .sum();
        cap.clamp(0.0, 1.0)
    }

    /// Bhattacharyya parameter `Z(W) = sum_y sqrt(W(y|0) W(y|1))`.
    pub fn bhattacharyya(&self) -> f64 {
        let z = match *self {
            Self::Bec { eps } => eps,
            Self::Bsc { p } => 2.0 * (p * (1.0 - p)).sqrt(),
            Self::Bac { p01, p10 } => ((1.0 - p01) * p10).sqrt() + (p01 * (1.0 - p10)).sqrt(),
        };
        z.clamp(0.0, 1.0)
    }

    /// Natural-log LLR `ln W(y|0)/W(y|1)`, saturated at `saturation`.
    pub fn llr(&self, y: HardObservation, saturation: f64) -> Result<f64> {
        let bit = match y {
            HardObservation::Punctured => return Ok(0.0),
            HardObservation::Erased => {
                return match self {
                    Self::Bec { .. } => Ok(0.0),
                    _ => Err(Error::ErasureOnNonErasureChannel),
                }
            }
            HardObservation::Bit(b) => b & 1,
        };
        let (w0, w1) = match *self {
            Self::Bec { eps } => {
                if eps >= 1.0 {
                    // Never outputs a bit; treat as uninformative.
                    return Ok(0.0);
                }
                return Ok(if bit == 0 { saturation } else { -saturation });
            }
            _ => self.transitions()[bit as usize],
        };
        Ok(saturating_ln_ratio(w0, w1, saturation))
    }

    /// Probability that the stored bit `x` is read back as `y` (hard outputs).
    pub fn flip_probability(&self, x: u8) -> f64 {
        match *self {
            Self::Bec { .. } => 0.0,
            Self::Bsc { p } => p,
            Self::Bac { p01, p10 } => {
                if x & 1 == 0 {
                    p01
                } else {
                    p10
                }
            }
        }
    }
}

fn saturating_ln_ratio(num: f64, den: f64, saturation: f64) -> f64 {
    if num <= 0.0 && den <= 0.0 {
        0.0
    } else if den <= 0.0 {
        saturation
    } else if num <= 0.0 {
        -saturation
    } else {
        // difference of logs keeps llr(0) == -llr(1) exactly for symmetric channels
        (num.ln() - den.ln()).clamp(-saturation, saturation)
    }
}
