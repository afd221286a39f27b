//! Polar encoding, the storage-side permutation, and successive-cancellation decoding.
//!
//! The transform is `x = u F^{(x)n}` with `F = [[1,0],[1,1]]` and no
//! bit-reversal. Any reordering of codeword symbols happens only at the
//! storage boundary through the code's permutation.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, HardObservation, DEFAULT_LLR_SATURATION};
use crate::construction::{bit_reversal, log2_len, CodeSpec};
use crate::error::{Error, Result};

/// In-place butterfly transform; an involution.
pub fn encode_in_place(x: &mut [u8]) -> Result<()> {
    log2_len(x.len())?;
    let mut half = 1;
    while half < x.len() {
        for block in x.chunks_mut(half << 1) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half <<= 1;
    }
    Ok(())
}

pub fn encode(u: &[u8]) -> Result<Vec<u8>> {
    let mut x = u.to_vec();
    encode_in_place(&mut x)?;
    Ok(x)
}

/// Non-systematic encoding of `k` data bits placed on the information set.
pub fn encode_message(spec: &CodeSpec, d: &[u8]) -> Result<(Vec<u8>, Vec<u8>)> {
    if d.len() != spec.k {
        return Err(Error::LengthMismatch { expected: spec.k, got: d.len() });
    }
    let mut u = spec.frozen_value_vector();
    for (&i, &b) in spec.information_set().iter().zip(d) {
        u[i] = b;
    }
    let x = encode(&u)?;
    Ok((x, u))
}

/// Systematic encoding: returns `(x, u)` with `x` equal to `d` on the
/// information set and `u` equal to the frozen values elsewhere.
pub fn systematic_encode(spec: &CodeSpec, d: &[u8]) -> Result<(Vec<u8>, Vec<u8>)> {
    if d.len() != spec.k {
        return Err(Error::LengthMismatch { expected: spec.k, got: d.len() });
    }
    let mask = spec.frozen_mask();
    let mut target = spec.frozen_value_vector();
    for (&i, &b) in spec.information_set().iter().zip(d) {
        target[i] = b;
    }
    let len = spec.len();
    let mut u = vec![0u8; len];
    let mut x = vec![0u8; len];
    systematic_rec(&mask, &mut target, &mut u, &mut x);
    debug_assert!(spec.information_set().iter().zip(d).all(|(&i, &b)| x[i] == b));
    Ok((x, u))
}

// Targets are x at information positions and u at frozen ones. With
// x = [a ^ b, b], a and b the half-length transforms of u_lo and u_hi, the
// upper half is solved first and its output shifts the lower targets.
fn systematic_rec(frozen: &[bool], target: &mut [u8], u: &mut [u8], x: &mut [u8]) {
    let len = frozen.len();
    if len == 1 {
        u[0] = target[0];
        x[0] = target[0];
        return;
    }
    let h = len / 2;
    let (f_lo, f_hi) = frozen.split_at(h);
    let (t_lo, t_hi) = target.split_at_mut(h);
    let (u_lo, u_hi) = u.split_at_mut(h);
    let (x_lo, x_hi) = x.split_at_mut(h);
    systematic_rec(f_hi, t_hi, u_hi, x_hi);
    for j in 0..h {
        if !f_lo[j] {
            t_lo[j] ^= x_hi[j];
        }
    }
    systematic_rec(f_lo, t_lo, u_lo, x_lo);
    for j in 0..h {
        x_lo[j] ^= x_hi[j];
    }
}

/// Data bits of a systematic codeword.
pub fn systematic_data(spec: &CodeSpec, x: &[u8]) -> Vec<u8> {
    spec.information_set().iter().map(|&i| x[i]).collect()
}

/// Places codeword symbols at their physical positions; punctured positions hold 1.
pub fn map_to_physical(spec: &CodeSpec, x: &[u8]) -> Result<Vec<u8>> {
    let len = spec.len();
    if x.len() != len {
        return Err(Error::LengthMismatch { expected: len, got: x.len() });
    }
    let mut z = vec![1u8; len];
    for (i, &xi) in x.iter().enumerate() {
        if !spec.puncture.is_punctured(i) {
            z[spec.permutation.get(i)] = xi;
        }
    }
    Ok(z)
}

/// Channel LLRs in codeword order from observations in physical order.
pub fn map_from_physical(spec: &CodeSpec, y: &[HardObservation]) -> Result<Vec<f64>> {
    map_from_physical_with(spec, y, DEFAULT_LLR_SATURATION)
}

pub fn map_from_physical_with(spec: &CodeSpec, y: &[HardObservation], saturation: f64) -> Result<Vec<f64>> {
    map_from_physical_using(spec, &spec.channels, y, saturation)
}

/// Like [`map_from_physical_with`], but computing LLRs with `decoder_channels`
/// (codeword order) instead of the design channels.
pub fn map_from_physical_using(
    spec: &CodeSpec,
    decoder_channels: &[ChannelModel],
    y: &[HardObservation],
    saturation: f64,
) -> Result<Vec<f64>> {
    let len = spec.len();
    for got in [y.len(), decoder_channels.len()] {
        if got != len {
            return Err(Error::LengthMismatch { expected: len, got });
        }
    }
    (0..len)
        .map(|i| {
            if spec.puncture.is_punctured(i) {
                Ok(0.0)
            } else {
                decoder_channels[i].llr(y[spec.permutation.get(i)], saturation)
            }
        })
        .collect()
}

/// Check-node update used by the decoder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckNode {
    #[default]
    Exact,
    MinSum,
}

impl CheckNode {
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
        let (aa, ab) = (a.abs(), b.abs());
        let m = aa.min(ab);
        match self {
            CheckNode::MinSum => sign * m,
            // 2 atanh(tanh(a/2) tanh(b/2)) without overflow
            CheckNode::Exact => sign * (m + (-(aa + ab)).exp().ln_1p() - (-(aa - ab).abs()).exp().ln_1p()),
        }
    }
}

/// Output of one decoding call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub u_hat: Vec<u8>,
    /// `u_hat` on the information set.
    pub d_hat: Vec<u8>,
    /// `encode(u_hat)`; systematic data sits at the information set.
    pub x_hat: Vec<u8>,
    /// Information bits decided on an LLR of exactly zero.
    pub ties: usize,
}

/// Successive-cancellation decoder with reusable buffers.
///
/// Bits are decided in bit-reversed index order, which is the order under
/// which `u_i` sees the synthesized channel that the reliability recursion
/// assigns to index `i` (raw channels `2m` and `2m + 1` combine first).
/// Internally this is the natural-order decoder of `x' = u' F^{(x)n}` with
/// `x'_k = x_rev(k)` and `u'_k = u_rev(k)`.
#[derive(Clone, Debug)]
pub struct ScDecoder {
    /// Bit-reversal table.
    rev: Vec<usize>,
    /// Frozen flags and values in decoding order.
    frozen: Vec<bool>,
    frozen_values: Vec<u8>,
    info: Vec<usize>,
    check: CheckNode,
    llrs: Vec<f64>,
    scratch: Vec<f64>,
}

impl ScDecoder {
    pub fn new(spec: &CodeSpec) -> Self {
        Self::with_check_node(spec, CheckNode::Exact)
    }

    pub fn with_check_node(spec: &CodeSpec, check: CheckNode) -> Self {
        let len = spec.len();
        let rev = bit_reversal(len.trailing_zeros()).as_slice().to_vec();
        let (mask, values) = (spec.frozen_mask(), spec.frozen_value_vector());
        Self {
            frozen: rev.iter().map(|&i| mask[i]).collect(),
            frozen_values: rev.iter().map(|&i| values[i]).collect(),
            rev,
            info: spec.information_set(),
            check,
            llrs: vec![0.0; len],
            scratch: vec![0.0; len],
        }
    }

    /// Decodes LLRs given in codeword order. Ties at zero decide 0.
    pub fn decode(&mut self, llrs: &[f64]) -> Result<Decoded> {
        let len = self.frozen.len();
        if llrs.len() != len {
            return Err(Error::LengthMismatch { expected: len, got: llrs.len() });
        }
        for (dst, &src) in self.llrs.iter_mut().zip(&self.rev) {
            *dst = llrs[src];
        }
        let mut u_rev = vec![0u8; len];
        let mut x_rev = vec![0u8; len];
        let node = Node { frozen: &self.frozen, values: &self.frozen_values, check: self.check, ties: Cell::new(0) };
        node.run(0, &self.llrs, &mut self.scratch, &mut u_rev, &mut x_rev);
        let mut u_hat = vec![0u8; len];
        let mut x_hat = vec![0u8; len];
        for (k, &i) in self.rev.iter().enumerate() {
            u_hat[i] = u_rev[k];
            x_hat[i] = x_rev[k];
        }
        let d_hat = self.info.iter().map(|&i| u_hat[i]).collect();
        Ok(Decoded { u_hat, d_hat, x_hat, ties: node.ties.get() })
    }
}

struct Node<'a> {
    frozen: &'a [bool],
    values: &'a [u8],
    check: CheckNode,
    ties: Cell<usize>,
}

impl Node<'_> {
    // Decodes the sub-block starting at u index `offset`. `u` and `x` are the
    // sub-block's slices; `scratch` has room for all descendant LLRs.
    fn run(&self, offset: usize, llr: &[f64], scratch: &mut [f64], u: &mut [u8], x: &mut [u8]) {
        let len = llr.len();
        if len == 1 {
            let bit = if self.frozen[offset] {
                self.values[offset]
            } else {
                if llr[0] == 0.0 {
                    self.ties.set(self.ties.get() + 1);
                }
                u8::from(llr[0] < 0.0)
            };
            u[0] = bit;
            x[0] = bit;
            return;
        }
        let h = len / 2;
        let (child, rest) = scratch.split_at_mut(h);
        let (l_lo, l_hi) = llr.split_at(h);
        for j in 0..h {
            child[j] = self.check.apply(l_lo[j], l_hi[j]);
        }
        let (u_lo, u_hi) = u.split_at_mut(h);
        let (x_lo, x_hi) = x.split_at_mut(h);
        self.run(offset, child, rest, u_lo, x_lo);
        for j in 0..h {
            child[j] = if x_lo[j] == 0 { l_hi[j] + l_lo[j] } else { l_hi[j] - l_lo[j] };
        }
        self.run(offset + h, child, rest, u_hi, x_hi);
        for j in 0..h {
            x_lo[j] ^= x_hi[j];
        }
    }
}

/// One-shot decode with the exact check node.
pub fn sc_decode(spec: &CodeSpec, llrs: &[f64]) -> Result<Decoded> {
    ScDecoder::new(spec).decode(llrs)
}

/// One regression record for cross-implementation checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenVector {
    pub u: Vec<u8>,
    pub x: Vec<u8>,
    pub z: Vec<u8>,
    pub llrs: Vec<f64>,
    pub u_hat: Vec<u8>,
}

/// A golden-vector file: the code file it refers to plus records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenFile {
    pub spec_file: String,
    #[serde(default)]
    pub vectors: Vec<GoldenVector>,
}

impl GoldenFile {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("golden vectors serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
    }

    /// Re-runs every record against `spec`; returns the indices that disagree.
    pub fn check(&self, spec: &CodeSpec) -> Result<Vec<usize>> {
        let mut decoder = ScDecoder::new(spec);
        let mut bad = Vec::new();
        for (idx, v) in self.vectors.iter().enumerate() {
            let ok = encode(&v.u)? == v.x
                && map_to_physical(spec, &v.x)? == v.z
                && decoder.decode(&v.llrs)?.u_hat == v.u_hat;
            if !ok {
                bad.push(idx);
            }
        }
        Ok(bad)
    }
}
