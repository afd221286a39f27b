//! Exact synthesized channels for small blocklengths.
//!
//! Output alphabets are carried through the polarization transform without
//! merging or quantization, so results are exact up to floating point. The
//! alphabet grows quickly and is capped; erasure-type inputs take a scalar
//! shortcut that works at any length.

use crate::channels::ChannelModel;
use crate::construction::{log2_len, Permutation};
use crate::error::{Error, Result};

/// Default cap on the size of a synthesized output alphabet.
pub const DEFAULT_ALPHABET_CAP: usize = 1 << 20;

const ROW_SUM_TOL: f64 = 1e-12;

/// A binary-input channel given by its transition table.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteChannel {
    /// `(W(y|0), W(y|1))` for each output `y`.
    probs: Vec<(f64, f64)>,
}

impl DiscreteChannel {
    pub fn new(probs: Vec<(f64, f64)>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidChannel("empty output alphabet".into()));
        }
        if probs.iter().any(|&(a, b)| !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite())) {
            return Err(Error::InvalidChannel("negative or non-finite entry".into()));
        }
        let (s0, s1) = probs.iter().fold((0.0, 0.0), |(s0, s1), &(a, b)| (s0 + a, s1 + b));
        if (s0 - 1.0).abs() > ROW_SUM_TOL || (s1 - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidChannel(format!("rows sum to {s0} and {s1}")));
        }
        Ok(Self { probs })
    }

    /// Erasure channel with outputs `[0, 1, erased]`.
    pub fn bec(eps: f64) -> Self {
        Self { probs: vec![(1.0 - eps, 0.0), (0.0, 1.0 - eps), (eps, eps)] }
    }

    pub fn outputs(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[(f64, f64)] {
        &self.probs
    }

    pub fn capacity(&self) -> f64 {
        let plogq = |x: f64, y: f64| if x <= 0.0 { 0.0 } else { x * (x / y).log2() };
        self.probs
            .iter()
            .map(|&(w0, w1)| {
                let wy = 0.5 * (w0 + w1);
                0.5 * plogq(w0, wy) + 0.5 * plogq(w1, wy)
            })
            .sum()
    }

    pub fn bhattacharyya(&self) -> f64 {
        self.probs.iter().map(|&(a, b)| (a * b).sqrt()).sum()
    }

    /// Erasure probability if every output is either fully informative or
    /// fully uninformative.
    pub fn as_bec(&self) -> Option<f64> {
        const TOL: f64 = 1e-12;
        let mut eps = 0.0;
        for &(a, b) in &self.probs {
            if a <= TOL || b <= TOL {
                continue;
            }
            if (a - b).abs() <= TOL * a.max(b).max(1.0) {
                eps += a;
            } else {
                return None;
            }
        }
        Some(eps)
    }

    /// Crossover probability if, after merging outputs with equal likelihood
    /// ratios, the channel is a binary symmetric channel.
    pub fn as_bsc(&self) -> Option<f64> {
        const TOL: f64 = 1e-12;
        // merged classes keyed by likelihood ratio
        let mut classes: Vec<(f64, f64)> = Vec::new();
        for &(a, b) in &self.probs {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            match classes.iter_mut().find(|(c0, c1)| (a * c1 - b * c0).abs() <= TOL * (a + b) * (c0 + c1)) {
                Some(c) => {
                    c.0 += a;
                    c.1 += b;
                }
                None => classes.push((a, b)),
            }
        }
        match classes.as_slice() {
            [(a, b)] if (a - b).abs() <= TOL => Some(0.5),
            [(a0, b0), (a1, b1)] if (a0 - b1).abs() <= TOL && (b0 - a1).abs() <= TOL => Some(b0.min(*a0)),
            _ => None,
        }
    }
}

impl From<&ChannelModel> for DiscreteChannel {
    fn from(w: &ChannelModel) -> Self {
        Self { probs: w.transitions() }
    }
}

/// One polarization step `(W0, W1) -> (W', W'')`.
///
/// `W'` has outputs `(y0, y1)` indexed `y0 * M1 + y1`; `W''` has outputs
/// `(y0, y1, u0)` indexed `(y0 * M1 + y1) * 2 + u0`.
pub fn single_step(w0: &DiscreteChannel, w1: &DiscreteChannel) -> Result<(DiscreteChannel, DiscreteChannel)> {
    single_step_capped(w0, w1, DEFAULT_ALPHABET_CAP)
}

pub fn single_step_capped(
    w0: &DiscreteChannel,
    w1: &DiscreteChannel,
    cap: usize,
) -> Result<(DiscreteChannel, DiscreteChannel)> {
    let (m0, m1) = (w0.outputs(), w1.outputs());
    let size = m0.saturating_mul(m1).saturating_mul(2);
    if size > cap {
        return Err(Error::AlphabetOverflow { size, cap });
    }
    let p0 = |y: usize, x: u8| if x == 0 { w0.probs[y].0 } else { w0.probs[y].1 };
    let p1 = |y: usize, x: u8| if x == 0 { w1.probs[y].0 } else { w1.probs[y].1 };
    let mut minus = Vec::with_capacity(m0 * m1);
    let mut plus = Vec::with_capacity(m0 * m1 * 2);
    for y0 in 0..m0 {
        for y1 in 0..m1 {
            let joint = |u0: u8, u1: u8| 0.5 * p0(y0, u0 ^ u1) * p1(y1, u1);
            minus.push((joint(0, 0) + joint(0, 1), joint(1, 0) + joint(1, 1)));
            for u0 in 0..2u8 {
                plus.push((joint(u0, 0), joint(u0, 1)));
            }
        }
    }
    Ok((DiscreteChannel { probs: minus }, DiscreteChannel { probs: plus }))
}

/// All synthesized channels, indexed like the final polarization level.
pub fn polarize_exact(channels: &[DiscreteChannel]) -> Result<Vec<DiscreteChannel>> {
    polarize_exact_capped(channels, DEFAULT_ALPHABET_CAP)
}

pub fn polarize_exact_capped(channels: &[DiscreteChannel], cap: usize) -> Result<Vec<DiscreteChannel>> {
    let n = log2_len(channels.len())?;
    if let Some(eps) = channels.iter().map(DiscreteChannel::as_bec).collect::<Option<Vec<f64>>>() {
        return Ok(polarize_bec(eps).into_iter().map(DiscreteChannel::bec).collect());
    }
    let mut level: Vec<DiscreteChannel> = channels.to_vec();
    for l in 1..=n {
        let half = 1usize << (l - 1);
        let mut next = level.clone();
        for base in (0..level.len()).step_by(half << 1) {
            for j in 0..half {
                let (a, b) = (base + j, base + half + j);
                let (minus, plus) = single_step_capped(&level[a], &level[b], cap)?;
                next[a] = minus;
                next[b] = plus;
            }
        }
        level = next;
    }
    Ok(level)
}

/// Exact erasure probabilities of all synthesized channels of erasure inputs.
pub fn polarize_bec(mut eps: Vec<f64>) -> Vec<f64> {
    let mut half = 1;
    while half < eps.len() {
        for block in eps.chunks_mut(half << 1) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y - x * y;
                *b = x * y;
            }
        }
        half <<= 1;
    }
    eps
}

fn synthesized_capacities(channels: &[DiscreteChannel], perm: &[usize], cap: usize) -> Result<Vec<f64>> {
    let arranged: Vec<DiscreteChannel> = perm.iter().map(|&p| channels[p].clone()).collect();
    Ok(polarize_exact_capped(&arranged, cap)?.iter().map(DiscreteChannel::capacity).collect())
}

/// Lexicographic successor; false once the last permutation is reached.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn check_small(len: usize) -> Result<()> {
    log2_len(len)?;
    if len > 8 {
        return Err(Error::AlphabetOverflow { size: len, cap: 8 });
    }
    Ok(())
}

/// A set of permutations with a common synthesized-capacity vector.
#[derive(Clone, Debug)]
pub struct PermutationClass {
    pub capacities: Vec<f64>,
    pub members: Vec<Permutation>,
}

/// Groups every permutation of the channels by its synthesized capacities
/// (componentwise within `1e-10`), in order of first appearance.
pub fn permutation_classes(channels: &[DiscreteChannel]) -> Result<Vec<PermutationClass>> {
    const TOL: f64 = 1e-10;
    check_small(channels.len())?;
    let mut classes: Vec<PermutationClass> = Vec::new();
    let mut p: Vec<usize> = (0..channels.len()).collect();
    loop {
        let caps = synthesized_capacities(channels, &p, DEFAULT_ALPHABET_CAP)?;
        let member = Permutation::new(p.clone())?;
        match classes.iter_mut().find(|c| c.capacities.iter().zip(&caps).all(|(a, b)| (a - b).abs() <= TOL)) {
            Some(c) => c.members.push(member),
            None => classes.push(PermutationClass { capacities: caps, members: vec![member] }),
        }
        if !next_permutation(&mut p) {
            break;
        }
    }
    Ok(classes)
}

/// Sum of the `k` largest values.
pub fn top_k_sum(values: &[f64], k: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter().take(k).sum()
}

/// Exhaustively finds the permutation maximizing the total capacity of the
/// `k` best synthesized channels; the lexicographically smallest one wins ties.
pub fn best_permutation(channels: &[DiscreteChannel], k: usize) -> Result<Permutation> {
    Ok(best_permutation_with_value(channels, k)?.0)
}

pub fn best_permutation_with_value(channels: &[DiscreteChannel], k: usize) -> Result<(Permutation, f64)> {
    const TIE: f64 = 1e-12;
    check_small(channels.len())?;
    let mut p: Vec<usize> = (0..channels.len()).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let value = top_k_sum(&synthesized_capacities(channels, &p, DEFAULT_ALPHABET_CAP)?, k);
        if best.as_ref().is_none_or(|(_, b)| value > b + TIE) {
            best = Some((p.clone(), value));
        }
        if !next_permutation(&mut p) {
            break;
        }
    }
    let (p, v) = best.expect("at least one permutation");
    Ok((Permutation::new(p)?, v))
}

/// Rate-`k/N` objective of one permutation.
pub fn permutation_value(channels: &[DiscreteChannel], perm: &Permutation, k: usize) -> Result<f64> {
    Ok(top_k_sum(&synthesized_capacities(channels, perm.as_slice(), DEFAULT_ALPHABET_CAP)?, k))
}

/// Closed-form synthesized erasure probabilities of four erasure channels
/// `e1 >= e2 >= e3 >= e4` under the three class representatives
/// `[0,1,2,3]`, `[0,2,1,3]` and `[0,3,1,2]`.
pub fn four_bec_closed_forms(e: [f64; 4]) -> [[f64; 4]; 3] {
    let [e1, e2, e3, e4] = e;
    let prod = e1 * e2 * e3 * e4;
    let s = |a: f64, b: f64| a + b - a * b;
    let z0 = e1 + e2 + e3 + e4 - e1 * e2 - e3 * e4 - s(e1, e2) * s(e3, e4);
    [
        [z0, e1 * e2 + e3 * e4 - prod, s(e1, e2) * s(e3, e4), prod],
        [z0, e1 * e3 + e2 * e4 - prod, s(e1, e3) * s(e2, e4), prod],
        [z0, e1 * e4 + e2 * e3 - prod, s(e1, e4) * s(e2, e3), prod],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(p: f64) -> DiscreteChannel {
        DiscreteChannel::from(&ChannelModel::bsc(p).unwrap())
    }

    #[test]
    fn bec_half_polarizes() {
        let (m, p) = single_step(&DiscreteChannel::bec(0.5), &DiscreteChannel::bec(0.5)).unwrap();
        assert!((m.capacity() - 0.25).abs() < 1e-12);
        assert!((p.capacity() - 0.75).abs() < 1e-12);
        assert_eq!(m.outputs(), 9);
        assert_eq!(p.outputs(), 18);
    }

    #[test]
    fn bsc_plus_is_product() {
        let (_, p) = single_step(&bsc(0.1), &bsc(0.1)).unwrap();
        assert_eq!(p.outputs(), 8);
        assert!((p.bhattacharyya() - 0.36).abs() < 1e-12);
    }

    #[test]
    fn four_becs_match_closed_form() {
        let eps = [0.4, 0.3, 0.2, 0.1];
        let ch: Vec<_> = [0usize, 3, 1, 2].iter().map(|&i| DiscreteChannel::bec(eps[i])).collect();
        let out = polarize_exact(&ch).unwrap();
        let z: Vec<f64> = out.iter().map(DiscreteChannel::bhattacharyya).collect();
        let cf = four_bec_closed_forms(eps);
        for i in 0..4 {
            assert!((z[i] - cf[2][i]).abs() < 1e-12);
        }
        assert!((z[1] - 0.0976).abs() < 1e-12);
    }

    #[test]
    fn generic_path_agrees_with_scalar_shortcut() {
        // a 4-output erasure-like channel that is not in canonical form still
        // takes the shortcut; compare against the full table path on BSC-mixed input
        let ch = vec![DiscreteChannel::bec(0.3), DiscreteChannel::bec(0.6)];
        let fast = polarize_exact(&ch).unwrap();
        let (m, p) = single_step(&ch[0], &ch[1]).unwrap();
        assert!((fast[0].capacity() - m.capacity()).abs() < 1e-12);
        assert!((fast[1].capacity() - p.capacity()).abs() < 1e-12);
    }

    #[test]
    fn perfect_partner() {
        let other = bsc(0.2);
        let (m, p) = single_step(&other, &DiscreteChannel::bec(0.0)).unwrap();
        assert!((m.capacity() - other.capacity()).abs() < 1e-12);
        assert!((p.capacity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_channels_match_regular_code() {
        let ch = vec![bsc(0.11); 4];
        let caps: Vec<f64> = polarize_exact(&ch).unwrap().iter().map(DiscreteChannel::capacity).collect();
        let classes = permutation_classes(&ch).unwrap();
        assert_eq!(classes.len(), 1);
        for (a, b) in caps.iter().zip(&classes[0].capacities) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn class_counts() {
        let becs: Vec<_> = [0.4, 0.3, 0.2, 0.1].iter().map(|&e| DiscreteChannel::bec(e)).collect();
        let classes = permutation_classes(&becs).unwrap();
        assert_eq!(classes.len(), 3);
        assert!(classes.iter().all(|c| c.members.len() == 8));
        let two = permutation_classes(&[bsc(0.1), DiscreteChannel::bec(0.4)]).unwrap();
        assert_eq!(two.len(), 1);
    }

    #[test]
    fn best_permutation_four_becs() {
        let becs: Vec<_> = [0.4, 0.3, 0.2, 0.1].iter().map(|&e| DiscreteChannel::bec(e)).collect();
        let (best, value) = best_permutation_with_value(&becs, 2).unwrap();
        let target = Permutation::new(vec![0, 3, 1, 2]).unwrap();
        assert!((permutation_value(&becs, &target, 2).unwrap() - value).abs() < 1e-12);
        assert!((permutation_value(&becs, &best, 2).unwrap() - value).abs() < 1e-12);
        // every permutation ties at k = 1 and k = 4
        for k in [1, 4] {
            assert!(best_permutation(&becs, k).unwrap().is_identity());
        }
    }

    #[test]
    fn structural_detection() {
        assert_eq!(DiscreteChannel::bec(0.3).as_bec(), Some(0.3));
        assert!(bsc(0.1).as_bec().is_none());
        assert!((bsc(0.1).as_bsc().unwrap() - 0.1).abs() < 1e-15);
        assert!(DiscreteChannel::bec(0.3).as_bsc().is_none());
        let (_, p) = single_step(&bsc(0.1), &bsc(0.2)).unwrap();
        assert!(p.as_bsc().is_none());
        let bac = DiscreteChannel::from(&ChannelModel::bac(0.1, 0.2).unwrap());
        assert!(bac.as_bsc().is_none() && bac.as_bec().is_none());
    }

    #[test]
    fn caps_and_validation() {
        let big = DiscreteChannel::new(vec![(1.0 / 600.0, 1.0 / 600.0); 600]).unwrap();
        assert!(matches!(single_step_capped(&big, &big, 1000), Err(Error::AlphabetOverflow { .. })));
        assert!(DiscreteChannel::new(vec![(0.5, 0.5), (0.4, 0.5)]).is_err());
        assert!(DiscreteChannel::new(vec![(-0.1, 0.5), (1.1, 0.5)]).is_err());
        assert!(permutation_classes(&vec![bsc(0.1); 16]).is_err());
    }

    #[test]
    fn next_permutation_enumerates_all() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }
}
