//! Successive-cancellation kernel.
//!
//! [`ScTrellis`] keeps one LLR row and one partial-sum row per stage, each of
//! length `N`. Stage `n` holds the (bit-reversed) channel LLRs and stage 0 the
//! decision LLRs. Because every row is full length, the partial sums of all
//! completed sub-blocks survive a rewind and re-deriving the LLRs of an
//! earlier bit only needs one top-down pass.

use crate::code::{bit_reversal_permutation, PolarCode};
use crate::error::{check_len, Result};

/// Decision LLRs are clamped to this magnitude before they become branch
/// probabilities, which keeps every path metric finite.
pub const LLR_CLAMP: f64 = 40.0;

/// Check-node update used by the trellis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckNode {
    /// Exact tanh rule.
    #[default]
    Exact,
    /// `sign(a) sign(b) min(|a|, |b|)`. Approximate; metrics lose their
    /// probabilistic meaning.
    MinSum,
}

/// `2 atanh(tanh(a/2) tanh(b/2))`, evaluated without overflow.
pub fn f_minus(a: f64, b: f64) -> f64 {
    let (abs_a, abs_b) = (a.abs(), b.abs());
    let mag = abs_a.min(abs_b) + softplus(-(abs_a + abs_b)) - softplus(-(abs_a - abs_b).abs());
    if (a < 0.0) != (b < 0.0) {
        -mag
    } else {
        mag
    }
}

fn f_min_sum(a: f64, b: f64) -> f64 {
    let mag = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -mag
    } else {
        mag
    }
}

/// `b + (1 - 2u) a`.
#[inline]
pub fn g_plus(a: f64, b: f64, u: u8) -> f64 {
    if u & 1 == 0 {
        b + a
    } else {
        b - a
    }
}

/// `ln(1 + e^x)`.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `(ln Pr(bit = 0), ln Pr(bit = 1))` for a decision LLR, after clamping it
/// to `±LLR_CLAMP`.
pub fn branch_log_probs(llr: f64) -> (f64, f64) {
    let l = llr.clamp(-LLR_CLAMP, LLR_CLAMP);
    (-softplus(-l), -softplus(l))
}

/// Outcome of one decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Estimated message vector `û`, frozen positions included.
    pub bits: Vec<u8>,
    /// Decoded-bit events spent on this frame.
    pub visits: u64,
    /// Set when the decoder hit its work cap and finished greedily.
    pub truncated: bool,
}

/// LLR / partial-sum engine on the length-`N` code tree.
#[derive(Debug, Clone)]
pub struct ScTrellis {
    n: u32,
    llr: Vec<Vec<f64>>,
    bits: Vec<Vec<u8>>,
    cursor: usize,
    /// Bit whose stage-0 LLR is current, if any.
    computed: Option<usize>,
    check_node: CheckNode,
    perm: Vec<usize>,
}

impl ScTrellis {
    pub fn new(n: u32) -> Self {
        Self::with_check_node(n, CheckNode::Exact)
    }

    pub fn with_check_node(n: u32, check_node: CheckNode) -> Self {
        let len = 1usize << n;
        Self {
            n,
            llr: vec![vec![0.0; len]; n as usize + 1],
            bits: vec![vec![0; len]; n as usize + 1],
            cursor: 0,
            computed: None,
            check_node,
            perm: bit_reversal_permutation(n),
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Index of the next bit to decide.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Loads channel LLRs and resets the cursor to bit 0.
    pub fn load(&mut self, channel_llr: &[f64]) -> Result<()> {
        check_len(self.len(), channel_llr.len())?;
        let top = &mut self.llr[self.n as usize];
        for (dst, &p) in top.iter_mut().zip(&self.perm) {
            *dst = channel_llr[p];
        }
        self.cursor = 0;
        self.computed = None;
        Ok(())
    }

    /// Decision LLR `ln(Pr(u_i = 0 | y, û_1^{i-1}) / Pr(u_i = 1 | ...))` for
    /// the bit at the cursor. Panics if every bit has been decided.
    pub fn decision_llr(&mut self) -> f64 {
        let i = self.cursor;
        assert!(i < self.len(), "trellis cursor {i} is past the last bit");
        if self.computed == Some(i) {
            return self.llr[0][i];
        }
        let top = match self.computed {
            // The previous bit was just decided: only the stages below the
            // point where the two indices diverge are stale.
            Some(prev) if prev + 1 == i => (prev ^ i).ilog2() + 1,
            _ => self.n,
        };
        for s in (1..=top as usize).rev() {
            let half = 1usize << (s - 1);
            let start = i & !((half << 1) - 1);
            let (upper, lower) = self.llr.split_at_mut(s);
            let src = &lower[0][start..start + 2 * half];
            let dst = &mut upper[s - 1];
            if i & half == 0 {
                for k in 0..half {
                    dst[start + k] = match self.check_node {
                        CheckNode::Exact => f_minus(src[k], src[half + k]),
                        CheckNode::MinSum => f_min_sum(src[k], src[half + k]),
                    };
                }
            } else {
                let sums = &self.bits[s - 1][start..start + half];
                for k in 0..half {
                    dst[start + half + k] = g_plus(src[k], src[half + k], sums[k]);
                }
            }
        }
        self.computed = Some(i);
        self.llr[0][i]
    }

    /// Fixes the bit at the cursor and advances.
    pub fn decide(&mut self, bit: u8) {
        let i = self.cursor;
        assert!(i < self.len(), "trellis cursor {i} is past the last bit");
        self.bits[0][i] = bit & 1;
        // Fold every sub-block that this bit completes into the next stage.
        let mut s = 0;
        while s < self.n as usize && (i >> s) & 1 == 1 {
            let half = 1usize << s;
            let start = i + 1 - 2 * half;
            let (lower, upper) = self.bits.split_at_mut(s + 1);
            let (src, dst) = (&lower[s], &mut upper[0]);
            for k in 0..half {
                dst[start + k] = src[start + k] ^ src[start + half + k];
                dst[start + half + k] = src[start + half + k];
            }
            s += 1;
        }
        self.cursor += 1;
    }

    /// Moves the cursor back to bit `i`. Decisions before `i` are kept.
    pub fn rewind(&mut self, i: usize) {
        assert!(
            i <= self.cursor,
            "cannot rewind forward ({} -> {i})",
            self.cursor
        );
        if i != self.cursor {
            self.cursor = i;
            self.computed = None;
        }
    }
}

/// Plain SC decoder.
#[derive(Debug, Clone)]
pub struct ScDecoder<'a> {
    code: &'a PolarCode,
    trellis: ScTrellis,
}

impl<'a> ScDecoder<'a> {
    pub fn new(code: &'a PolarCode) -> Self {
        Self::with_check_node(code, CheckNode::Exact)
    }

    pub fn with_check_node(code: &'a PolarCode, check_node: CheckNode) -> Self {
        Self {
            code,
            trellis: ScTrellis::with_check_node(code.n(), check_node),
        }
    }

    pub fn decode(&mut self, channel_llr: &[f64]) -> Result<DecodeResult> {
        self.trellis.load(channel_llr)?;
        let len = self.code.len();
        let mut bits = vec![0u8; len];
        for (i, b) in bits.iter_mut().enumerate() {
            let llr = self.trellis.decision_llr();
            *b = u8::from(!self.code.is_frozen(i) && llr < 0.0);
            self.trellis.decide(*b);
        }
        Ok(DecodeResult {
            bits,
            visits: len as u64,
            truncated: false,
        })
    }
}

/// Decodes one frame with plain successive cancellation.
pub fn sc_decode(channel_llr: &[f64], code: &PolarCode) -> Result<DecodeResult> {
    ScDecoder::new(code).decode(channel_llr)
}
