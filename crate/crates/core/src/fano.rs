//! SC-Fano decoding.
//!
//! Successive cancellation that can back up. Every partial path carries a
//! normalized metric
//!
//! ```text
//! P(û_1^i) = P(û_1^{i-1}) + ln( Pr(û_i | û_1^{i-1}, y) / (1 - P_e,i) )
//! ```
//!
//! which stays near zero on a typical correct path regardless of its length.
//! The search moves forward while the best extension clears a dynamic
//! threshold `T`, tries the second-best branch of an earlier information bit
//! when it does not, and lowers `T` by `delta` when no such branch exists.
//! `T` is raised again (in `delta` steps) the first time a path reaches a new
//! node.
//!
//! Only two `K`-length vectors are kept besides the SC trellis: the metric
//! after each information decision (`beta`) and whether that decision took
//! the worse branch (`gamma`).

use serde::Serialize;

use crate::code::PolarCode;
use crate::error::{check_len, Error, Result};
use crate::sc::{branch_log_probs, CheckNode, DecodeResult, ScTrellis};

/// Default cap on decoded-bit events, as a multiple of `N`.
pub const DEFAULT_VISIT_FACTOR: u64 = 200;

/// Whether frozen positions contribute to the path metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrozenMetric {
    /// Frozen bits add `ln(Pr(0 | ...) / (1 - P_e,i))` like any other bit.
    #[default]
    Accumulate,
    /// Frozen bits leave the metric unchanged.
    Skip,
}

/// One step of the normalized metric recursion.
pub fn metric_step(prev: f64, branch_log_prob: f64, pe: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&pe) {
        return Err(Error::Unreliable { pe });
    }
    Ok(prev + branch_log_prob - (-pe).ln_1p())
}

/// Raises `threshold` in steps of `delta` while `threshold + delta < tau`.
pub fn threshold_update(threshold: f64, delta: f64, tau: f64) -> f64 {
    let mut t = threshold;
    while t + delta < tau {
        t += delta;
    }
    t
}

/// Backs up toward the root.
///
/// `beta[..j]` and `gamma[..j]` describe the current path (`j` information
/// decisions). Returns the new threshold, the new decision count and whether
/// the search resumes "from a child", i.e. must try the other branch of
/// information bit `j' + 1`.
///
/// Passing through a decision that already took the worse branch keeps
/// walking. At the root there is nothing left to try, so the threshold is
/// lowered and the search restarts from the first information bit.
pub fn backward_move(
    beta: &[f64],
    gamma: &[bool],
    mut j: usize,
    threshold: f64,
    delta: f64,
) -> (f64, usize, bool) {
    loop {
        if j == 0 {
            return (threshold - delta, 0, false);
        }
        let parent = if j == 1 { 0.0 } else { beta[j - 2] };
        if parent >= threshold {
            j -= 1;
            if !gamma[j] {
                return (threshold, j, true);
            }
        } else {
            return (threshold - delta, j, false);
        }
    }
}

enum Step {
    Forward(u8, f64),
    LowerAtRoot { reset_flag: bool },
    Backward,
}

/// Search state of one decode.
#[derive(Debug, Clone, PartialEq)]
pub struct FanoState {
    pub threshold: f64,
    pub delta: f64,
    /// Next bit to decode (0-based).
    pub i: usize,
    /// Information decisions on the current path.
    pub j: usize,
    /// Set after a backward move: the better branch at `i` was already tried.
    pub from_child: bool,
    /// Path metric after each information decision.
    pub beta: Vec<f64>,
    /// Whether each information decision took the worse branch.
    pub gamma: Vec<bool>,
    pub visits: u64,
}

impl FanoState {
    fn new(k: usize, delta: f64) -> Self {
        Self {
            threshold: 0.0,
            delta,
            i: 0,
            j: 0,
            from_child: false,
            beta: vec![0.0; k],
            gamma: vec![false; k],
            visits: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Forward,
    Backward,
    ThresholdDown,
    ThresholdUp,
}

/// One move of the search. `i` is the 1-based bit index where the move
/// happened; `j` and `T` are the values after it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub event: TraceKind,
    pub i: usize,
    pub j: usize,
    #[serde(rename = "T")]
    pub threshold: f64,
    /// Forward: metric of the taken branch. Otherwise: best metric
    /// available at `i`, or the metric that raised the threshold.
    pub metric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoConfig {
    pub delta: f64,
    /// Cap on decoded-bit events; `None` means `DEFAULT_VISIT_FACTOR * N`.
    pub max_visits: Option<u64>,
    pub frozen_metric: FrozenMetric,
    pub check_node: CheckNode,
}

impl FanoConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            max_visits: None,
            frozen_metric: FrozenMetric::Accumulate,
            check_node: CheckNode::Exact,
        }
    }
}

/// SC-Fano decoder bound to one code. Reusable across frames.
#[derive(Debug, Clone)]
pub struct FanoDecoder<'a> {
    code: &'a PolarCode,
    config: FanoConfig,
    max_visits: u64,
    neg_ln_reliability: Vec<f64>,
    trellis: ScTrellis,
    prefix_metric: Vec<f64>,
}

impl<'a> FanoDecoder<'a> {
    pub fn new(code: &'a PolarCode, config: FanoConfig) -> Result<Self> {
        if !(config.delta > 0.0 && config.delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be positive, got {}",
                config.delta
            )));
        }
        let len = code.len();
        let max_visits = config
            .max_visits
            .unwrap_or(DEFAULT_VISIT_FACTOR * len as u64);
        if max_visits < len as u64 {
            return Err(Error::Config(format!(
                "visit cap {max_visits} is smaller than the code length {len}"
            )));
        }
        let neg_ln_reliability = code.pe().iter().map(|&pe| -(-pe).ln_1p()).collect();
        Ok(Self {
            code,
            config,
            max_visits,
            neg_ln_reliability,
            trellis: ScTrellis::with_check_node(code.n(), config.check_node),
            prefix_metric: vec![0.0; len + 1],
        })
    }

    pub fn config(&self) -> &FanoConfig {
        &self.config
    }

    pub fn decode(&mut self, channel_llr: &[f64]) -> Result<DecodeResult> {
        self.decode_traced(channel_llr, |_| {})
    }

    /// Decodes one frame, reporting every move to `trace`.
    pub fn decode_traced<F>(&mut self, channel_llr: &[f64], mut trace: F) -> Result<DecodeResult>
    where
        F: FnMut(&TraceEvent),
    {
        check_len(self.code.len(), channel_llr.len())?;
        self.trellis.load(channel_llr)?;

        let code = self.code;
        let len = code.len();
        let info = code.info_set();
        let delta = self.config.delta;
        let accumulate_frozen = self.config.frozen_metric == FrozenMetric::Accumulate;
        let mut st = FanoState::new(code.k(), delta);
        let mut bits = vec![0u8; len];
        // Backward moves and threshold drops decode nothing, so bound them
        // separately from the visit cap.
        let mut idle_moves: u64 = 0;
        let max_idle = 4 * self.max_visits;
        let mut truncated = false;

        self.prefix_metric[0] = 0.0;
        while st.i < len {
            if st.visits >= self.max_visits || idle_moves >= max_idle {
                truncated = true;
                break;
            }
            let i = st.i;
            let (lp0, lp1) = branch_log_probs(self.trellis.decision_llr());
            let norm = self.neg_ln_reliability[i];

            if code.is_frozen(i) {
                let step = if accumulate_frozen { lp0 + norm } else { 0.0 };
                self.prefix_metric[i + 1] = self.prefix_metric[i] + step;
                bits[i] = 0;
                self.trellis.decide(0);
                st.i += 1;
                st.visits += 1;
                trace(&TraceEvent {
                    event: TraceKind::Forward,
                    i: i + 1,
                    j: st.j,
                    threshold: st.threshold,
                    metric: self.prefix_metric[i + 1],
                    bit: Some(0),
                });
                continue;
            }

            let base = self.prefix_metric[i];
            let m0 = base + lp0 + norm;
            let m1 = base + lp1 + norm;
            // Ties go to bit 0 on the good branch.
            let (good, good_m, bad, bad_m) = if m1 > m0 {
                (1, m1, 0, m0)
            } else {
                (0, m0, 1, m1)
            };

            let step = if good_m > st.threshold {
                if !st.from_child {
                    let parent = if st.j == 0 { 0.0 } else { st.beta[st.j - 1] };
                    st.beta[st.j] = good_m;
                    st.gamma[st.j] = false;
                    if parent < st.threshold + delta {
                        let raised = threshold_update(st.threshold, delta, good_m);
                        if raised != st.threshold {
                            st.threshold = raised;
                            trace(&TraceEvent {
                                event: TraceKind::ThresholdUp,
                                i: i + 1,
                                j: st.j,
                                threshold: st.threshold,
                                metric: good_m,
                                bit: None,
                            });
                        }
                    }
                    Step::Forward(good, good_m)
                } else if bad_m > st.threshold {
                    st.beta[st.j] = bad_m;
                    st.gamma[st.j] = true;
                    st.from_child = false;
                    Step::Forward(bad, bad_m)
                } else if st.j == 0 {
                    Step::LowerAtRoot { reset_flag: true }
                } else {
                    Step::Backward
                }
            } else if st.j == 0 {
                Step::LowerAtRoot { reset_flag: false }
            } else {
                Step::Backward
            };

            match step {
                Step::Forward(bit, metric) => {
                    bits[i] = bit;
                    self.prefix_metric[i + 1] = metric;
                    self.trellis.decide(bit);
                    st.i += 1;
                    st.j += 1;
                    st.visits += 1;
                    trace(&TraceEvent {
                        event: TraceKind::Forward,
                        i: i + 1,
                        j: st.j,
                        threshold: st.threshold,
                        metric,
                        bit: Some(bit),
                    });
                }
                Step::LowerAtRoot { reset_flag } => {
                    idle_moves += 1;
                    st.threshold -= delta;
                    if reset_flag {
                        st.from_child = false;
                    }
                    trace(&TraceEvent {
                        event: TraceKind::ThresholdDown,
                        i: i + 1,
                        j: 0,
                        threshold: st.threshold,
                        metric: good_m,
                        bit: None,
                    });
                }
                Step::Backward => {
                    idle_moves += 1;
                    let (t, j, from_child) =
                        backward_move(&st.beta, &st.gamma, st.j, st.threshold, delta);
                    let lowered = t != st.threshold;
                    st.threshold = t;
                    st.j = j;
                    st.from_child = from_child;
                    st.i = info[j];
                    self.trellis.rewind(st.i);
                    trace(&TraceEvent {
                        event: TraceKind::Backward,
                        i: i + 1,
                        j,
                        threshold: t,
                        metric: good_m,
                        bit: None,
                    });
                    if lowered {
                        trace(&TraceEvent {
                            event: TraceKind::ThresholdDown,
                            i: st.i + 1,
                            j,
                            threshold: t,
                            metric: good_m,
                            bit: None,
                        });
                    }
                }
            }
        }

        if truncated {
            // Greedy finish from wherever the search stopped.
            while st.i < len {
                let i = st.i;
                let llr = self.trellis.decision_llr();
                let bit = u8::from(!code.is_frozen(i) && llr < 0.0);
                bits[i] = bit;
                self.trellis.decide(bit);
                st.i += 1;
                st.visits += 1;
            }
        }

        Ok(DecodeResult {
            bits,
            visits: st.visits,
            truncated,
        })
    }
}

/// Decodes one frame with SC-Fano using the default configuration for `delta`.
pub fn fano_decode(channel_llr: &[f64], code: &PolarCode, delta: f64) -> Result<DecodeResult> {
    FanoDecoder::new(code, FanoConfig::new(delta))?.decode(channel_llr)
}
