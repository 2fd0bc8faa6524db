//! Successive-cancellation list decoding.
//!
//! Up to `L` partial paths are kept, ranked by the exact cumulative
//! log-probability `ln Pr(û_1^i | y)`. Each path owns a full SC trellis.

use crate::code::PolarCode;
use crate::error::{check_len, Error, Result};
use crate::sc::{branch_log_probs, DecodeResult, ScTrellis};

#[derive(Debug, Clone)]
struct ListPath {
    trellis: ScTrellis,
    bits: Vec<u8>,
    metric: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    parent: usize,
    bit: u8,
    metric: f64,
}

/// SC-List decoder bound to one code.
#[derive(Debug, Clone)]
pub struct SclDecoder<'a> {
    code: &'a PolarCode,
    list_size: usize,
}

impl<'a> SclDecoder<'a> {
    pub fn new(code: &'a PolarCode, list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return Err(Error::Config("list size must be at least 1".into()));
        }
        Ok(Self { code, list_size })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn decode(&self, channel_llr: &[f64]) -> Result<DecodeResult> {
        self.decode_observed(channel_llr, |_, _| {})
    }

    /// Decodes one frame; `observe(parent_metric, child_metric)` sees every
    /// path extension that is evaluated, pruned or not.
    pub fn decode_observed<F>(&self, channel_llr: &[f64], mut observe: F) -> Result<DecodeResult>
    where
        F: FnMut(f64, f64),
    {
        let code = self.code;
        let len = code.len();
        check_len(len, channel_llr.len())?;

        let mut root = ListPath {
            trellis: ScTrellis::new(code.n()),
            bits: vec![0; len],
            metric: 0.0,
        };
        root.trellis.load(channel_llr)?;
        let mut paths = vec![root];
        let mut candidates: Vec<Candidate> = Vec::with_capacity(2 * self.list_size);
        let mut visits: u64 = 0;

        for i in 0..len {
            if code.is_frozen(i) {
                for p in &mut paths {
                    let (lp0, _) = branch_log_probs(p.trellis.decision_llr());
                    observe(p.metric, p.metric + lp0);
                    p.metric += lp0;
                    p.bits[i] = 0;
                    p.trellis.decide(0);
                }
                visits += paths.len() as u64;
                continue;
            }

            candidates.clear();
            for (parent, p) in paths.iter_mut().enumerate() {
                let (lp0, lp1) = branch_log_probs(p.trellis.decision_llr());
                for (bit, lp) in [(0u8, lp0), (1u8, lp1)] {
                    observe(p.metric, p.metric + lp);
                    candidates.push(Candidate {
                        parent,
                        bit,
                        metric: p.metric + lp,
                    });
                }
            }
            // Stable: equal metrics keep (parent, bit) order.
            candidates.sort_by(|a, b| b.metric.total_cmp(&a.metric));
            candidates.truncate(self.list_size);

            let mut uses = vec![0usize; paths.len()];
            for c in &candidates {
                uses[c.parent] += 1;
            }
            let mut parents: Vec<Option<ListPath>> = paths.drain(..).map(Some).collect();
            for c in &candidates {
                uses[c.parent] -= 1;
                let mut child = if uses[c.parent] == 0 {
                    parents[c.parent].take().expect("parent consumed twice")
                } else {
                    parents[c.parent].clone().expect("parent consumed early")
                };
                child.metric = c.metric;
                child.bits[i] = c.bit;
                child.trellis.decide(c.bit);
                paths.push(child);
            }
            visits += paths.len() as u64;
        }

        let best = paths
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.metric.total_cmp(&b.metric).then(ib.cmp(ia)))
            .map(|(_, p)| p)
            .expect("list is never empty");
        Ok(DecodeResult {
            bits: best.bits.clone(),
            visits,
            truncated: false,
        })
    }
}

/// Decodes one frame with a `list_size`-path SCL decoder.
pub fn scl_decode(channel_llr: &[f64], code: &PolarCode, list_size: usize) -> Result<DecodeResult> {
    SclDecoder::new(code, list_size)?.decode(channel_llr)
}
