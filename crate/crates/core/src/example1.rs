//! The four-bit worked example: `(N, K) = (4, 3)`, information set `{2, 3, 4}`
//! (1-based), message `(0, 1, 0, 1)` and one noisy BPSK observation on which
//! SC fails and SC-Fano with `delta = 3` recovers.

use crate::channel::{channel_llr, ChannelParams};
use crate::code::{construct_code, PolarCode};

pub const MESSAGE: [u8; 4] = [0, 1, 0, 1];
pub const RECEIVED: [f64; 4] = [1.4137, -1.5069, 2.3165, 1.3098];
/// Noise variance used to turn `RECEIVED` into LLRs.
pub const SIGMA2: f64 = 1.0;
/// Construction SNR (Eb/N0, dB). The example needs small channel error
/// probabilities; from roughly 7 dB upward the search follows the same moves.
pub const DESIGN_SNR_DB: f64 = 10.0;
pub const DELTA: f64 = 3.0;
/// What plain SC returns for `RECEIVED`.
pub const SC_OUTPUT: [u8; 4] = [0, 0, 1, 0];

pub fn code() -> PolarCode {
    construct_code(2, 3, DESIGN_SNR_DB).expect("valid example parameters")
}

pub fn llr() -> Vec<f64> {
    channel_llr(
        &RECEIVED,
        &ChannelParams::with_sigma2(SIGMA2).expect("positive variance"),
    )
}
