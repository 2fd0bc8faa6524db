//! Shared fixtures for the decoder benchmarks.

use polar_fano::channel::SnrConvention;
use polar_fano::{construct_code, generate_frame, ChannelParams, Frame, PolarCode};

/// A rate-1/2 code constructed at `snr_db` and `count` noisy frames at the
/// same SNR.
pub fn workload(n: u32, snr_db: f64, count: u64) -> (PolarCode, Vec<Frame>) {
    let len = 1usize << n;
    let code = construct_code(n, len / 2, snr_db).expect("valid code parameters");
    let params = ChannelParams::new(snr_db, code.rate(), SnrConvention::EbN0).expect("valid SNR");
    let frames = (0..count)
        .map(|i| generate_frame(&code, &params, 0xbe7c4, snr_db, i).expect("frame generation"))
        .collect();
    (code, frames)
}
