//! BPSK over AWGN: modulation, noise and channel LLRs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an SNR in dB is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrConvention {
    /// Energy per information bit; noise variance scales with the code rate.
    #[default]
    EbN0,
    /// Energy per transmitted symbol.
    EsN0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub snr_db: f64,
    pub rate: f64,
    pub sigma2: f64,
}

impl ChannelParams {
    /// `sigma2 = 1 / (2 R 10^(snr/10))` for Eb/N0, `1 / (2 10^(snr/10))` for Es/N0.
    pub fn new(snr_db: f64, rate: f64, convention: SnrConvention) -> Result<Self> {
        let scale = match convention {
            SnrConvention::EbN0 => rate,
            SnrConvention::EsN0 => 1.0,
        };
        let sigma2 = 1.0 / (2.0 * scale * 10f64.powf(snr_db / 10.0));
        Self::check(snr_db, rate, sigma2)
    }

    /// Parameters with an explicit noise variance.
    pub fn with_sigma2(sigma2: f64) -> Result<Self> {
        let snr_db = 10.0 * (1.0 / (2.0 * sigma2)).log10();
        Self::check(snr_db, 1.0, sigma2)
    }

    fn check(snr_db: f64, rate: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::Config(format!(
                "noise variance {sigma2} (snr {snr_db} dB, rate {rate}) must be positive and finite"
            )));
        }
        Ok(Self {
            snr_db,
            rate,
            sigma2,
        })
    }

    /// Mean of the channel LLR for a transmitted `+1`.
    pub fn mean_llr(&self) -> f64 {
        2.0 / self.sigma2
    }
}

/// Maps bit 0 to +1 and bit 1 to -1.
pub fn modulate_bpsk(x: &[u8]) -> Vec<f64> {
    x.iter().map(|&b| 1.0 - 2.0 * f64::from(b & 1)).collect()
}

/// Adds i.i.d. zero-mean Gaussian noise of variance `sigma2`.
pub fn awgn_transmit<R: Rng + ?Sized>(s: &[f64], params: &ChannelParams, rng: &mut R) -> Vec<f64> {
    let sigma = params.sigma2.sqrt();
    s.iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + sigma * z
        })
        .collect()
}

/// `L_i = 2 y_i / sigma2`; positive values favor bit 0.
pub fn channel_llr(y: &[f64], params: &ChannelParams) -> Vec<f64> {
    let scale = 2.0 / params.sigma2;
    y.iter().map(|&v| scale * v).collect()
}

/// Independent random stream for one frame.
///
/// The stream depends only on `(seed, cell, frame)`, so frames can be
/// generated in any order and on any number of threads.
pub fn frame_rng(seed: u64, cell: u64, frame: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed ^ cell.wrapping_mul(0xA24B_AED4_963E_E407);
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(frame);
    rng
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
