//! Polar code construction and encoding.
//!
//! A code is described by its length `N = 2^n`, its dimension `K` and the
//! information set: the `K` synthesized bit-channels that carry data. The
//! remaining positions are frozen to zero. Channel reliabilities come from a
//! Gaussian-approximation density evolution over a BPSK/AWGN channel.
//!
//! Positions are 0-based throughout the Rust API. The JSON description uses
//! 1-based positions for `info_set`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Largest supported exponent. Keeps `1 << n` and the trellis sizes sane.
pub const MAX_EXPONENT: u32 = 24;

/// Absolute tolerance of the bisection used to invert the GA phi-function.
const PHI_INV_TOL: f64 = 1e-9;

/// Returns the bit-reversal permutation of `0..2^n`.
///
/// `perm[i]` is `i` with its `n`-bit binary expansion reversed. The
/// permutation is an involution.
pub fn bit_reversal_permutation(n: u32) -> Vec<usize> {
    let len = 1usize << n;
    if n == 0 {
        return vec![0];
    }
    (0..len)
        .map(|i| i.reverse_bits() >> (usize::BITS - n))
        .collect()
}

/// Parameters and reliabilities of one polar code.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n: u32,
    k: usize,
    info: Vec<usize>,
    frozen: Vec<bool>,
    pe: Vec<f64>,
    design_snr_db: f64,
}

impl PolarCode {
    /// Builds a code from an explicit information set (0-based positions)
    /// and per-channel error probabilities.
    pub fn from_parts(
        n: u32,
        info_set: &[usize],
        pe: Vec<f64>,
        design_snr_db: f64,
    ) -> Result<Self> {
        if n > MAX_EXPONENT {
            return Err(Error::Parameter(format!(
                "exponent {n} exceeds {MAX_EXPONENT}"
            )));
        }
        let len = 1usize << n;
        check_len(len, pe.len())?;
        if let Some((index, &p)) = pe
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..1.0).contains(*p))
        {
            return Err(Error::Parameter(format!(
                "error probability {p} at position {index} is outside [0, 1)"
            )));
        }
        if info_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "information set must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = info_set.iter().find(|&&i| i >= len) {
            return Err(Error::Parameter(format!(
                "information position {bad} out of range 0..{len}"
            )));
        }
        let mut frozen = vec![true; len];
        for &i in info_set {
            frozen[i] = false;
        }
        Ok(Self {
            n,
            k: info_set.len(),
            info: info_set.to_vec(),
            frozen,
            pe,
            design_snr_db,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Code length `N`.
    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }

    /// Number of information bits `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.len() as f64
    }

    /// Sorted 0-based information positions.
    pub fn info_set(&self) -> &[usize] {
        &self.info
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Per-channel error probabilities `P_e`.
    pub fn pe(&self) -> &[f64] {
        &self.pe
    }

    pub fn design_snr_db(&self) -> f64 {
        self.design_snr_db
    }

    /// Scatters `data` (length `K`) onto the information positions.
    pub fn message_from_data(&self, data: &[u8]) -> Result<Vec<u8>> {
        check_len(self.k, data.len())?;
        let mut u = vec![0u8; self.len()];
        for (&pos, &bit) in self.info.iter().zip(data) {
            u[pos] = bit & 1;
        }
        Ok(u)
    }

    /// Gathers the information bits of a message vector.
    pub fn data_from_message(&self, u: &[u8]) -> Vec<u8> {
        self.info.iter().map(|&i| u[i]).collect()
    }

    pub fn to_description(&self) -> CodeDescription {
        CodeDescription {
            n: self.n,
            k: self.k,
            design_snr_db: self.design_snr_db,
            info_set: self.info.iter().map(|&i| i + 1).collect(),
            pe: self.pe.clone(),
        }
    }

    pub fn from_description(desc: &CodeDescription) -> Result<Self> {
        if desc.info_set.len() != desc.k {
            return Err(Error::Parameter(format!(
                "K = {} but info_set has {} entries",
                desc.k,
                desc.info_set.len()
            )));
        }
        if desc.info_set.contains(&0) {
            return Err(Error::Parameter("info_set positions are 1-based".into()));
        }
        let info: Vec<usize> = desc.info_set.iter().map(|&i| i - 1).collect();
        Self::from_parts(desc.n, &info, desc.pe.clone(), desc.design_snr_db)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_description())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_description(&serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Serialized form of a [`PolarCode`]. `info_set` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDescription {
    pub n: u32,
    #[serde(rename = "K")]
    pub k: usize,
    pub design_snr_db: f64,
    pub info_set: Vec<usize>,
    pub pe: Vec<f64>,
}

/// Encodes `x = u B_N G_N` over GF(2).
///
/// `u` must be zero on every frozen position.
pub fn encode(u: &[u8], code: &PolarCode) -> Result<Vec<u8>> {
    check_len(code.len(), u.len())?;
    if let Some(pos) = u
        .iter()
        .enumerate()
        .position(|(i, &b)| b != 0 && code.is_frozen(i))
    {
        return Err(Error::FrozenBit(pos));
    }
    Ok(encode_raw(u, code.n()))
}

/// Encoder without the frozen-position check.
pub(crate) fn encode_raw(u: &[u8], n: u32) -> Vec<u8> {
    let perm = bit_reversal_permutation(n);
    let mut x: Vec<u8> = perm.iter().map(|&p| u[p] & 1).collect();
    transform_in_place(&mut x);
    x
}

/// Multiplies `v` by `G_2^{⊗n}` in place.
pub(crate) fn transform_in_place(v: &mut [u8]) {
    let len = v.len();
    let mut half = 1;
    while half < len {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= b;
            }
        }
        half *= 2;
    }
}

/// Mean channel LLR for unit-energy BPSK at Eb/N0 `snr_db` and code rate `rate`.
pub fn bpsk_mean_llr(snr_db: f64, rate: f64) -> f64 {
    4.0 * rate * 10f64.powf(snr_db / 10.0)
}

/// Constructs an `(2^n, k)` polar code for a BPSK/AWGN channel at Eb/N0
/// `design_snr_db`.
pub fn construct_code(n: u32, k: usize, design_snr_db: f64) -> Result<PolarCode> {
    if n > MAX_EXPONENT {
        return Err(Error::Parameter(format!(
            "exponent {n} exceeds {MAX_EXPONENT}"
        )));
    }
    let len = 1usize << n;
    if k > len {
        return Err(Error::Parameter(format!("K = {k} exceeds N = {len}")));
    }
    if !design_snr_db.is_finite() {
        return Err(Error::Parameter("design SNR must be finite".into()));
    }
    let rate = k as f64 / len as f64;
    construct_from_mean_llr(n, k, bpsk_mean_llr(design_snr_db, rate), design_snr_db)
}

/// Construction from an explicit channel mean LLR (`2 / sigma^2` for BPSK).
pub fn construct_from_mean_llr(
    n: u32,
    k: usize,
    mean_llr: f64,
    design_snr_db: f64,
) -> Result<PolarCode> {
    let means = ga_mean_llrs(n, mean_llr);
    let pe: Vec<f64> = means.iter().map(|&m| error_probability(m)).collect();

    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| {
        pe[a]
            .total_cmp(&pe[b])
            .then(means[b].total_cmp(&means[a]))
            .then(b.cmp(&a))
    });
    let mut info: Vec<usize> = order[..k].to_vec();
    info.sort_unstable();
    PolarCode::from_parts(n, &info, pe, design_snr_db)
}

/// Gaussian-approximation density evolution.
///
/// Returns the mean LLR of every synthesized channel in decoding order. The
/// channel at position `2j` is the check-node ("minus") combination of the
/// parent channel `j`, position `2j + 1` the variable-node ("plus") one.
pub fn ga_mean_llrs(n: u32, mean_llr: f64) -> Vec<f64> {
    let mut means = vec![mean_llr.max(0.0)];
    for _ in 0..n {
        means = means
            .iter()
            .flat_map(|&m| [ga_check_node(m), 2.0 * m])
            .collect();
    }
    means
}

/// Mean LLR of the check-node combination of two channels of mean `m`:
/// `phi^-1(1 - (1 - phi(m))^2)`.
pub fn ga_check_node(m: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let ln_phi_m = ln_phi(m);
    let ln_target = ln_phi_m + (2.0 - ln_phi_m.exp()).ln();
    if ln_target >= 0.0 {
        return 0.0;
    }
    // phi(0) = 1 >= target >= phi(m), so the root lies in [0, m].
    let (mut lo, mut hi) = (0.0, m);
    while hi - lo > PHI_INV_TOL {
        let mid = 0.5 * (lo + hi);
        // Large means: the tolerance is below one ulp.
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_phi(mid) > ln_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Natural log of the GA phi-function (Chung's two-piece approximation).
pub fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 10.0 {
        (-0.4527 * x.powf(0.86) + 0.0218).min(0.0)
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - 0.25 * x + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

/// Hard-decision error probability of a consistent Gaussian LLR with mean
/// `m` (variance `2m`): `Q(sqrt(m / 2))`.
pub fn error_probability(m: f64) -> f64 {
    if m <= 0.0 {
        return 0.5;
    }
    q_function((0.5 * m).sqrt())
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
