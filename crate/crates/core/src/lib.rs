//! Polar codes with successive-cancellation (SC), SC-List and SC-Fano
//! decoding, plus a Monte Carlo harness measuring frame error rate and
//! normalized decoding complexity.
//!
//! ```
//! use polar_fano::{construct_code, encode, fano_decode};
//!
//! let code = construct_code(3, 4, 2.0).unwrap();
//! let u = code.message_from_data(&[1, 0, 1, 1]).unwrap();
//! let x = encode(&u, &code).unwrap();
//! // Noiseless BPSK: bit 0 -> large positive LLR.
//! let llr: Vec<f64> = x.iter().map(|&b| if b == 0 { 20.0 } else { -20.0 }).collect();
//! assert_eq!(fano_decode(&llr, &code, 1.0).unwrap().bits, u);
//! ```

pub mod channel;
pub mod code;
pub mod error;
pub mod example1;
pub mod fano;
pub mod sc;
pub mod scl;
pub mod sim;

pub use channel::{
    awgn_transmit, channel_llr, frame_rng, modulate_bpsk, ChannelParams, SnrConvention,
};
pub use code::{bit_reversal_permutation, construct_code, encode, CodeDescription, PolarCode};
pub use error::{Error, Result};
pub use fano::{
    backward_move, fano_decode, metric_step, threshold_update, FanoConfig, FanoDecoder, FanoState,
    FrozenMetric, TraceEvent, TraceKind,
};
pub use sc::{
    branch_log_probs, f_minus, g_plus, sc_decode, CheckNode, DecodeResult, ScDecoder, ScTrellis,
};
pub use scl::{scl_decode, SclDecoder};
pub use sim::{
    emit_results, estimate_fer, generate_frame, parse_results, render_results, run_experiment,
    trace_frame, DecoderSpec, FerEstimate, Frame, OutputFormat, SimConfig, SimRecord,
};
