//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use common::{bit_posteriors, ml_reference, sc_reference};
use polar_fano::channel::SnrConvention;
use polar_fano::example1;
use polar_fano::{
    backward_move, construct_code, encode, generate_frame, run_experiment, sc_decode, scl_decode,
    ChannelParams, DecoderSpec, FanoConfig, FanoDecoder, Frame, OutputFormat, PolarCode,
    SclDecoder, SimConfig, SimRecord, TraceEvent, TraceKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// `(beta, gamma, j)` and the expected `(T, j, from_child)`.
type BackwardCase<'a> = (&'a [f64], &'a [bool], usize, (f64, usize, bool));

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn frames_at(code: &PolarCode, snr: f64, count: u64, seed: u64) -> Vec<Frame> {
    let params = ChannelParams::new(snr, code.rate(), SnrConvention::EbN0).unwrap();
    (0..count)
        .into_par_iter()
        .map(|f| generate_frame(code, &params, seed, snr, f).unwrap())
        .collect()
}

fn example_encoding() -> Outcome {
    let code = example1::code();
    let x = encode(&example1::MESSAGE, &code).map_err(|e| e.to_string())?;
    ensure!(x == [0, 1, 0, 1], "codeword {x:?}");
    Ok(format!("encode(0,1,0,1) = {x:?}"))
}

fn example_sc_failure() -> Outcome {
    let code = example1::code();
    let info: Vec<usize> = code.info_set().iter().map(|i| i + 1).collect();
    ensure!(info == [2, 3, 4], "information set {info:?}");
    let u = sc_decode(&example1::llr(), &code).unwrap().bits;
    ensure!(u == example1::SC_OUTPUT, "SC returned {u:?}");
    Ok(format!("SC returns {u:?} (sigma2 = {})", example1::SIGMA2))
}

fn example_fano_success() -> Outcome {
    let code = example1::code();
    let mut events = Vec::new();
    let res = FanoDecoder::new(&code, FanoConfig::new(example1::DELTA))
        .unwrap()
        .decode_traced(&example1::llr(), |e| events.push(e.clone()))
        .unwrap();
    ensure!(
        res.bits == example1::MESSAGE,
        "SC-Fano returned {:?}",
        res.bits
    );
    let back = events
        .iter()
        .position(|e| e.event == TraceKind::Backward && e.i == 3)
        .ok_or("no backward move at bit 3")?;
    ensure!(
        events[back..]
            .iter()
            .any(|e| e.event == TraceKind::Forward && e.i == 2 && e.bit == Some(1)),
        "no forward move with u2 = 1 after the backward move"
    );
    Ok(format!(
        "SC-Fano returns {:?} after {} moves",
        res.bits,
        events.len()
    ))
}

fn huge_delta_is_sc() -> Outcome {
    let code = construct_code(7, 64, 2.0).unwrap();
    let frames = frames_at(&code, 2.0, 10_000, 4);
    let (mismatches, visits) = frames
        .par_iter()
        .map_init(
            || FanoDecoder::new(&code, FanoConfig::new(1e6)).unwrap(),
            |dec, f| {
                let fano = dec.decode(&f.llr).unwrap();
                let sc = sc_decode(&f.llr, &code).unwrap();
                (u64::from(fano.bits != sc.bits), fano.visits)
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let avg = visits as f64 / frames.len() as f64;
    let detail = format!(
        "{mismatches} mismatches, avg visits {avg:.4} (bound 129), chi {:.5}",
        avg / 128.0
    );
    ensure!(mismatches == 0 && avg <= 129.0, "{detail}");
    Ok(detail)
}

fn full_list_is_ml() -> Outcome {
    let mut checked = 0;
    for snr in [0.0, 1.0, 2.0, 3.0, 4.0] {
        let code = construct_code(3, 4, snr).unwrap();
        let frames = frames_at(&code, snr, 10_000, 5);
        let bad = frames
            .par_iter()
            .filter(|f| {
                scl_decode(&f.llr, &code, 16).unwrap().bits != ml_reference(&f.llr, code.info_set())
            })
            .count();
        ensure!(bad == 0, "{bad} frames differ from ML at {snr} dB");
        checked += frames.len();
    }
    Ok(format!("{checked} frames identical to exhaustive ML"))
}

fn list_of_one_is_sc() -> Outcome {
    let code = construct_code(7, 64, 2.0).unwrap();
    let frames = frames_at(&code, 2.0, 10_000, 6);
    let bad = frames
        .par_iter()
        .filter(|f| {
            scl_decode(&f.llr, &code, 1).unwrap().bits != sc_decode(&f.llr, &code).unwrap().bits
        })
        .count();
    ensure!(bad == 0, "{bad} mismatching frames");
    Ok(format!("{} frames identical", frames.len()))
}

fn config(decoders: Vec<DecoderSpec>, snrs: Vec<f64>, min_errors: u64, seed: u64) -> SimConfig {
    SimConfig {
        n: 7,
        k: 64,
        snr_points_db: snrs,
        decoders,
        min_frame_errors: min_errors,
        seed,
        ..SimConfig::default()
    }
}

fn find<'a>(
    records: &'a [SimRecord],
    decoder: &str,
    parameter: Option<f64>,
    snr: f64,
) -> &'a SimRecord {
    records
        .iter()
        .find(|r| r.decoder == decoder && r.parameter == parameter && r.snr_db == snr)
        .expect("cell present")
}

fn fano_matches_list_performance() -> Outcome {
    let grid = vec![
        DecoderSpec::Sc,
        DecoderSpec::Fano { delta: 1.0 },
        DecoderSpec::Scl { list_size: 16 },
    ];
    let recs = run_experiment(&config(grid, vec![2.5], 200, 7)).map_err(|e| e.to_string())?;
    let sc = find(&recs, "sc", None, 2.5).estimate();
    let fano = find(&recs, "fano", Some(1.0), 2.5).estimate();
    let scl = find(&recs, "scl", Some(16.0), 2.5).estimate();
    let gap = (fano.fer.log10() - scl.fer.log10()).abs();
    let detail = format!(
        "FER sc {:.4} [{:.4}, {:.4}], fano:1 {:.4} [{:.4}, {:.4}], scl:16 {:.4}; |log10 gap| {gap:.3}",
        sc.fer, sc.ci_low, sc.ci_high, fano.fer, fano.ci_low, fano.ci_high, scl.fer
    );
    ensure!(
        gap <= 0.3 && fano.fer < sc.fer && !fano.overlaps(&sc),
        "{detail}"
    );
    Ok(detail)
}

fn complexity_trends() -> Outcome {
    let grid = vec![
        DecoderSpec::Fano { delta: 1.0 },
        DecoderSpec::Fano { delta: 20.0 },
    ];
    let snrs = vec![1.5, 2.0, 2.5, 3.0, 3.5];
    let recs = run_experiment(&config(grid, snrs.clone(), 100, 8)).map_err(|e| e.to_string())?;
    let chi1 = |snr| find(&recs, "fano", Some(1.0), snr).chi;
    let chi20_3 = find(&recs, "fano", Some(20.0), 3.0).chi;
    let detail = format!(
        "chi(fano:1) {:?}, chi(fano:20 @ 3 dB) {chi20_3:.4}",
        snrs.iter()
            .map(|&s| (s, (chi1(s) * 1e4).round() / 1e4))
            .collect::<Vec<_>>()
    );
    ensure!(chi1(3.0) < chi1(1.5), "not decreasing with SNR: {detail}");
    ensure!(chi20_3 <= 1.2, "fano:20 too expensive: {detail}");
    ensure!(
        snrs.iter().filter(|&&s| s >= 2.0).all(|&s| chi1(s) < 16.0),
        "fano:1 above 16: {detail}"
    );
    Ok(detail)
}

fn closed_form_metrics(rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let mut steps = 0;
    for trial in 0..1000 {
        let k = rng.random_range(1..=8);
        let code = construct_code(3, k, rng.random_range(-1.0..6.0)).unwrap();
        let delta = [0.5, 1.0, 2.0, 3.0][trial % 4];
        let llr: Vec<f64> = (0..8).map(|_| rng.random_range(-4.0..4.0)).collect();
        let mut events: Vec<TraceEvent> = Vec::new();
        FanoDecoder::new(&code, FanoConfig::new(delta))
            .unwrap()
            .decode_traced(&llr, |e| events.push(e.clone()))
            .unwrap();
        let mut path = [0u8; 8];
        for e in events.iter().filter(|e| e.event == TraceKind::Forward) {
            path[e.i - 1] = e.bit.unwrap();
            let closed: f64 = (0..e.i)
                .map(|t| {
                    let (l0, l1) = bit_posteriors(&llr, &path[..t]);
                    let lp = if path[t] == 0 { l0 } else { l1 };
                    lp - (-code.pe()[t]).ln_1p()
                })
                .sum();
            ensure!(
                (closed - e.metric).abs() <= 1e-9,
                "step metric {} vs closed form {closed}",
                e.metric
            );
            steps += 1;
        }
    }
    Ok(steps)
}

fn invariant_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let metric_steps = closed_form_metrics(&mut rng)?;

    // List metrics never increase.
    let code = construct_code(6, 32, 2.0).unwrap();
    let frames = frames_at(&code, 2.0, 1000, 10);
    let mut extensions = 0u64;
    let mut rising = 0u64;
    let dec = SclDecoder::new(&code, 8).unwrap();
    for f in &frames {
        dec.decode_observed(&f.llr, |parent, child| {
            extensions += 1;
            rising += u64::from(child > parent);
        })
        .unwrap();
    }
    ensure!(rising == 0, "{rising} list extensions increased the metric");

    // SC-Fano per-step increments.
    let code = construct_code(7, 64, 1.5).unwrap();
    let frames = frames_at(&code, 1.5, 1000, 11);
    let bound: Vec<f64> = code.pe().iter().map(|&p| -(-p).ln_1p()).collect();
    let mut increments = 0u64;
    for f in &frames {
        let mut at = vec![0.0f64; 129];
        let mut dec = FanoDecoder::new(&code, FanoConfig::new(1.0)).unwrap();
        let mut violation = None;
        dec.decode_traced(&f.llr, |e| {
            if e.event == TraceKind::Forward {
                let inc = e.metric - at[e.i - 1];
                if inc > bound[e.i - 1] + 1e-12 {
                    violation = Some((e.i, inc));
                }
                at[e.i] = e.metric;
                increments += 1;
            }
        })
        .unwrap();
        ensure!(
            violation.is_none(),
            "increment bound violated: {violation:?}"
        );
    }

    // SC against suffix enumeration.
    for _ in 0..1000 {
        let k = rng.random_range(1..=8);
        let code = construct_code(3, k, rng.random_range(-1.0..6.0)).unwrap();
        let llr: Vec<f64> = (0..8).map(|_| rng.random_range(-6.0..6.0)).collect();
        let ours = sc_decode(&llr, &code).unwrap().bits;
        ensure!(
            ours == sc_reference(&llr, code.frozen_mask()),
            "SC differs from enumeration on {llr:?}"
        );
    }

    // Backward-move hand traces (delta = 3).
    let cases: [BackwardCase; 3] = [
        (&[-2.57], &[false], 1, (-3.0, 0, true)),
        (&[-1.0, -5.0], &[false, true], 2, (-3.0, 0, true)),
        (&[-4.0, -5.0], &[true, true], 2, (-6.0, 2, false)),
    ];
    for (beta, gamma, j, expected) in cases {
        let got = backward_move(beta, gamma, j, -3.0, 3.0);
        ensure!(
            got == expected,
            "backward_move({beta:?}, {gamma:?}, {j}) = {got:?}"
        );
    }

    Ok(format!(
        "{metric_steps} metric steps, {extensions} list extensions, {increments} increments, 1000 enumerations, 3 backward traces"
    ))
}

fn run_to_bytes(cfg: &SimConfig, path: &Path) -> Vec<u8> {
    let mut cfg = cfg.clone();
    cfg.output_path = Some(path.to_path_buf());
    run_experiment(&cfg).unwrap();
    std::fs::read(path).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = SimConfig {
        n: 6,
        k: 32,
        snr_points_db: vec![1.5, 2.5],
        decoders: vec![
            DecoderSpec::Sc,
            DecoderSpec::Fano { delta: 2.0 },
            DecoderSpec::Scl { list_size: 4 },
        ],
        min_frame_errors: 50,
        seed: 12,
        ..SimConfig::default()
    };
    let mut sizes = Vec::new();
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let mut outputs = Vec::new();
        for (run, workers) in [1, 8, 1, 8].into_iter().enumerate() {
            let cfg = SimConfig {
                workers,
                output_format: format,
                ..base.clone()
            };
            outputs.push(run_to_bytes(&cfg, &dir.path().join(format!("run{run}"))));
        }
        ensure!(
            outputs.iter().all(|o| o == &outputs[0]),
            "{format:?} outputs differ across runs"
        );
        sizes.push(outputs[0].len());
    }
    Ok(format!(
        "csv ({} B) and json ({} B) identical over workers 1 and 8, twice each",
        sizes[0], sizes[1]
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("example encoding", example_encoding),
        ("example SC failure", example_sc_failure),
        ("example SC-Fano success", example_fano_success),
        ("SC equivalence at huge delta", huge_delta_is_sc),
        ("full list equals ML", full_list_is_ml),
        ("list of one equals SC", list_of_one_is_sc),
        ("SC-Fano matches SCL-16", fano_matches_list_performance),
        ("complexity trends", complexity_trends),
        ("invariant suites", invariant_suites),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (number, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", number + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", number + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
