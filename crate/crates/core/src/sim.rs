//! Monte Carlo FER / complexity experiments.
//!
//! Every frame draws its message and noise from a stream keyed by
//! `(seed, SNR, frame index)`. All decoders at one SNR therefore see the same
//! realizations, and the results do not depend on the number of workers: a
//! cell is processed in fixed-size batches whose outcomes are scanned in frame
//! order, and the cell stops at exactly the frame that reaches the error
//! target.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    awgn_transmit, channel_llr, frame_rng, modulate_bpsk, ChannelParams, SnrConvention,
};
use crate::code::{construct_code, encode, PolarCode};
use crate::error::{Error, Result};
use crate::fano::{FanoConfig, FanoDecoder, TraceEvent, DEFAULT_VISIT_FACTOR};
use crate::sc::{DecodeResult, ScDecoder};
use crate::scl::SclDecoder;

/// Frames decoded per scheduling batch.
const BATCH: u64 = 256;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// CSV header of result tables.
pub const CSV_HEADER: &str =
    "decoder,parameter,snr_db,frames,frame_errors,fer,avg_visits,chi,wall_seconds";

/// A decoder and its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecoderSpec {
    Sc,
    Fano { delta: f64 },
    Scl { list_size: usize },
}

impl DecoderSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DecoderSpec::Sc => "sc",
            DecoderSpec::Fano { .. } => "fano",
            DecoderSpec::Scl { .. } => "scl",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            DecoderSpec::Sc => None,
            DecoderSpec::Fano { delta } => Some(delta),
            DecoderSpec::Scl { list_size } => Some(list_size as f64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DecoderSpec::Fano { delta } if !(delta > 0.0 && delta.is_finite()) => Err(
                Error::Config(format!("fano delta must be positive, got {delta}")),
            ),
            DecoderSpec::Scl { list_size: 0 } => {
                Err(Error::Config("scl list size must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// The grid of the reference experiment: SC, SC-Fano with
    /// `delta in {1, 5, 10, 20}` and SCL with `L in {8, 16}`.
    pub fn reference_grid() -> Vec<DecoderSpec> {
        let mut grid = vec![DecoderSpec::Sc];
        grid.extend([1.0, 5.0, 10.0, 20.0].map(|delta| DecoderSpec::Fano { delta }));
        grid.extend([8, 16].map(|list_size| DecoderSpec::Scl { list_size }));
        grid
    }
}

impl fmt::Display for DecoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderSpec::Sc => write!(f, "sc"),
            DecoderSpec::Fano { delta } => write!(f, "fano:{delta}"),
            DecoderSpec::Scl { list_size } => write!(f, "scl:{list_size}"),
        }
    }
}

impl FromStr for DecoderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "unrecognized decoder '{s}' (expected sc, fano:DELTA or scl:L)"
            ))
        };
        let spec = match s.trim().split_once(':') {
            None if s.trim().eq_ignore_ascii_case("sc") => DecoderSpec::Sc,
            Some((kind, value)) if kind.eq_ignore_ascii_case("fano") => DecoderSpec::Fano {
                delta: value.parse().map_err(|_| bad())?,
            },
            Some((kind, value)) if kind.eq_ignore_ascii_case("scl") => DecoderSpec::Scl {
                list_size: value.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for DecoderSpec {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DecoderSpec {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

/// Experiment description. Loadable from JSON; missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: u32,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    pub snr_points_db: Vec<f64>,
    pub decoders: Vec<DecoderSpec>,
    /// Construction SNR; each cell uses its own SNR when unset.
    pub construction_snr_db: Option<f64>,
    pub snr_convention: SnrConvention,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    pub workers: usize,
    /// SC-Fano visit cap as a multiple of `N`.
    pub max_visits_factor: u64,
    /// Record wall-clock time per cell. Off by default so output files are
    /// reproducible byte for byte.
    pub timing: bool,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 7,
            k: 64,
            snr_points_db: vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
            decoders: DecoderSpec::reference_grid(),
            construction_snr_db: None,
            snr_convention: SnrConvention::EbN0,
            min_frame_errors: 100,
            max_frames: 1_000_000,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_visits_factor: DEFAULT_VISIT_FACTOR,
            timing: false,
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }
}

impl SimConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let len = 1usize
            .checked_shl(self.n)
            .filter(|_| self.n <= crate::code::MAX_EXPONENT)
            .ok_or_else(|| Error::Config(format!("n = {} is too large", self.n)))?;
        if self.k > len {
            return Err(Error::Config(format!("K = {} exceeds N = {len}", self.k)));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.snr_points_db.is_empty() {
            return Err(Error::Config("no SNR points".into()));
        }
        if let Some(bad) = self.snr_points_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::Config(format!("SNR point {bad} is not finite")));
        }
        if self.decoders.is_empty() {
            return Err(Error::Config("no decoders".into()));
        }
        for d in &self.decoders {
            d.validate()?;
        }
        if self.min_frame_errors < 1 {
            return Err(Error::Config("min_frame_errors must be at least 1".into()));
        }
        if self.max_frames < self.min_frame_errors {
            return Err(Error::Config(format!(
                "max_frames ({}) is smaller than min_frame_errors ({})",
                self.max_frames, self.min_frame_errors
            )));
        }
        if self.workers < 1 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.max_visits_factor < 1 {
            return Err(Error::Config("max_visits_factor must be at least 1".into()));
        }
        Ok(())
    }

    pub fn code_len(&self) -> usize {
        1usize << self.n
    }

    /// SNR points in ascending order, duplicates removed.
    pub fn sorted_snr_points(&self) -> Vec<f64> {
        let mut pts = self.snr_points_db.clone();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

/// One (decoder, parameter, SNR) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub decoder: String,
    pub parameter: Option<f64>,
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub avg_visits: f64,
    /// Average decoded-bit events divided by `N`.
    pub chi: f64,
    pub wall_seconds: f64,
}

impl SimRecord {
    pub fn estimate(&self) -> FerEstimate {
        estimate_fer(self.frame_errors, self.frames)
    }

    /// Same record with every float rounded to six significant digits, i.e.
    /// exactly what the CSV and JSON writers emit.
    pub fn rounded(&self) -> SimRecord {
        SimRecord {
            decoder: self.decoder.clone(),
            parameter: self.parameter.map(round_sig6),
            snr_db: round_sig6(self.snr_db),
            frames: self.frames,
            frame_errors: self.frame_errors,
            fer: round_sig6(self.fer),
            avg_visits: round_sig6(self.avg_visits),
            chi: round_sig6(self.chi),
            wall_seconds: round_sig6(self.wall_seconds),
        }
    }
}

/// Point estimate and 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerEstimate {
    pub fer: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl FerEstimate {
    pub fn overlaps(&self, other: &FerEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

pub fn estimate_fer(errors: u64, frames: u64) -> FerEstimate {
    assert!(
        frames >= 1 && errors <= frames,
        "need 0 <= errors <= frames, frames >= 1"
    );
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    FerEstimate {
        fer: p,
        ci_low: if errors == 0 {
            0.0
        } else {
            (center - half).max(0.0)
        },
        ci_high: if errors == frames {
            1.0
        } else {
            (center + half).min(1.0)
        },
    }
}

enum AnyDecoder<'a> {
    Sc(ScDecoder<'a>),
    Fano(FanoDecoder<'a>),
    Scl(SclDecoder<'a>),
}

impl<'a> AnyDecoder<'a> {
    fn new(spec: DecoderSpec, code: &'a PolarCode, max_visits_factor: u64) -> Result<Self> {
        Ok(match spec {
            DecoderSpec::Sc => AnyDecoder::Sc(ScDecoder::new(code)),
            DecoderSpec::Fano { delta } => {
                let mut cfg = FanoConfig::new(delta);
                cfg.max_visits = Some(max_visits_factor * code.len() as u64);
                AnyDecoder::Fano(FanoDecoder::new(code, cfg)?)
            }
            DecoderSpec::Scl { list_size } => AnyDecoder::Scl(SclDecoder::new(code, list_size)?),
        })
    }

    fn decode(&mut self, llr: &[f64]) -> Result<DecodeResult> {
        match self {
            AnyDecoder::Sc(d) => d.decode(llr),
            AnyDecoder::Fano(d) => d.decode(llr),
            AnyDecoder::Scl(d) => d.decode(llr),
        }
    }
}

/// Transmitted message and channel LLRs of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub message: Vec<u8>,
    pub llr: Vec<f64>,
}

/// Generates frame `index` at `snr_db`: a uniform random message, polar
/// encoded, BPSK modulated and sent over AWGN.
pub fn generate_frame(
    code: &PolarCode,
    channel: &ChannelParams,
    seed: u64,
    snr_db: f64,
    index: u64,
) -> Result<Frame> {
    let mut rng = frame_rng(seed, snr_db.to_bits(), index);
    let data: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
    let message = code.message_from_data(&data)?;
    let x = encode(&message, code)?;
    let y = awgn_transmit(&modulate_bpsk(&x), channel, &mut rng);
    Ok(Frame {
        message,
        llr: channel_llr(&y, channel),
    })
}

fn cell_code(config: &SimConfig, snr_db: f64) -> Result<PolarCode> {
    construct_code(
        config.n,
        config.k,
        config.construction_snr_db.unwrap_or(snr_db),
    )
}

fn cell_channel(config: &SimConfig, code: &PolarCode, snr_db: f64) -> Result<ChannelParams> {
    ChannelParams::new(snr_db, code.rate(), config.snr_convention)
}

fn run_cell(
    config: &SimConfig,
    pool: &rayon::ThreadPool,
    spec: DecoderSpec,
    code: &PolarCode,
    snr_db: f64,
) -> Result<SimRecord> {
    let channel = cell_channel(config, code, snr_db)?;
    // Fail on a bad decoder before spinning up workers.
    AnyDecoder::new(spec, code, config.max_visits_factor)?;

    let start = Instant::now();
    let (mut frames, mut errors, mut visits) = (0u64, 0u64, 0u64);
    'cell: while frames < config.max_frames {
        let end = (frames + BATCH).min(config.max_frames);
        let outcomes: Vec<(bool, u64)> = pool.install(|| {
            (frames..end)
                .into_par_iter()
                .map_init(
                    || {
                        AnyDecoder::new(spec, code, config.max_visits_factor)
                            .expect("validated decoder")
                    },
                    |decoder, index| -> Result<(bool, u64)> {
                        let frame = generate_frame(code, &channel, config.seed, snr_db, index)?;
                        let res = decoder.decode(&frame.llr)?;
                        Ok((res.bits != frame.message, res.visits))
                    },
                )
                .collect::<Result<Vec<_>>>()
        })?;
        for (is_error, v) in outcomes {
            frames += 1;
            visits += v;
            errors += u64::from(is_error);
            if errors >= config.min_frame_errors {
                break 'cell;
            }
        }
    }

    let avg_visits = visits as f64 / frames as f64;
    Ok(SimRecord {
        decoder: spec.kind().to_string(),
        parameter: spec.parameter(),
        snr_db,
        frames,
        frame_errors: errors,
        fer: errors as f64 / frames as f64,
        avg_visits,
        chi: avg_visits / code.len() as f64,
        wall_seconds: if config.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        },
    })
}

/// Runs every (decoder, SNR) cell and, when `output_path` is set, writes
/// the table there. The output file is created before any frame is decoded.
pub fn run_experiment(config: &SimConfig) -> Result<Vec<SimRecord>> {
    run_experiment_with(config, |_| {})
}

/// [`run_experiment`] with a callback after each finished cell.
pub fn run_experiment_with<F>(config: &SimConfig, mut on_cell: F) -> Result<Vec<SimRecord>>
where
    F: FnMut(&SimRecord),
{
    config.validate()?;
    let mut out = match &config.output_path {
        Some(path) => Some((path.clone(), create_output(path)?)),
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.workers)))?;

    let snrs = config.sorted_snr_points();
    let codes = snrs
        .iter()
        .map(|&s| cell_code(config, s))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(config.decoders.len() * snrs.len());
    for &spec in &config.decoders {
        for (code, &snr) in codes.iter().zip(&snrs) {
            let rec = run_cell(config, &pool, spec, code, snr)?;
            on_cell(&rec);
            records.push(rec);
        }
    }

    if let Some((path, file)) = out.as_mut() {
        write_results(&records, config.output_format, file).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(records)
}

/// Decodes a single frame with the first SC-Fano decoder of `config` at its
/// first SNR point and returns the search trace.
pub fn trace_frame(
    config: &SimConfig,
    frame_index: u64,
) -> Result<(Frame, DecodeResult, Vec<TraceEvent>)> {
    config.validate()?;
    let delta = config
        .decoders
        .iter()
        .find_map(|d| match d {
            DecoderSpec::Fano { delta } => Some(*delta),
            _ => None,
        })
        .ok_or_else(|| Error::Config("tracing needs a fano decoder".into()))?;
    let snr = config.snr_points_db[0];
    let code = cell_code(config, snr)?;
    let channel = cell_channel(config, &code, snr)?;
    let frame = generate_frame(&code, &channel, config.seed, snr, frame_index)?;
    let mut cfg = FanoConfig::new(delta);
    cfg.max_visits = Some(config.max_visits_factor * code.len() as u64);
    let mut events = Vec::new();
    let res =
        FanoDecoder::new(&code, cfg)?.decode_traced(&frame.llr, |e| events.push(e.clone()))?;
    Ok((frame, res, events))
}

fn create_output(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Rounds to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn fmt_sig6(x: f64) -> String {
    format!("{}", round_sig6(x))
}

/// Renders records as CSV or JSON text.
pub fn render_results(records: &[SimRecord], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let mut s = String::from(CSV_HEADER);
            s.push('\n');
            for r in records {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.decoder,
                    r.parameter.map(fmt_sig6).unwrap_or_default(),
                    fmt_sig6(r.snr_db),
                    r.frames,
                    r.frame_errors,
                    fmt_sig6(r.fer),
                    fmt_sig6(r.avg_visits),
                    fmt_sig6(r.chi),
                    fmt_sig6(r.wall_seconds),
                ));
            }
            s
        }
        OutputFormat::Json => {
            let rounded: Vec<SimRecord> = records.iter().map(SimRecord::rounded).collect();
            let mut s = serde_json::to_string_pretty(&rounded).expect("records serialize");
            s.push('\n');
            s
        }
    }
}

fn write_results<W: Write>(
    records: &[SimRecord],
    format: OutputFormat,
    out: &mut W,
) -> std::io::Result<()> {
    out.write_all(render_results(records, format).as_bytes())?;
    out.flush()
}

/// Writes a result table to `path`.
pub fn emit_results(records: &[SimRecord], format: OutputFormat, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    let mut file = create_output(path)?;
    write_results(records, format, &mut file).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses a table produced by [`render_results`] in either format.
pub fn parse_results(text: &str, format: OutputFormat) -> Result<Vec<SimRecord>> {
    match format {
        OutputFormat::Json => Ok(serde_json::from_str(text)?),
        OutputFormat::Csv => {
            let mut lines = text.lines();
            if lines.next() != Some(CSV_HEADER) {
                return Err(Error::Config("missing or unexpected CSV header".into()));
            }
            lines
                .filter(|l| !l.is_empty())
                .map(|line| {
                    let bad = || Error::Config(format!("malformed CSV row '{line}'"));
                    let f: Vec<&str> = line.split(',').collect();
                    if f.len() != 9 {
                        return Err(bad());
                    }
                    let float = |s: &str| s.parse::<f64>().map_err(|_| bad());
                    let int = |s: &str| s.parse::<u64>().map_err(|_| bad());
                    Ok(SimRecord {
                        decoder: f[0].to_string(),
                        parameter: if f[1].is_empty() {
                            None
                        } else {
                            Some(float(f[1])?)
                        },
                        snr_db: float(f[2])?,
                        frames: int(f[3])?,
                        frame_errors: int(f[4])?,
                        fer: float(f[5])?,
                        avg_visits: float(f[6])?,
                        chi: float(f[7])?,
                        wall_seconds: float(f[8])?,
                    })
                })
                .collect()
        }
    }
}
