//! `polarsim`: Monte Carlo FER and complexity sweeps for polar decoders.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use polar_fano::channel::SnrConvention;
use polar_fano::{
    construct_code, example1, render_results, sc_decode, trace_frame, DecoderSpec, FanoConfig,
    FanoDecoder, OutputFormat, SimConfig, SimRecord, TraceEvent,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polarsim",
    version,
    about = "Frame error rate and decoding complexity of SC, SC-List and SC-Fano polar decoders"
)]
struct Args {
    /// JSON experiment file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Code length exponent (N = 2^n).
    #[arg(long)]
    n: Option<u32>,

    /// Number of information bits.
    #[arg(long)]
    k: Option<usize>,

    /// SNR points in dB, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,

    /// Decoder to simulate: `sc`, `fano:DELTA` or `scl:L`. Repeatable.
    #[arg(long = "decoder", value_parser = parse_decoder)]
    decoders: Vec<DecoderSpec>,

    /// Construction SNR in dB (defaults to each simulated SNR).
    #[arg(long, allow_negative_numbers = true)]
    construction_snr: Option<f64>,

    /// Stop a cell after this many frame errors.
    #[arg(long)]
    min_errors: Option<u64>,

    /// Stop a cell after this many frames.
    #[arg(long)]
    max_frames: Option<u64>,

    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,

    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Interpret SNR points as Es/N0 instead of Eb/N0.
    #[arg(long)]
    es_n0: bool,

    /// Record wall-clock seconds per cell (output is then not reproducible).
    #[arg(long)]
    timing: bool,

    /// SC-Fano visit cap, as a multiple of N.
    #[arg(long)]
    max_visits_factor: Option<u64>,

    /// Decode a single frame with the first SC-Fano decoder at the first SNR
    /// point and print its moves as JSON lines.
    #[arg(long, conflicts_with = "example1")]
    trace: bool,

    /// Frame index used by `--trace`.
    #[arg(long, default_value_t = 0, requires = "trace")]
    frame: u64,

    /// Run the built-in four-bit example and print its SC-Fano trace.
    #[arg(long)]
    example1: bool,

    /// Write the code constructed at the first SNR point (or
    /// `--construction-snr`) as JSON and exit.
    #[arg(long, conflicts_with_all = ["trace", "example1"])]
    export_code: Option<PathBuf>,

    /// No per-cell progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

fn parse_decoder(s: &str) -> Result<DecoderSpec, String> {
    s.parse().map_err(|e: polar_fano::Error| e.to_string())
}

impl Args {
    fn sim_config(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::load(path)?,
            None => SimConfig::default(),
        };
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(snr) = &self.snr {
            cfg.snr_points_db = snr.clone();
        }
        if !self.decoders.is_empty() {
            cfg.decoders = self.decoders.clone();
        }
        if self.construction_snr.is_some() {
            cfg.construction_snr_db = self.construction_snr;
        }
        if let Some(v) = self.min_errors {
            cfg.min_frame_errors = v;
        }
        if let Some(v) = self.max_frames {
            cfg.max_frames = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.max_visits_factor {
            cfg.max_visits_factor = v;
        }
        if self.out.is_some() {
            cfg.output_path = self.out.clone();
        }
        if let Some(f) = self.format {
            cfg.output_format = f.into();
        }
        if self.es_n0 {
            cfg.snr_convention = SnrConvention::EsN0;
        }
        cfg.timing |= self.timing;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Stdout or the `--out` file.
fn open_sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_events(out: &mut dyn Write, events: &[TraceEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut *out, e)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn bits(b: &[u8]) -> String {
    b.iter().map(|x| char::from(b'0' + x)).collect()
}

fn run_example1(args: &Args) -> Result<()> {
    let code = example1::code();
    let llr = example1::llr();
    let sc = sc_decode(&llr, &code)?;
    let mut events = Vec::new();
    let fano = FanoDecoder::new(&code, FanoConfig::new(example1::DELTA))?
        .decode_traced(&llr, |e| events.push(e.clone()))?;

    let mut out = open_sink(args.out.as_ref())?;
    write_events(&mut *out, &events)?;
    eprintln!("message   {}", bits(&example1::MESSAGE));
    eprintln!("sc        {}", bits(&sc.bits));
    eprintln!(
        "sc-fano   {} ({} visits, delta {})",
        bits(&fano.bits),
        fano.visits,
        example1::DELTA
    );
    if sc.bits != example1::SC_OUTPUT || fano.bits != example1::MESSAGE {
        bail!("example regression failed");
    }
    Ok(())
}

fn run_trace(args: &Args, cfg: &SimConfig) -> Result<()> {
    let (frame, res, events) = trace_frame(cfg, args.frame)?;
    let mut out = open_sink(args.out.as_ref())?;
    write_events(&mut *out, &events)?;
    eprintln!(
        "frame {}: {} moves, {} visits, {}",
        args.frame,
        events.len(),
        res.visits,
        if res.bits == frame.message {
            "decoded correctly"
        } else {
            "frame error"
        }
    );
    Ok(())
}

fn export_code(path: &Path, cfg: &SimConfig) -> Result<()> {
    let snr = cfg.construction_snr_db.unwrap_or(cfg.snr_points_db[0]);
    construct_code(cfg.n, cfg.k, snr)?.save(path)?;
    Ok(())
}

fn progress(r: &SimRecord) {
    let name = match r.parameter {
        Some(p) => format!("{}:{p}", r.decoder),
        None => r.decoder.clone(),
    };
    eprintln!(
        "{name:>9} @ {:>5} dB  frames {:>8}  errors {:>5}  fer {:.3e}  chi {:.4}",
        r.snr_db, r.frames, r.frame_errors, r.fer, r.chi
    );
}

fn run(args: Args) -> Result<()> {
    if args.example1 {
        return run_example1(&args);
    }
    let cfg = args.sim_config()?;
    if let Some(path) = &args.export_code {
        return export_code(path, &cfg);
    }
    if args.trace {
        return run_trace(&args, &cfg);
    }

    let records = if args.quiet {
        polar_fano::run_experiment(&cfg)?
    } else {
        polar_fano::sim::run_experiment_with(&cfg, progress)?
    };
    if cfg.output_path.is_none() {
        let mut out = io::stdout().lock();
        out.write_all(render_results(&records, cfg.output_format).as_bytes())?;
        out.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
