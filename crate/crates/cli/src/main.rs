//! Frame-error-rate simulator.
//!
//! Example:
//!
//! ```text
//! polar-sim --code 512,256 --crc-bits 24 --decoder fast-sclf --list 4 \
//!     --flips 50 --ebno 2.0:2.75:0.25 --out fer.csv
//! ```

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use fast_sclf::harness::{
    parse_ebno_range, run_sweep, trainer_config, write_csv, write_jsonl, write_theta_log, DecoderKind,
    ReliabilitySource, SimConfig, TrainSettings,
};
use fast_sclf::sc::list::Selection;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Parser)]
#[command(version, about = "Polar code FER simulator")]
struct Args {
    /// Code length and payload size, `N,K`.
    #[arg(long, default_value = "512,256")]
    code: String,
    #[arg(long, default_value_t = 24)]
    crc_bits: usize,
    /// Generator polynomial including the leading term, e.g. 0x1B2B117.
    #[arg(long)]
    crc_poly: Option<String>,
    /// 1-based reliability order, one index per line, least reliable first.
    #[arg(long)]
    reliability: Option<PathBuf>,
    /// sc, scl, fscl, sclf, fast-sclf, ideal-sclf or ideal-fast-sclf.
    #[arg(long, default_value = "fast-sclf")]
    decoder: String,
    #[arg(long, default_value_t = 4)]
    list: usize,
    /// Maximum number of flip attempts.
    #[arg(long, default_value_t = 50)]
    flips: usize,
    /// `A:B:STEP` in dB, or a single value.
    #[arg(long, default_value = "2.0")]
    ebno: String,
    /// Frame budget per point.
    #[arg(long, default_value_t = 100_000)]
    frames: u64,
    #[arg(long, default_value_t = 400)]
    max_errors: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "on")]
    train: Switch,
    /// Number of threshold updates before it is frozen.
    #[arg(long, default_value_t = 50)]
    train_cap: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    /// Per-sample step is `2^-lr_shift`.
    #[arg(long, default_value_t = 9)]
    lr_shift: u32,
    /// Taylor order of the exponential; 0 selects the exact function.
    #[arg(long, default_value_t = 3)]
    taylor: u32,
    /// Initial threshold; uniform in (0, 1) from the seed when omitted.
    #[arg(long)]
    theta: Option<f64>,
    /// Width in bits of the metric-derivative counter.
    #[arg(long, default_value_t = 2)]
    dq_bits: u32,
    /// Keep only frames with this many channel hard-decision errors.
    #[arg(long)]
    channel_errors: Option<usize>,
    /// Report the true codeword whenever it survives in the list.
    #[arg(long)]
    genie: bool,
    /// Results file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Threshold trajectory CSV of the last point.
    #[arg(long)]
    theta_log: Option<PathBuf>,
}

fn parse_code(text: &str) -> Result<(usize, usize)> {
    let Some((n, k)) = text.split_once(',') else {
        bail!("--code expects N,K, got {text:?}");
    };
    Ok((n.trim().parse()?, k.trim().parse()?))
}

fn parse_poly(text: &str) -> Result<u64> {
    let t = text.trim();
    let v = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16)?,
        None => t.parse()?,
    };
    Ok(v)
}

fn config(args: &Args) -> Result<SimConfig> {
    let (n, k) = parse_code(&args.code).context("parsing --code")?;
    Ok(SimConfig {
        n,
        k,
        crc_bits: args.crc_bits,
        crc_poly: args.crc_poly.as_deref().map(parse_poly).transpose().context("parsing --crc-poly")?,
        reliability: args
            .reliability
            .clone()
            .map_or(ReliabilitySource::Nr, ReliabilitySource::File),
        decoder: args.decoder.parse()?,
        list: args.list,
        flips: args.flips,
        ebno_db: parse_ebno_range(&args.ebno)?,
        max_frames: args.frames,
        max_errors: args.max_errors,
        seed: args.seed,
        train: TrainSettings {
            enabled: matches!(args.train, Switch::On),
            trainer: trainer_config(args.batch, args.lr_shift, args.taylor, args.train_cap),
        },
        theta0: args.theta,
        dq_bits: args.dq_bits,
        selection: if args.genie { Selection::Genie } else { Selection::Crc },
        channel_errors: args.channel_errors,
    })
}

fn run(args: &Args) -> Result<()> {
    let cfg = config(args)?;
    if cfg.decoder == DecoderKind::Sc && cfg.list != 1 {
        eprintln!("note: sc ignores --list");
    }
    let rows = run_sweep(&cfg)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    };
    match args.format {
        Format::Csv => write_csv(sink, &rows)?,
        Format::Jsonl => write_jsonl(sink, &rows)?,
    }
    if let Some(p) = &args.theta_log {
        let log = rows.last().map(|r| r.theta_log.as_slice()).unwrap_or_default();
        let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_theta_log(BufWriter::new(f), log)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_and_poly_parsing() {
        assert_eq!(parse_code("512,256").unwrap(), (512, 256));
        assert!(parse_code("512").is_err());
        assert_eq!(parse_poly("0x107").unwrap(), 0x107);
        assert_eq!(parse_poly("263").unwrap(), 263);
    }

    #[test]
    fn defaults_build_a_config() {
        let args = Args::parse_from(["polar-sim"]);
        let cfg = config(&args).unwrap();
        assert_eq!((cfg.n, cfg.k, cfg.crc_bits, cfg.list, cfg.flips), (512, 256, 24, 4, 50));
        assert_eq!(cfg.train.trainer.batch, 32);
        assert_eq!(cfg.train.trainer.update_cap, 50);
    }
}
