//! Monte-Carlo frame-error-rate simulation.

mod report;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{ebno_to_sigma, frame_rng, hard_errors, llr, transmit, ChannelError};
use crate::codebook::{nr_reliability, read_reliability, CodebookError, Crc, PolarCode};
use crate::flip::FlipDecoder;
use crate::instrument::CostLedger;
use crate::sc::list::{AttemptConfig, DecodeError, ListDecoder, Selection};
use crate::sc::ScDecoder;
use crate::trainer::{init_theta, ExpMode, OnlineTrainer, ThetaUpdate, TrainerConfig};

pub use report::{write_csv, write_jsonl, write_theta_log, CSV_HEADER};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("unknown decoder {0:?}")]
    UnknownDecoder(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialisation error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    Sc,
    Scl,
    Fscl,
    Sclf,
    FastSclf,
    IdealSclf,
    IdealFastSclf,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 7] = [
        DecoderKind::Sc,
        DecoderKind::Scl,
        DecoderKind::Fscl,
        DecoderKind::Sclf,
        DecoderKind::FastSclf,
        DecoderKind::IdealSclf,
        DecoderKind::IdealFastSclf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Sc => "sc",
            DecoderKind::Scl => "scl",
            DecoderKind::Fscl => "fscl",
            DecoderKind::Sclf => "sclf",
            DecoderKind::FastSclf => "fast-sclf",
            DecoderKind::IdealSclf => "ideal-sclf",
            DecoderKind::IdealFastSclf => "ideal-fast-sclf",
        }
    }

    pub fn is_flip(self) -> bool {
        matches!(self, DecoderKind::Sclf | DecoderKind::FastSclf)
    }

    pub fn is_ideal(self) -> bool {
        matches!(self, DecoderKind::IdealSclf | DecoderKind::IdealFastSclf)
    }
}

impl FromStr for DecoderKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DecoderKind::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| HarnessError::UnknownDecoder(s.to_string()))
    }
}

/// Where the information set comes from.
#[derive(Clone, Debug, Default)]
pub enum ReliabilitySource {
    /// Bundled 5G NR sequence.
    #[default]
    Nr,
    File(PathBuf),
    /// 0-based order, least reliable first.
    Order(Vec<usize>),
    /// Explicit 0-based frozen set.
    Frozen(Vec<usize>),
}

/// Threshold adaptation settings for flip decoders.
#[derive(Clone, Copy, Debug)]
pub struct TrainSettings {
    pub enabled: bool,
    pub trainer: TrainerConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            enabled: true,
            trainer: TrainerConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    pub crc_bits: usize,
    pub crc_poly: Option<u64>,
    pub reliability: ReliabilitySource,
    pub decoder: DecoderKind,
    pub list: usize,
    pub flips: usize,
    pub ebno_db: Vec<f64>,
    pub max_frames: u64,
    pub max_errors: u64,
    pub seed: u64,
    pub train: TrainSettings,
    /// Initial threshold; drawn uniformly from `(0, 1)` when absent.
    pub theta0: Option<f64>,
    /// Width of the metric-derivative counter.
    pub dq_bits: u32,
    pub selection: Selection,
    /// Keep only frames with exactly this many channel hard-decision errors.
    pub channel_errors: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 512,
            k: 256,
            crc_bits: 24,
            crc_poly: None,
            reliability: ReliabilitySource::Nr,
            decoder: DecoderKind::FastSclf,
            list: 4,
            flips: 50,
            ebno_db: vec![2.0],
            max_frames: 100_000,
            max_errors: 400,
            seed: 1,
            train: TrainSettings::default(),
            theta0: None,
            dq_bits: 2,
            selection: Selection::Crc,
            channel_errors: None,
        }
    }
}

impl SimConfig {
    pub fn build_code(&self) -> Result<PolarCode, HarnessError> {
        let crc = match self.crc_poly {
            Some(p) => {
                let c = Crc::new(p)?;
                if c.len() != self.crc_bits {
                    return Err(HarnessError::Config(format!(
                        "polynomial {p:#x} has degree {}, expected {}",
                        c.len(),
                        self.crc_bits
                    )));
                }
                c
            }
            None => Crc::standard(self.crc_bits)?,
        };
        let code = match &self.reliability {
            ReliabilitySource::Nr => PolarCode::from_reliability(self.n, self.k, crc, &nr_reliability(self.n)?)?,
            ReliabilitySource::File(p) => PolarCode::from_reliability(self.n, self.k, crc, &read_reliability(p, self.n)?)?,
            ReliabilitySource::Order(o) => PolarCode::from_reliability(self.n, self.k, crc, o)?,
            ReliabilitySource::Frozen(f) => PolarCode::from_frozen(self.n, self.k, crc, f)?,
        };
        Ok(code)
    }

    pub fn initial_theta(&self) -> f64 {
        self.theta0
            .unwrap_or_else(|| init_theta(&mut frame_rng(self.seed, u64::MAX)))
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.list == 0 {
            return Err(HarnessError::Config("list size must be positive".into()));
        }
        if self.max_frames == 0 {
            return Err(HarnessError::Config("frame budget must be positive".into()));
        }
        if self.train.trainer.batch == 0 {
            return Err(HarnessError::Config("batch size must be positive".into()));
        }
        if self.ebno_db.is_empty() {
            return Err(HarnessError::Config("no Eb/N0 points".into()));
        }
        if let Some(ce) = self.channel_errors {
            if ce == 0 || ce > self.n {
                return Err(HarnessError::Config(format!(
                    "channel error count {ce} outside 1..={}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

/// One simulated operating point.
#[derive(Clone, Debug, Serialize)]
pub struct PointResult {
    pub decoder: DecoderKind,
    #[serde(rename = "L")]
    pub list: usize,
    pub m: usize,
    pub ebno_db: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    pub avg_complexity: f64,
    pub avg_timesteps: f64,
    pub avg_attempts: f64,
    pub train_acc: Option<f64>,
    pub theta: Option<f64>,
    pub sec_per_frame: f64,
    #[serde(skip)]
    pub theta_log: Vec<ThetaUpdate>,
    /// Frames drawn, rejected ones included.
    #[serde(skip)]
    pub drawn: u64,
    /// Frames whose initial attempt failed the CRC.
    #[serde(skip)]
    pub initial_failures: u64,
    #[serde(skip)]
    pub samples: u64,
}

impl PointResult {
    /// Normal-approximation 95% interval on the error rate.
    pub fn fer_interval(&self) -> (f64, f64) {
        let n = self.frames as f64;
        let p = self.fer;
        let half = 1.96 * (p * (1.0 - p) / n).sqrt();
        ((p - half).max(0.0), (p + half).min(1.0))
    }
}

enum Engine {
    Sc(ScDecoder),
    List(ListDecoder),
    Flip(FlipDecoder),
}

/// Per-frame decode result.
pub struct FrameOutcome {
    pub u_hat: Vec<u8>,
    pub attempts: usize,
    pub cost: CostLedger,
    pub initial_crc_ok: bool,
    pub fixed_by: Option<usize>,
}

/// Drives one decoder across frames, training its threshold when enabled.
pub struct Simulator {
    cfg: SimConfig,
    code: PolarCode,
    engine: Engine,
    trainer: Option<OnlineTrainer>,
    theta: f64,
}

impl Simulator {
    pub fn new(cfg: &SimConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let code = cfg.build_code()?;
        Self::with_code(cfg, code)
    }

    pub fn with_code(cfg: &SimConfig, code: PolarCode) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let engine = match cfg.decoder {
            DecoderKind::Sc => Engine::Sc(ScDecoder::new(&code)),
            DecoderKind::Scl => Engine::List(ListDecoder::scl(&code, cfg.list)?),
            DecoderKind::Fscl => Engine::List(ListDecoder::fscl(&code, cfg.list)?),
            DecoderKind::Sclf | DecoderKind::IdealSclf => {
                Engine::Flip(FlipDecoder::bitwise(&code, cfg.list, cfg.flips, cfg.dq_bits)?)
            }
            DecoderKind::FastSclf | DecoderKind::IdealFastSclf => {
                Engine::Flip(FlipDecoder::fast(&code, cfg.list, cfg.flips, cfg.dq_bits)?)
            }
        };
        let theta = cfg.initial_theta();
        let trainer = (cfg.decoder.is_flip() && cfg.train.enabled)
            .then(|| OnlineTrainer::new(cfg.train.trainer, theta));
        Ok(Simulator {
            cfg: cfg.clone(),
            code,
            engine,
            trainer,
            theta,
        })
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn theta(&self) -> f64 {
        self.trainer.as_ref().map_or(self.theta, |t| t.theta())
    }

    pub fn trainer(&self) -> Option<&OnlineTrainer> {
        self.trainer.as_ref()
    }

    /// Decodes one frame. Training, when enabled, runs on the frame's sample.
    pub fn decode_frame(&mut self, llrs: &[f64], truth: &[u8]) -> Result<FrameOutcome, HarnessError> {
        let theta = self.theta();
        let selection = self.cfg.selection;
        let out = match &mut self.engine {
            Engine::Sc(d) => {
                let mut cost = CostLedger::default();
                let u_hat = d.decode(llrs, &mut cost);
                FrameOutcome {
                    initial_crc_ok: self.code.crc_passes(&u_hat),
                    u_hat,
                    attempts: 1,
                    cost,
                    fixed_by: None,
                }
            }
            Engine::List(d) => {
                let cfg = AttemptConfig {
                    truth: (selection == Selection::Genie).then_some(truth),
                    selection,
                    ..Default::default()
                };
                let a = d.decode(llrs, &cfg)?;
                FrameOutcome {
                    initial_crc_ok: a.crc_ok,
                    u_hat: a.u_hat,
                    attempts: 1,
                    cost: *d.cost(),
                    fixed_by: None,
                }
            }
            Engine::Flip(d) => {
                let o = if self.cfg.decoder.is_ideal() {
                    d.decode_ideal(llrs, truth, selection)?
                } else {
                    d.decode(llrs, theta)?
                };
                let mut cost = o.cost;
                if let (Some(t), Some(s)) = (self.trainer.as_mut(), o.sample.as_ref()) {
                    let mut train_cost = CostLedger::default();
                    t.submit(s, o.fixed_by == Some(0), &mut train_cost);
                    train_cost.steps = 0;
                    cost.absorb(&train_cost);
                }
                FrameOutcome {
                    u_hat: o.attempt.u_hat,
                    attempts: o.attempts,
                    cost,
                    initial_crc_ok: o.initial_crc_ok,
                    fixed_by: o.fixed_by,
                }
            }
        };
        Ok(out)
    }

    /// Runs frames at one Eb/N0 until the error or frame budget is spent.
    pub fn run_point(&mut self, ebno_db: f64) -> Result<PointResult, HarnessError> {
        let sigma = ebno_to_sigma(ebno_db, self.code.rate())?;
        let kc = self.code.payload_len();
        let started = Instant::now();
        let (mut frames, mut errors, mut drawn) = (0u64, 0u64, 0u64);
        let (mut complexity, mut steps, mut attempts) = (0u128, 0u128, 0u64);
        let (mut initial_failures, mut samples, mut hits) = (0u64, 0u64, 0u64);
        while frames < self.cfg.max_frames && errors < self.cfg.max_errors {
            let mut rng = frame_rng(self.cfg.seed, drawn);
            drawn += 1;
            let payload: Vec<u8> = (0..kc).map(|_| rng.random_range(0..2u8)).collect();
            let u = self.code.build_input(&payload)?;
            let x = self.code.encode(&u)?;
            let y = transmit(&x, sigma, &mut rng);
            if let Some(ce) = self.cfg.channel_errors {
                if hard_errors(&y, &x) != ce {
                    continue;
                }
            }
            let out = self.decode_frame(&llr(&y, sigma), &u)?;
            frames += 1;
            if self.code.payload(&out.u_hat) != payload {
                errors += 1;
            }
            complexity += u128::from(out.cost.complexity());
            steps += u128::from(out.cost.steps);
            attempts += out.attempts as u64;
            if !out.initial_crc_ok {
                initial_failures += 1;
            }
            if let Some(rank) = out.fixed_by {
                samples += 1;
                hits += u64::from(rank == 0);
            }
        }
        let f = frames.max(1) as f64;
        let flip = self.cfg.decoder.is_flip();
        Ok(PointResult {
            decoder: self.cfg.decoder,
            list: if self.cfg.decoder == DecoderKind::Sc { 1 } else { self.cfg.list },
            m: if flip || self.cfg.decoder.is_ideal() { self.cfg.flips } else { 0 },
            ebno_db,
            frames,
            errors,
            fer: errors as f64 / f,
            avg_complexity: complexity as f64 / f,
            avg_timesteps: steps as f64 / f,
            avg_attempts: attempts as f64 / f,
            train_acc: if flip { training_accuracy(hits, initial_failures) } else { None },
            theta: flip.then(|| self.theta()),
            sec_per_frame: started.elapsed().as_secs_f64() / f,
            theta_log: self.trainer.as_ref().map(|t| t.history().to_vec()).unwrap_or_default(),
            drawn,
            initial_failures,
            samples,
        })
    }
}

/// Share of CRC-failing initial attempts fixed by the first-ranked retry.
pub fn training_accuracy(top1_hits: u64, initial_failures: u64) -> Option<f64> {
    (initial_failures > 0).then(|| top1_hits as f64 / initial_failures as f64)
}

/// Simulates every Eb/N0 point of a configuration. Each point starts from a
/// fresh decoder, so trained thresholds do not leak between points.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<PointResult>, HarnessError> {
    let code = cfg.build_code()?;
    let mut out = Vec::with_capacity(cfg.ebno_db.len());
    for &e in &cfg.ebno_db {
        let mut sim = Simulator::with_code(cfg, code.clone())?;
        out.push(sim.run_point(e)?);
    }
    Ok(out)
}

/// Parses `A:B:STEP` (inclusive) or a single value.
pub fn parse_ebno_range(text: &str) -> Result<Vec<f64>, HarnessError> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| HarnessError::Config(format!("bad Eb/N0 value {s:?}")))
    };
    match parts.as_slice() {
        [a] => Ok(vec![num(a)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(HarnessError::Config(format!("bad Eb/N0 range {text:?}")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(HarnessError::Config(format!("bad Eb/N0 range {text:?}"))),
    }
}

/// Trainer settings from the command-line style knobs.
pub fn trainer_config(batch: usize, lr_shift: u32, taylor: u32, cap: usize) -> TrainerConfig {
    TrainerConfig {
        learning_rate: batch as f64 * 2f64.powi(-(lr_shift as i32)),
        batch,
        exp: if taylor == 0 { ExpMode::Exact } else { ExpMode::Taylor(taylor) },
        update_cap: cap,
    }
}
