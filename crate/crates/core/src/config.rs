//! Run configuration: every tunable as `key = value` text with strict
//! unknown-key rejection. Command-line flags override file values by calling
//! [`RunConfig::set`] after [`RunConfig::merge_text`].

use std::path::PathBuf;

use crate::decompression::DecompressMode;
use crate::error::{Error, Result};
use crate::gated::GateActivation;
use crate::trainer::{AdamParams, LossWeights};

/// Where decompression takes its references from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceSource {
    /// The intact source image (upper-bound quality, consults ground truth).
    Truth,
    /// Only the damaged input (leakage-free).
    Damaged,
}

impl ReferenceSource {
    pub fn parse(s: &str) -> Result<ReferenceSource> {
        match s {
            "truth" => Ok(ReferenceSource::Truth),
            "damaged" => Ok(ReferenceSource::Damaged),
            other => Err(Error::Config(format!(
                "unknown reference source '{other}', expected truth|damaged"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceSource::Truth => "truth",
            ReferenceSource::Damaged => "damaged",
        }
    }
}

/// Which architecture table to build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetChoice {
    /// The production architecture.
    Full,
    /// Its thin clone for desk-scale experiments.
    Shrunk,
    /// A netspec file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
    pub w_l1: f32,
    pub w_var: f32,
    pub w_gan: f32,
    pub mask_fraction: f64,
    pub threshold_t: f64,
    pub gate_mode: GateActivation,
    pub leaky_slope: f32,
    pub steps: usize,
    pub batch_size: usize,
    pub train_size: usize,
    pub checkpoint_every: usize,
    pub log_every: usize,
    pub mode: DecompressMode,
    pub reference: ReferenceSource,
    pub net: NetChoice,
    pub data_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub resume_from: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
            w_l1: 1.0,
            w_var: 0.1,
            w_gan: 0.1,
            mask_fraction: 0.30,
            threshold_t: 0.15,
            gate_mode: GateActivation::Sigmoid,
            leaky_slope: 0.2,
            steps: 1000,
            batch_size: 1,
            train_size: 256,
            checkpoint_every: 500,
            log_every: 50,
            mode: DecompressMode::Selection,
            reference: ReferenceSource::Truth,
            net: NetChoice::Full,
            data_dir: None,
            out_dir: PathBuf::from("out"),
            resume_from: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("key '{key}': cannot parse '{value}'")))
}

impl RunConfig {
    /// Sets one key. Unknown keys are rejected so typos never silently fall
    /// back to defaults.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "lr" => self.lr = parse_num(key, value)?,
            "beta1" => self.beta1 = parse_num(key, value)?,
            "beta2" => self.beta2 = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "w_l1" => self.w_l1 = parse_num(key, value)?,
            "w_var" => self.w_var = parse_num(key, value)?,
            "w_gan" => self.w_gan = parse_num(key, value)?,
            "mask_fraction" => self.mask_fraction = parse_num(key, value)?,
            "threshold_t" => self.threshold_t = parse_num(key, value)?,
            "gate_mode" => {
                self.gate_mode = match value {
                    "sigmoid" => GateActivation::Sigmoid,
                    "identity" => GateActivation::Identity,
                    other => {
                        return Err(Error::Config(format!(
                            "key 'gate_mode': unknown value '{other}', expected sigmoid|identity"
                        )))
                    }
                }
            }
            "leaky_slope" => self.leaky_slope = parse_num(key, value)?,
            "steps" => self.steps = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "train_size" => self.train_size = parse_num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, value)?,
            "log_every" => self.log_every = parse_num(key, value)?,
            "mode" => self.mode = DecompressMode::parse(value).map_err(rewrap)?,
            "reference" => self.reference = ReferenceSource::parse(value)?,
            "net" => {
                self.net = match value {
                    "full" => NetChoice::Full,
                    "shrunk" => NetChoice::Shrunk,
                    path => NetChoice::File(PathBuf::from(path)),
                }
            }
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "resume_from" => self.resume_from = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Config(format!("unknown configuration key '{other}'")))
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment, blank lines are
    /// skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Cross-field checks that individual `set` calls cannot see.
    pub fn validate(&self) -> Result<()> {
        self.adam().validate().map_err(rewrap)?;
        self.loss_weights().validate().map_err(rewrap)?;
        if !(0.0..1.0).contains(&self.mask_fraction) {
            return Err(Error::Config(format!(
                "mask_fraction must lie in [0, 1), got {}",
                self.mask_fraction
            )));
        }
        if !self.threshold_t.is_finite() || self.threshold_t < 0.0 {
            return Err(Error::Config(format!(
                "threshold_t must be finite and non-negative, got {}",
                self.threshold_t
            )));
        }
        if self.batch_size == 0 || self.steps == 0 {
            return Err(Error::Config(
                "steps and batch_size must be positive".into(),
            ));
        }
        if self.train_size == 0 || self.train_size % 8 != 0 {
            return Err(Error::Config(format!(
                "train_size must be a positive multiple of 8, got {}",
                self.train_size
            )));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            w_l1: self.w_l1,
            w_var: self.w_var,
            w_gan: self.w_gan,
        }
    }
}

fn rewrap(e: Error) -> Error {
    Error::Config(e.to_string())
}
