//! Monte Carlo BER sweeps.
//!
//! Trials run in fixed-size batches; each batch is evaluated in parallel and
//! reduced in trial order before the stopping rule is checked. Every trial
//! owns a counter-based stream, so the records are identical for any thread
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelKind;
use crate::error::{Error, Result};
use crate::links::{run_link_trial, Equalizer, LinkConfig, Scheme, TrialOutcome, TxFlag};
use crate::rng::trial_stream;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub min_bits: u64,
    pub max_bits: u64,
    pub target_errors: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { min_bits: 1_000_000, max_bits: 10_000_000, target_errors: 100 }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_bits < 10_000 {
            return Err(Error::Config(format!("min_bits {} below 10^4", self.min_bits)));
        }
        if self.max_bits < self.min_bits {
            return Err(Error::Config(format!(
                "max_bits {} below min_bits {}",
                self.max_bits, self.min_bits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFlag {
    NoErrorsObserved,
    /// Stopped at `max_bits` before collecting `target_errors`.
    MaxBitsReached,
    OptimizeWithoutCsi,
    OptimizerAborted,
}

impl RecordFlag {
    /// Flags that indicate a numerical problem rather than a statistical note.
    pub fn is_sanity_failure(self) -> bool {
        matches!(self, RecordFlag::OptimizerAborted | RecordFlag::OptimizeWithoutCsi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub scheme: Scheme,
    pub channel: ChannelKind,
    pub equalizer: Equalizer,
    pub optimized: bool,
    pub ebn0_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_half_width: f64,
    pub optimizer_iters: u64,
    pub flags: Vec<RecordFlag>,
}

/// 95% normal-approximation half-width `1.96 sqrt(p (1 - p) / n)`.
pub fn ci_half_width(errors: u64, bits: u64) -> f64 {
    if bits == 0 {
        return f64::INFINITY;
    }
    let p = errors as f64 / bits as f64;
    Z_95 * (p * (1.0 - p) / bits as f64).sqrt()
}

#[derive(Debug, Default)]
struct Tally {
    errors: u64,
    bits: u64,
    trials: u64,
    optimizer_iters: u64,
    fallback: bool,
    aborted: bool,
}

impl Tally {
    fn absorb(&mut self, t: &TrialOutcome) {
        self.errors += t.bit_errors;
        self.bits += t.bits;
        self.trials += 1;
        self.optimizer_iters += t.optimizer_iters as u64;
        self.fallback |= t.flags.contains(&TxFlag::OptimizeWithoutCsi);
        self.aborted |= t.flags.contains(&TxFlag::OptimizerAborted);
    }
}

/// Run one Eb/N0 point; `point` keys the random streams.
pub fn run_ber_point(cfg: &LinkConfig, point: u64, ebn0_db: f64, sweep: &SweepConfig) -> Result<BerRecord> {
    let bits_per_trial = cfg.bits_per_frame() as u64;
    let batch = sweep.min_bits.div_ceil(bits_per_trial).max(1);
    let max_trials = sweep.max_bits.div_ceil(bits_per_trial).max(1);
    let mut tally = Tally::default();
    loop {
        let start = tally.trials;
        let end = (start + batch).min(max_trials);
        let outcomes: Vec<TrialOutcome> = (start..end)
            .into_par_iter()
            .map(|trial| run_link_trial(cfg, ebn0_db, &mut trial_stream(cfg.seed, point, trial)))
            .collect::<Result<_>>()?;
        outcomes.iter().for_each(|t| tally.absorb(t));
        let enough = tally.errors >= sweep.target_errors && tally.bits >= sweep.min_bits;
        if enough || tally.trials >= max_trials {
            break;
        }
    }

    let mut flags = Vec::new();
    if tally.errors == 0 {
        flags.push(RecordFlag::NoErrorsObserved);
    }
    if tally.errors < sweep.target_errors {
        flags.push(RecordFlag::MaxBitsReached);
    }
    if tally.fallback {
        flags.push(RecordFlag::OptimizeWithoutCsi);
    }
    if tally.aborted {
        flags.push(RecordFlag::OptimizerAborted);
    }
    Ok(BerRecord {
        scheme: cfg.scheme,
        channel: cfg.channel.kind,
        equalizer: cfg.equalizer,
        optimized: cfg.optimize,
        ebn0_db,
        bits: tally.bits,
        errors: tally.errors,
        ber: tally.errors as f64 / tally.bits as f64,
        ci_half_width: ci_half_width(tally.errors, tally.bits),
        optimizer_iters: tally.optimizer_iters,
        flags,
    })
}

/// Sweep every Eb/N0 in `cfg.ebn0_db`.
pub fn run_ber_sweep(cfg: &LinkConfig, sweep: &SweepConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    sweep.validate()?;
    cfg.ebn0_db
        .iter()
        .enumerate()
        .map(|(i, &ebn0)| run_ber_point(cfg, i as u64, ebn0, sweep))
        .collect()
}
