//! USFM and OFDM transceiver chains.
//!
//! USFM transmit path:
//!
//! ```text
//! bits -> QAM -> grid G -> WHT down columns -> x w[k,j] -> IDFT per row
//!      -> cyclic prefix / preamble -> frame
//! ```
//!
//! The receiver inverts each stage with a one-tap equalizer per
//! (block, subcarrier) bin sitting between the DFT and the despreading WHT.
//! OFDM is the same chain without the WHT and with unit weights.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    add_awgn, apply_realization, draw_realization, extract_csi, noise_var_for_ebn0, ChannelConfig,
    ChannelKind, Csi,
};
use crate::error::{Error, Result};
use crate::modem::{self, assemble_frame, demap_symbols, disassemble_frame, fill_grid, map_bits, ComplexFrame, Constellation};
use crate::optimizer::{optimize_weights, OptimizerConfig, Weights};
use crate::rng::random_bits;
use crate::transforms::{Direction, SfGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Usfm,
    Ofdm,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Usfm => "usfm",
            Scheme::Ofdm => "ofdm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equalizer {
    Zf,
    Mmse,
}

impl Equalizer {
    pub fn label(self) -> &'static str {
        match self {
            Equalizer::Zf => "zf",
            Equalizer::Mmse => "mmse",
        }
    }
}

/// Bins whose effective gain magnitude falls below this are erased under ZF.
pub const ZF_ERASURE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub scheme: Scheme,
    pub mod_order: usize,
    pub n_seq: usize,
    pub n_freq: usize,
    /// Cyclic prefix length. USFM only inserts it on frequency-selective
    /// channels; see [`LinkConfig::effective_cp_len`].
    pub cp_len: usize,
    /// Prepend the known all-ones preamble of `n_freq` samples.
    pub preamble: bool,
    pub channel: ChannelConfig,
    pub equalizer: Equalizer,
    pub optimize: bool,
    pub optimizer: OptimizerConfig,
    pub ebn0_db: Vec<f64>,
    pub seed: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Usfm,
            mod_order: 4,
            n_seq: 64,
            n_freq: 64,
            cp_len: 16,
            preamble: false,
            channel: ChannelConfig::default(),
            equalizer: Equalizer::Mmse,
            optimize: false,
            optimizer: OptimizerConfig::default(),
            ebn0_db: vec![0.0, 2.0, 4.0, 6.0, 8.0],
            seed: 0,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        Constellation::new(self.mod_order)?;
        for (name, n) in [("n_seq", self.n_seq), ("n_freq", self.n_freq)] {
            if n == 0 || !n.is_power_of_two() {
                return Err(Error::Config(format!("{name} = {n} is not a power of two")));
            }
        }
        if self.cp_len >= self.n_freq {
            return Err(Error::Config(format!(
                "cp_len {} must be shorter than n_freq {}",
                self.cp_len, self.n_freq
            )));
        }
        self.channel.validate()?;
        if self.channel.kind == ChannelKind::FreqSelective {
            if self.channel.n_taps >= self.n_freq {
                return Err(Error::Config(format!(
                    "{} taps must be fewer than n_freq {}",
                    self.channel.n_taps, self.n_freq
                )));
            }
            if self.cp_len + 1 < self.channel.n_taps {
                return Err(Error::Config(format!(
                    "cp_len {} cannot absorb {} channel taps",
                    self.cp_len, self.channel.n_taps
                )));
            }
        }
        self.optimizer.validate()?;
        if self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("Eb/N0 grid contains non-finite values".into()));
        }
        Ok(())
    }

    /// CP actually inserted: always for OFDM, only under multipath for USFM.
    pub fn effective_cp_len(&self) -> usize {
        match (self.scheme, self.channel.kind) {
            (Scheme::Ofdm, _) | (Scheme::Usfm, ChannelKind::FreqSelective) => self.cp_len,
            (Scheme::Usfm, _) => 0,
        }
    }

    pub fn preamble_len(&self) -> usize {
        if self.preamble {
            self.n_freq
        } else {
            0
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.mod_order.trailing_zeros() as usize
    }

    pub fn bits_per_frame(&self) -> usize {
        self.n_seq * self.n_freq * self.bits_per_symbol()
    }

    pub fn frame_len(&self) -> usize {
        ComplexFrame::expected_len(self.n_seq, self.n_freq, self.effective_cp_len(), self.preamble_len())
    }

    /// Mean transmitted frame energy: unit-energy samples everywhere
    /// (data, cyclic prefix and the all-ones preamble).
    pub fn expected_frame_energy(&self) -> f64 {
        self.frame_len() as f64
    }

    pub fn spectral_efficiency(&self) -> f64 {
        crate::metrics::spectral_efficiency(
            self.mod_order,
            self.n_freq,
            self.effective_cp_len(),
            self.preamble_len(),
            self.n_seq,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TxFlag {
    /// Optimization was requested but no CSI was supplied.
    OptimizeWithoutCsi,
    /// The optimizer stopped on a non-finite value.
    OptimizerAborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxArtifacts {
    pub frame: ComplexFrame,
    /// Data symbols before spreading.
    pub grid: SfGrid,
    pub weights: Weights,
    pub optimizer_iters: usize,
    pub flags: Vec<TxFlag>,
}

fn map_to_grid(bits: &[u8], cfg: &LinkConfig) -> Result<(Constellation, SfGrid)> {
    if bits.len() != cfg.bits_per_frame() {
        return Err(Error::Size(format!(
            "frame carries {} bits, got {}",
            cfg.bits_per_frame(),
            bits.len()
        )));
    }
    let c = Constellation::new(cfg.mod_order)?;
    let symbols = map_bits(bits, &c)?;
    let grid = fill_grid(&symbols, cfg.n_seq, cfg.n_freq)?;
    Ok((c, grid))
}

fn synthesize(grid: &SfGrid, weights: &Weights, spread: bool, cfg: &LinkConfig) -> Result<ComplexFrame> {
    let mut bins = grid.clone();
    if spread {
        bins.wht_sequency_axis();
    }
    if !weights.is_uniform() {
        for (x, &w) in bins.as_mut_slice().iter_mut().zip(&weights.values) {
            *x *= w;
        }
    }
    bins.dft_frequency_axis(Direction::Inverse);
    assemble_frame(&bins, cfg.effective_cp_len(), &modem::preamble(cfg.preamble_len()))
}

pub fn usfm_transmit(bits: &[u8], cfg: &LinkConfig, csi: Option<&Csi>) -> Result<TxArtifacts> {
    let (_, grid) = map_to_grid(bits, cfg)?;
    let mut flags = Vec::new();
    let mut optimizer_iters = 0;
    let weights = match (cfg.optimize, csi) {
        (false, _) => Weights::uniform(cfg.n_seq, cfg.n_freq),
        (true, None) => {
            flags.push(TxFlag::OptimizeWithoutCsi);
            Weights::uniform(cfg.n_seq, cfg.n_freq)
        }
        (true, Some(csi)) => {
            let out = optimize_weights(csi, cfg, &cfg.optimizer)?;
            optimizer_iters = out.iterations;
            if out.aborted.is_some() {
                flags.push(TxFlag::OptimizerAborted);
            }
            out.weights
        }
    };
    let frame = synthesize(&grid, &weights, true, cfg)?;
    Ok(TxArtifacts { frame, grid, weights, optimizer_iters, flags })
}

pub fn ofdm_transmit(bits: &[u8], cfg: &LinkConfig) -> Result<TxArtifacts> {
    let (_, grid) = map_to_grid(bits, cfg)?;
    let weights = Weights::uniform(cfg.n_seq, cfg.n_freq);
    let frame = synthesize(&grid, &weights, false, cfg)?;
    Ok(TxArtifacts { frame, grid, weights, optimizer_iters: 0, flags: Vec::new() })
}

/// Scheme-dispatching transmitter.
pub fn transmit(bits: &[u8], cfg: &LinkConfig, csi: Option<&Csi>) -> Result<TxArtifacts> {
    match cfg.scheme {
        Scheme::Usfm => usfm_transmit(bits, cfg, csi),
        Scheme::Ofdm => ofdm_transmit(bits, cfg),
    }
}

/// One-tap equalization of every bin; returns the per-bin signal gain left
/// after equalization (1 for ZF, the Wiener shrinkage for MMSE).
fn equalize(bins: &mut SfGrid, csi: &Csi, weights: &Weights, eq: Equalizer) -> Vec<f64> {
    let noise_var = csi.noise_var;
    let zero = Complex64::new(0.0, 0.0);
    bins.as_mut_slice()
        .iter_mut()
        .zip(csi.gains.iter().zip(&weights.values))
        .map(|(y, (&h, &w))| {
            let g = h * w;
            let power = g.norm_sqr();
            match eq {
                Equalizer::Zf => {
                    if g.norm() < ZF_ERASURE_THRESHOLD {
                        *y = zero;
                        0.0
                    } else {
                        *y /= g;
                        1.0
                    }
                }
                Equalizer::Mmse => {
                    let denom = power + noise_var;
                    if denom > 0.0 {
                        *y *= g.conj() / denom;
                        power / denom
                    } else {
                        *y = zero;
                        0.0
                    }
                }
            }
        })
        .collect()
}

fn receive_chain(frame: &ComplexFrame, cfg: &LinkConfig, csi: &Csi, weights: &Weights, spread: bool) -> Result<Vec<u8>> {
    if csi.n_blocks != cfg.n_seq || csi.n_freq != cfg.n_freq {
        return Err(Error::Size("CSI does not match the link grid".into()));
    }
    let c = Constellation::new(cfg.mod_order)?;
    let mut bins = disassemble_frame(frame)?;
    bins.dft_frequency_axis(Direction::Forward);
    let shrink = equalize(&mut bins, csi, weights, cfg.equalizer);
    if spread {
        bins.wht_sequency_axis();
    }
    if cfg.equalizer == Equalizer::Mmse {
        // MMSE leaves each symbol scaled by the mean shrinkage of the bins
        // it was spread over; undo it so QAM decision levels line up.
        let (n_seq, n_freq) = (cfg.n_seq, cfg.n_freq);
        let data = bins.as_mut_slice();
        if spread {
            for j in 0..n_freq {
                let bias = (0..n_seq).map(|k| shrink[k * n_freq + j]).sum::<f64>() / n_seq as f64;
                if bias > 0.0 {
                    (0..n_seq).for_each(|k| data[k * n_freq + j] /= bias);
                }
            }
        } else {
            for (y, &b) in data.iter_mut().zip(&shrink) {
                if b > 0.0 {
                    *y /= b;
                }
            }
        }
    }
    Ok(demap_symbols(bins.as_slice(), &c))
}

pub fn usfm_receive(frame: &ComplexFrame, cfg: &LinkConfig, csi: &Csi, weights: &Weights) -> Result<Vec<u8>> {
    receive_chain(frame, cfg, csi, weights, true)
}

pub fn ofdm_receive(frame: &ComplexFrame, cfg: &LinkConfig, csi: &Csi) -> Result<Vec<u8>> {
    receive_chain(frame, cfg, csi, &Weights::uniform(cfg.n_seq, cfg.n_freq), false)
}

/// Scheme-dispatching receiver.
pub fn receive(frame: &ComplexFrame, cfg: &LinkConfig, csi: &Csi, weights: &Weights) -> Result<Vec<u8>> {
    match cfg.scheme {
        Scheme::Usfm => usfm_receive(frame, cfg, csi, weights),
        Scheme::Ofdm => ofdm_receive(frame, cfg, csi),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub bits: u64,
    pub optimizer_iters: usize,
    pub flags: Vec<TxFlag>,
}

/// One frame at the given Eb/N0.
pub fn run_link_trial<R: Rng + ?Sized>(cfg: &LinkConfig, ebn0_db: f64, rng: &mut R) -> Result<TrialOutcome> {
    run_link_trial_with_noise(cfg, noise_var_for_ebn0(ebn0_db, cfg), rng)
}

/// One frame at an explicit noise variance per sample.
///
/// Draw order is fixed (bits, channel, noise) so configurations that share a
/// seed see the same data, fades and noise samples.
pub fn run_link_trial_with_noise<R: Rng + ?Sized>(cfg: &LinkConfig, noise_var: f64, rng: &mut R) -> Result<TrialOutcome> {
    let bits = random_bits(rng, cfg.bits_per_frame());
    let realization = draw_realization(&cfg.channel, cfg.n_seq, cfg.n_freq, rng)?;
    let csi = extract_csi(&realization, noise_var);
    let tx = transmit(&bits, cfg, Some(&csi))?;
    let faded = apply_realization(&tx.frame, &realization)?;
    let received = add_awgn(&faded, noise_var, rng)?;
    let decided = receive(&received, cfg, &csi, &tx.weights)?;
    let bit_errors = bits.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64;
    Ok(TrialOutcome { bit_errors, bits: bits.len() as u64, optimizer_iters: tx.optimizer_iters, flags: tx.flags })
}
