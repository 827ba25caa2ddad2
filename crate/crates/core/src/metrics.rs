//! Closed-form BER references, spectral efficiency, PAPR and operation
//! counts.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::channel::{draw_realization, extract_csi, noise_var_for_ebn0};
use crate::error::{Error, Result};
use crate::links::{LinkConfig, Scheme};
use crate::optimizer::optimize_weights;
use crate::rng::trial_stream;
use crate::transforms::{Direction, SfGrid};

/// Gaussian tail probability `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Square M-QAM bit error rate over AWGN as a function of per-bit SNR:
/// `c * Q(sqrt(a * gamma_b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QamBer {
    coef: f64,
    arg_scale: f64,
}

impl QamBer {
    pub fn new(mod_order: usize) -> Result<Self> {
        if !matches!(mod_order, 4 | 16 | 64) {
            return Err(Error::Config(format!(
                "unsupported modulation order {mod_order}; expected 4, 16 or 64"
            )));
        }
        let m = mod_order as f64;
        let k = mod_order.trailing_zeros() as f64;
        Ok(Self { coef: 4.0 / k * (1.0 - 1.0 / m.sqrt()), arg_scale: 3.0 * k / (m - 1.0) })
    }

    pub fn ber(&self, ebn0: f64) -> f64 {
        self.coef * q_function((self.arg_scale * ebn0).sqrt())
    }

    /// d BER / d gamma_b.
    pub fn derivative(&self, ebn0: f64) -> f64 {
        let x = (self.arg_scale * ebn0).sqrt();
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        -self.coef * pdf * self.arg_scale / (2.0 * x)
    }
}

pub fn ber_qam_awgn(mod_order: usize, ebn0_linear: f64) -> Result<f64> {
    if !(ebn0_linear >= 0.0) {
        return Err(Error::Config(format!("Eb/N0 {ebn0_linear} must be non-negative")));
    }
    Ok(QamBer::new(mod_order)?.ber(ebn0_linear))
}

/// Per-bit BER of QPSK over flat Rayleigh fading with coherent detection.
pub fn ber_rayleigh(ebn0_linear: f64) -> f64 {
    0.5 * (1.0 - (ebn0_linear / (1.0 + ebn0_linear)).sqrt())
}

/// Rayleigh BER scaled by `1 - delta`.
pub fn ber_usfm_model(ebn0_linear: f64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Config(format!("improvement factor {delta} outside [0, 1]")));
    }
    Ok(ber_rayleigh(ebn0_linear) * (1.0 - delta))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Information bits per channel sample.
pub fn spectral_efficiency(
    mod_order: usize,
    n_freq: usize,
    cp_len: usize,
    preamble_len: usize,
    n_blocks: usize,
) -> f64 {
    let bits = mod_order.trailing_zeros() as u64;
    let payload = bits * (n_blocks * n_freq) as u64;
    let samples = (preamble_len + n_blocks * (n_freq + cp_len)) as u64;
    payload as f64 / samples as f64
}

/// Peak-to-average power ratio (linear).
pub fn papr(samples: &[num_complex::Complex64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Size("PAPR of an empty frame".into()));
    }
    let powers = samples.iter().map(|z| z.norm_sqr());
    let (peak, total) = powers.fold((0.0f64, 0.0f64), |(p, t), x| (p.max(x), t + x));
    if total == 0.0 {
        return Err(Error::Numerical("PAPR undefined for an all-zero frame".into()));
    }
    Ok(peak / (total / samples.len() as f64))
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Butterflies for one frame's transmit transforms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityRecord {
    pub scheme: Scheme,
    pub n_total: usize,
    pub butterfly_count: u64,
    pub optimizer_iters: usize,
    pub wall_time_label: String,
}

/// Closed-form butterfly count: `n_freq` WHTs of length `n_seq` (USFM only)
/// plus `n_seq` FFTs of length `n_freq`.
pub fn butterfly_formula(scheme: Scheme, n_seq: usize, n_freq: usize) -> u64 {
    let log2 = |n: usize| n.trailing_zeros() as u64;
    let fft = (n_seq as u64) * (n_freq as u64 / 2) * log2(n_freq);
    match scheme {
        Scheme::Ofdm => fft,
        Scheme::Usfm => fft + (n_freq as u64) * (n_seq as u64 / 2) * log2(n_seq),
    }
}

/// Instrumented butterfly count of one transmit frame, plus optimizer
/// iterations on a channel drawn from the config seed when optimization is
/// enabled.
pub fn complexity_count(cfg: &LinkConfig) -> Result<ComplexityRecord> {
    cfg.validate()?;
    let mut grid = SfGrid::zeros(cfg.n_seq, cfg.n_freq)?;
    let mut butterflies = 0;
    if cfg.scheme == Scheme::Usfm {
        butterflies += grid.wht_sequency_axis();
    }
    butterflies += grid.dft_frequency_axis(Direction::Inverse);

    let optimizer_iters = if cfg.scheme == Scheme::Usfm && cfg.optimize {
        let mut rng = trial_stream(cfg.seed, u64::MAX, 0);
        let r = draw_realization(&cfg.channel, cfg.n_seq, cfg.n_freq, &mut rng)?;
        let ebn0 = cfg.ebn0_db.first().copied().unwrap_or(10.0);
        let csi = extract_csi(&r, noise_var_for_ebn0(ebn0, cfg));
        optimize_weights(&csi, cfg, &cfg.optimizer)?.iterations
    } else {
        0
    };
    Ok(ComplexityRecord {
        scheme: cfg.scheme,
        n_total: cfg.n_seq * cfg.n_freq,
        butterfly_count: butterflies,
        optimizer_iters,
        wall_time_label: "not measured".into(),
    })
}
