//! Channel models and genie CSI.
//!
//! Supported kinds:
//!
//! * `awgn` - identity gains; noise is added separately by [`add_awgn`].
//! * `flat_rayleigh` - one `h ~ CN(0,1)` for the whole frame.
//! * `time_varying_rayleigh` - per-block Gauss-Markov gain
//!   `h[k+1] = rho h[k] + sqrt(1 - rho^2) w[k]` with `rho = J0(2 pi d)`,
//!   `d` the Doppler frequency normalized to the block duration.
//! * `freq_selective` - static multipath with an exponential power-delay
//!   profile, applied as a linear convolution; the cyclic prefix turns it
//!   into a per-block circular convolution.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::links::LinkConfig;
use crate::modem::ComplexFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    FlatRayleigh,
    TimeVaryingRayleigh,
    FreqSelective,
}

impl ChannelKind {
    pub fn label(self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::FlatRayleigh => "flat_rayleigh",
            ChannelKind::TimeVaryingRayleigh => "time_varying_rayleigh",
            ChannelKind::FreqSelective => "freq_selective",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// Number of multipath taps (freq_selective only).
    pub n_taps: usize,
    /// Exponential power-delay decay constant, in taps.
    pub delay_decay: f64,
    /// Doppler frequency times block duration.
    pub normalized_doppler: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { kind: ChannelKind::Awgn, n_taps: 4, delay_decay: 1.0, normalized_doppler: 0.0 }
    }
}

impl ChannelConfig {
    pub fn awgn() -> Self {
        Self::default()
    }

    pub fn flat_rayleigh() -> Self {
        Self { kind: ChannelKind::FlatRayleigh, ..Self::default() }
    }

    pub fn time_varying(normalized_doppler: f64) -> Self {
        Self { kind: ChannelKind::TimeVaryingRayleigh, normalized_doppler, ..Self::default() }
    }

    pub fn freq_selective(n_taps: usize, delay_decay: f64) -> Self {
        Self { kind: ChannelKind::FreqSelective, n_taps, delay_decay, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::Config("n_taps must be at least 1".into()));
        }
        if !(self.delay_decay > 0.0 && self.delay_decay.is_finite()) {
            return Err(Error::Config(format!("delay_decay {} must be positive", self.delay_decay)));
        }
        if !(0.0..=0.5).contains(&self.normalized_doppler) {
            return Err(Error::Config(format!(
                "normalized_doppler {} outside [0, 0.5]",
                self.normalized_doppler
            )));
        }
        Ok(())
    }

    /// Block-to-block correlation of the time-varying model.
    pub fn ar1_coefficient(&self) -> f64 {
        bessel_j0(2.0 * PI * self.normalized_doppler)
    }

    /// Normalized tap powers `p_l ∝ exp(-l / tau)`.
    pub fn tap_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.n_taps).map(|l| (-(l as f64) / self.delay_decay).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

/// Bessel function of the first kind, order zero.
///
/// Abramowitz & Stegun 9.4.1 for `|x| <= 3` and 9.4.3 beyond; absolute
/// error below 1e-7.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 3.0 {
        let y = (ax / 3.0).powi(2);
        1.0 + y
            * (-2.249_999_7
                + y * (1.265_620_8
                    + y * (-0.316_386_6 + y * (0.044_447_9 + y * (-0.003_944_4 + y * 0.000_210_0)))))
    } else {
        let y = 3.0 / ax;
        let f0 = 0.797_884_56
            + y * (-0.000_000_77
                + y * (-0.005_527_40
                    + y * (-0.000_095_12 + y * (0.001_372_37 + y * (-0.000_728_05 + y * 0.000_144_76)))));
        let theta0 = ax - 0.785_398_16
            + y * (-0.041_663_97
                + y * (-0.000_039_54
                    + y * (0.002_625_73 + y * (-0.000_541_25 + y * (-0.000_293_33 + y * 0.000_135_58)))));
        f0 * theta0.cos() / ax.sqrt()
    }
}

/// Circularly-symmetric complex Gaussian with the given total variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (variance.sqrt() * FRAC_1_SQRT_2)
}

/// One draw of the channel over an `n_blocks x n_freq` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub kind: ChannelKind,
    pub n_blocks: usize,
    pub n_freq: usize,
    /// Per-(block, subcarrier) gains, row-major.
    pub gains: Vec<Complex64>,
    /// Per-block time-domain gain (flat kinds); empty otherwise.
    pub block_gains: Vec<Complex64>,
    /// Multipath taps (freq_selective); empty otherwise.
    pub taps: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn gain(&self, block: usize, subcarrier: usize) -> Complex64 {
        self.gains[block * self.n_freq + subcarrier]
    }
}

/// Frequency response `H[j] = sum_l h_l exp(-i 2 pi l j / n)`.
pub fn taps_to_response(taps: &[Complex64], n_freq: usize) -> Vec<Complex64> {
    (0..n_freq)
        .map(|j| {
            taps.iter()
                .enumerate()
                .map(|(l, &h)| {
                    h * Complex64::from_polar(1.0, -2.0 * PI * ((l * j) % n_freq) as f64 / n_freq as f64)
                })
                .sum()
        })
        .collect()
}

pub fn draw_realization<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    n_blocks: usize,
    n_freq: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    let one = Complex64::new(1.0, 0.0);
    let per_block = |block_gains: Vec<Complex64>| {
        let gains = block_gains.iter().flat_map(|&h| std::iter::repeat_n(h, n_freq)).collect();
        ChannelRealization { kind: cfg.kind, n_blocks, n_freq, gains, block_gains, taps: Vec::new() }
    };
    Ok(match cfg.kind {
        ChannelKind::Awgn => per_block(vec![one; n_blocks]),
        ChannelKind::FlatRayleigh => {
            let h = complex_gaussian(rng, 1.0);
            per_block(vec![h; n_blocks])
        }
        ChannelKind::TimeVaryingRayleigh => {
            let rho = cfg.ar1_coefficient();
            let innovation = (1.0 - rho * rho).max(0.0).sqrt();
            let mut h = complex_gaussian(rng, 1.0);
            let mut gains = Vec::with_capacity(n_blocks);
            for _ in 0..n_blocks {
                gains.push(h);
                h = h * rho + complex_gaussian(rng, 1.0) * innovation;
            }
            per_block(gains)
        }
        ChannelKind::FreqSelective => {
            if cfg.n_taps > n_freq {
                return Err(Error::Config(format!(
                    "{} taps exceed the {n_freq}-point block",
                    cfg.n_taps
                )));
            }
            let taps: Vec<Complex64> =
                cfg.tap_powers().into_iter().map(|p| complex_gaussian(rng, p)).collect();
            let response = taps_to_response(&taps, n_freq);
            let gains = (0..n_blocks).flat_map(|_| response.iter().copied()).collect();
            ChannelRealization { kind: cfg.kind, n_blocks, n_freq, gains, block_gains: Vec::new(), taps }
        }
    })
}

/// Pass `frame` through a drawn realization (noise excluded).
pub fn apply_realization(frame: &ComplexFrame, r: &ChannelRealization) -> Result<ComplexFrame> {
    if frame.n_blocks != r.n_blocks || frame.block_len != r.n_freq {
        return Err(Error::Size(format!(
            "frame {}x{} does not match channel {}x{}",
            frame.n_blocks, frame.block_len, r.n_blocks, r.n_freq
        )));
    }
    let mut out = frame.clone();
    match r.kind {
        ChannelKind::Awgn => {}
        ChannelKind::FlatRayleigh | ChannelKind::TimeVaryingRayleigh => {
            let stride = frame.block_len + frame.cp_len;
            let (pre, data) = out.samples.split_at_mut(frame.preamble_len);
            if let Some(&h0) = r.block_gains.first() {
                pre.iter_mut().for_each(|x| *x *= h0);
            }
            for (block, &h) in data.chunks_exact_mut(stride).zip(&r.block_gains) {
                block.iter_mut().for_each(|x| *x *= h);
            }
        }
        ChannelKind::FreqSelective => {
            if r.taps.len() > frame.cp_len + 1 {
                return Err(Error::Config(format!(
                    "{} taps need a cyclic prefix of at least {}, frame has {}",
                    r.taps.len(),
                    r.taps.len() - 1,
                    frame.cp_len
                )));
            }
            for (n, y) in out.samples.iter_mut().enumerate() {
                *y = r
                    .taps
                    .iter()
                    .enumerate()
                    .take(n + 1)
                    .map(|(l, &h)| h * frame.samples[n - l])
                    .sum();
            }
        }
    }
    Ok(out)
}

/// Draw a realization and apply it.
pub fn apply_channel<R: Rng + ?Sized>(
    frame: &ComplexFrame,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<(ComplexFrame, ChannelRealization)> {
    let r = draw_realization(cfg, frame.n_blocks, frame.block_len, rng)?;
    Ok((apply_realization(frame, &r)?, r))
}

/// Add circular complex Gaussian noise of `noise_var` per sample.
pub fn add_awgn<R: Rng + ?Sized>(frame: &ComplexFrame, noise_var: f64, rng: &mut R) -> Result<ComplexFrame> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::Config(format!("noise variance {noise_var} must be finite and non-negative")));
    }
    let mut out = frame.clone();
    for x in out.samples.iter_mut() {
        *x += complex_gaussian(rng, noise_var);
    }
    Ok(out)
}

/// Noise variance per complex sample for a target Eb/N0.
///
/// `Eb` is the expected transmitted frame energy (preamble and cyclic
/// prefixes included) divided by the information bits in the frame.
pub fn noise_var_for_ebn0(ebn0_db: f64, link: &LinkConfig) -> f64 {
    let frame_energy = link.expected_frame_energy();
    let bits = link.bits_per_frame() as f64;
    (frame_energy / bits) / 10f64.powf(ebn0_db / 10.0)
}

/// Genie channel state: realized gains plus noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Csi {
    pub n_blocks: usize,
    pub n_freq: usize,
    pub gains: Vec<Complex64>,
    /// Noise variance per bin. Zero marks a noiseless trial.
    pub noise_var: f64,
}

impl Csi {
    pub fn gain(&self, block: usize, subcarrier: usize) -> Complex64 {
        self.gains[block * self.n_freq + subcarrier]
    }
}

pub fn extract_csi(r: &ChannelRealization, noise_var: f64) -> Csi {
    Csi { n_blocks: r.n_blocks, n_freq: r.n_freq, gains: r.gains.clone(), noise_var }
}
