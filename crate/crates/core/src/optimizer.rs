//! CSI-driven per-bin power allocation and MCS selection.
//!
//! The loss is a closed-form BER surrogate. For subcarrier `j` the
//! zero-forcing output after despreading across the `n_seq` blocks has SNR
//!
//! ```text
//! gamma_eff(j) = n_seq / sum_k 1 / (w[k,j]^2 |H[k,j]|^2 gamma0)
//! ```
//!
//! (a harmonic mean of the per-bin SNRs), and the column contributes the
//! square-QAM AWGN bit error rate at that per-bit SNR. Weights are refined
//! by projected gradient descent onto the power sphere `mean(w^2) = 1`,
//! keeping only iterates that lower the loss.

use serde::{Deserialize, Serialize};

use crate::channel::Csi;
use crate::error::{Error, Result};
use crate::links::LinkConfig;
use crate::metrics::QamBer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gradient {
    Analytic,
    CentralDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Initial step size; adapted multiplicatively during the run.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop once an accepted step improves the loss by less than this
    /// relative amount.
    pub rel_tol: f64,
    pub gradient: Gradient,
    pub fd_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_iters: 500,
            rel_tol: 1e-6,
            gradient: Gradient::Analytic,
            fd_step: 1e-5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::Config(format!("rel_tol {} must be non-negative", self.rel_tol)));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config(format!("fd_step {} must be positive", self.fd_step)));
        }
        Ok(())
    }
}

/// Non-negative per-bin amplitude weights with `mean(w^2) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub n_seq: usize,
    pub n_freq: usize,
    pub values: Vec<f64>,
}

impl Weights {
    pub fn uniform(n_seq: usize, n_freq: usize) -> Self {
        Self { n_seq, n_freq, values: vec![1.0; n_seq * n_freq] }
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.n_freq + j]
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|w| w * w).sum::<f64>() / self.values.len() as f64
    }

    pub fn is_uniform(&self) -> bool {
        self.values.iter().all(|&w| w == 1.0)
    }
}

/// Clamp negatives to zero, then rescale onto `mean(w^2) = 1`.
///
/// An all-zero input has no direction to rescale and maps to uniform.
pub fn project(values: &mut [f64]) {
    for w in values.iter_mut() {
        if *w < 0.0 || w.is_nan() {
            *w = 0.0;
        }
    }
    let ms = values.iter().map(|w| w * w).sum::<f64>() / values.len() as f64;
    if ms > 0.0 && ms.is_finite() {
        let scale = ms.sqrt().recip();
        values.iter_mut().for_each(|w| *w *= scale);
    } else {
        values.iter_mut().for_each(|w| *w = 1.0);
    }
}

/// The surrogate as a function of the weights, with the channel frozen.
#[derive(Debug, Clone)]
pub struct SurrogateProblem {
    pub n_seq: usize,
    pub n_freq: usize,
    /// `|H[k,j]|^2`, row-major.
    pub gain_sq: Vec<f64>,
    /// Per-bit SNR at unit weight and unit gain.
    pub gamma0: f64,
    curve: QamBer,
}

/// BER assigned to a subcarrier whose harmonic-mean SNR collapses to zero.
pub const DEAD_COLUMN_BER: f64 = 0.5;

impl SurrogateProblem {
    pub fn new(n_seq: usize, n_freq: usize, gain_sq: Vec<f64>, gamma0: f64, mod_order: usize) -> Result<Self> {
        if gain_sq.len() != n_seq * n_freq {
            return Err(Error::Size(format!(
                "{} gains for a {n_seq}x{n_freq} lattice",
                gain_sq.len()
            )));
        }
        if !(gamma0 >= 0.0) {
            return Err(Error::Config(format!("gamma0 {gamma0} must be non-negative")));
        }
        Ok(Self { n_seq, n_freq, gain_sq, gamma0, curve: QamBer::new(mod_order)? })
    }

    /// Problem for a link's CSI: `gamma0 = 1 / (noise_var log2 M)` since
    /// symbols and transforms carry unit energy per bin.
    pub fn from_csi(csi: &Csi, mod_order: usize) -> Result<Self> {
        let bits = mod_order.trailing_zeros() as f64;
        let gamma0 = if csi.noise_var > 0.0 { 1.0 / (csi.noise_var * bits) } else { f64::INFINITY };
        let gain_sq = csi.gains.iter().map(|h| h.norm_sqr()).collect();
        Self::new(csi.n_blocks, csi.n_freq, gain_sq, gamma0, mod_order)
    }

    /// Harmonic-mean effective SNR of subcarrier `j`; zero if any bin is dead.
    pub fn effective_snr(&self, w: &[f64], j: usize) -> f64 {
        let mut inv_sum = 0.0;
        for k in 0..self.n_seq {
            let idx = k * self.n_freq + j;
            let snr = w[idx] * w[idx] * self.gain_sq[idx] * self.gamma0;
            if snr <= 0.0 {
                return 0.0;
            }
            inv_sum += 1.0 / snr;
        }
        self.n_seq as f64 / inv_sum
    }

    fn column_loss(&self, w: &[f64], j: usize) -> f64 {
        let gamma = self.effective_snr(w, j);
        if gamma <= 0.0 {
            DEAD_COLUMN_BER
        } else {
            self.curve.ber(gamma)
        }
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        (0..self.n_freq).map(|j| self.column_loss(w, j)).sum()
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; w.len()];
        for j in 0..self.n_freq {
            let gamma = self.effective_snr(w, j);
            if gamma <= 0.0 || !gamma.is_finite() {
                continue;
            }
            // d gamma / d w_k = gamma^2 / n_seq * 2 / (w_k^3 g_k gamma0)
            let outer = self.curve.derivative(gamma) * gamma * gamma / self.n_seq as f64;
            for k in 0..self.n_seq {
                let idx = k * self.n_freq + j;
                let wk = w[idx];
                grad[idx] = outer * 2.0 / (wk * wk * wk * self.gain_sq[idx] * self.gamma0);
            }
        }
        grad
    }

    /// Central differences; each weight only touches its own column.
    pub fn gradient_fd(&self, w: &[f64], step: f64) -> Vec<f64> {
        let mut probe = w.to_vec();
        let mut grad = vec![0.0; w.len()];
        for (idx, g) in grad.iter_mut().enumerate() {
            let j = idx % self.n_freq;
            let orig = probe[idx];
            probe[idx] = orig + step;
            let up = self.column_loss(&probe, j);
            probe[idx] = orig - step;
            let down = self.column_loss(&probe, j);
            probe[idx] = orig;
            *g = (up - down) / (2.0 * step);
        }
        grad
    }
}

/// Surrogate loss of `w` under the link's CSI.
pub fn surrogate_loss(w: &Weights, csi: &Csi, cfg: &LinkConfig) -> Result<f64> {
    if w.n_seq != csi.n_blocks || w.n_freq != csi.n_freq {
        return Err(Error::Size("weights and CSI dimensions differ".into()));
    }
    Ok(SurrogateProblem::from_csi(csi, cfg.mod_order)?.loss(&w.values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub weights: Weights,
    pub initial_loss: f64,
    pub loss: f64,
    /// Loss after each accepted step, starting with the initial loss.
    pub accepted_losses: Vec<f64>,
    pub iterations: usize,
    /// Set when a non-finite loss or gradient stopped the run early.
    pub aborted: Option<String>,
}

/// Projected gradient descent from uniform weights on a fixed problem.
pub fn optimize_problem(problem: &SurrogateProblem, opt: &OptimizerConfig) -> Result<OptimizeOutcome> {
    opt.validate()?;
    let mut w = vec![1.0; problem.n_seq * problem.n_freq];
    let initial_loss = problem.loss(&w);
    let mut outcome = OptimizeOutcome {
        weights: Weights::uniform(problem.n_seq, problem.n_freq),
        initial_loss,
        loss: initial_loss,
        accepted_losses: vec![initial_loss],
        iterations: 0,
        aborted: None,
    };
    if !initial_loss.is_finite() {
        outcome.aborted = Some(format!("initial loss is {initial_loss}"));
        return Ok(outcome);
    }
    if !problem.gamma0.is_finite() || initial_loss == 0.0 {
        return Ok(outcome);
    }

    let mut best = initial_loss;
    let mut step = opt.learning_rate;
    let min_step = opt.learning_rate * 1e-12;
    let mut candidate = vec![0.0; w.len()];
    for it in 0..opt.max_iters {
        outcome.iterations = it + 1;
        let grad = match opt.gradient {
            Gradient::Analytic => problem.gradient(&w),
            Gradient::CentralDifference => problem.gradient_fd(&w, opt.fd_step),
        };
        if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
            outcome.aborted = Some(format!("non-finite gradient at bin {bad}, iteration {it}"));
            break;
        }
        for ((c, &wi), &g) in candidate.iter_mut().zip(&w).zip(&grad) {
            *c = wi - step * g;
        }
        project(&mut candidate);
        let moved = candidate.iter().zip(&w).any(|(a, b)| (a - b).abs() > 1e-15);
        if !moved {
            // Projected gradient vanishes: stationary on the power sphere.
            break;
        }
        let loss = problem.loss(&candidate);
        if !loss.is_finite() {
            outcome.aborted = Some(format!("non-finite loss at iteration {it}"));
            break;
        }
        if loss < best {
            let rel = (best - loss) / best;
            std::mem::swap(&mut w, &mut candidate);
            best = loss;
            outcome.accepted_losses.push(loss);
            step *= 1.25;
            if rel < opt.rel_tol || best == 0.0 {
                break;
            }
        } else {
            step *= 0.5;
            if step < min_step {
                break;
            }
        }
    }
    outcome.weights.values = w;
    outcome.loss = best;
    Ok(outcome)
}

/// Optimize per-bin weights for the given CSI.
pub fn optimize_weights(csi: &Csi, cfg: &LinkConfig, opt: &OptimizerConfig) -> Result<OptimizeOutcome> {
    optimize_problem(&SurrogateProblem::from_csi(csi, cfg.mod_order)?, opt)
}

/// Fractional BER reduction `1 - ber_opt / ber_base`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    /// Clamped to [0, 1]; `None` when the baseline BER is zero.
    pub delta: Option<f64>,
    pub raw: Option<f64>,
    pub out_of_range: bool,
}

pub fn improvement_factor(ber_base: f64, ber_opt: f64) -> Improvement {
    if !(ber_base > 0.0) {
        return Improvement { delta: None, raw: None, out_of_range: true };
    }
    let raw = 1.0 - ber_opt / ber_base;
    let clamped = raw.clamp(0.0, 1.0);
    Improvement { delta: Some(clamped), raw: Some(raw), out_of_range: clamped != raw }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub mod_order: usize,
    pub code_rate: f64,
    pub spectral_eff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn new(mut entries: Vec<McsEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("MCS table is empty".into()));
        }
        for e in &entries {
            QamBer::new(e.mod_order)?;
        }
        entries.sort_by(|a, b| {
            a.spectral_eff.total_cmp(&b.spectral_eff).then(a.mod_order.cmp(&b.mod_order))
        });
        Ok(Self { entries })
    }

    /// Uncoded 4/16/64-QAM with `spectral_eff = log2(M) * overhead_factor`.
    pub fn square_qam(overhead_factor: f64) -> Self {
        let entries = [4usize, 16, 64]
            .into_iter()
            .map(|m| McsEntry {
                mod_order: m,
                code_rate: 1.0,
                spectral_eff: m.trailing_zeros() as f64 * overhead_factor,
            })
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsChoice {
    pub entry: McsEntry,
    /// Surrogate BER per subcarrier at uniform weights.
    pub predicted_ber: f64,
    pub feasible: bool,
}

/// Predicted uncoded BER of `mod_order` under `csi`, uniform weights.
///
/// The CSI noise variance is taken per unit-energy symbol, so the per-bit
/// SNR falls as `log2 M` grows.
pub fn predicted_ber(csi: &Csi, mod_order: usize) -> Result<f64> {
    let p = SurrogateProblem::from_csi(csi, mod_order)?;
    Ok(p.loss(&vec![1.0; p.n_seq * p.n_freq]) / p.n_freq as f64)
}

/// Pick the lowest-predicted-BER entry meeting `eta_target`.
///
/// Falls back to the highest-efficiency entry (flagged infeasible) when none
/// qualifies. Ties prefer the smaller constellation.
pub fn select_mcs(table: &McsTable, csi: &Csi, eta_target: f64) -> Result<McsChoice> {
    let mut best: Option<McsChoice> = None;
    for &entry in table.entries() {
        if entry.spectral_eff < eta_target {
            continue;
        }
        let ber = predicted_ber(csi, entry.mod_order)?;
        let better = match &best {
            None => true,
            Some(b) => ber < b.predicted_ber || (ber == b.predicted_ber && entry.mod_order < b.entry.mod_order),
        };
        if better {
            best = Some(McsChoice { entry, predicted_ber: ber, feasible: true });
        }
    }
    match best {
        Some(choice) => Ok(choice),
        None => {
            let entry = *table.entries().last().expect("table is non-empty");
            Ok(McsChoice { entry, predicted_ber: predicted_ber(csi, entry.mod_order)?, feasible: false })
        }
    }
}
