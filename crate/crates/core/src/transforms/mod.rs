//! Walsh-Hadamard, unitary Fourier and joint sequency-frequency transforms.
//!
//! Every transform here is orthonormal (scaled by `1/sqrt(N)` in both
//! directions), so energy is preserved exactly and the WHT is its own
//! inverse. The joint transform is separable: a WHT down each column of an
//! [`SfGrid`] (the sequency axis) and a DFT along each row (the frequency
//! axis).

mod fft;
mod fwht;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use fft::Direction;
pub use fwht::{sequency_permutation, sequency_to_natural, zero_crossings, Sample};

/// Largest `n_seq * n_freq` the dense-matrix oracle accepts.
pub const DENSE_ORACLE_MAX: usize = 4096;

fn check_pow2(len: usize, what: &str) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "{what} length {len} is not a power of two"
        )));
    }
    Ok(())
}

/// Orthonormal Walsh-Hadamard transform in natural order.
pub fn wht<T: Sample>(v: &[T]) -> Result<Vec<T>> {
    check_pow2(v.len(), "wht input")?;
    let mut out = v.to_vec();
    fwht::fwht_in_place(&mut out);
    Ok(out)
}

/// In-place WHT; returns the butterfly count.
pub fn wht_in_place<T: Sample>(v: &mut [T]) -> Result<u64> {
    check_pow2(v.len(), "wht input")?;
    Ok(fwht::fwht_in_place(v))
}

/// Unitary forward DFT (fast radix-2 path).
pub fn dft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_pow2(v.len(), "dft input")?;
    let mut out = v.to_vec();
    fft::fft_in_place(&mut out, Direction::Forward);
    Ok(out)
}

/// Unitary inverse DFT (fast radix-2 path).
pub fn idft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    check_pow2(v.len(), "idft input")?;
    let mut out = v.to_vec();
    fft::fft_in_place(&mut out, Direction::Inverse);
    Ok(out)
}

/// In-place unitary DFT in either direction; returns the butterfly count.
pub fn dft_in_place(v: &mut [Complex64], dir: Direction) -> Result<u64> {
    check_pow2(v.len(), "dft input")?;
    Ok(fft::fft_in_place(v, dir))
}

/// Direct-summation unitary DFT, accepting any non-empty length.
pub fn dft_reference(v: &[Complex64], dir: Direction) -> Result<Vec<Complex64>> {
    if v.is_empty() {
        return Err(Error::Dimension("dft input is empty".into()));
    }
    Ok(fft::dft_direct(v, dir))
}

/// Joint sequency-frequency grid, stored row-major.
///
/// Row `i` indexes the sequency axis (`n_seq` rows), column `j` the
/// frequency axis (`n_freq` columns). After spreading, rows are the OFDM-like
/// time blocks and columns are subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct SfGrid {
    n_seq: usize,
    n_freq: usize,
    data: Vec<Complex64>,
}

impl SfGrid {
    pub fn new(n_seq: usize, n_freq: usize, data: Vec<Complex64>) -> Result<Self> {
        check_pow2(n_seq, "sequency axis")?;
        check_pow2(n_freq, "frequency axis")?;
        if data.len() != n_seq * n_freq {
            return Err(Error::Size(format!(
                "grid {n_seq}x{n_freq} needs {} entries, got {}",
                n_seq * n_freq,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("grid contains non-finite entries".into()));
        }
        Ok(Self { n_seq, n_freq, data })
    }

    pub fn zeros(n_seq: usize, n_freq: usize) -> Result<Self> {
        Self::new(n_seq, n_freq, vec![Complex64::new(0.0, 0.0); n_seq * n_freq])
    }

    pub fn from_fn(
        n_seq: usize,
        n_freq: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(n_seq * n_freq);
        for i in 0..n_seq {
            for j in 0..n_freq {
                data.push(f(i, j));
            }
        }
        Self::new(n_seq, n_freq, data)
    }

    pub fn n_seq(&self) -> usize {
        self.n_seq
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n_freq + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.n_freq + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n_freq..(i + 1) * self.n_freq]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.n_freq)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// WHT down every column; returns butterflies performed.
    pub fn wht_sequency_axis(&mut self) -> u64 {
        if self.n_seq == 1 {
            return 0;
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.n_seq];
        let mut butterflies = 0;
        for j in 0..self.n_freq {
            for (i, c) in column.iter_mut().enumerate() {
                *c = self.data[i * self.n_freq + j];
            }
            butterflies += fwht::fwht_in_place(&mut column);
            for (i, c) in column.iter().enumerate() {
                self.data[i * self.n_freq + j] = *c;
            }
        }
        butterflies
    }

    /// DFT along every row; returns butterflies performed.
    pub fn dft_frequency_axis(&mut self, dir: Direction) -> u64 {
        self.data
            .chunks_exact_mut(self.n_freq)
            .map(|row| fft::fft_in_place(row, dir))
            .sum()
    }
}

/// Forward joint transform: WHT along sequency, then DFT along frequency.
pub fn jsft(g: &SfGrid) -> SfGrid {
    jsft_counted(g).0
}

/// Inverse joint transform: inverse DFT along frequency, then WHT along
/// sequency.
pub fn ijsft(t: &SfGrid) -> SfGrid {
    ijsft_counted(t).0
}

/// [`jsft`] plus the total butterfly count.
pub fn jsft_counted(g: &SfGrid) -> (SfGrid, u64) {
    let mut out = g.clone();
    let mut n = out.wht_sequency_axis();
    n += out.dft_frequency_axis(Direction::Forward);
    (out, n)
}

/// [`ijsft`] plus the total butterfly count.
pub fn ijsft_counted(t: &SfGrid) -> (SfGrid, u64) {
    let mut out = t.clone();
    let mut n = out.dft_frequency_axis(Direction::Inverse);
    n += out.wht_sequency_axis();
    (out, n)
}

/// Joint transform by explicit multiplication with the dense
/// `(n_seq*n_freq)^2` Kronecker matrix `H_seq ⊗ F_freq`.
///
/// Verification only; refuses grids above [`DENSE_ORACLE_MAX`] entries.
pub fn jsft_dense_oracle(g: &SfGrid) -> Result<SfGrid> {
    let (ns, nf) = (g.n_seq(), g.n_freq());
    let total = ns * nf;
    if total > DENSE_ORACLE_MAX {
        return Err(Error::Size(format!(
            "dense oracle limited to {DENSE_ORACLE_MAX} entries, grid has {total}"
        )));
    }
    let norm = 1.0 / (total as f64).sqrt();
    let fourier: Vec<Complex64> = (0..nf)
        .map(|m| {
            Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * m as f64 / nf as f64)
        })
        .collect();
    let input = g.as_slice();
    let mut out = Vec::with_capacity(total);
    for row in 0..total {
        let (i, j) = (row / nf, row % nf);
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..total {
            let (ip, jp) = (col / nf, col % nf);
            let walsh = if (i & ip).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += input[col] * fourier[(j * jp) % nf] * walsh;
        }
        out.push(acc * norm);
    }
    SfGrid::new(ns, nf, out)
}
