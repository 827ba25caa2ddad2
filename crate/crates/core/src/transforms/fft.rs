//! Radix-2 decimation-in-time FFT with unitary scaling.

use std::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

/// Unitary in-place FFT of a power-of-two length buffer.
///
/// Returns the number of radix-2 butterflies, `(n / 2) * log2(n)`.
pub(crate) fn fft_in_place(data: &mut [Complex64], dir: Direction) -> u64 {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    if n <= 1 {
        return 0;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    // Twiddles for the full length; stage `len` reads every (n / len)-th one.
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, dir.sign() * 2.0 * PI * k as f64 / n as f64))
        .collect();

    let mut butterflies = 0u64;
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let t = twiddles[k * stride] * data[start + k + half];
                let u = data[start + k];
                data[start + k] = u + t;
                data[start + k + half] = u - t;
            }
            butterflies += half as u64;
        }
        len *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in data.iter_mut() {
        *x *= scale;
    }
    butterflies
}

/// O(n^2) unitary DFT by direct summation. Any length.
pub(crate) fn dft_direct(input: &[Complex64], dir: Direction) -> Vec<Complex64> {
    let n = input.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    // Reduce the exponent mod n before forming the angle.
                    let phase = ((k * t) % n) as f64 / n as f64;
                    x * Complex64::from_polar(1.0, dir.sign() * 2.0 * PI * phase)
                })
                .sum::<Complex64>()
                * scale
        })
        .collect()
}
