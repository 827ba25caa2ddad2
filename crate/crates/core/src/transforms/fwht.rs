//! In-place fast Walsh-Hadamard transform, natural (Hadamard) ordering.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Element type the butterflies operate on.
pub trait Sample: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl Sample for f64 {}
impl Sample for Complex64 {}

/// Orthonormal FWHT. `data.len()` must be a power of two (checked by callers).
///
/// Returns the number of add/subtract butterflies performed,
/// `(n / 2) * log2(n)`.
pub(crate) fn fwht_in_place<T: Sample>(data: &mut [T]) -> u64 {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut butterflies = 0u64;
    let mut half = 1;
    while half < n {
        for start in (0..n).step_by(2 * half) {
            for i in start..start + half {
                let a = data[i];
                let b = data[i + half];
                data[i] = a + b;
                data[i + half] = a - b;
            }
            butterflies += half as u64;
        }
        half *= 2;
    }
    if n > 1 {
        let scale = 1.0 / (n as f64).sqrt();
        for x in data.iter_mut() {
            *x = *x * scale;
        }
    }
    butterflies
}

/// Natural-order index of the Walsh function with sequency `s` among `n`.
///
/// Sequency order lists the Walsh functions by increasing number of sign
/// changes; natural row `bit_reverse(gray(s))` has exactly `s` of them.
pub fn sequency_to_natural(s: usize, n: usize) -> usize {
    debug_assert!(n.is_power_of_two() && s < n);
    let bits = n.trailing_zeros();
    let gray = s ^ (s >> 1);
    if bits == 0 {
        0
    } else {
        gray.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Permutation `p` with `p[s]` = natural index of the sequency-`s` row.
pub fn sequency_permutation(n: usize) -> Vec<usize> {
    (0..n).map(|s| sequency_to_natural(s, n)).collect()
}

/// Number of sign changes along a real sequence (zeros are skipped).
pub fn zero_crossings(values: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hadamard_row(row: usize, n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| if (row & t).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect()
    }

    #[test]
    fn butterfly_count_is_half_n_log_n() {
        for k in 0..=10 {
            let n = 1usize << k;
            let mut v = vec![1.0f64; n];
            assert_eq!(fwht_in_place(&mut v), (n as u64 / 2) * k as u64);
        }
    }

    #[test]
    fn sequency_order_counts_zero_crossings() {
        for n in [1usize, 2, 4, 8, 16, 64] {
            let perm = sequency_permutation(n);
            for (s, &row) in perm.iter().enumerate() {
                assert_eq!(zero_crossings(&hadamard_row(row, n)), s, "n={n} s={s}");
            }
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn zero_crossings_skips_zeros() {
        assert_eq!(zero_crossings(&[1.0, 0.0, -1.0, 0.0, 0.0, 2.0]), 2);
        assert_eq!(zero_crossings(&[]), 0);
    }
}
