use num_complex::Complex64;
use proptest::prelude::*;
use usfm_core::rng::trial_stream;
use usfm_core::transforms::{
    dft, dft_in_place, idft, ijsft, jsft, jsft_dense_oracle, wht, wht_in_place, Direction, SfGrid,
};

/// Textbook O(n^2) unitary DFT.
fn direct_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| {
                    let ang = sign * 2.0 * std::f64::consts::PI * (k * t % n) as f64 / n as f64;
                    v * Complex64::new(ang.cos(), ang.sin())
                })
                .sum::<Complex64>()
                / (n as f64).sqrt()
        })
        .collect()
}

/// Explicit Hadamard matrix product.
fn direct_wht(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|r| {
            x.iter()
                .enumerate()
                .map(|(c, v)| if (r & c).count_ones() % 2 == 0 { *v } else { -*v })
                .sum::<f64>()
                / (n as f64).sqrt()
        })
        .collect()
}

fn random_vec(seed: u64, n: usize) -> Vec<Complex64> {
    use rand::Rng;
    let mut rng = trial_stream(seed, 1, 0);
    (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn dft_matches_direct_summation() {
    for n in [1usize, 2, 4, 8, 16, 32, 64] {
        let v = random_vec(n as u64, n);
        assert!(max_diff(&dft(&v).unwrap(), &direct_dft(&v, -1.0)) < 1e-9, "n={n}");
        assert!(max_diff(&idft(&v).unwrap(), &direct_dft(&v, 1.0)) < 1e-9, "n={n}");
    }
}

#[test]
fn wht_matches_hadamard_matrix() {
    for n in [1usize, 2, 4, 8, 16, 32, 64] {
        let v: Vec<f64> = random_vec(n as u64 + 100, n).iter().map(|z| z.re).collect();
        let fast = wht(&v).unwrap();
        for (a, b) in fast.iter().zip(direct_wht(&v)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn jsft_matches_dense_oracle_on_8x8() {
    let g = SfGrid::new(8, 8, random_vec(7, 64)).unwrap();
    assert!(max_diff(jsft(&g).as_slice(), jsft_dense_oracle(&g).unwrap().as_slice()) < 1e-9);
}

#[test]
fn dense_oracle_preserves_energy() {
    let g = SfGrid::new(4, 4, random_vec(8, 16)).unwrap();
    let t = jsft_dense_oracle(&g).unwrap();
    assert!((g.energy() - t.energy()).abs() < 1e-12);
}

#[test]
fn butterfly_counts_are_n_log_n_over_two() {
    for k in 0..=12u32 {
        let n = 1usize << k;
        let mut v = vec![Complex64::new(1.0, 0.0); n];
        let expected = (n as u64 / 2) * k as u64;
        assert_eq!(dft_in_place(&mut v, Direction::Forward).unwrap(), expected);
        assert_eq!(wht_in_place(&mut v).unwrap(), expected);
    }
}

fn grid_strategy() -> impl Strategy<Value = SfGrid> {
    (0u32..=6, 0u32..=6).prop_flat_map(|(a, b)| {
        let (ns, nf) = (1usize << a, 1usize << b);
        proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), ns * nf).prop_map(move |v| {
            SfGrid::new(ns, nf, v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_and_round_trip(g in grid_strategy()) {
        let t = jsft(&g);
        let e = g.energy();
        prop_assert!((t.energy() - e).abs() <= 1e-10 * e.max(1e-300));
        let back = ijsft(&t);
        let scale = g.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        prop_assert!(max_diff(back.as_slice(), g.as_slice()) <= 1e-10 * scale);
    }

    #[test]
    fn wht_is_self_inverse(v in proptest::collection::vec(-1e3f64..1e3, 1usize..=64)) {
        let n = 1usize << (usize::BITS - 1 - v.len().leading_zeros());
        let v = &v[..n];
        let twice = wht(&wht(v).unwrap()).unwrap();
        for (a, b) in twice.iter().zip(v) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn jsft_is_linear(g1 in grid_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g2 = SfGrid::from_fn(g1.n_seq(), g1.n_freq(), |i, j| Complex64::new((i * 3 + j) as f64, -(j as f64))).unwrap();
        let mixed = SfGrid::new(
            g1.n_seq(),
            g1.n_freq(),
            g1.as_slice().iter().zip(g2.as_slice()).map(|(x, y)| x * a + y * b).collect(),
        ).unwrap();
        let lhs = jsft(&mixed);
        let (t1, t2) = (jsft(&g1), jsft(&g2));
        let rhs: Vec<Complex64> = t1.as_slice().iter().zip(t2.as_slice()).map(|(x, y)| x * a + y * b).collect();
        let scale = rhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(lhs.as_slice(), &rhs) <= 1e-10 * scale);
    }
}
