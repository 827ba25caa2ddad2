//! Counter-based random streams.
//!
//! Each Monte Carlo trial draws from its own ChaCha stream keyed by
//! `(seed, point)` with the trial index as stream id, so results do not
//! depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for trial `trial` of sweep point `point`.
pub fn trial_stream(seed: u64, point: u64, trial: u64) -> TrialRng {
    let key = splitmix64(seed ^ splitmix64(point.wrapping_add(0x5EED)));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial);
    rng
}

/// Uniform random bits (0/1).
pub fn random_bits<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(n);
    while bits.len() < n {
        let word: u64 = rng.random();
        let take = (n - bits.len()).min(64);
        bits.extend((0..take).map(|b| ((word >> b) & 1) as u8));
    }
    bits
}
