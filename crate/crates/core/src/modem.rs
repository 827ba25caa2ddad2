//! Gray-coded square QAM, grid formation and frame assembly.
//!
//! Constellation convention: the bit group of a symbol splits in half, the
//! first half labels the in-phase level and the second half the quadrature
//! level. Each half is a Gray label; label `g` selects PAM level
//! `L - 1 - 2 * gray_decode(g)` so the all-zeros label is the most positive
//! level. Point index is the bit group read as an unsigned integer, so point
//! 0 carries the all-zeros label.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::SfGrid;

const TIE_EPS: f64 = 1e-12;

/// Square Gray QAM constellation with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    mod_order: usize,
    bits_per_axis: usize,
    /// Level for each per-axis Gray label, already normalized.
    levels: Vec<f64>,
    points: Vec<Complex64>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

impl Constellation {
    pub fn new(mod_order: usize) -> Result<Self> {
        if !matches!(mod_order, 4 | 16 | 64) {
            return Err(Error::Config(format!(
                "unsupported modulation order {mod_order}; expected 4, 16 or 64"
            )));
        }
        let bits_per_axis = mod_order.trailing_zeros() as usize / 2;
        let axis_levels = 1usize << bits_per_axis;
        let norm = (2.0 * (mod_order as f64 - 1.0) / 3.0).sqrt();
        let levels: Vec<f64> = (0..axis_levels)
            .map(|label| (axis_levels as f64 - 1.0 - 2.0 * gray_decode(label) as f64) / norm)
            .collect();
        let points = (0..mod_order)
            .map(|idx| {
                let i_label = idx >> bits_per_axis;
                let q_label = idx & (axis_levels - 1);
                Complex64::new(levels[i_label], levels[q_label])
            })
            .collect();
        Ok(Self { mod_order, bits_per_axis, levels, points })
    }

    pub fn mod_order(&self) -> usize {
        self.mod_order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    /// Points in index order (index = bit label as an integer).
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit label of point `index`, most significant bit first.
    pub fn label(&self, index: usize) -> Vec<u8> {
        let k = self.bits_per_symbol();
        (0..k).map(|b| ((index >> (k - 1 - b)) & 1) as u8).collect()
    }

    /// Nearest per-axis label; ties (to within rounding) go to the smaller
    /// label.
    fn decide_axis(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, &level) in self.levels.iter().enumerate() {
            let d = (x - level).abs();
            if d < best_d - TIE_EPS {
                best = label;
                best_d = d;
            }
        }
        best
    }

    /// Index of the nearest point; ties resolve to the lowest index.
    ///
    /// Squared distance separates into I and Q terms, so the tied set is a
    /// product of per-axis tied sets and the lowest index takes the lowest
    /// label on each axis.
    pub fn decide(&self, y: Complex64) -> usize {
        (self.decide_axis(y.re) << self.bits_per_axis) | self.decide_axis(y.im)
    }
}

/// Map a bit block (values 0/1) onto constellation points.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let k = c.bits_per_symbol();
    if bits.len() % k != 0 {
        return Err(Error::Size(format!(
            "{} bits do not divide into {k}-bit symbols",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(k)
        .map(|group| {
            let idx = group.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            c.points[idx]
        })
        .collect())
}

/// Hard-decision demapping to bits.
pub fn demap_symbols(y: &[Complex64], c: &Constellation) -> Vec<u8> {
    let k = c.bits_per_symbol();
    let mut bits = Vec::with_capacity(y.len() * k);
    for &s in y {
        let idx = c.decide(s);
        bits.extend((0..k).map(|b| ((idx >> (k - 1 - b)) & 1) as u8));
    }
    bits
}

/// Place symbols into an `n_seq x n_freq` grid, sequency-major.
pub fn fill_grid(s: &[Complex64], n_seq: usize, n_freq: usize) -> Result<SfGrid> {
    if s.len() != n_seq * n_freq {
        return Err(Error::Size(format!(
            "{} symbols do not fill a {n_seq}x{n_freq} grid",
            s.len()
        )));
    }
    SfGrid::new(n_seq, n_freq, s.to_vec())
}

pub fn read_grid(g: &SfGrid) -> Vec<Complex64> {
    g.as_slice().to_vec()
}

/// Time-domain baseband frame: optional preamble followed by `n_blocks`
/// blocks of `cp_len + block_len` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFrame {
    pub samples: Vec<Complex64>,
    pub n_blocks: usize,
    pub block_len: usize,
    pub cp_len: usize,
    pub preamble_len: usize,
}

impl ComplexFrame {
    pub fn expected_len(n_blocks: usize, block_len: usize, cp_len: usize, preamble_len: usize) -> usize {
        preamble_len + n_blocks * (block_len + cp_len)
    }

    /// Samples after the preamble (CPs included).
    pub fn data_section(&self) -> &[Complex64] {
        &self.samples[self.preamble_len..]
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Known preamble: `len` ones.
pub fn preamble(len: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); len]
}

/// Prepend `preamble` and a cyclic prefix of `cp_len` samples to every row
/// of `blocks`.
pub fn assemble_frame(blocks: &SfGrid, cp_len: usize, preamble: &[Complex64]) -> Result<ComplexFrame> {
    let block_len = blocks.n_freq();
    if cp_len >= block_len {
        return Err(Error::Config(format!(
            "cyclic prefix {cp_len} must be shorter than the block length {block_len}"
        )));
    }
    let n_blocks = blocks.n_seq();
    let mut samples =
        Vec::with_capacity(ComplexFrame::expected_len(n_blocks, block_len, cp_len, preamble.len()));
    samples.extend_from_slice(preamble);
    for row in blocks.rows() {
        samples.extend_from_slice(&row[block_len - cp_len..]);
        samples.extend_from_slice(row);
    }
    Ok(ComplexFrame { samples, n_blocks, block_len, cp_len, preamble_len: preamble.len() })
}

/// Strip preamble and cyclic prefixes, assuming ideal timing.
pub fn disassemble_frame(f: &ComplexFrame) -> Result<SfGrid> {
    let want = ComplexFrame::expected_len(f.n_blocks, f.block_len, f.cp_len, f.preamble_len);
    if f.samples.len() != want {
        return Err(Error::Size(format!(
            "frame has {} samples, layout requires {want}",
            f.samples.len()
        )));
    }
    let stride = f.block_len + f.cp_len;
    let mut data = Vec::with_capacity(f.n_blocks * f.block_len);
    for block in f.data_section().chunks_exact(stride) {
        data.extend_from_slice(&block[f.cp_len..]);
    }
    SfGrid::new(f.n_blocks, f.block_len, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn qpsk_normative_points() {
        let c = Constellation::new(4).unwrap();
        let s = map_bits(&[0, 0, 1, 1, 1, 0], &c).unwrap();
        let want = [Complex64::new(S2, S2), Complex64::new(-S2, -S2), Complex64::new(-S2, S2)];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_average_energy() {
        for m in [4, 16, 64] {
            let c = Constellation::new(m).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
            assert!((e - 1.0).abs() < 1e-12, "M={m} energy {e}");
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in [4usize, 16, 64] {
            let c = Constellation::new(m).unwrap();
            let side = (m as f64).sqrt() as usize;
            let spacing = 2.0 / (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
            let pts = c.points();
            let mut pairs = 0;
            for a in 0..m {
                for b in (a + 1)..m {
                    let d = pts[a] - pts[b];
                    let horizontal = (d.re.abs() - spacing).abs() < 1e-9 && d.im.abs() < 1e-9;
                    let vertical = (d.im.abs() - spacing).abs() < 1e-9 && d.re.abs() < 1e-9;
                    if horizontal || vertical {
                        pairs += 1;
                        assert_eq!((a ^ b).count_ones(), 1, "M={m} points {a},{b}");
                    }
                }
            }
            assert_eq!(pairs, 2 * side * (side - 1));
        }
    }

    #[test]
    fn index_zero_is_all_zero_label() {
        for m in [4, 16, 64] {
            let c = Constellation::new(m).unwrap();
            assert!(c.label(0).iter().all(|&b| b == 0));
            assert_eq!(map_bits(&c.label(0), &c).unwrap()[0], c.points()[0]);
        }
    }

    #[test]
    fn origin_ties_to_index_zero() {
        let c = Constellation::new(4).unwrap();
        assert_eq!(demap_symbols(&[Complex64::new(0.0, 0.0)], &c), vec![0, 0]);
        // Larger orders: four equidistant inner points, lowest index wins.
        let c16 = Constellation::new(16).unwrap();
        assert_eq!(c16.decide(Complex64::new(0.0, 0.0)), 0b0101);
    }

    #[test]
    fn demap_matches_brute_force_nearest_point() {
        // Lattice of probes that includes exact midpoints between levels.
        for m in [4usize, 16, 64] {
            let c = Constellation::new(m).unwrap();
            let norm = (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
            for a in -18..=18 {
                for b in -18..=18 {
                    let y = Complex64::new(a as f64 / 2.0 / norm, b as f64 / 2.0 / norm);
                    let mut best = 0;
                    let mut best_d = f64::INFINITY;
                    for (idx, p) in c.points().iter().enumerate() {
                        let d = (y - p).norm_sqr();
                        if d < best_d - 1e-9 {
                            best = idx;
                            best_d = d;
                        }
                    }
                    assert_eq!(c.decide(y), best, "M={m} y={y}");
                }
            }
        }
    }

    #[test]
    fn noiseless_round_trip() {
        for m in [4usize, 16, 64] {
            let c = Constellation::new(m).unwrap();
            let k = c.bits_per_symbol();
            let bits: Vec<u8> = (0..m * k).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
            let s = map_bits(&bits, &c).unwrap();
            assert_eq!(demap_symbols(&s, &c), bits);
        }
    }

    #[test]
    fn mapping_rejects_partial_symbols() {
        let c = Constellation::new(16).unwrap();
        assert!(matches!(map_bits(&[0, 1, 1], &c), Err(Error::Size(_))));
        assert!(matches!(Constellation::new(8), Err(Error::Config(_))));
    }

    #[test]
    fn grid_fill_is_sequency_major() {
        let s: Vec<Complex64> = (0..4).map(|k| Complex64::new(k as f64, 0.0)).collect();
        let g = fill_grid(&s, 2, 2).unwrap();
        assert_eq!(g.row(0), &s[0..2]);
        assert_eq!(g.row(1), &s[2..4]);
        assert_eq!(read_grid(&g), s);
        assert!(matches!(fill_grid(&s, 4, 2), Err(Error::Size(_))));
    }

    #[test]
    fn cyclic_prefix_copies_block_tail() {
        let z = |x: f64| Complex64::new(x, 0.0);
        let g = SfGrid::new(1, 4, vec![z(1.0), z(2.0), z(3.0), z(4.0)]).unwrap();
        let f = assemble_frame(&g, 1, &[]).unwrap();
        assert_eq!(f.samples, vec![z(4.0), z(1.0), z(2.0), z(3.0), z(4.0)]);
        let bare = assemble_frame(&g, 0, &[]).unwrap();
        assert_eq!(bare.samples, g.as_slice());
    }

    #[test]
    fn frame_round_trip_with_cp_and_preamble() {
        let g = SfGrid::from_fn(4, 16, |i, j| Complex64::new(i as f64, j as f64)).unwrap();
        let f = assemble_frame(&g, 4, &preamble(16)).unwrap();
        assert_eq!(f.samples.len(), 16 + 4 * 20);
        assert_eq!(disassemble_frame(&f).unwrap(), g);
    }

    #[test]
    fn cp_must_be_shorter_than_block() {
        let g = SfGrid::zeros(2, 4).unwrap();
        assert!(matches!(assemble_frame(&g, 4, &[]), Err(Error::Config(_))));
    }
}
