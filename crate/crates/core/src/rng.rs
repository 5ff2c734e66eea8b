//! Philox4x32-10 counter-based generator.
//!
//! Each output block is a pure function of a 128-bit counter and a 64-bit
//! key, so element `i` of a synthetic field can be drawn without touching
//! elements `0..i`. Constants are the published ones (Salmon et al., SC'11):
//!
//! | name       | value        |
//! |------------|--------------|
//! | multiplier | `0xD2511F53`, `0xCD9E8D57` |
//! | key bump   | `0x9E3779B9`, `0xBB67AE85` |
//! | rounds     | 10           |
//!
//! Uniform doubles take the top 53 bits of two consecutive words. Normal
//! variates use Marsaglia's polar method over [`crate::detmath::ln`] and
//! `sqrt`, both of which are bit-reproducible.

use crate::detmath;

/// Version tag of the sampling scheme built on top of the block function.
/// Bump whenever the mapping from (seed, counter) to samples changes.
pub const GENERATOR_VERSION: u8 = 1;

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32-10 block.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut ctr = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, ctr[0]);
        let (hi1, lo1) = mulhilo(M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0];
    }
    ctr
}

/// Keyed stream addressed by (element index, purpose, attempt).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Philox {
    key: [u32; 2],
}

impl Philox {
    pub fn new(seed: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
        }
    }

    pub fn block(&self, index: u64, purpose: u32, attempt: u32) -> [u32; 4] {
        philox4x32([index as u32, (index >> 32) as u32, purpose, attempt], self.key)
    }

    /// Two uniform doubles in `[0, 1)`.
    pub fn uniform_pair(&self, index: u64, purpose: u32, attempt: u32) -> (f64, f64) {
        let b = self.block(index, purpose, attempt);
        (to_unit(b[0], b[1]), to_unit(b[2], b[3]))
    }

    pub fn uniform(&self, index: u64, purpose: u32) -> f64 {
        self.uniform_pair(index, purpose, 0).0
    }

    /// Standard normal variate.
    pub fn normal(&self, index: u64, purpose: u32) -> f64 {
        self.normal_pair(index, purpose).0
    }

    /// Two independent standard normals (Marsaglia polar method).
    pub fn normal_pair(&self, index: u64, purpose: u32) -> (f64, f64) {
        let mut attempt = 0u32;
        loop {
            let (a, b) = self.uniform_pair(index, purpose, attempt);
            let u = 2.0 * a - 1.0;
            let v = 2.0 * b - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * detmath::ln(s) / s).sqrt();
                return (u * m, v * m);
            }
            // Acceptance probability is pi/4; running out of attempts is not a
            // practical concern.
            attempt = attempt.wrapping_add(1);
        }
    }
}

#[inline]
fn to_unit(hi: u32, lo: u32) -> f64 {
    let bits = (u64::from(hi) << 21) ^ (u64::from(lo) >> 11);
    (bits & ((1 << 53) - 1)) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Known-answer vectors from the Random123 distribution (kat_vectors).
    #[test]
    fn philox_known_answers() {
        assert_eq!(
            philox4x32([0; 4], [0; 2]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
        assert_eq!(
            philox4x32(
                [0x243f_6a88, 0x85a3_08d3, 0x1319_8a2e, 0x0370_7344],
                [0xa409_3822, 0x299f_31d0]
            ),
            [0xd16c_fe09, 0x94fd_cceb, 0x5001_e420, 0x2412_6ea1]
        );
    }

    #[test]
    fn uniform_in_unit_interval() {
        let g = Philox::new(42);
        for i in 0..10_000 {
            let u = g.uniform(i, 0);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments() {
        let g = Philox::new(7);
        let n = 200_000u64;
        let xs: Vec<f64> = (0..n).map(|i| g.normal(i, 3)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn streams_are_distinct() {
        let g = Philox::new(1);
        assert_ne!(g.block(0, 0, 0), g.block(0, 1, 0));
        assert_ne!(g.block(0, 0, 0), Philox::new(2).block(0, 0, 0));
    }
}
