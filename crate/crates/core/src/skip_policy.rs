//! Skipping the range coder for elements with a tiny predicted scale.
//!
//! A skipped element is not coded at all; the decoder substitutes the
//! predicted mean, i.e. a residual of zero. The threshold is carried as the
//! smallest level that is still coded, so both ends decide on integers
//! derived from calibrated indices and never compare floats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigma_grid::{QuantIndex, SigmaGrid};

/// Elements whose level is below `min_coded_level` are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SkipConfig {
    min_coded_level: u8,
}

impl SkipConfig {
    /// No skipping.
    pub const NONE: Self = Self { min_coded_level: 0 };

    pub fn from_level(min_coded_level: u8, grid: &SigmaGrid) -> Result<Self> {
        if min_coded_level > grid.levels() {
            return Err(Error::Config(format!(
                "skip level bound {min_coded_level} exceeds level count {}",
                grid.levels()
            )));
        }
        Ok(Self { min_coded_level })
    }

    /// Skip every level whose reconstruction scale is below `threshold`.
    pub fn from_threshold(threshold: f64, grid: &SigmaGrid) -> Result<Self> {
        if threshold.is_nan() || threshold < 0.0 || threshold.is_infinite() {
            return Err(Error::Config(format!(
                "skip threshold must be finite and >= 0, got {threshold}"
            )));
        }
        let bound = grid
            .lut()
            .iter()
            .position(|&t| t >= threshold)
            .unwrap_or(grid.lut().len());
        Ok(Self {
            min_coded_level: bound as u8,
        })
    }

    /// Smallest bound whose skip ratio on `levels` reaches `ratio`.
    pub fn for_ratio(levels: &[QuantIndex], ratio: f64, grid: &SigmaGrid) -> Self {
        let mut hist = vec![0usize; usize::from(grid.levels())];
        for l in levels {
            hist[usize::from(l.0)] += 1;
        }
        let want = ratio * levels.len() as f64;
        let mut acc = 0usize;
        for (k, &h) in hist.iter().enumerate() {
            if acc as f64 >= want {
                return Self {
                    min_coded_level: k as u8,
                };
            }
            acc += h;
        }
        Self {
            min_coded_level: grid.levels(),
        }
    }

    pub fn min_coded_level(&self) -> u8 {
        self.min_coded_level
    }

    #[inline]
    pub fn skips(&self, level: QuantIndex) -> bool {
        level.0 < self.min_coded_level
    }
}

pub fn skip_mask(levels: &[QuantIndex], cfg: SkipConfig) -> Vec<bool> {
    levels.iter().map(|&l| cfg.skips(l)).collect()
}

/// Residuals that still go through the coder.
pub fn apply_skip_encode<T: Copy>(values: &[T], mask: &[bool]) -> Vec<T> {
    values.iter().zip(mask).filter(|(_, &m)| !m).map(|(&v, _)| v).collect()
}

/// Scatter decoded residuals back into a full field; skipped positions get
/// residual 0, i.e. the rounded predicted mean.
pub fn apply_skip_decode(decoded: &[i32], mask: &[bool]) -> Result<Vec<i32>> {
    let coded = mask.iter().filter(|&&m| !m).count();
    if coded != decoded.len() {
        return Err(Error::Desync(format!(
            "{} decoded residuals for {coded} coded positions",
            decoded.len()
        )));
    }
    let mut it = decoded.iter();
    Ok(mask
        .iter()
        .map(|&m| if m { 0 } else { *it.next().expect("counted above") })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> Vec<QuantIndex> {
        (0..64).map(|i| QuantIndex((i % 32) as u8)).collect()
    }

    #[test]
    fn threshold_extremes() {
        let g = SigmaGrid::default();
        let none = SkipConfig::from_threshold(0.0, &g).unwrap();
        assert!(skip_mask(&levels(), none).iter().all(|&m| !m));
        let above = f64::from_bits(64.0f64.to_bits() + 1);
        let all = SkipConfig::from_threshold(above, &g).unwrap();
        assert_eq!(all.min_coded_level(), 32);
        assert!(skip_mask(&levels(), all).iter().all(|&m| m));
        assert!(SkipConfig::from_threshold(-1.0, &g).is_err());
        assert!(SkipConfig::from_level(33, &g).is_err());
    }

    #[test]
    fn threshold_just_above_min_skips_level_zero_only() {
        let g = SigmaGrid::default();
        let cfg = SkipConfig::from_threshold(f64::from(g.sigma_min()) * 1.0001, &g).unwrap();
        assert_eq!(cfg.min_coded_level(), 1);
    }

    #[test]
    fn ratio_targets() {
        let g = SigmaGrid::default();
        // 1000 elements spread evenly: 634 skipped needs ~20.3 levels.
        let lv: Vec<QuantIndex> = (0..1000).map(|i| QuantIndex((i * 32 / 1000) as u8)).collect();
        let cfg = SkipConfig::for_ratio(&lv, 0.634, &g);
        let ratio = skip_mask(&lv, cfg).iter().filter(|&&m| m).count() as f64 / 1000.0;
        assert!((0.634..0.634 + 1.0 / 32.0 + 1e-9).contains(&ratio), "{ratio}");
        assert_eq!(SkipConfig::for_ratio(&lv, 0.0, &g).min_coded_level(), 0);
    }

    #[test]
    fn encode_decode_subsets() {
        let r = vec![3, -1, 0, 7, 2];
        assert_eq!(apply_skip_encode(&r, &[false; 5]), r);
        assert!(apply_skip_encode(&r, &[true; 5]).is_empty());
        let m = [true, false, true, false, false];
        let sub = apply_skip_encode(&r, &m);
        assert_eq!(sub, vec![-1, 7, 2]);
        assert_eq!(apply_skip_decode(&sub, &m).unwrap(), vec![0, -1, 0, 7, 2]);
        assert_eq!(apply_skip_decode(&[], &[true; 5]).unwrap(), vec![0; 5]);
        assert_eq!(apply_skip_decode(&r, &[false; 5]).unwrap(), r);
        assert!(matches!(apply_skip_decode(&sub, &[false; 5]), Err(Error::Desync(_))));
    }
}
