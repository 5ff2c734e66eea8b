//! Log-domain discretization of the scale parameter.
//!
//! A grid `(sigma_min, sigma_max, L)` maps a scale `sigma` to a continuous
//! index `I = clamp(ln(sigma / sigma_min) / step, 0, L - 1)` with
//! `step = (ln sigma_max - ln sigma_min) / (L - 1)`. The floor of `I` selects
//! one of `L` reconstruction scales `theta_k = exp(ln sigma_min + k step)`.
//!
//! Grid bounds are binary32 values because they travel in the frame header
//! as binary32 bit patterns; all arithmetic happens in binary64 through
//! [`crate::detmath`].

use serde::{Deserialize, Serialize};

use crate::detmath;
use crate::error::{Error, Result};

/// Continuous index `I`, always in `[0, L - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ContinuousIndex(pub f64);

/// Quantized index, one of the `L` grid levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QuantIndex(pub u8);

impl ContinuousIndex {
    /// Truncating quantizer `Q(I) = floor(I)`.
    pub fn floor(self) -> QuantIndex {
        QuantIndex(self.0.floor() as u8)
    }

    /// Rounding quantizer used for calibrated elements. Ties go away from
    /// zero; the result is clamped to `[0, max_level]`.
    pub fn round(self, max_level: u8) -> QuantIndex {
        let r = detmath::round_half_away(self.0).clamp(0.0, f64::from(max_level));
        QuantIndex(r as u8)
    }
}

pub fn quantize_floor(i: ContinuousIndex) -> QuantIndex {
    i.floor()
}

pub fn quantize_round(i: ContinuousIndex, grid: &SigmaGrid) -> QuantIndex {
    i.round(grid.max_level())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaGrid {
    sigma_min: f32,
    sigma_max: f32,
    levels: u8,
    sigma_step: f64,
    ln_min_dd: detmath::Dd,
    step_dd: detmath::Dd,
    lut: Vec<f64>,
}

impl SigmaGrid {
    pub const DEFAULT_SIGMA_MIN: f32 = 0.01;
    pub const DEFAULT_SIGMA_MAX: f32 = 64.0;
    pub const DEFAULT_LEVELS: u8 = 32;

    pub fn new(sigma_min: f32, sigma_max: f32, levels: u8) -> Result<Self> {
        if !(sigma_min.is_finite() && sigma_max.is_finite()) || sigma_min <= 0.0 {
            return Err(Error::Config(format!(
                "grid bounds must be positive and finite, got ({sigma_min}, {sigma_max})"
            )));
        }
        if sigma_min >= sigma_max {
            return Err(Error::Config(format!(
                "sigma_min {sigma_min} must be below sigma_max {sigma_max}"
            )));
        }
        if levels < 2 {
            return Err(Error::Config(format!("need at least 2 levels, got {levels}")));
        }
        let ln_sigma_min = detmath::ln(f64::from(sigma_min));
        let ln_sigma_max = detmath::ln(f64::from(sigma_max));
        let sigma_step = (ln_sigma_max - ln_sigma_min) / f64::from(levels - 1);
        let last = usize::from(levels) - 1;
        let ln_min_dd = detmath::ln_dd(f64::from(sigma_min));
        let step_dd = (detmath::ln_dd(f64::from(sigma_max)) + -ln_min_dd).div_f64(f64::from(levels - 1));
        let lut = (0..=last)
            .map(|k| match k {
                0 => f64::from(sigma_min),
                k if k == last => f64::from(sigma_max),
                k => theta_dd(ln_min_dd, step_dd, k as u8),
            })
            .collect();
        Ok(Self {
            sigma_min,
            sigma_max,
            levels,
            sigma_step,
            ln_min_dd,
            step_dd,
            lut,
        })
    }

    pub fn sigma_min(&self) -> f32 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f32 {
        self.sigma_max
    }

    pub fn levels(&self) -> u8 {
        self.levels
    }

    pub fn max_level(&self) -> u8 {
        self.levels - 1
    }

    pub fn sigma_step(&self) -> f64 {
        self.sigma_step
    }

    /// Continuous index of `sigma`.
    pub fn index_of(&self, sigma: f64) -> Result<ContinuousIndex> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be positive and finite, got {sigma}")));
        }
        Ok(ContinuousIndex(self.index_unchecked(sigma)))
    }

    /// [`Self::index_of`] for callers that already validated `sigma`.
    #[inline]
    pub(crate) fn index_unchecked(&self, sigma: f64) -> f64 {
        let raw = detmath::ln(sigma / f64::from(self.sigma_min)) / self.sigma_step;
        raw.clamp(0.0, f64::from(self.max_level()))
    }

    /// Reconstruction scale `theta` of a level.
    ///
    /// # Panics
    ///
    /// Panics if `idx` is not a level of this grid.
    pub fn lut_theta(&self, idx: QuantIndex) -> f64 {
        self.lut[usize::from(idx.0)]
    }

    /// The full reconstruction table, indexed by level.
    pub fn lut(&self) -> &[f64] {
        &self.lut
    }

    /// Unpinned evaluation of the reconstruction formula, used to check the
    /// table endpoints.
    pub fn theta_formula(&self, idx: QuantIndex) -> f64 {
        theta_dd(self.ln_min_dd, self.step_dd, idx.0)
    }
}

// exp(ln sigma_min + k * step) with the argument carried in double-double:
// at the top level the argument is ~9, so a plain f64 sum would lose ~10 ulps
// of theta to argument rounding alone.
fn theta_dd(ln_min: detmath::Dd, step: detmath::Dd, k: u8) -> f64 {
    detmath::exp_dd(ln_min + step.mul_f64(f64::from(k)))
}

impl Default for SigmaGrid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_SIGMA_MIN, Self::DEFAULT_SIGMA_MAX, Self::DEFAULT_LEVELS)
            .expect("default grid is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ulps(a: f64, b: f64) -> u64 {
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn index_examples() {
        let g = SigmaGrid::default();
        assert_eq!(g.index_of(f64::from(0.01f32)).unwrap().0, 0.0);
        // Decimal 0.01 is a hair above the binary32 bound.
        assert!(g.index_of(0.01).unwrap().0 < 1e-6);
        assert_eq!(g.index_of(64.0).unwrap().0, 31.0);
        assert_eq!(g.index_of(1e-6).unwrap().0, 0.0);
        assert_eq!(g.index_of(1e6).unwrap().0, 31.0);
        // sqrt(sigma_min * sigma_max) sits exactly halfway in log space.
        let mid = (f64::from(g.sigma_min()) * 64.0).sqrt();
        let i = g.index_of(mid).unwrap();
        assert!((i.0 - 15.5).abs() < 1e-12, "{}", i.0);
        assert_eq!(quantize_floor(i), QuantIndex(15));
        // With the binary32 sigma_min the decimal midpoint is off by ~1e-7.
        let i = g.index_of(0.8).unwrap();
        assert!((i.0 - 15.5).abs() < 1e-6, "{}", i.0);
        assert_eq!(quantize_floor(i), QuantIndex(15));
    }

    #[test]
    fn index_rejects_bad_sigma() {
        let g = SigmaGrid::default();
        for s in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(g.index_of(s), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn quantizer_examples() {
        let g = SigmaGrid::default();
        assert_eq!(quantize_floor(ContinuousIndex(15.5)), QuantIndex(15));
        assert_eq!(quantize_floor(ContinuousIndex(0.0)), QuantIndex(0));
        assert_eq!(quantize_floor(ContinuousIndex(30.999)), QuantIndex(30));
        assert_eq!(quantize_round(ContinuousIndex(15.49), &g), QuantIndex(15));
        assert_eq!(quantize_round(ContinuousIndex(15.51), &g), QuantIndex(16));
        assert_eq!(quantize_round(ContinuousIndex(14.99995), &g), QuantIndex(15));
        assert_eq!(quantize_round(ContinuousIndex(15.5), &g), QuantIndex(16));
        assert_eq!(quantize_round(ContinuousIndex(31.0), &g), QuantIndex(31));
    }

    #[test]
    fn lut_examples() {
        let g = SigmaGrid::default();
        assert_eq!(g.lut_theta(QuantIndex(0)), f64::from(0.01f32));
        assert_eq!(g.lut_theta(QuantIndex(31)), 64.0);
        // 40-digit oracle of f32(0.01) * (64 / f32(0.01))^(15/31).
        let want = 0.694_544_349_438_838_4;
        assert!((g.lut_theta(QuantIndex(15)) - want).abs() < 1e-14);
    }

    #[test]
    fn lut_endpoints_agree_with_formula() {
        let g = SigmaGrid::default();
        assert!(ulps(g.theta_formula(QuantIndex(0)), g.lut_theta(QuantIndex(0))) <= 1);
        assert!(ulps(g.theta_formula(QuantIndex(31)), g.lut_theta(QuantIndex(31))) <= 1);
    }

    #[test]
    fn step_is_reproducible() {
        let a = SigmaGrid::default();
        let b = SigmaGrid::new(0.01, 64.0, 32).unwrap();
        assert_eq!(a.sigma_step().to_bits(), b.sigma_step().to_bits());
    }

    #[test]
    fn invalid_grids() {
        assert!(SigmaGrid::new(1.0, 1.0, 32).is_err());
        assert!(SigmaGrid::new(0.0, 1.0, 32).is_err());
        assert!(SigmaGrid::new(0.1, 1.0, 1).is_err());
        assert!(SigmaGrid::new(0.1, f32::INFINITY, 4).is_err());
    }
}
