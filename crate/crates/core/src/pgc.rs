//! Piecewise Gaussian constraint on the continuous index.
//!
//! Within each unit interval the kernel `G` is a Gaussian bump in the
//! distance to the interval center, peaking at the integers. The per-element
//! penalty `(G(0.5) - G(I))^2` is zero at interval centers and largest at
//! integers, so descending it moves indices away from the quantization
//! boundaries that calibration has to cover. A mask leaves alone elements
//! already near a center and elements near zero, where clamping makes a
//! boundary crossing impossible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detmath;
use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgcConfig {
    /// Kernel standard deviation.
    pub delta: f64,
    /// Mask threshold.
    pub eta: f64,
    /// Loss weight.
    pub beta: f64,
}

impl Default for PgcConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            eta: 0.3,
            beta: 1.0,
        }
    }
}

impl PgcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.eta > 0.0 && self.eta < 0.5) {
            return Err(Error::Config(format!("eta must be in (0, 0.5), got {}", self.eta)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Config(format!("beta must be non-negative, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Signed offset from the center of the interval `(ceil(x) - 1, ceil(x)]`,
/// in `(-0.5, 0.5]`; exactly 0.5 at integers.
#[inline]
fn center_offset(x: f64) -> f64 {
    x - (x.ceil() - 0.5)
}

pub fn g_kernel(x: f64, delta: f64) -> f64 {
    let t = (center_offset(x).abs() - 0.5) / delta;
    INV_SQRT_2PI / delta * detmath::exp(-0.5 * t * t)
}

pub fn mask(x: f64, eta: f64) -> bool {
    !(x < eta || center_offset(x).abs() < eta)
}

/// Loss contribution and derivative of one element. The derivative is 0 where
/// the mask is off and at the kernel's kinks (integers and centers).
#[inline]
pub fn element_loss(x: f64, cfg: &PgcConfig) -> (f64, f64) {
    if !mask(x, cfg.eta) {
        return (0.0, 0.0);
    }
    let g0 = g_kernel(0.5, cfg.delta);
    let s = center_offset(x);
    let g = g_kernel(x, cfg.delta);
    let diff = g0 - g;
    let loss = diff * diff;
    if s == 0.5 || s == 0.0 {
        return (loss, 0.0);
    }
    let d = s.abs();
    let dg = -g * (d - 0.5) / (cfg.delta * cfg.delta) * s.signum();
    (loss, -2.0 * diff * dg)
}

/// Total constraint loss over a field and its gradient.
pub fn pgc_loss(index: &[f64], cfg: &PgcConfig) -> (f64, Vec<f64>) {
    let (losses, grads): (Vec<f64>, Vec<f64>) = index.par_iter().map(|&x| element_loss(x, cfg)).unzip();
    (detmath::pairwise_sum(&losses), grads)
}

/// Gradient descent on `beta * loss`, re-clamping to `[0, max_level]` after
/// every step.
pub fn rectify(index: &[f64], cfg: &PgcConfig, steps: usize, lr: f64, max_level: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    let mut out = index.to_vec();
    // Every element's gradient depends only on itself, so elements descend
    // independently.
    out.par_iter_mut().for_each(|x| {
        for _ in 0..steps {
            let (_, g) = element_loss(*x, cfg);
            if g == 0.0 {
                break;
            }
            *x = (*x - lr * cfg.beta * g).clamp(0.0, max_level);
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub points: usize,
    pub step: f64,
    pub max_relative_error: f64,
    /// Point where the worst error occurred.
    pub worst_at: f64,
}

/// Compare the analytic derivative with a central difference of step `h` at
/// `points` random indices in `[0, max_level]`. Points within `margin` of a
/// kink (integers, centers) or of a mask edge are skipped and redrawn.
pub fn gradient_check(
    cfg: &PgcConfig,
    points: usize,
    seed: u64,
    h: f64,
    margin: f64,
    max_level: f64,
) -> Result<GradientCheck> {
    cfg.validate()?;
    if !(h > 0.0 && margin >= h && margin < 0.25) {
        return Err(Error::Config(format!(
            "need 0 < h <= margin < 0.25, got h={h}, margin={margin}"
        )));
    }
    let rng = crate::rng::Philox::new(seed);
    let mut worst = (0.0f64, f64::NAN);
    let mut checked = 0;
    let mut i = 0u64;
    while checked < points {
        let x = rng.uniform(i, 0) * max_level;
        i += 1;
        let off = center_offset(x).abs();
        let smooth = x - cfg.eta > margin && (off - cfg.eta).abs() > margin && 0.5 - off > margin;
        if !smooth {
            continue;
        }
        let (_, g) = element_loss(x, cfg);
        let fd = (element_loss(x + h, cfg).0 - element_loss(x - h, cfg).0) / (2.0 * h);
        let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        if rel > worst.0 || worst.1.is_nan() {
            worst = (rel, x);
        }
        checked += 1;
    }
    Ok(GradientCheck {
        points,
        step: h,
        max_relative_error: worst.0,
        worst_at: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        // 40-digit oracles.
        assert!((g_kernel(1.0, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((g_kernel(3.0, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((g_kernel(0.5, 1.0) - 0.352_065_326_764_299_5).abs() < 1e-15);
        assert!((g_kernel(0.95, 1.0) - 0.398_443_914_094_764).abs() < 1e-15);
        for x in [0.1, 0.37, 0.9, 2.25] {
            assert!((g_kernel(x + 1.0, 1.0) - g_kernel(x, 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn mask_values() {
        assert!(!mask(0.2, 0.3));
        assert!(!mask(0.5, 0.3));
        assert!(mask(0.95, 0.3));
        assert!(mask(1.0, 0.3));
        assert!(!mask(4.6, 0.3));
    }

    #[test]
    fn loss_values() {
        let cfg = PgcConfig::default();
        let (l, g) = pgc_loss(&[0.5, 1.5, 7.5], &cfg);
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
        let (l, _) = pgc_loss(&[0.95], &cfg);
        assert!((l - 2.150_973_362_769_524e-3).abs() < 1e-15, "{l}");
        let (l, g) = pgc_loss(&[1.0], &cfg);
        assert!((l - 2.197_448_782_297_936e-3).abs() < 1e-15, "{l}");
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn rectify_identity_cases() {
        let cfg = PgcConfig::default();
        let f = vec![0.3, 2.98, 14.001];
        assert_eq!(rectify(&f, &cfg, 0, 0.05, 31.0).unwrap(), f);
        let centered = vec![0.5, 3.5, 30.5];
        assert_eq!(rectify(&centered, &cfg, 50, 0.05, 31.0).unwrap(), centered);
        assert!(rectify(&f, &cfg, 1, 0.0, 31.0).is_err());
    }

    #[test]
    fn rectify_moves_toward_centers() {
        let cfg = PgcConfig::default();
        let out = rectify(&[2.98, 3.02], &cfg, 200, 0.05, 31.0).unwrap();
        assert!(out[0] < 2.98 && out[1] > 3.02);
    }

    #[test]
    fn gradient_matches_differences() {
        let r = gradient_check(&PgcConfig::default(), 500, 3, 1e-6, 1e-2, 31.0).unwrap();
        assert!(r.max_relative_error < 1e-6, "{r:?}");
        assert!(gradient_check(&PgcConfig::default(), 1, 3, 0.0, 1e-2, 31.0).is_err());
    }
}
