//! Synthetic latent frames and the `LTNT` tensor file.
//!
//! A frame holds the entropy parameters `(mu, sigma)` an entropy model
//! would predict and a latent `y` drawn from exactly that model:
//! `sigma` log-uniform over a range, `mu ~ N(0, mu_scale^2)`,
//! `y = mu + N(0, sigma^2)`. Every element is addressed through the
//! counter-based generator, so a frame is a pure function of
//! `(seed, dims, profile)` and [`crate::rng::GENERATOR_VERSION`].

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Philox;
use crate::sigma_grid::SigmaGrid;
use crate::{detmath, Dims};

const LTNT_MAGIC: &[u8; 4] = b"LTNT";
const LTNT_VERSION: u8 = 1;
const LTNT_HEADER: usize = 4 + 1 + 12;

const PURPOSE_SIGMA: u32 = 0;
const PURPOSE_NORMALS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SigmaLaw {
    /// Log-uniform over `[min, max]`.
    LogUniform {
        min: f32,
        max: f32,
    },
    Fixed(f32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub sigma: SigmaLaw,
    pub mu_scale: f64,
}

impl Profile {
    /// Log-uniform over the full range of `grid`, which makes the continuous
    /// index uniform on `[0, L - 1]`.
    pub fn for_grid(grid: &SigmaGrid) -> Self {
        Self {
            sigma: SigmaLaw::LogUniform {
                min: grid.sigma_min(),
                max: grid.sigma_max(),
            },
            mu_scale: 1.0,
        }
    }

    pub fn fixed(sigma: f32) -> Self {
        Self {
            sigma: SigmaLaw::Fixed(sigma),
            mu_scale: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.sigma {
            SigmaLaw::LogUniform { min, max } => min > 0.0 && min <= max && max.is_finite(),
            SigmaLaw::Fixed(s) => s > 0.0 && s.is_finite(),
        };
        if !ok || !(self.mu_scale.is_finite() && self.mu_scale >= 0.0) {
            return Err(Error::Domain(format!("invalid profile {self:?}")));
        }
        Ok(())
    }
}

impl Default for Profile {
    fn default() -> Self {
        Self::for_grid(&SigmaGrid::default())
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    /// `uniform` (default grid range) or `fixed=<sigma>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "loguniform" => Ok(Self::default()),
            _ => match s.strip_prefix("fixed=") {
                Some(v) => {
                    let sigma: f32 = v.parse().map_err(|e| Error::Domain(format!("bad sigma {v:?}: {e}")))?;
                    let p = Self::fixed(sigma);
                    p.validate()?;
                    Ok(p)
                }
                None => Err(Error::Domain(format!(
                    "unknown profile {s:?}; expected uniform or fixed=<sigma>"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentFrame {
    pub dims: Dims,
    pub mu: Vec<f32>,
    pub sigma: Vec<f32>,
    pub y: Vec<f32>,
}

impl LatentFrame {
    pub fn validate(&self) -> Result<()> {
        let n = self.dims.len();
        if self.mu.len() != n || self.sigma.len() != n || self.y.len() != n {
            return Err(Error::Domain(format!("field lengths do not match dims {}", self.dims)));
        }
        if let Some(i) = self.sigma.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Domain(format!(
                "sigma[{i}] = {} is not positive and finite",
                self.sigma[i]
            )));
        }
        if self.mu.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite mu or y".into()));
        }
        Ok(())
    }

    /// Integer residuals `round(y - mu)`, ties away from zero.
    pub fn residuals(&self) -> Vec<i64> {
        self.y
            .iter()
            .zip(&self.mu)
            .map(|(&y, &m)| detmath::round_half_away(f64::from(y) - f64::from(m)) as i64)
            .collect()
    }

    pub fn to_ltnt(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(LTNT_HEADER + 12 * self.dims.len());
        out.extend_from_slice(LTNT_MAGIC);
        out.push(LTNT_VERSION);
        for d in [self.dims.c, self.dims.h, self.dims.w] {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for plane in [&self.mu, &self.sigma, &self.y] {
            for v in plane.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_ltnt(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < LTNT_HEADER {
            return Err(Error::Malformed("truncated LTNT header".into()));
        }
        if &bytes[..4] != LTNT_MAGIC {
            return Err(Error::Malformed("bad LTNT magic".into()));
        }
        if bytes[4] != LTNT_VERSION {
            return Err(Error::Malformed(format!("unsupported LTNT version {}", bytes[4])));
        }
        let d = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        let dims = Dims::new(d(5), d(9), d(13)).map_err(|e| Error::Malformed(e.to_string()))?;
        let n = dims.len();
        let need = n
            .checked_mul(12)
            .and_then(|b| b.checked_add(LTNT_HEADER))
            .ok_or_else(|| Error::Malformed("LTNT dims overflow".into()))?;
        if bytes.len() != need {
            return Err(Error::Malformed(format!(
                "LTNT payload is {} bytes, dims {dims} need {need}",
                bytes.len()
            )));
        }
        let plane = |k: usize| -> Vec<f32> {
            bytes[LTNT_HEADER + 4 * n * k..LTNT_HEADER + 4 * n * (k + 1)]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect()
        };
        let frame = Self {
            dims,
            mu: plane(0),
            sigma: plane(1),
            y: plane(2),
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_ltnt())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_ltnt(&bytes)
    }

    /// CRC-32 of the `LTNT` serialization.
    pub fn checksum(&self) -> u32 {
        crc32fast::hash(&self.to_ltnt())
    }
}

pub fn generate(seed: u64, dims: Dims, profile: &Profile) -> Result<LatentFrame> {
    profile.validate()?;
    if dims.is_empty() {
        return Err(Error::Domain("empty dims".into()));
    }
    let rng = Philox::new(seed);
    let n = dims.len();
    let log_bounds = match profile.sigma {
        SigmaLaw::LogUniform { min, max } => (detmath::ln(f64::from(min)), detmath::ln(f64::from(max))),
        SigmaLaw::Fixed(_) => (0.0, 0.0),
    };
    let elems: Vec<(f32, f32, f32)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let sigma = match profile.sigma {
                SigmaLaw::Fixed(s) => s,
                SigmaLaw::LogUniform { min, max } => {
                    let (lo, hi) = log_bounds;
                    let u = rng.uniform(i, PURPOSE_SIGMA);
                    (detmath::exp(lo + u * (hi - lo)) as f32).clamp(min, max)
                }
            };
            let (zm, zy) = rng.normal_pair(i, PURPOSE_NORMALS);
            let mu = (profile.mu_scale * zm) as f32;
            let y = (f64::from(mu) + f64::from(sigma) * zy) as f32;
            (mu, sigma, y)
        })
        .collect();
    let mut frame = LatentFrame {
        dims,
        mu: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    for (m, s, y) in elems {
        frame.mu.push(m);
        frame.sigma.push(s);
        frame.y.push(y);
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Dims {
        Dims::new(4, 8, 8).unwrap()
    }

    #[test]
    fn deterministic() {
        let p = Profile::default();
        let a = generate(9, small(), &p).unwrap();
        let b = generate(9, small(), &p).unwrap();
        assert_eq!(a.to_ltnt(), b.to_ltnt());
        assert_ne!(a, generate(10, small(), &p).unwrap());
    }

    #[test]
    fn sigma_bounds() {
        let g = SigmaGrid::default();
        let f = generate(1, Dims::new(8, 32, 32).unwrap(), &Profile::for_grid(&g)).unwrap();
        assert!(f.sigma.iter().all(|&s| s >= g.sigma_min() && s <= g.sigma_max()));
        f.validate().unwrap();
    }

    #[test]
    fn fixed_min_sigma_gives_zero_residuals() {
        let f = generate(3, Dims::new(16, 64, 64).unwrap(), &Profile::fixed(0.01)).unwrap();
        let zeros = f.residuals().iter().filter(|&&r| r == 0).count();
        assert!(zeros as f64 / f.dims.len() as f64 > 0.9999);
    }

    #[test]
    fn ltnt_roundtrip_and_errors() {
        let f = generate(5, small(), &Profile::default()).unwrap();
        let bytes = f.to_ltnt();
        assert_eq!(LatentFrame::from_ltnt(&bytes).unwrap(), f);
        assert!(matches!(
            LatentFrame::from_ltnt(&bytes[..bytes.len() - 1]),
            Err(Error::Malformed(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(LatentFrame::from_ltnt(&bad).is_err());
        let mut neg = f.clone();
        neg.sigma[3] = -1.0;
        assert!(matches!(LatentFrame::from_ltnt(&neg.to_ltnt()), Err(Error::Domain(_))));
        let mut huge = bytes.clone();
        huge[5..9].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(LatentFrame::from_ltnt(&huge).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.ltnt");
        let f = generate(6, small(), &Profile::default()).unwrap();
        f.save(&p).unwrap();
        assert_eq!(LatentFrame::load(&p).unwrap(), f);
    }

    #[test]
    fn profile_parsing() {
        assert_eq!("uniform".parse::<Profile>().unwrap(), Profile::default());
        assert_eq!("fixed=0.5".parse::<Profile>().unwrap(), Profile::fixed(0.5));
        assert!("fixed=-2".parse::<Profile>().is_err());
        assert!("gaussian".parse::<Profile>().is_err());
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(Dims::new(0, 1, 1).is_err());
    }
}
