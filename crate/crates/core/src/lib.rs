//! Drift-tolerant entropy coding for learned-codec latents.
//!
//! Latents are coded with a discretized-Gaussian range coder whose scale
//! comes from a log-domain grid index. Encoder and decoder compute that
//! index independently in floating point, so a few elements can land on
//! different sides of a quantization boundary and desynchronize the coder.
//! The encoder finds those elements and ships their coordinates as
//! calibration side information; both ends then quantize them by rounding,
//! which agrees under any perturbation up to the calibration precision.
//!
//! Module map:
//!
//! * [`sigma_grid`] scale grid, index, quantizers and reconstruction table
//! * [`entropy_tables`] per-level frequency tables and rate estimation
//! * [`range_coder`] integer range coder
//! * [`calibration`] boundary detection, dual quantization, block format
//! * [`pgc`] piecewise Gaussian constraint and index rectification
//! * [`skip_policy`] coding skip for low-scale elements
//! * [`latent_source`] synthetic latents and the `LTNT` tensor format
//! * [`codec`] frame encode/decode and the `CPNC` container
//! * [`drift`] simulated cross-platform experiments

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod calibration;
pub mod codec;
pub mod detmath;
pub mod drift;
pub mod entropy_tables;
mod error;
pub mod latent_source;
pub mod pgc;
pub mod range_coder;
pub mod rng;
pub mod sigma_grid;
pub mod skip_policy;

pub use calibration::{CalibrationBlock, CalibrationSet, Epsilon};
pub use codec::{CodedFrame, DecodeResult, DecodeStatus, EntropyParams, FrameHeader};
pub use drift::{DriftModel, DriftReport};
pub use entropy_tables::{CdfTable, SymbolAlphabet};
pub use error::{Error, Result};
pub use latent_source::{LatentFrame, Profile};
pub use pgc::PgcConfig;
pub use range_coder::Bitstream;
pub use sigma_grid::{ContinuousIndex, QuantIndex, SigmaGrid};
pub use skip_policy::SkipConfig;

/// Latent shape `(C, H, W)`, flattened row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub c: u32,
    pub h: u32,
    pub w: u32,
}

impl Dims {
    /// Every dimension must be at least 1 and the element count must fit
    /// in a `u32` coordinate.
    pub fn new(c: u32, h: u32, w: u32) -> Result<Self> {
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::Domain(format!("dims must be positive, got {c}x{h}x{w}")));
        }
        let n = u64::from(c) * u64::from(h) * u64::from(w);
        if n > u64::from(u32::MAX) {
            return Err(Error::Domain(format!("{c}x{h}x{w} has too many elements")));
        }
        Ok(Self { c, h, w })
    }

    pub fn len(&self) -> usize {
        self.c as usize * self.h as usize * self.w as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self, x: u32, y: u32, z: u32) -> u32 {
        x * self.h * self.w + y * self.w + z
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.c, self.h, self.w)
    }
}

impl std::str::FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        if parts.len() != 3 {
            return Err(Error::Domain(format!("expected CxHxW, got {s:?}")));
        }
        let p = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| Error::Domain(format!("bad dimension {t:?}: {e}")))
        };
        Dims::new(p(parts[0])?, p(parts[1])?, p(parts[2])?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_parse_and_len() {
        let d: Dims = "192x48x80".parse().unwrap();
        assert_eq!(d.len(), 737_280);
        assert_eq!(d.to_string(), "192x48x80");
        assert!("0x4x4".parse::<Dims>().is_err());
        assert!("4x4".parse::<Dims>().is_err());
        assert!("65536x65536x2".parse::<Dims>().is_err());
    }
}
