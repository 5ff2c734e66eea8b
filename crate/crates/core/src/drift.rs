//! Simulated cross-platform experiments.
//!
//! A "platform pair" is modelled as bounded noise on the decoder's
//! continuous index (and optionally its means). Each trial generates a
//! frame, encodes it under the clean parameters, perturbs a copy for the
//! decoder and decodes. Any status other than `Ok` counts as a failure.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{self, Epsilon};
use crate::codec::{EntropyParams, FrameCodec};
use crate::error::{Error, Result};
use crate::latent_source::{self, Profile};
use crate::pgc::{self, PgcConfig};
use crate::rng::Philox;
use crate::skip_policy::SkipConfig;
use crate::Dims;

const PURPOSE_INDEX_NOISE: u32 = 16;
const PURPOSE_MU_NOISE: u32 = 17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub index_noise_bound: f64,
    pub mu_noise_bound: f64,
    pub seed: u64,
    /// Every element gets exactly `+bound` or `-bound` instead of uniform
    /// noise.
    pub adversarial: bool,
}

impl DriftModel {
    pub const NONE: Self = Self {
        index_noise_bound: 0.0,
        mu_noise_bound: 0.0,
        seed: 0,
        adversarial: false,
    };

    pub fn uniform(index_noise_bound: f64, seed: u64) -> Self {
        Self {
            index_noise_bound,
            seed,
            ..Self::NONE
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("index", self.index_noise_bound), ("mu", self.mu_noise_bound)] {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} noise bound must be finite and >= 0, got {b}"
                )));
            }
        }
        Ok(())
    }

    fn noise(&self, rng: &Philox, i: u64, purpose: u32, bound: f64) -> f64 {
        if bound == 0.0 {
            return 0.0;
        }
        let u = rng.uniform(i, purpose);
        if self.adversarial {
            if u < 0.5 {
                -bound
            } else {
                bound
            }
        } else {
            (2.0 * u - 1.0) * bound
        }
    }

    /// Decoder-side copy of `params` for trial `trial`. The index is
    /// re-clamped to the grid after the noise is added.
    pub fn perturb(&self, params: &EntropyParams, trial: u64, max_level: f64) -> EntropyParams {
        let rng = Philox::new(self.seed ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let index = params
            .index
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let d = self.noise(&rng, i as u64, PURPOSE_INDEX_NOISE, self.index_noise_bound);
                (x + d).clamp(0.0, max_level)
            })
            .collect();
        let mu = params
            .mu
            .par_iter()
            .enumerate()
            .map(|(i, &m)| m + self.noise(&rng, i as u64, PURPOSE_MU_NOISE, self.mu_noise_bound))
            .collect();
        EntropyParams {
            dims: params.dims,
            mu,
            index,
        }
    }
}

/// Index rectification applied to both ends before coding, standing in for
/// a model trained with the constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectify {
    pub pgc: PgcConfig,
    pub steps: usize,
    pub lr: f64,
}

impl Default for Rectify {
    fn default() -> Self {
        Self {
            pgc: PgcConfig::default(),
            steps: 200,
            lr: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub frames: usize,
    pub dims: Dims,
    pub profile: Profile,
    /// Seed of frame 0; frame `k` uses `seed + k`.
    pub seed: u64,
    pub epsilon: Option<Epsilon>,
    pub drift: DriftModel,
    pub skip: SkipConfig,
    pub rectify: Option<Rectify>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub mean_calibration_count: f64,
    pub mean_calibration_bits: f64,
    pub mean_payload_bits: f64,
}

struct Trial {
    failed: bool,
    count: usize,
    calib_bits: u64,
    payload_bits: u64,
}

fn frame_params(exp: &Experiment, k: usize, codec: &FrameCodec) -> Result<(Vec<f32>, EntropyParams)> {
    let frame = latent_source::generate(exp.seed.wrapping_add(k as u64), exp.dims, &exp.profile)?;
    let mut params = EntropyParams::from_frame(&frame, codec.grid())?;
    if let Some(r) = exp.rectify {
        let max = f64::from(codec.grid().max_level());
        params.index = pgc::rectify(&params.index, &r.pgc, r.steps, r.lr, max)?;
    }
    Ok((frame.y, params))
}

pub fn run_experiment(exp: &Experiment, codec: &FrameCodec) -> Result<DriftReport> {
    exp.drift.validate()?;
    let max = f64::from(codec.grid().max_level());
    let trials: Vec<Trial> = (0..exp.frames)
        .into_par_iter()
        .map(|k| {
            let (y, params) = frame_params(exp, k, codec)?;
            let (coded, stats) = codec.encode(&y, &params, exp.epsilon, exp.skip)?;
            let dec_params = exp.drift.perturb(&params, k as u64, max);
            let out = codec.decode(&coded, &dec_params)?;
            Ok(Trial {
                failed: !out.status.is_ok(),
                count: stats.calibration_count,
                calib_bits: stats.calibration_bits,
                payload_bits: stats.payload_bits,
            })
        })
        .collect::<Result<_>>()?;
    let n = trials.len();
    let failures = trials.iter().filter(|t| t.failed).count();
    let mean = |f: &dyn Fn(&Trial) -> f64| {
        if n == 0 {
            0.0
        } else {
            trials.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(DriftReport {
        trials: n,
        failures,
        failure_rate: if n == 0 { 0.0 } else { failures as f64 / n as f64 },
        mean_calibration_count: mean(&|t| t.count as f64),
        mean_calibration_bits: mean(&|t| t.calib_bits as f64),
        mean_payload_bits: mean(&|t| t.payload_bits as f64),
    })
}

/// One row of an epsilon sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f32,
    pub rectified: bool,
    pub mean_count: f64,
    pub mean_bit_width: f64,
    /// Relative-position bits per coordinate, block prefix included.
    pub bits_per_coord: f64,
    /// `ceil(log2 N)` for absolute coordinates.
    pub absolute_bits: u32,
}

pub fn absolute_coord_bits(n: usize) -> u32 {
    usize::BITS - (n.max(2) - 1).leading_zeros()
}

/// Calibration statistics for each epsilon; with `rectify`, each epsilon
/// gets a second row computed on the rectified fields. Only the encoder side
/// is involved, so no drift model is needed.
pub fn sweep_epsilon(
    eps: &[Epsilon],
    frames: usize,
    dims: Dims,
    profile: &Profile,
    seed: u64,
    rectify: Option<Rectify>,
    codec: &FrameCodec,
) -> Result<Vec<SweepRow>> {
    let grid = codec.grid();
    let max = f64::from(grid.max_level());
    let fields: Vec<(Vec<f64>, Option<Vec<f64>>)> = (0..frames)
        .into_par_iter()
        .map(|k| {
            let f = latent_source::generate(seed.wrapping_add(k as u64), dims, profile)?;
            let raw = EntropyParams::from_frame(&f, grid)?.index;
            let rect = match rectify {
                Some(r) => Some(pgc::rectify(&raw, &r.pgc, r.steps, r.lr, max)?),
                None => None,
            };
            Ok((raw, rect))
        })
        .collect::<Result<_>>()?;
    let variants: &[bool] = if rectify.is_some() { &[false, true] } else { &[false] };
    let mut rows = Vec::new();
    for &e in eps {
        for &rectified in variants {
            let mut count = 0.0;
            let mut width = 0.0;
            let mut bits = 0.0;
            for (raw, rect) in &fields {
                let field = match rect {
                    Some(r) if rectified => r,
                    _ => raw,
                };
                let cset = calibration::detect_boundary(field, dims, e, grid)?;
                let block = calibration::encode_block(&cset);
                count += cset.len() as f64;
                width += f64::from(block.bit_width);
                bits += block.bits() as f64;
            }
            let nf = frames.max(1) as f64;
            rows.push(SweepRow {
                epsilon: e.get(),
                rectified,
                mean_count: count / nf,
                mean_bit_width: width / nf,
                bits_per_coord: if count > 0.0 { bits / count } else { 0.0 },
                absolute_bits: absolute_coord_bits(dims.len()),
            });
        }
    }
    Ok(rows)
}

pub const REPORT_CSV_HEADER: &str =
    "noise_bound,epsilon,cit,adversarial,trials,failures,failure_rate,mean_calibration_count,mean_calibration_bits,mean_payload_bits";

pub fn write_report_csv<W: Write>(mut w: W, exp: &Experiment, r: &DriftReport, header: bool) -> std::io::Result<()> {
    if header {
        writeln!(w, "{REPORT_CSV_HEADER}")?;
    }
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        exp.drift.index_noise_bound,
        exp.epsilon.map_or(0.0, Epsilon::get),
        exp.epsilon.is_some(),
        exp.drift.adversarial,
        r.trials,
        r.failures,
        r.failure_rate,
        r.mean_calibration_count,
        r.mean_calibration_bits,
        r.mean_payload_bits
    )
}

pub const SWEEP_CSV_HEADER: &str = "epsilon,rectified,mean_count,mean_bit_width,bits_per_coord,absolute_bits";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.epsilon, r.rectified, r.mean_count, r.mean_bit_width, r.bits_per_coord, r.absolute_bits
        )?;
    }
    Ok(())
}
