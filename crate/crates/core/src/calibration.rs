//! Calibration side information.
//!
//! The encoder marks every element whose continuous index `I` lies within
//! `epsilon` of a quantization boundary: those are the elements a decoder
//! computing `I` with a slightly different floating-point path could floor
//! to a different level. Both ends then quantize marked elements by
//! rounding instead of flooring. Rounding is stable under a perturbation of
//! up to `epsilon` because a marked `I` sits within `epsilon` of an
//! integer, far from the half-integer where rounding flips.
//!
//! Marked coordinates are flattened (`x*H*W + y*W + z`), sorted, and sent
//! as first-differences packed at a single fixed bit width.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigma_grid::{ContinuousIndex, QuantIndex, SigmaGrid};
use crate::Dims;

/// Largest calibration precision accepted.
pub const MAX_EPSILON: f32 = 0.1;

/// Bits per coordinate for absolute (non-relative) coding, as used in the
/// fixed-width comparison mode.
pub const FIXED_COORD_BITS: u8 = 16;

/// Bytes of `count` and `bit_width` in front of the packed block.
pub const BLOCK_HEADER_BYTES: usize = 5;

/// Calibration precision, a binary32 value in `(0, 0.1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Epsilon(f32);

impl Epsilon {
    pub fn new(eps: f32) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 && eps <= MAX_EPSILON {
            Ok(Self(eps))
        } else {
            Err(Error::Config(format!(
                "epsilon must be in (0, {MAX_EPSILON}], got {eps}"
            )))
        }
    }

    pub fn get(self) -> f32 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibrationSet {
    coords: Vec<u32>,
    dims: Dims,
}

impl CalibrationSet {
    pub fn empty(dims: Dims) -> Self {
        Self {
            coords: Vec::new(),
            dims,
        }
    }

    /// Validates ordering and range.
    pub fn new(coords: Vec<u32>, dims: Dims) -> Result<Self> {
        if coords.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "calibration coordinates must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = coords.last() {
            if last as usize >= dims.len() {
                return Err(Error::Domain(format!(
                    "coordinate {last} outside a field of {} elements",
                    dims.len()
                )));
            }
        }
        Ok(Self { coords, dims })
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Membership mask over the flattened field.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.dims.len()];
        for &c in &self.coords {
            m[c as usize] = true;
        }
        m
    }
}

/// Whether an index could floor differently under a perturbation of up to
/// `eps`. Probes are clamped like the index itself, so saturation at 0
/// never marks an element.
#[inline]
pub fn is_transboundary(index: f64, eps: f64, max_level: f64) -> bool {
    let hi = (index + eps).clamp(0.0, max_level).floor();
    let lo = (index - eps).clamp(0.0, max_level).floor();
    hi != lo
}

/// Coordinates of every transboundary element of a clamped index field.
pub fn detect_boundary(index: &[f64], dims: Dims, eps: Epsilon, grid: &SigmaGrid) -> Result<CalibrationSet> {
    if index.len() != dims.len() {
        return Err(Error::Config(format!(
            "index field has {} elements, dims {dims} need {}",
            index.len(),
            dims.len()
        )));
    }
    let e = f64::from(eps.get());
    let max = f64::from(grid.max_level());
    let coords = index
        .iter()
        .enumerate()
        .filter(|(_, &i)| is_transboundary(i, e, max))
        .map(|(c, _)| c as u32)
        .collect();
    Ok(CalibrationSet { coords, dims })
}

/// Quantize the index field: round at calibrated coordinates, floor elsewhere.
pub fn determinate_index(index: &[f64], cset: &CalibrationSet, grid: &SigmaGrid) -> Result<Vec<QuantIndex>> {
    if index.len() != cset.dims.len() {
        return Err(Error::Config(format!(
            "index field has {} elements, calibration set expects {}",
            index.len(),
            cset.dims.len()
        )));
    }
    let max = grid.max_level();
    let mut out: Vec<QuantIndex> = index.iter().map(|&i| ContinuousIndex(i).floor()).collect();
    for &c in &cset.coords {
        let c = c as usize;
        out[c] = ContinuousIndex(index[c]).round(max);
    }
    Ok(out)
}

/// Relative-position-coded calibration block.
///
/// Wire layout: `count` (u32 BE), `bit_width` (u8), then `count` fields of
/// `bit_width` bits, MSB first, zero-padded to a byte boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibrationBlock {
    pub count: u32,
    pub bit_width: u8,
    pub packed: Vec<u8>,
}

/// Bits needed to represent `v`, at least 1.
pub fn bit_width_for(v: u32) -> u8 {
    (32 - v.leading_zeros()).max(1) as u8
}

/// First differences of sorted coordinates; the first element is absolute.
pub fn relative_positions(coords: &[u32]) -> Vec<u32> {
    let mut prev = 0;
    coords
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let d = if i == 0 { c } else { c - prev };
            prev = c;
            d
        })
        .collect()
}

pub fn encode_block(cset: &CalibrationSet) -> CalibrationBlock {
    let deltas = relative_positions(&cset.coords);
    let bit_width = bit_width_for(deltas.iter().copied().max().unwrap_or(0));
    pack(&deltas, bit_width)
}

/// Absolute coordinates at a fixed 16 bits each. Only meaningful for
/// fields of at most 65536 elements; larger coordinates are truncated by the
/// width, matching the fixed-cost accounting it exists for.
pub fn encode_block_fixed(cset: &CalibrationSet) -> CalibrationBlock {
    let vals: Vec<u32> = cset.coords.iter().map(|&c| c & 0xffff).collect();
    pack(&vals, FIXED_COORD_BITS)
}

fn pack(vals: &[u32], bit_width: u8) -> CalibrationBlock {
    let mut w = BitWriter::default();
    for &v in vals {
        w.put(v, bit_width);
    }
    CalibrationBlock {
        count: vals.len() as u32,
        bit_width,
        packed: w.finish(),
    }
}

pub fn decode_block(block: &CalibrationBlock, dims: Dims) -> Result<CalibrationSet> {
    if block.bit_width == 0 || block.bit_width > 32 {
        return Err(Error::Malformed(format!("bit width {} out of range", block.bit_width)));
    }
    let need = (block.count as u64 * u64::from(block.bit_width)).div_ceil(8);
    if block.packed.len() as u64 != need {
        return Err(Error::Malformed(format!(
            "calibration payload is {} bytes, expected {need}",
            block.packed.len()
        )));
    }
    let n = dims.len() as u64;
    let mut r = BitReader::new(&block.packed);
    let mut coords = Vec::with_capacity(block.count as usize);
    let mut pos = 0u64;
    for i in 0..block.count {
        let d = u64::from(r.get(block.bit_width));
        if i > 0 && d == 0 {
            return Err(Error::Malformed("repeated calibration coordinate".into()));
        }
        pos += d;
        if pos >= n {
            return Err(Error::Malformed(format!(
                "calibration coordinate {pos} beyond {n} elements"
            )));
        }
        coords.push(pos as u32);
    }
    Ok(CalibrationSet { coords, dims })
}

impl CalibrationBlock {
    /// Wire size in bits including the 40-bit count/width prefix, before
    /// byte padding.
    pub fn bits(&self) -> u64 {
        40 + u64::from(self.count) * u64::from(self.bit_width)
    }

    pub fn byte_len(&self) -> usize {
        BLOCK_HEADER_BYTES + self.packed.len()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.count.to_be_bytes());
        out.push(self.bit_width);
        out.extend_from_slice(&self.packed);
    }

    /// Parse a block from the front of `bytes`, returning it and the number
    /// of bytes read.
    pub fn read_from(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < BLOCK_HEADER_BYTES {
            return Err(Error::Malformed("truncated calibration block header".into()));
        }
        let count = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        let bit_width = bytes[4];
        if bit_width == 0 || bit_width > 32 {
            return Err(Error::Malformed(format!("bit width {bit_width} out of range")));
        }
        let len = (u64::from(count) * u64::from(bit_width)).div_ceil(8);
        let end = BLOCK_HEADER_BYTES as u64 + len;
        if (bytes.len() as u64) < end {
            return Err(Error::Malformed("truncated calibration block".into()));
        }
        let end = end as usize;
        Ok((
            Self {
                count,
                bit_width,
                packed: bytes[BLOCK_HEADER_BYTES..end].to_vec(),
            },
            end,
        ))
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    fn put(&mut self, v: u32, width: u8) {
        let width = u32::from(width);
        self.acc = (self.acc << width) | u64::from(v) & ((1u64 << width) - 1);
        self.nbits += width;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.bytes.push((self.acc >> self.nbits) as u8);
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.bytes.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            acc: 0,
            nbits: 0,
        }
    }

    // Callers check the payload length up front.
    fn get(&mut self, width: u8) -> u32 {
        let width = u32::from(width);
        while self.nbits < width {
            self.acc = (self.acc << 8) | u64::from(self.bytes[self.pos]);
            self.pos += 1;
            self.nbits += 8;
        }
        self.nbits -= width;
        let v = (self.acc >> self.nbits) & ((1u64 << width) - 1);
        self.acc &= (1u64 << self.nbits) - 1;
        v as u32
    }
}
