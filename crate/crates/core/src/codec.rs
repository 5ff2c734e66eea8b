//! Frame encode/decode and the `CPNC` container.
//!
//! Encoding pipeline for one latent frame:
//!
//! 1. continuous index `I` of every predicted scale
//! 2. calibration set of transboundary elements (if calibration is on)
//! 3. calibrated levels: round on the set, floor elsewhere
//! 4. skip mask from the calibrated levels
//! 5. residuals `round(y - mu)` of non-skipped elements, range coded at
//!    their levels; residuals beyond the alphabet go out as an escape
//!    symbol followed by a raw 16-bit sign+magnitude word
//!
//! The decoder repeats steps 1, 3 and 4 from its own parameters plus the
//! transmitted calibration set. A CRC-32 of the full residual field (zeros
//! at skipped positions) in the header turns any remaining desync into a
//! detected failure.
//!
//! Container layout, all integers big-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4  | magic `CPNC` |
//! | 1  | version |
//! | 12 | C, H, W (u32 each) |
//! | 4  | sigma_min, binary32 bits |
//! | 4  | sigma_max, binary32 bits |
//! | 1  | level count L |
//! | 4  | epsilon, binary32 bits (0 = no calibration) |
//! | 1  | smallest coded level |
//! | 4  | CDF table CRC-32 |
//! | 4  | payload byte count |
//! | 4  | residual field CRC-32 |
//! | .. | calibration block |
//! | .. | range-coded payload |

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{self, CalibrationBlock, CalibrationSet, Epsilon};
use crate::entropy_tables::{self, CdfTable, SymbolAlphabet, ESCAPE_RAW_BITS};
use crate::error::{Error, Result};
use crate::latent_source::LatentFrame;
use crate::range_coder::{RangeDecoder, RangeEncoder};
use crate::sigma_grid::{QuantIndex, SigmaGrid};
use crate::skip_policy::{self, SkipConfig};
use crate::{detmath, Dims};

pub const MAGIC: &[u8; 4] = b"CPNC";
pub const VERSION: u8 = 1;
pub const HEADER_BYTES: usize = 43;

/// Entropy parameters as one side of the link computed them: the predicted
/// means and the continuous scale index.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyParams {
    pub dims: Dims,
    pub mu: Vec<f64>,
    pub index: Vec<f64>,
}

impl EntropyParams {
    pub fn from_frame(frame: &LatentFrame, grid: &SigmaGrid) -> Result<Self> {
        frame.validate()?;
        let index = frame
            .sigma
            .par_iter()
            .map(|&s| grid.index_unchecked(f64::from(s)))
            .collect();
        Ok(Self {
            dims: frame.dims,
            mu: frame.mu.iter().map(|&m| f64::from(m)).collect(),
            index,
        })
    }

    fn check(&self) -> Result<()> {
        let n = self.dims.len();
        if self.mu.len() != n || self.index.len() != n {
            return Err(Error::Config(format!(
                "parameter fields do not match dims {}",
                self.dims
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameHeader {
    pub version: u8,
    pub dims: Dims,
    pub sigma_min: f32,
    pub sigma_max: f32,
    pub levels: u8,
    /// Zero when calibration is disabled.
    pub epsilon: f32,
    pub min_coded_level: u8,
    pub cdf_checksum: u32,
    pub payload_len: u32,
    pub latent_checksum: u32,
}

impl FrameHeader {
    fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(self.version);
        for d in [self.dims.c, self.dims.h, self.dims.w] {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.sigma_min.to_bits().to_be_bytes());
        out.extend_from_slice(&self.sigma_max.to_bits().to_be_bytes());
        out.push(self.levels);
        out.extend_from_slice(&self.epsilon.to_bits().to_be_bytes());
        out.push(self.min_coded_level);
        out.extend_from_slice(&self.cdf_checksum.to_be_bytes());
        out.extend_from_slice(&self.payload_len.to_be_bytes());
        out.extend_from_slice(&self.latent_checksum.to_be_bytes());
    }

    fn read_from(b: &[u8]) -> Result<Self> {
        if b.len() < HEADER_BYTES {
            return Err(Error::Malformed("truncated CPNC header".into()));
        }
        if &b[..4] != MAGIC {
            return Err(Error::Malformed("bad CPNC magic".into()));
        }
        if b[4] != VERSION {
            return Err(Error::Malformed(format!("unsupported CPNC version {}", b[4])));
        }
        let u = |o: usize| u32::from_be_bytes([b[o], b[o + 1], b[o + 2], b[o + 3]]);
        let dims = Dims::new(u(5), u(9), u(13)).map_err(|e| Error::Malformed(e.to_string()))?;
        let h = Self {
            version: b[4],
            dims,
            sigma_min: f32::from_bits(u(17)),
            sigma_max: f32::from_bits(u(21)),
            levels: b[25],
            epsilon: f32::from_bits(u(26)),
            min_coded_level: b[30],
            cdf_checksum: u(31),
            payload_len: u(35),
            latent_checksum: u(39),
        };
        if h.epsilon != 0.0 {
            Epsilon::new(h.epsilon).map_err(|e| Error::Malformed(e.to_string()))?;
        }
        if h.min_coded_level > h.levels {
            return Err(Error::Malformed(format!(
                "skip bound {} beyond {} levels",
                h.min_coded_level, h.levels
            )));
        }
        Ok(h)
    }

    pub fn grid(&self) -> Result<SigmaGrid> {
        SigmaGrid::new(self.sigma_min, self.sigma_max, self.levels).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn epsilon(&self) -> Option<Epsilon> {
        (self.epsilon != 0.0).then(|| Epsilon::new(self.epsilon).expect("validated on parse"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodedFrame {
    pub header: FrameHeader,
    pub calibration: CalibrationBlock,
    pub payload: Vec<u8>,
}

impl CodedFrame {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        self.header.write_to(&mut out);
        self.calibration.write_to(&mut out);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = FrameHeader::read_from(bytes)?;
        let (calibration, used) = CalibrationBlock::read_from(&bytes[HEADER_BYTES..])?;
        let start = HEADER_BYTES + used;
        let end = start as u64 + u64::from(header.payload_len);
        if bytes.len() as u64 != end {
            return Err(Error::Malformed(format!(
                "frame is {} bytes, header implies {end}",
                bytes.len()
            )));
        }
        Ok(Self {
            header,
            calibration,
            payload: bytes[start..].to_vec(),
        })
    }

    pub fn byte_len(&self) -> usize {
        HEADER_BYTES + self.calibration.byte_len() + self.payload.len()
    }

    pub fn header_bits(&self) -> u64 {
        HEADER_BYTES as u64 * 8
    }

    /// Calibration bits before byte padding: `40 + count * bit_width`.
    pub fn calibration_bits(&self) -> u64 {
        self.calibration.bits()
    }

    pub fn payload_bits(&self) -> u64 {
        self.payload.len() as u64 * 8
    }

    pub fn total_bits(&self) -> u64 {
        self.header_bits() + self.calibration_bits() + self.payload_bits()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodeStats {
    pub elements: usize,
    pub calibration_count: usize,
    pub calibration_bit_width: u8,
    pub calibration_bits: u64,
    pub payload_bits: u64,
    pub total_bits: u64,
    pub skipped: usize,
    pub skip_ratio: f64,
    pub escaped: usize,
    /// Ideal code length of the coded residuals under the tables.
    pub estimated_payload_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeStatus {
    Ok,
    ChecksumMismatch,
    Desync,
    Malformed,
}

impl DecodeStatus {
    pub fn is_ok(self) -> bool {
        self == Self::Ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Decoded integer residual field; skipped positions are 0. Empty when
    /// the status is `Malformed`.
    pub residuals: Vec<i32>,
    pub status: DecodeStatus,
}

impl DecodeResult {
    fn failed(status: DecodeStatus) -> Self {
        Self {
            residuals: Vec::new(),
            status,
        }
    }

    /// Latent reconstruction `residual + mu` with the decoder's means.
    pub fn reconstruct(&self, mu: &[f64]) -> Vec<f32> {
        self.residuals
            .iter()
            .zip(mu)
            .map(|(&r, &m)| (f64::from(r) + m) as f32)
            .collect()
    }
}

fn field_checksum(residuals: &[i32]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for r in residuals {
        h.update(&r.to_le_bytes());
    }
    h.finalize()
}

/// Calibrated levels from a parameter field and a calibration set.
pub fn calibrated_levels(index: &[f64], cset: &CalibrationSet, grid: &SigmaGrid) -> Result<Vec<QuantIndex>> {
    calibration::determinate_index(index, cset, grid)
}

/// Grid plus the tables built from it; shared by encoder and decoder.
#[derive(Debug, Clone)]
pub struct FrameCodec {
    grid: SigmaGrid,
    tables: CdfTable,
}

impl FrameCodec {
    pub fn new(grid: SigmaGrid, alphabet: SymbolAlphabet) -> Result<Self> {
        let tables = entropy_tables::build_tables(&grid, alphabet)?;
        Ok(Self { grid, tables })
    }

    pub fn from_parts(grid: SigmaGrid, tables: CdfTable) -> Result<Self> {
        if tables.levels() != grid.levels() {
            return Err(Error::Config(format!(
                "tables have {} levels, grid has {}",
                tables.levels(),
                grid.levels()
            )));
        }
        Ok(Self { grid, tables })
    }

    pub fn grid(&self) -> &SigmaGrid {
        &self.grid
    }

    pub fn tables(&self) -> &CdfTable {
        &self.tables
    }

    /// Encode latent `y` under the encoder's parameters. `eps = None`
    /// disables calibration.
    pub fn encode(
        &self,
        y: &[f32],
        params: &EntropyParams,
        eps: Option<Epsilon>,
        skip: SkipConfig,
    ) -> Result<(CodedFrame, EncodeStats)> {
        params.check()?;
        let dims = params.dims;
        if y.len() != dims.len() {
            return Err(Error::Config(format!("latent has {} elements, dims {dims}", y.len())));
        }
        if skip.min_coded_level() > self.grid.levels() {
            return Err(Error::Config("skip bound beyond level count".into()));
        }
        let cset = match eps {
            Some(e) => calibration::detect_boundary(&params.index, dims, e, &self.grid)?,
            None => CalibrationSet::empty(dims),
        };
        let levels = calibration::determinate_index(&params.index, &cset, &self.grid)?;
        let mask = skip_policy::skip_mask(&levels, skip);

        let mut field = Vec::with_capacity(dims.len());
        for (i, (&yv, &m)) in y.iter().zip(&params.mu).enumerate() {
            let r = detmath::round_half_away(f64::from(yv) - m);
            if r.abs() > f64::from(entropy_tables::MAX_ESCAPED_MAGNITUDE) {
                return Err(Error::Domain(format!(
                    "residual {r} at element {i} exceeds the escape range"
                )));
            }
            field.push(if mask[i] { 0 } else { r as i32 });
        }

        let alphabet = self.tables.alphabet();
        let mut enc = RangeEncoder::new();
        let mut escaped = 0;
        let mut coded_res = Vec::new();
        let mut coded_lev = Vec::new();
        for ((&r, &l), &m) in field.iter().zip(&levels).zip(&mask) {
            if m {
                continue;
            }
            coded_res.push(r);
            coded_lev.push(l);
            match alphabet.symbol_of(r) {
                Some(s) => {
                    let (start, freq) = self.tables.interval(l, s);
                    enc.encode(start, freq);
                }
                None => {
                    escaped += 1;
                    let (start, freq) = self.tables.interval(l, alphabet.escape());
                    enc.encode(start, freq);
                    enc.encode_bits(entropy_tables::escape_word(r).expect("range checked"), ESCAPE_RAW_BITS);
                }
            }
        }
        let payload = enc.finish().bytes;
        let block = calibration::encode_block(&cset);
        let header = FrameHeader {
            version: VERSION,
            dims,
            sigma_min: self.grid.sigma_min(),
            sigma_max: self.grid.sigma_max(),
            levels: self.grid.levels(),
            epsilon: eps.map_or(0.0, Epsilon::get),
            min_coded_level: skip.min_coded_level(),
            cdf_checksum: self.tables.checksum(),
            payload_len: payload.len() as u32,
            latent_checksum: field_checksum(&field),
        };
        let frame = CodedFrame {
            header,
            calibration: block,
            payload,
        };
        let skipped = mask.iter().filter(|&&m| m).count();
        let stats = EncodeStats {
            elements: dims.len(),
            calibration_count: cset.len(),
            calibration_bit_width: frame.calibration.bit_width,
            calibration_bits: frame.calibration_bits(),
            payload_bits: frame.payload_bits(),
            total_bits: frame.total_bits(),
            skipped,
            skip_ratio: skipped as f64 / dims.len() as f64,
            escaped,
            estimated_payload_bits: entropy_tables::estimate_rate(&coded_res, &coded_lev, &self.tables)?,
        };
        Ok((frame, stats))
    }

    /// Decode with the decoder's own, possibly drifted, parameters.
    ///
    /// Configuration problems (table or dims mismatch) are errors; anything
    /// wrong with the frame data is reported through the status.
    pub fn decode(&self, coded: &CodedFrame, params: &EntropyParams) -> Result<DecodeResult> {
        params.check()?;
        let h = &coded.header;
        if h.cdf_checksum != self.tables.checksum() {
            return Err(Error::Config(format!(
                "frame was coded with tables {:08x}, decoder has {:08x}",
                h.cdf_checksum,
                self.tables.checksum()
            )));
        }
        if h.sigma_min != self.grid.sigma_min()
            || h.sigma_max != self.grid.sigma_max()
            || h.levels != self.grid.levels()
        {
            return Err(Error::Config("frame grid differs from decoder grid".into()));
        }
        if h.dims != params.dims {
            return Err(Error::Config(format!(
                "frame dims {} but parameters {}",
                h.dims, params.dims
            )));
        }
        let cset = match calibration::decode_block(&coded.calibration, h.dims) {
            Ok(c) => c,
            Err(_) => return Ok(DecodeResult::failed(DecodeStatus::Malformed)),
        };
        if h.epsilon().is_none() && !cset.is_empty() {
            return Ok(DecodeResult::failed(DecodeStatus::Malformed));
        }
        let levels = calibration::determinate_index(&params.index, &cset, &self.grid)?;
        let skip = SkipConfig::from_level(h.min_coded_level, &self.grid)?;
        let mask = skip_policy::skip_mask(&levels, skip);

        let mut dec = match RangeDecoder::new(&coded.payload) {
            Ok(d) => d,
            Err(_) => return Ok(DecodeResult::failed(DecodeStatus::Desync)),
        };
        let alphabet = self.tables.alphabet();
        let mut decoded = Vec::with_capacity(mask.iter().filter(|&&m| !m).count());
        for (&l, &m) in levels.iter().zip(&mask) {
            if m {
                continue;
            }
            let s = self.tables.lookup(l, dec.peek());
            let (start, freq) = self.tables.interval(l, s);
            dec.consume(start, freq);
            let r = match alphabet.residual_of(s) {
                Some(r) => r,
                None => entropy_tables::unescape_word(dec.decode_bits(ESCAPE_RAW_BITS)),
            };
            decoded.push(r);
        }
        let desynced = dec.finish().is_err();
        let residuals = skip_policy::apply_skip_decode(&decoded, &mask)?;
        let status = if desynced {
            DecodeStatus::Desync
        } else if field_checksum(&residuals) != h.latent_checksum {
            DecodeStatus::ChecksumMismatch
        } else {
            DecodeStatus::Ok
        };
        Ok(DecodeResult { residuals, status })
    }
}

/// Encode a frame under its own parameters.
pub fn encode_frame(
    frame: &LatentFrame,
    codec: &FrameCodec,
    eps: Option<Epsilon>,
    skip: SkipConfig,
) -> Result<CodedFrame> {
    let params = EntropyParams::from_frame(frame, codec.grid())?;
    Ok(codec.encode(&frame.y, &params, eps, skip)?.0)
}

pub fn decode_frame(coded: &CodedFrame, decoder_params: &EntropyParams, codec: &FrameCodec) -> Result<DecodeResult> {
    codec.decode(coded, decoder_params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_source::{generate, Profile};

    fn codec() -> FrameCodec {
        FrameCodec::new(SigmaGrid::default(), SymbolAlphabet::default()).unwrap()
    }

    fn eps(e: f32) -> Option<Epsilon> {
        Some(Epsilon::new(e).unwrap())
    }

    #[test]
    fn roundtrip_without_drift() {
        let c = codec();
        let f = generate(1, Dims::new(8, 16, 16).unwrap(), &Profile::default()).unwrap();
        let p = EntropyParams::from_frame(&f, c.grid()).unwrap();
        let (coded, stats) = c.encode(&f.y, &p, eps(1e-4), SkipConfig::NONE).unwrap();
        let bytes = coded.to_bytes();
        assert_eq!(bytes.len(), coded.byte_len());
        let parsed = CodedFrame::from_bytes(&bytes).unwrap();
        assert_eq!(parsed, coded);
        let out = c.decode(&parsed, &p).unwrap();
        assert_eq!(out.status, DecodeStatus::Ok);
        let want: Vec<i32> = f.residuals().iter().map(|&r| r as i32).collect();
        assert_eq!(out.residuals, want);
        assert_eq!(stats.skipped, 0);
        assert!(stats.payload_bits as f64 >= stats.estimated_payload_bits);
    }

    #[test]
    fn constant_frame_is_cheap() {
        let c = codec();
        let d = Dims::new(4, 16, 16).unwrap();
        let n = d.len();
        let f = LatentFrame {
            dims: d,
            mu: vec![0.25; n],
            sigma: vec![0.8; n],
            y: vec![0.25; n],
        };
        let p = EntropyParams::from_frame(&f, c.grid()).unwrap();
        let (coded, stats) = c.encode(&f.y, &p, eps(1e-4), SkipConfig::NONE).unwrap();
        assert_eq!(stats.calibration_count, 0);
        // Level 15 puts ~52% of its mass on zero: about one bit per element.
        let est = stats.estimated_payload_bits;
        assert!((coded.payload_bits() as f64) < est * 1.01 + 64.0);
        assert_eq!(c.decode(&coded, &p).unwrap().status, DecodeStatus::Ok);
    }

    #[test]
    fn escapes_roundtrip() {
        let c = codec();
        let d = Dims::new(1, 1, 6).unwrap();
        let f = LatentFrame {
            dims: d,
            mu: vec![0.0; 6],
            sigma: vec![64.0; 6],
            y: vec![100.0, -100.0, 33.0, -33.0, 32767.0, 0.0],
        };
        let p = EntropyParams::from_frame(&f, c.grid()).unwrap();
        let (coded, stats) = c.encode(&f.y, &p, None, SkipConfig::NONE).unwrap();
        assert_eq!(stats.escaped, 5);
        let out = c.decode(&coded, &p).unwrap();
        assert_eq!(out.status, DecodeStatus::Ok);
        assert_eq!(out.residuals, vec![100, -100, 33, -33, 32767, 0]);

        let mut big = f.clone();
        big.y[0] = 40_000.0;
        let p = EntropyParams::from_frame(&big, c.grid()).unwrap();
        assert!(c.encode(&big.y, &p, None, SkipConfig::NONE).is_err());
    }

    #[test]
    fn deterministic_bytes() {
        let c = codec();
        let f = generate(2, Dims::new(4, 8, 8).unwrap(), &Profile::default()).unwrap();
        let a = encode_frame(&f, &c, eps(1e-3), SkipConfig::NONE).unwrap().to_bytes();
        let b = encode_frame(&f, &c, eps(1e-3), SkipConfig::NONE).unwrap().to_bytes();
        assert_eq!(a, b);
    }

    #[test]
    fn header_layout() {
        let c = codec();
        let f = generate(2, Dims::new(2, 3, 5).unwrap(), &Profile::default()).unwrap();
        let skip = SkipConfig::from_level(3, c.grid()).unwrap();
        let coded = encode_frame(&f, &c, eps(1e-4), skip).unwrap();
        let b = coded.to_bytes();
        assert_eq!(&b[..5], b"CPNC\x01");
        assert_eq!(&b[5..17], &[0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 5]);
        assert_eq!(&b[17..21], &0.01f32.to_bits().to_be_bytes());
        assert_eq!(&b[21..25], &64.0f32.to_bits().to_be_bytes());
        assert_eq!(b[25], 32);
        assert_eq!(&b[26..30], &1e-4f32.to_bits().to_be_bytes());
        assert_eq!(b[30], 3);
        assert_eq!(&b[31..35], &c.tables().checksum().to_be_bytes());
        assert_eq!(&b[35..39], &(coded.payload.len() as u32).to_be_bytes());
    }

    #[test]
    fn malformed_containers() {
        let c = codec();
        let f = generate(2, Dims::new(2, 4, 4).unwrap(), &Profile::default()).unwrap();
        let b = encode_frame(&f, &c, eps(1e-2), SkipConfig::NONE).unwrap().to_bytes();
        assert!(CodedFrame::from_bytes(&b[..b.len() - 1]).is_err());
        assert!(CodedFrame::from_bytes(&b[..20]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(CodedFrame::from_bytes(&bad).is_err());
        let mut bad_eps = b.clone();
        bad_eps[26..30].copy_from_slice(&0.5f32.to_bits().to_be_bytes());
        assert!(CodedFrame::from_bytes(&bad_eps).is_err());
        let mut extra = b.clone();
        extra.push(0);
        assert!(CodedFrame::from_bytes(&extra).is_err());
    }

    #[test]
    fn table_mismatch_refused() {
        let c = codec();
        let f = generate(2, Dims::new(2, 4, 4).unwrap(), &Profile::default()).unwrap();
        let mut coded = encode_frame(&f, &c, eps(1e-2), SkipConfig::NONE).unwrap();
        coded.header.cdf_checksum ^= 1;
        let p = EntropyParams::from_frame(&f, c.grid()).unwrap();
        assert!(matches!(c.decode(&coded, &p), Err(Error::Config(_))));
    }

    #[test]
    fn corrupted_payload_is_detected() {
        let c = codec();
        let f = generate(4, Dims::new(4, 16, 16).unwrap(), &Profile::default()).unwrap();
        let p = EntropyParams::from_frame(&f, c.grid()).unwrap();
        let (mut coded, _) = c.encode(&f.y, &p, eps(1e-4), SkipConfig::NONE).unwrap();
        let mid = coded.payload.len() / 2;
        coded.payload[mid] ^= 0x40;
        let st = c.decode(&coded, &p).unwrap().status;
        assert!(
            matches!(st, DecodeStatus::ChecksumMismatch | DecodeStatus::Desync),
            "{st:?}"
        );
    }

    #[test]
    fn skipped_positions_reconstruct_to_mean() {
        let c = codec();
        let f = generate(8, Dims::new(4, 16, 16).unwrap(), &Profile::default()).unwrap();
        let p = EntropyParams::from_frame(&f, c.grid()).unwrap();
        let skip = SkipConfig::from_level(c.grid().levels(), c.grid()).unwrap();
        let (coded, stats) = c.encode(&f.y, &p, eps(1e-4), skip).unwrap();
        assert_eq!(stats.skipped, f.dims.len());
        assert_eq!(coded.payload.len(), 5);
        let out = c.decode(&coded, &p).unwrap();
        assert_eq!(out.status, DecodeStatus::Ok);
        assert!(out.residuals.iter().all(|&r| r == 0));
        assert_eq!(out.reconstruct(&p.mu), f.mu);
    }
}
