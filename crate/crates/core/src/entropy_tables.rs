//! Quantized discretized-Gaussian frequency tables, one per grid level.
//!
//! Level `k` models a zero-mean residual with scale `theta_k` convolved with
//! a unit uniform: residual `r` gets mass `Phi((r + 1/2)/theta) - Phi((r - 1/2)/theta)`.
//! Residuals outside `[-A, A]` share one escape symbol whose mass is the two
//! tails. Masses are scaled to a total of `2^16` by largest remainder with a
//! floor of one count per symbol.
//!
//! Both ends rebuild these tables from the grid, so construction only uses
//! [`crate::detmath`] and is bit-reproducible; a CRC-32 over the frequencies
//! travels in the frame header and is checked before decoding.

use std::io::{Read, Write};

use crate::detmath;
use crate::error::{Error, Result};
use crate::sigma_grid::{QuantIndex, SigmaGrid};

pub const PRECISION_BITS: u32 = 16;
pub const TOTAL_FREQ: u32 = 1 << PRECISION_BITS;

/// Width of the raw sign+magnitude word sent after an escape symbol.
pub const ESCAPE_RAW_BITS: u32 = 16;
/// Largest residual magnitude the escape path can carry.
pub const MAX_ESCAPED_MAGNITUDE: u32 = (1 << (ESCAPE_RAW_BITS - 1)) - 1;

const CDFT_MAGIC: &[u8; 4] = b"CDFT";
const CDFT_VERSION: u8 = 1;

/// Residual alphabet `[-A, A]` plus one escape slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolAlphabet {
    half_width: u16,
}

impl SymbolAlphabet {
    pub const DEFAULT_HALF_WIDTH: u16 = 32;

    pub fn new(half_width: u16) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::Config("alphabet half-width must be at least 1".into()));
        }
        let size = 2 * u32::from(half_width) + 2;
        if size > TOTAL_FREQ {
            return Err(Error::Config(format!(
                "alphabet of {size} symbols does not fit a 16-bit frequency total"
            )));
        }
        if u32::from(half_width) >= MAX_ESCAPED_MAGNITUDE {
            return Err(Error::Config(format!(
                "half-width {half_width} leaves nothing for the escape path"
            )));
        }
        Ok(Self { half_width })
    }

    pub fn half_width(&self) -> u16 {
        self.half_width
    }

    pub fn size(&self) -> usize {
        2 * usize::from(self.half_width) + 2
    }

    pub fn escape(&self) -> u16 {
        2 * self.half_width + 1
    }

    /// Symbol for a residual, or `None` if it needs the escape path.
    pub fn symbol_of(&self, residual: i32) -> Option<u16> {
        let a = i32::from(self.half_width);
        (-a..=a).contains(&residual).then(|| (residual + a) as u16)
    }

    /// Inverse of [`Self::symbol_of`]; `None` for the escape symbol.
    pub fn residual_of(&self, symbol: u16) -> Option<i32> {
        (symbol < self.escape()).then(|| i32::from(symbol) - i32::from(self.half_width))
    }
}

impl Default for SymbolAlphabet {
    fn default() -> Self {
        Self {
            half_width: Self::DEFAULT_HALF_WIDTH,
        }
    }
}

/// Pack an escaped residual into its 16-bit sign+magnitude word.
pub fn escape_word(residual: i32) -> Option<u32> {
    let mag = residual.unsigned_abs();
    (mag <= MAX_ESCAPED_MAGNITUDE).then(|| (u32::from(residual < 0) << 15) | mag)
}

pub fn unescape_word(word: u32) -> i32 {
    let mag = (word & 0x7fff) as i32;
    if word & 0x8000 != 0 {
        -mag
    } else {
        mag
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdfTable {
    alphabet: SymbolAlphabet,
    levels: u8,
    freqs: Vec<u16>,
    cdf: Vec<u32>,
    checksum: u32,
}

impl CdfTable {
    pub fn alphabet(&self) -> SymbolAlphabet {
        self.alphabet
    }

    pub fn levels(&self) -> u8 {
        self.levels
    }

    pub fn checksum(&self) -> u32 {
        self.checksum
    }

    pub fn freqs(&self, level: QuantIndex) -> &[u16] {
        let n = self.alphabet.size();
        let l = usize::from(level.0);
        &self.freqs[l * n..(l + 1) * n]
    }

    /// Cumulative frequencies of a level: `size + 1` entries from 0 to `2^16`.
    pub fn cdf(&self, level: QuantIndex) -> &[u32] {
        let n = self.alphabet.size() + 1;
        let l = usize::from(level.0);
        &self.cdf[l * n..(l + 1) * n]
    }

    pub fn freq(&self, level: QuantIndex, symbol: u16) -> u32 {
        u32::from(self.freqs(level)[usize::from(symbol)])
    }

    /// `(start, freq)` of a symbol.
    #[inline]
    pub fn interval(&self, level: QuantIndex, symbol: u16) -> (u32, u32) {
        let c = self.cdf(level);
        let s = usize::from(symbol);
        (c[s], c[s + 1] - c[s])
    }

    /// Symbol whose interval contains `target` (which must be below `2^16`).
    #[inline]
    pub fn lookup(&self, level: QuantIndex, target: u32) -> u16 {
        let c = self.cdf(level);
        (c.partition_point(|&x| x <= target) - 1) as u16
    }

    /// Serialize as a `CDFT` file: magic, version, level count, half-width
    /// (little-endian u16), CRC-32 (little-endian), then every level's
    /// frequencies as little-endian u16.
    pub fn write_cdft<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CDFT_MAGIC)?;
        w.write_all(&[CDFT_VERSION, self.levels])?;
        w.write_all(&self.alphabet.half_width.to_le_bytes())?;
        w.write_all(&self.checksum.to_le_bytes())?;
        for f in &self.freqs {
            w.write_all(&f.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_cdft<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)
            .map_err(|_| Error::Malformed("truncated CDFT header".into()))?;
        if &head[..4] != CDFT_MAGIC {
            return Err(Error::Malformed("bad CDFT magic".into()));
        }
        if head[4] != CDFT_VERSION {
            return Err(Error::Malformed(format!("unsupported CDFT version {}", head[4])));
        }
        let levels = head[5];
        let alphabet =
            SymbolAlphabet::new(u16::from_le_bytes([head[6], head[7]])).map_err(|e| Error::Malformed(e.to_string()))?;
        let stored = u32::from_le_bytes([head[8], head[9], head[10], head[11]]);
        let mut raw = vec![0u8; usize::from(levels) * alphabet.size() * 2];
        r.read_exact(&mut raw)
            .map_err(|_| Error::Malformed("truncated CDFT body".into()))?;
        let freqs: Vec<u16> = raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
        let table = Self::from_freqs(alphabet, levels, freqs)?;
        if table.checksum != stored {
            return Err(Error::Malformed("CDFT checksum mismatch".into()));
        }
        Ok(table)
    }

    fn from_freqs(alphabet: SymbolAlphabet, levels: u8, freqs: Vec<u16>) -> Result<Self> {
        let n = alphabet.size();
        let mut cdf = Vec::with_capacity(usize::from(levels) * (n + 1));
        for row in freqs.chunks_exact(n) {
            let mut acc = 0u32;
            cdf.push(0);
            for &f in row {
                if f == 0 {
                    return Err(Error::Malformed("zero frequency in table".into()));
                }
                acc += u32::from(f);
                cdf.push(acc);
            }
            if acc != TOTAL_FREQ {
                return Err(Error::Malformed(format!("level total {acc} != 2^16")));
            }
        }
        let checksum = table_checksum(levels, alphabet, &freqs);
        Ok(Self {
            alphabet,
            levels,
            freqs,
            cdf,
            checksum,
        })
    }
}

fn table_checksum(levels: u8, alphabet: SymbolAlphabet, freqs: &[u16]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(&[levels]);
    h.update(&alphabet.half_width.to_le_bytes());
    for f in freqs {
        h.update(&f.to_le_bytes());
    }
    h.finalize()
}

/// Unquantized probability of each symbol at scale `theta`, in symbol order.
pub fn symbol_masses(theta: f64, alphabet: SymbolAlphabet) -> Vec<f64> {
    let a = usize::from(alphabet.half_width);
    // One-sided masses for r = 0..=A, via upper tails to avoid cancellation.
    let mut side = Vec::with_capacity(a + 1);
    side.push(1.0 - 2.0 * detmath::normal_upper_tail(0.5 / theta));
    for r in 1..=a {
        let lo = detmath::normal_upper_tail((r as f64 - 0.5) / theta);
        let hi = detmath::normal_upper_tail((r as f64 + 0.5) / theta);
        side.push((lo - hi).max(0.0));
    }
    let tail = 2.0 * detmath::normal_upper_tail((a as f64 + 0.5) / theta);
    let mut masses = Vec::with_capacity(alphabet.size());
    masses.extend(side[1..].iter().rev());
    masses.extend(side.iter());
    masses.push(tail);
    masses
}

/// Scale masses to integer counts summing to `2^16`, each at least 1.
///
/// Leftover counts go to the largest remainders. Residuals `r` and `-r` are
/// awarded together so the table stays symmetric; ties break by position.
fn quantize_masses(masses: &[f64], alphabet: SymbolAlphabet) -> Vec<u16> {
    let n = masses.len();
    let a = usize::from(alphabet.half_width);
    let mut total = 0.0;
    for &m in masses {
        total += m;
    }
    let spare = TOTAL_FREQ - n as u32;
    let spare_f = f64::from(spare);
    let mut counts = vec![1u32; n];
    let mut rems = vec![0.0f64; n];
    let mut used = 0u32;
    for (i, &m) in masses.iter().enumerate() {
        let share = m / total * spare_f;
        let base = share.floor();
        counts[i] += base as u32;
        used += base as u32;
        rems[i] = share - base;
    }
    let mut leftover = spare - used;

    // Units: residual 0, the pairs (r, -r) for r = 1..=A, then escape.
    let mut units: Vec<(f64, usize)> = Vec::with_capacity(a + 2);
    units.push((rems[a], 0));
    for r in 1..=a {
        units.push((rems[a + r], r));
    }
    units.push((rems[n - 1], a + 1));
    units.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    for &(_, u) in &units {
        let cost = if u == 0 || u == a + 1 { 1 } else { 2 };
        if leftover < cost {
            continue;
        }
        leftover -= cost;
        match u {
            0 => counts[a] += 1,
            u if u == a + 1 => counts[n - 1] += 1,
            r => {
                counts[a + r] += 1;
                counts[a - r] += 1;
            }
        }
    }
    // An odd count left over after every pair declined goes to residual 0.
    counts[a] += leftover;
    counts.into_iter().map(|c| c as u16).collect()
}

/// Build the frequency table of every grid level.
pub fn build_tables(grid: &SigmaGrid, alphabet: SymbolAlphabet) -> Result<CdfTable> {
    let mut freqs = Vec::with_capacity(usize::from(grid.levels()) * alphabet.size());
    for &theta in grid.lut() {
        freqs.extend(quantize_masses(&symbol_masses(theta, alphabet), alphabet));
    }
    CdfTable::from_freqs(alphabet, grid.levels(), freqs)
}

/// Ideal code length in bits of `residuals` coded at `levels`:
/// `-sum log2(freq / 2^16)`, plus the raw word for escaped residuals.
pub fn estimate_rate(residuals: &[i32], levels: &[QuantIndex], tables: &CdfTable) -> Result<f64> {
    if residuals.len() != levels.len() {
        return Err(Error::Config(format!(
            "{} residuals but {} levels",
            residuals.len(),
            levels.len()
        )));
    }
    let alphabet = tables.alphabet();
    let mut bits = 0.0;
    for (&r, &level) in residuals.iter().zip(levels) {
        if level.0 >= tables.levels() {
            return Err(Error::Domain(format!("level {} outside table", level.0)));
        }
        let sym = match alphabet.symbol_of(r) {
            Some(s) => s,
            None => {
                if escape_word(r).is_none() {
                    return Err(Error::Domain(format!("residual {r} cannot be escaped")));
                }
                bits += f64::from(ESCAPE_RAW_BITS);
                alphabet.escape()
            }
        };
        let p = f64::from(tables.freq(level, sym)) / f64::from(TOTAL_FREQ);
        bits -= p.log2();
    }
    Ok(bits)
}

/// Rate of a whole field, skipping masked elements.
pub fn estimate_field_rate(residuals: &[i32], levels: &[QuantIndex], skip: &[bool], tables: &CdfTable) -> Result<f64> {
    let (r, l): (Vec<i32>, Vec<QuantIndex>) = residuals
        .iter()
        .zip(levels)
        .zip(skip)
        .filter(|(_, &s)| !s)
        .map(|((&r, &l), _)| (r, l))
        .unzip();
    estimate_rate(&r, &l, tables)
}
