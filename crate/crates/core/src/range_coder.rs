//! 32-bit range coder over 16-bit cumulative frequencies.
//!
//! Byte-wise renormalization in the style of Schindler's coder: the encoder
//! keeps a 33-bit `low` and defers one byte (plus any run of `0xFF`) so a
//! carry can be folded in when it is emitted; the decoder never sees a
//! carry. All state transitions are integer-only.
//!
//! A stream is `5 + (renormalization shifts)` bytes long and the decoder
//! consumes exactly that many.

use crate::entropy_tables::{CdfTable, PRECISION_BITS};
use crate::error::{Error, Result};
use crate::sigma_grid::QuantIndex;

const TOP: u32 = 1 << 24;
const FLUSH_BYTES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bitstream {
    pub bytes: Vec<u8>,
}

impl Bitstream {
    pub fn bit_len(&self) -> u64 {
        self.bytes.len() as u64 * 8
    }
}

#[derive(Debug, Clone)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    /// Code the interval `[start, start + freq)` out of `2^16`.
    #[inline]
    pub fn encode(&mut self, start: u32, freq: u32) {
        debug_assert!(freq > 0 && start + freq <= 1 << PRECISION_BITS);
        let r = self.range >> PRECISION_BITS;
        self.low += u64::from(r) * u64::from(start);
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Code `nbits` (at most 16) raw bits with uniform probability.
    pub fn encode_bits(&mut self, value: u32, nbits: u32) {
        debug_assert!(nbits <= PRECISION_BITS && value < (1 << nbits));
        let shift = PRECISION_BITS - nbits;
        self.encode(value << shift, 1 << shift);
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low >= 1 << 32 {
            let carry = (self.low >> 32) as u8;
            let mut pending = self.cache;
            loop {
                self.out.push(pending.wrapping_add(carry));
                pending = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Bitstream {
        for _ in 0..FLUSH_BYTES {
            self.shift_low();
        }
        Bitstream { bytes: self.out }
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    data: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
    overrun: bool,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        if data.len() < FLUSH_BYTES {
            return Err(Error::Desync(format!(
                "stream of {} bytes is shorter than the {FLUSH_BYTES}-byte minimum",
                data.len()
            )));
        }
        let mut code = 0u32;
        for &b in &data[1..FLUSH_BYTES] {
            code = (code << 8) | u32::from(b);
        }
        Ok(Self {
            data,
            pos: FLUSH_BYTES,
            code,
            range: u32::MAX,
            overrun: false,
        })
    }

    /// Target frequency in `[0, 2^16)` for the next symbol. Must be
    /// followed by [`Self::consume`].
    #[inline]
    pub fn peek(&mut self) -> u32 {
        self.range >>= PRECISION_BITS;
        (self.code / self.range).min((1 << PRECISION_BITS) - 1)
    }

    #[inline]
    pub fn consume(&mut self, start: u32, freq: u32) {
        self.code = self.code.wrapping_sub(start * self.range);
        self.range *= freq;
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(self.next_byte());
        }
    }

    pub fn decode_bits(&mut self, nbits: u32) -> u32 {
        let shift = PRECISION_BITS - nbits;
        let value = self.peek() >> shift;
        self.consume(value << shift, 1 << shift);
        value
    }

    #[inline]
    fn next_byte(&mut self) -> u8 {
        match self.data.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                b
            }
            None => {
                self.overrun = true;
                0
            }
        }
    }

    /// Fails unless the stream was consumed exactly.
    pub fn finish(self) -> Result<()> {
        if self.overrun {
            return Err(Error::Desync("decoder ran past the end of the stream".into()));
        }
        if self.pos != self.data.len() {
            return Err(Error::Desync(format!(
                "{} trailing bytes left in the stream",
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Code a sequence of alphabet symbols, each at its own level.
pub fn encode_sequence(symbols: &[u16], levels: &[QuantIndex], tables: &CdfTable) -> Result<Bitstream> {
    if symbols.len() != levels.len() {
        return Err(Error::Config(format!(
            "{} symbols but {} levels",
            symbols.len(),
            levels.len()
        )));
    }
    let size = tables.alphabet().size();
    let mut enc = RangeEncoder::new();
    for (&s, &l) in symbols.iter().zip(levels) {
        if usize::from(s) >= size || l.0 >= tables.levels() {
            return Err(Error::Domain(format!("symbol {s} at level {} outside table", l.0)));
        }
        let (start, freq) = tables.interval(l, s);
        enc.encode(start, freq);
    }
    Ok(enc.finish())
}

pub fn decode_sequence(stream: &Bitstream, count: usize, levels: &[QuantIndex], tables: &CdfTable) -> Result<Vec<u16>> {
    if levels.len() != count {
        return Err(Error::Config(format!("{count} symbols but {} levels", levels.len())));
    }
    let mut dec = RangeDecoder::new(&stream.bytes)?;
    let mut out = Vec::with_capacity(count);
    for &l in levels {
        if l.0 >= tables.levels() {
            return Err(Error::Domain(format!("level {} outside table", l.0)));
        }
        let target = dec.peek();
        let s = tables.lookup(l, target);
        let (start, freq) = tables.interval(l, s);
        dec.consume(start, freq);
        out.push(s);
    }
    dec.finish()?;
    Ok(out)
}
