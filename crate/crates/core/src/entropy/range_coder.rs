//! 32-bit range coder with carry propagation and adaptive frequency models.
//!
//! The encoder follows the classic carry-less-by-caching layout: `low` is
//! kept in 64 bits, the top byte is held back in `cache` until a carry can
//! no longer reach it. The very first emitted byte is always zero and is
//! dropped; the decoder accounts for that.

use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;

/// Model totals stay at or below this bound.
pub const MAX_TOTAL: u32 = 1 << 16;
pub const INCREMENT: u32 = 32;

#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    first: bool,
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
            first: true,
            out: Vec::new(),
        }
    }

    fn emit(&mut self, byte: u8) {
        if self.first {
            self.first = false;
        } else {
            self.out.push(byte);
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xff00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.emit(temp.wrapping_add(carry));
                temp = 0xff;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00ff_ffff) << 8;
    }

    /// Encodes the interval [cum, cum + freq) out of `total`.
    pub fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && cum + freq <= total && total <= MAX_TOTAL);
        let r = self.range / total;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Encodes `value` as `width` equiprobable bits (`width` ≤ 16).
    pub fn encode_bits(&mut self, value: u32, width: u32) {
        debug_assert!(width <= 16 && value < (1 << width));
        self.encode(value, 1, 1 << width);
    }

    pub fn encode_symbol(&mut self, model: &mut AdaptiveModel, symbol: usize) {
        let (cum, freq) = model.interval(symbol);
        self.encode(cum, freq, model.total());
        model.update(symbol);
    }

    /// Flushes the coder. The final value is the point of the last
    /// interval with the most trailing zero bits, and trailing zero bytes
    /// are dropped; the decoder reads past the end as zeros.
    pub fn finish(mut self) -> Vec<u8> {
        let hi = self.low + self.range as u64 - 1;
        for k in (0..=40).rev() {
            let v = (hi >> k) << k;
            if v >= self.low {
                self.low = v;
                break;
            }
        }
        for _ in 0..5 {
            self.shift_low();
        }
        while self.out.last() == Some(&0) {
            self.out.pop();
        }
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    buf: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
    scale: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Result<Self> {
        let mut d = Self {
            buf,
            pos: 0,
            code: 0,
            range: u32::MAX,
            scale: 0,
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte()? as u32;
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = self.buf.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        Ok(b)
    }

    /// Returns the cumulative frequency the next symbol falls on.
    pub fn decode_freq(&mut self, total: u32) -> Result<u32> {
        self.scale = self.range / total;
        let v = self.code / self.scale;
        if v >= total {
            return Err(Error::Corrupt(
                "range decoder left the coding interval".into(),
            ));
        }
        Ok(v)
    }

    pub fn consume(&mut self, cum: u32, freq: u32) -> Result<()> {
        self.code -= self.scale * cum;
        self.range = self.scale * freq;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte()? as u32;
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn decode_bits(&mut self, width: u32) -> Result<u32> {
        let v = self.decode_freq(1 << width)?;
        self.consume(v, 1)?;
        Ok(v)
    }

    pub fn decode_symbol(&mut self, model: &mut AdaptiveModel) -> Result<usize> {
        let target = self.decode_freq(model.total())?;
        let (sym, cum, freq) = model.find(target);
        self.consume(cum, freq)?;
        model.update(sym);
        Ok(sym)
    }

    /// Fails if payload bytes remain unread.
    pub fn finish(self) -> Result<()> {
        if self.pos >= self.buf.len() {
            Ok(())
        } else {
            Err(Error::Corrupt(format!(
                "{} trailing bytes after range-coded data",
                self.buf.len() - self.pos
            )))
        }
    }
}

/// Frequency table starting at 1 per symbol; each coded symbol adds
/// [`INCREMENT`], and all counts are halved once the total passes
/// [`MAX_TOTAL`].
#[derive(Clone, Debug)]
pub struct AdaptiveModel {
    freq: Vec<u32>,
    total: u32,
}

impl AdaptiveModel {
    pub fn new(symbols: usize) -> Self {
        assert!(symbols >= 1 && symbols as u32 <= MAX_TOTAL / 2);
        Self {
            freq: vec![1; symbols],
            total: symbols as u32,
        }
    }

    pub fn symbols(&self) -> usize {
        self.freq.len()
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    fn interval(&self, symbol: usize) -> (u32, u32) {
        let cum = self.freq[..symbol].iter().sum();
        (cum, self.freq[symbol])
    }

    fn find(&self, target: u32) -> (usize, u32, u32) {
        let mut cum = 0;
        for (s, &f) in self.freq.iter().enumerate() {
            if target < cum + f {
                return (s, cum, f);
            }
            cum += f;
        }
        unreachable!("target below total by construction")
    }

    fn update(&mut self, symbol: usize) {
        self.freq[symbol] += INCREMENT;
        self.total += INCREMENT;
        if self.total > MAX_TOTAL {
            self.total = 0;
            for f in &mut self.freq {
                *f = (*f).div_ceil(2);
                self.total += *f;
            }
        }
    }
}
