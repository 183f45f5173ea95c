//! Sparse path: zero-run lengths and nonzero values in two separately
//! arithmetic-coded substreams.
//!
//! Indices are scanned channel-major. For every nonzero index the length
//! of the zero run before it is coded, followed by one terminating run for
//! the trailing zeros.
//!
//! The run stream opens with a 4-bit method, chosen per block by trying
//! each one and keeping the shortest:
//! - `0..=12`: Rice split with parameter `k`. `q = run >> k` goes through an
//!   adaptive model (symbols 0–15, symbol 16 meaning "16 more, continue"),
//!   then the `k` low bits raw.
//! - `13`: unary, one adaptive binary decision per zero.
//! - `14`: exp-Golomb on `run + 1`. The bucket is sent in unary with one
//!   adaptive context per position, the top mantissa bit with one context
//!   per bucket, the remaining mantissa bits raw.
//!
//! Values: magnitude symbol `|v| − 1` for |v| ≤ 15 and a raw sign bit.
//! Symbol 15 escapes to 15 raw bits of `|v| − 16` and a sign bit.
//!
//! Payload: `varint(len) runs ‖ values`. The value substream runs to the
//! end of the payload and is empty when the block has no nonzero index.
//! Both substreams end in a nonzero byte (the range coder drops trailing
//! zeros), so a payload has exactly one valid encoding.

use super::quant::QuantizedBlock;
use super::range_coder::{AdaptiveModel, RangeDecoder, RangeEncoder};
use crate::bitio::{write_varint, ByteReader};
use crate::error::{Error, Result};

const RUN_ESCAPE: usize = 16;
const RUN_SYMBOLS: usize = RUN_ESCAPE + 1;
const MAX_RICE: u32 = 12;
const METHOD_UNARY: u32 = 13;
const METHOD_EXP_GOLOMB: u32 = 14;
const EG_CONTEXTS: usize = 24;

const VALUE_DIRECT_MAX: u32 = 15;
const VALUE_ESCAPE: usize = VALUE_DIRECT_MAX as usize;
const VALUE_SYMBOLS: usize = VALUE_ESCAPE + 1;
const ESCAPE_BITS: u32 = 15;

/// Zero runs before each nonzero plus the trailing run, and the nonzero
/// values, for a flat index sequence.
pub fn run_lengths(flat: &[i32]) -> (Vec<usize>, Vec<i32>) {
    let mut runs = Vec::new();
    let mut values = Vec::new();
    let mut run = 0;
    for &v in flat {
        if v == 0 {
            run += 1;
        } else {
            runs.push(run);
            values.push(v);
            run = 0;
        }
    }
    runs.push(run);
    (runs, values)
}

fn encode_raw(enc: &mut RangeEncoder, value: usize, width: u32) {
    let mut left = width;
    while left > 0 {
        let n = left.min(16);
        left -= n;
        enc.encode_bits(((value >> left) & ((1 << n) - 1)) as u32, n);
    }
}

fn decode_raw(dec: &mut RangeDecoder, width: u32) -> Result<usize> {
    let mut v = 0usize;
    let mut left = width;
    while left > 0 {
        let n = left.min(16);
        left -= n;
        v = (v << n) | dec.decode_bits(n)? as usize;
    }
    Ok(v)
}

fn overrun() -> Error {
    Error::Corrupt("zero run overruns the block".into())
}

/// Adaptive state of one run substream.
enum RunCoder {
    Rice {
        k: u32,
        model: AdaptiveModel,
    },
    Unary(AdaptiveModel),
    ExpGolomb {
        bucket: Vec<AdaptiveModel>,
        top: Vec<AdaptiveModel>,
    },
}

impl RunCoder {
    fn new(method: u32) -> Result<Self> {
        Ok(match method {
            k @ 0..=MAX_RICE => Self::Rice {
                k,
                model: AdaptiveModel::new(RUN_SYMBOLS),
            },
            METHOD_UNARY => Self::Unary(AdaptiveModel::new(2)),
            METHOD_EXP_GOLOMB => Self::ExpGolomb {
                bucket: vec![AdaptiveModel::new(2); EG_CONTEXTS],
                top: vec![AdaptiveModel::new(2); EG_CONTEXTS],
            },
            m => return Err(Error::Corrupt(format!("run method {m} out of range"))),
        })
    }

    fn encode(&mut self, enc: &mut RangeEncoder, run: usize) {
        match self {
            Self::Rice { k, model } => {
                let mut q = run >> *k;
                while q >= RUN_ESCAPE {
                    enc.encode_symbol(model, RUN_ESCAPE);
                    q -= RUN_ESCAPE;
                }
                enc.encode_symbol(model, q);
                encode_raw(enc, run, *k);
            }
            Self::Unary(model) => {
                for _ in 0..run {
                    enc.encode_symbol(model, 1);
                }
                enc.encode_symbol(model, 0);
            }
            Self::ExpGolomb { bucket, top } => {
                let v = run + 1;
                let b = v.ilog2() as usize;
                for j in 0..b {
                    enc.encode_symbol(&mut bucket[j.min(EG_CONTEXTS - 1)], 1);
                }
                enc.encode_symbol(&mut bucket[b.min(EG_CONTEXTS - 1)], 0);
                if b > 0 {
                    enc.encode_symbol(&mut top[b.min(EG_CONTEXTS - 1)], (v >> (b - 1)) & 1);
                    encode_raw(enc, v, b as u32 - 1);
                }
            }
        }
    }

    /// Decodes one run no longer than `limit`.
    fn decode(&mut self, dec: &mut RangeDecoder, limit: usize) -> Result<usize> {
        match self {
            Self::Rice { k, model } => {
                let mut q = 0usize;
                loop {
                    let sym = dec.decode_symbol(model)?;
                    q += sym;
                    if q << *k > limit {
                        return Err(overrun());
                    }
                    if sym != RUN_ESCAPE {
                        break;
                    }
                }
                Ok((q << *k) + decode_raw(dec, *k)?)
            }
            Self::Unary(model) => {
                let mut run = 0;
                while dec.decode_symbol(model)? == 1 {
                    run += 1;
                    if run > limit {
                        return Err(overrun());
                    }
                }
                Ok(run)
            }
            Self::ExpGolomb { bucket, top } => {
                let mut b = 0usize;
                while dec.decode_symbol(&mut bucket[b.min(EG_CONTEXTS - 1)])? == 1 {
                    b += 1;
                    if b >= usize::BITS as usize - 1 || (1usize << b) - 1 > limit {
                        return Err(overrun());
                    }
                }
                let mut v = 1usize << b;
                if b > 0 {
                    v |= dec.decode_symbol(&mut top[b.min(EG_CONTEXTS - 1)])? << (b - 1);
                    v |= decode_raw(dec, b as u32 - 1)?;
                }
                Ok(v - 1)
            }
        }
    }
}

fn encode_runs(runs: &[usize], method: u32) -> Vec<u8> {
    let mut enc = RangeEncoder::new();
    enc.encode_bits(method, 4);
    let mut coder = RunCoder::new(method).expect("method in range");
    for &r in runs {
        coder.encode(&mut enc, r);
    }
    enc.finish()
}

/// Raw tail of an escaped value, shared with the dense path.
pub(super) fn encode_escape(enc: &mut RangeEncoder, v: i32) {
    enc.encode_bits(v.unsigned_abs() - (VALUE_DIRECT_MAX + 1), ESCAPE_BITS);
    enc.encode_bits(u32::from(v < 0), 1);
}

pub(super) fn decode_escape(dec: &mut RangeDecoder) -> Result<i32> {
    let mag = dec.decode_bits(ESCAPE_BITS)? as i32 + VALUE_DIRECT_MAX as i32 + 1;
    Ok(if dec.decode_bits(1)? == 1 { -mag } else { mag })
}

fn encode_value(enc: &mut RangeEncoder, model: &mut AdaptiveModel, v: i32) {
    let mag = v.unsigned_abs();
    if mag <= VALUE_DIRECT_MAX {
        enc.encode_symbol(model, mag as usize - 1);
        enc.encode_bits(u32::from(v < 0), 1);
    } else {
        enc.encode_symbol(model, VALUE_ESCAPE);
        encode_escape(enc, v);
    }
}

fn decode_value(dec: &mut RangeDecoder, model: &mut AdaptiveModel) -> Result<i32> {
    let sym = dec.decode_symbol(model)?;
    if sym == VALUE_ESCAPE {
        return decode_escape(dec);
    }
    let mag = sym as i32 + 1;
    Ok(if dec.decode_bits(1)? == 1 { -mag } else { mag })
}

pub fn encode_sparse(qb: &QuantizedBlock) -> Vec<u8> {
    let (runs, values) = run_lengths(&qb.channel_major());

    let run_bytes = (0..=METHOD_EXP_GOLOMB)
        .map(|m| encode_runs(&runs, m))
        .min_by_key(|b| b.len())
        .unwrap();

    let value_bytes = if values.is_empty() {
        Vec::new()
    } else {
        let mut enc = RangeEncoder::new();
        let mut model = AdaptiveModel::new(VALUE_SYMBOLS);
        for &v in &values {
            encode_value(&mut enc, &mut model, v);
        }
        enc.finish()
    };

    let mut out = Vec::with_capacity(run_bytes.len() + value_bytes.len() + 4);
    write_varint(&mut out, run_bytes.len() as u64);
    out.extend_from_slice(&run_bytes);
    out.extend_from_slice(&value_bytes);
    out
}

pub fn decode_sparse(
    payload: &[u8],
    grid_h: usize,
    grid_w: usize,
    channels: usize,
) -> Result<QuantizedBlock> {
    let total = grid_h * grid_w * channels;
    let mut r = ByteReader::new(payload);
    let run_bytes = r.prefixed()?;
    let value_bytes = r.bytes(r.remaining())?;
    if run_bytes.last() == Some(&0) || value_bytes.last() == Some(&0) {
        return Err(Error::Corrupt(
            "trailing zero byte in sparse payload".into(),
        ));
    }

    let mut positions = Vec::new();
    let mut dec = RangeDecoder::new(run_bytes)?;
    let mut coder = RunCoder::new(dec.decode_bits(4)?)?;
    let mut pos = 0usize;
    loop {
        pos += coder.decode(&mut dec, total - pos)?;
        if pos == total {
            break;
        }
        if pos > total {
            return Err(Error::Corrupt("zero runs overrun the block".into()));
        }
        positions.push(pos);
        pos += 1;
    }
    dec.finish()?;

    let mut flat = vec![0i32; total];
    if positions.is_empty() {
        if !value_bytes.is_empty() {
            return Err(Error::Corrupt("value stream for an all-zero block".into()));
        }
    } else {
        let mut dec = RangeDecoder::new(value_bytes)?;
        let mut model = AdaptiveModel::new(VALUE_SYMBOLS);
        for &p in &positions {
            flat[p] = decode_value(&mut dec, &mut model)?;
        }
        dec.finish()?;
    }
    Ok(QuantizedBlock::from_channel_major(
        grid_h, grid_w, channels, &flat,
    ))
}
