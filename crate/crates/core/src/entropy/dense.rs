//! Dense path: every index arithmetic-coded, channel-major, one adaptive
//! model per group of [`CHANNEL_GROUP`] channels. Symbols 0–30 carry
//! v ∈ [−15, 15]; symbol 31 escapes to 15 raw magnitude bits plus sign.

use super::quant::QuantizedBlock;
use super::range_coder::{AdaptiveModel, RangeDecoder, RangeEncoder};
use super::sparse::{decode_escape, encode_escape};
use crate::error::Result;

pub const CHANNEL_GROUP: usize = 8;

const DIRECT_MAX: i32 = 15;
const ESCAPE: usize = (2 * DIRECT_MAX + 1) as usize;
const SYMBOLS: usize = ESCAPE + 1;

fn models(channels: usize) -> Vec<AdaptiveModel> {
    (0..channels.div_ceil(CHANNEL_GROUP))
        .map(|_| AdaptiveModel::new(SYMBOLS))
        .collect()
}

pub fn encode_dense(qb: &QuantizedBlock) -> Vec<u8> {
    if qb.is_empty() {
        return Vec::new();
    }
    let mut models = models(qb.channels);
    let mut enc = RangeEncoder::new();
    let cells = qb.cells();
    for (i, v) in qb.channel_major().into_iter().enumerate() {
        let model = &mut models[(i / cells) / CHANNEL_GROUP];
        if v.abs() <= DIRECT_MAX {
            enc.encode_symbol(model, (v + DIRECT_MAX) as usize);
        } else {
            enc.encode_symbol(model, ESCAPE);
            encode_escape(&mut enc, v);
        }
    }
    enc.finish()
}

pub fn decode_dense(
    payload: &[u8],
    grid_h: usize,
    grid_w: usize,
    channels: usize,
) -> Result<QuantizedBlock> {
    let total = grid_h * grid_w * channels;
    if total == 0 {
        if !payload.is_empty() {
            return Err(crate::error::Error::Corrupt(
                "payload for an empty block".into(),
            ));
        }
        return Ok(QuantizedBlock::zeros(grid_h, grid_w, channels));
    }
    let cells = grid_h * grid_w;
    let mut models = models(channels);
    let mut dec = RangeDecoder::new(payload)?;
    let mut flat = Vec::with_capacity(total);
    for i in 0..total {
        let model = &mut models[(i / cells) / CHANNEL_GROUP];
        let sym = dec.decode_symbol(model)?;
        flat.push(if sym == ESCAPE {
            decode_escape(&mut dec)?
        } else {
            sym as i32 - DIRECT_MAX
        });
    }
    dec.finish()?;
    Ok(QuantizedBlock::from_channel_major(
        grid_h, grid_w, channels, &flat,
    ))
}
