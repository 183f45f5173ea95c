//! Scalar quantization of residual coefficients.

use crate::error::{Error, Result};
use crate::transform::FeatureTensor;

/// Largest index magnitude the entropy coders can represent.
pub const MAX_INDEX_BOUND: u32 = 32767;

#[derive(Clone, Debug, PartialEq)]
pub enum QuantizerKind {
    Uniform {
        step: f64,
    },
    /// Strictly increasing codebook containing exactly one 0.0 entry at
    /// position `zero`; indices are offsets from that entry.
    LloydMax {
        codebook: Vec<f64>,
        zero: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizerSpec {
    pub kind: QuantizerKind,
    pub index_bound: u32,
}

impl QuantizerSpec {
    pub fn uniform(step: f64) -> Result<Self> {
        Self::uniform_bounded(step, 255)
    }

    pub fn uniform_bounded(step: f64, index_bound: u32) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!("quantizer step {step}")));
        }
        if index_bound == 0 || index_bound > MAX_INDEX_BOUND {
            return Err(Error::InvalidConfig(format!("index bound {index_bound}")));
        }
        Ok(Self {
            kind: QuantizerKind::Uniform { step },
            index_bound,
        })
    }

    pub fn lloyd_max(codebook: Vec<f64>) -> Result<Self> {
        if codebook.windows(2).any(|w| !(w[0] < w[1])) || codebook.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "codebook must be strictly increasing".into(),
            ));
        }
        let zero = codebook
            .iter()
            .position(|&v| v == 0.0)
            .ok_or_else(|| Error::InvalidConfig("codebook lacks a zero codeword".into()))?;
        let index_bound = zero.max(codebook.len() - 1 - zero) as u32;
        if index_bound > MAX_INDEX_BOUND {
            return Err(Error::InvalidConfig("codebook too large".into()));
        }
        Ok(Self {
            kind: QuantizerKind::LloydMax { codebook, zero },
            index_bound,
        })
    }

    pub fn quantize_value(&self, v: f64) -> i32 {
        let bound = self.index_bound as i32;
        match &self.kind {
            QuantizerKind::Uniform { step } => {
                // f64::round rounds half away from zero
                let q = (v / step).round();
                q.clamp(-(bound as f64), bound as f64) as i32
            }
            QuantizerKind::LloydMax { codebook, zero } => {
                let i = codebook.partition_point(|&c| c < v);
                let best = if i == 0 {
                    0
                } else if i == codebook.len() {
                    i - 1
                } else {
                    let (lo, hi) = (codebook[i - 1], codebook[i]);
                    let (dl, dh) = (v - lo, hi - v);
                    // on a tie prefer the codeword nearer the zero entry
                    if dl < dh || (dl == dh && (i - 1).abs_diff(*zero) < i.abs_diff(*zero)) {
                        i - 1
                    } else {
                        i
                    }
                };
                best as i32 - *zero as i32
            }
        }
    }

    pub fn dequantize_value(&self, index: i32) -> Result<f64> {
        match &self.kind {
            QuantizerKind::Uniform { step } => Ok(index as f64 * step),
            QuantizerKind::LloydMax { codebook, zero } => {
                let pos = *zero as i64 + index as i64;
                if pos < 0 || pos >= codebook.len() as i64 {
                    return Err(Error::IndexOutOfRange {
                        index,
                        len: codebook.len(),
                    });
                }
                Ok(codebook[pos as usize])
            }
        }
    }
}

/// Integer residual indices with the geometry of a feature block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedBlock {
    pub grid_h: usize,
    pub grid_w: usize,
    pub channels: usize,
    /// Cell-major, like [`FeatureTensor::data`].
    pub indices: Vec<i32>,
}

impl QuantizedBlock {
    pub fn zeros(grid_h: usize, grid_w: usize, channels: usize) -> Self {
        Self {
            grid_h,
            grid_w,
            channels,
            indices: vec![0; grid_h * grid_w * channels],
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nonzero_count(&self) -> usize {
        self.indices.iter().filter(|&&v| v != 0).count()
    }

    /// Fraction of nonzero indices; 0 for an empty block.
    pub fn density(&self) -> f64 {
        if self.indices.is_empty() {
            0.0
        } else {
            self.nonzero_count() as f64 / self.indices.len() as f64
        }
    }

    pub fn cells(&self) -> usize {
        self.grid_h * self.grid_w
    }

    /// Indices in channel-major raster order.
    pub fn channel_major(&self) -> Vec<i32> {
        let mut out = Vec::with_capacity(self.indices.len());
        for c in 0..self.channels {
            out.extend(self.indices.iter().skip(c).step_by(self.channels.max(1)));
        }
        out
    }

    pub fn from_channel_major(grid_h: usize, grid_w: usize, channels: usize, flat: &[i32]) -> Self {
        let cells = grid_h * grid_w;
        let mut qb = Self::zeros(grid_h, grid_w, channels);
        for c in 0..channels {
            for cell in 0..cells {
                qb.indices[cell * channels + c] = flat[c * cells + cell];
            }
        }
        qb
    }

    pub fn zero_channel(&mut self, c: usize) {
        let ch = self.channels;
        for v in self.indices.iter_mut().skip(c).step_by(ch) {
            *v = 0;
        }
    }
}

pub fn quantize(block: &FeatureTensor, q: &QuantizerSpec) -> QuantizedBlock {
    QuantizedBlock {
        grid_h: block.grid_h,
        grid_w: block.grid_w,
        channels: block.channels,
        indices: block.data.iter().map(|&v| q.quantize_value(v)).collect(),
    }
}

pub fn dequantize(qb: &QuantizedBlock, q: &QuantizerSpec) -> Result<FeatureTensor> {
    Ok(FeatureTensor {
        grid_h: qb.grid_h,
        grid_w: qb.grid_w,
        channels: qb.channels,
        data: qb
            .indices
            .iter()
            .map(|&i| q.dequantize_value(i))
            .collect::<Result<_>>()?,
    })
}

/// Lloyd iteration (1-D k-means) for a `levels`-entry codebook.
///
/// Starts from an even spread over the sample range with the entry nearest
/// zero pinned to exactly 0.0, which stays fixed. Stops after `max_iter`
/// rounds or when no codeword moves by more than `tol` relative to the
/// codebook's magnitude.
pub fn train_lloyd_max(
    samples: &[f64],
    levels: usize,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::InvalidConfig(
            "Lloyd-Max needs at least 2 levels".into(),
        ));
    }
    if samples.is_empty() {
        return Err(Error::InvalidConfig("no training samples".into()));
    }
    let lo = samples
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let hi = samples
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    if lo == hi {
        return Err(Error::InvalidConfig("degenerate training samples".into()));
    }
    let mut book: Vec<f64> = (0..levels)
        .map(|i| lo + (hi - lo) * i as f64 / (levels - 1) as f64)
        .collect();
    let zero = book
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    book[zero] = 0.0;
    if book.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidConfig(
            "too many levels for the sample range".into(),
        ));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    for _ in 0..max_iter {
        let mut sums = vec![0.0; levels];
        let mut counts = vec![0usize; levels];
        let mut k = 0;
        for &v in &sorted {
            while k + 1 < levels && v > 0.5 * (book[k] + book[k + 1]) {
                k += 1;
            }
            sums[k] += v;
            counts[k] += 1;
        }
        let scale = book.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut moved = 0.0f64;
        for i in 0..levels {
            if i == zero || counts[i] == 0 {
                continue;
            }
            let c = sums[i] / counts[i] as f64;
            moved = moved.max((c - book[i]).abs());
            book[i] = c;
        }
        if moved <= tol * scale {
            break;
        }
    }
    Ok(book)
}
