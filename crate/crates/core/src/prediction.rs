//! Skip detection in the pixel domain and the three feature-domain
//! prediction candidates.

use crate::bitio::{pack_bits, unpack_bits};
use crate::error::{Error, Result};
use crate::transform::{level_shift, FeatureTensor, FeatureTransform};
use crate::video_io::{Plane, SamplePlane};

/// Feature-domain prediction mode. Discriminants are the 2-bit wire codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Fp = 0,
    Ofc = 1,
    Fpg = 2,
}

impl Mode {
    /// Tie-break order.
    pub const ALL: [Mode; 3] = [Mode::Fp, Mode::Ofc, Mode::Fpg];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Fp => "FP",
            Mode::Ofc => "OFC",
            Mode::Fpg => "FPG",
        }
    }
}

/// One optional value per prediction mode.
#[derive(Clone, Debug, PartialEq)]
pub struct PerMode<T>(pub [Option<T>; 3]);

impl<T> Default for PerMode<T> {
    fn default() -> Self {
        Self([None, None, None])
    }
}

impl<T> PerMode<T> {
    pub fn get(&self, mode: Mode) -> Option<&T> {
        self.0[mode.index()].as_ref()
    }

    pub fn set(&mut self, mode: Mode, value: T) {
        self.0[mode.index()] = Some(value);
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        Mode::ALL.into_iter().filter(|m| self.get(*m).is_some())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, &T)> {
        Mode::ALL
            .into_iter()
            .filter_map(|m| self.get(m).map(|v| (m, v)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(Mode, &T) -> U) -> PerMode<U> {
        let mut out = PerMode::default();
        for (m, v) in self.iter() {
            out.set(m, f(m, v));
        }
        out
    }
}

/// Partition of a plane into square P×P blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGridSpec {
    pub block_px: usize,
    pub transform_size: usize,
}

impl BlockGridSpec {
    pub fn new(block_px: usize, transform_size: usize) -> Result<Self> {
        if transform_size == 0 || block_px == 0 || !block_px.is_multiple_of(transform_size) {
            return Err(Error::InvalidConfig(format!(
                "block size {block_px} is not a multiple of transform size {transform_size}"
            )));
        }
        Ok(Self {
            block_px,
            transform_size,
        })
    }

    /// Feature cells per block side.
    pub fn cells(&self) -> usize {
        self.block_px / self.transform_size
    }

    /// (rows, cols) of blocks for a plane.
    pub fn dims<T>(&self, plane: &Plane<T>) -> Result<(usize, usize)> {
        if !plane.width.is_multiple_of(self.block_px) || !plane.height.is_multiple_of(self.block_px)
        {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} plane not aligned to {}-pixel blocks",
                plane.width, plane.height, self.block_px
            )));
        }
        Ok((plane.height / self.block_px, plane.width / self.block_px))
    }
}

/// Per-block skip flags, row-major. `true` means the block is coded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SkipMask {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<bool>,
}

impl SkipMask {
    pub fn all_coded(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn coded(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn byte_len(&self) -> usize {
        self.bits.len().div_ceil(8)
    }

    /// Raw bit packing, MSB first, zero-padded to a byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        pack_bits(&self.bits)
    }

    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self> {
        Ok(Self {
            rows,
            cols,
            bits: unpack_bits(bytes, rows * cols)?,
        })
    }
}

/// Squared L2 distance between co-located blocks, one value per block.
pub fn block_difference(
    prev: &SamplePlane,
    cur: &SamplePlane,
    grid: BlockGridSpec,
) -> Result<Plane<f64>> {
    if !prev.same_dims(cur) {
        return Err(Error::DimensionMismatch(
            "skip planes differ in size".into(),
        ));
    }
    let (rows, cols) = grid.dims(cur)?;
    let p = grid.block_px;
    let mut out = Plane::new(cols, rows);
    for y in 0..cur.height {
        let (a, b) = (prev.row(y), cur.row(y));
        for bc in 0..cols {
            let acc: u64 = a[bc * p..(bc + 1) * p]
                .iter()
                .zip(&b[bc * p..(bc + 1) * p])
                .map(|(&u, &v)| {
                    let d = u as i64 - v as i64;
                    (d * d) as u64
                })
                .sum();
            let i = (y / p) * cols + bc;
            out.data[i] += acc as f64;
        }
    }
    Ok(out)
}

/// Thresholds block differences against `epsilon` per pixel.
///
/// A block is skipped when its difference is below `epsilon · block_pixels`;
/// with `epsilon = 0` only exactly unchanged blocks are skipped.
pub fn skip_mask(differences: &Plane<f64>, epsilon: f64, block_pixels: usize) -> SkipMask {
    let limit = epsilon * block_pixels as f64;
    SkipMask {
        rows: differences.height,
        cols: differences.width,
        bits: differences
            .data
            .iter()
            .map(|&n| !(n < limit || (epsilon == 0.0 && n == 0.0)))
            .collect(),
    }
}

/// Order-2 extrapolation: 2·f̂ₜ₋₁ − f̂ₜ₋₂.
pub fn predict_fp(prev: &FeatureTensor, prev2: &FeatureTensor) -> Result<FeatureTensor> {
    prev.zip_with(prev2, |a, b| 2.0 * a - b)
}

/// Features of the motion-extrapolated plane.
pub fn predict_ofc(
    warped: &SamplePlane,
    bit_depth: u8,
    transform: &dyn FeatureTransform,
) -> Result<FeatureTensor> {
    transform.analyze(&level_shift(warped, bit_depth))
}

/// Feature propagation: the previous reconstruction's features unchanged.
pub fn predict_fpg(prev: &FeatureTensor) -> FeatureTensor {
    prev.clone()
}

pub type ResidualSet = PerMode<FeatureTensor>;

/// `f_opt − prediction` for every available mode.
pub fn residual_set(
    f_opt: &FeatureTensor,
    predictions: &PerMode<FeatureTensor>,
) -> Result<ResidualSet> {
    let mut out = PerMode::default();
    for (m, p) in predictions.iter() {
        out.set(m, f_opt.sub(p)?);
    }
    Ok(out)
}
