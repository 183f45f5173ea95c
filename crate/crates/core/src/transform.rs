//! Pixel ⇄ feature mapping.
//!
//! The feature space is a grid of cells, one per B×B pixel tile, each holding
//! B² channels. The shipped backend is an orthonormal 2-D DCT-II with
//! channels in zig-zag order (channel 0 = DC). Other backends plug in
//! through [`FeatureTransform`].

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::video_io::{Plane, SamplePlane};

pub type RealPlane = Plane<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Dct2Orthonormal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub block_size: usize,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            kind: TransformKind::Dct2Orthonormal,
            block_size: 8,
        }
    }
}

impl TransformSpec {
    pub fn dct(block_size: usize) -> Result<Self> {
        let spec = Self {
            kind: TransformKind::Dct2Orthonormal,
            block_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.block_size {
            4 | 8 | 16 => Ok(()),
            b => Err(Error::InvalidConfig(format!(
                "transform size {b} not in {{4, 8, 16}}"
            ))),
        }
    }

    pub fn channels(&self) -> usize {
        self.block_size * self.block_size
    }

    /// Stream header form: kind byte, size byte.
    pub fn to_bytes(&self) -> [u8; 2] {
        let kind = match self.kind {
            TransformKind::Dct2Orthonormal => 0,
        };
        [kind, self.block_size as u8]
    }

    pub fn from_bytes(b: [u8; 2]) -> Result<Self> {
        let kind = match b[0] {
            0 => TransformKind::Dct2Orthonormal,
            k => return Err(Error::Corrupt(format!("unknown transform kind {k}"))),
        };
        let spec = Self {
            kind,
            block_size: b[1] as usize,
        };
        spec.validate().map_err(|e| Error::Corrupt(e.to_string()))?;
        Ok(spec)
    }
}

/// Grid of feature cells, `channels` reals per cell, cell-major layout.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    pub grid_h: usize,
    pub grid_w: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(grid_h: usize, grid_w: usize, channels: usize) -> Self {
        Self {
            grid_h,
            grid_w,
            channels,
            data: vec![0.0; grid_h * grid_w * channels],
        }
    }

    pub fn cells(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.grid_h == other.grid_h
            && self.grid_w == other.grid_w
            && self.channels == other.channels
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "feature tensors {}x{}x{} vs {}x{}x{}",
                self.grid_h, self.grid_w, self.channels, other.grid_h, other.grid_w, other.channels
            )))
        }
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.grid_w + col) * self.channels;
        &self.data[start..start + self.channels]
    }

    #[inline]
    pub fn cell_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let start = (row * self.grid_w + col) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_shape(other)?;
        Ok(Self {
            grid_h: self.grid_h,
            grid_w: self.grid_w,
            channels: self.channels,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// The `cells`×`cells` sub-grid whose top-left cell is (`row`·cells, `col`·cells).
    pub fn block(&self, row: usize, col: usize, cells: usize) -> Self {
        let mut out = Self::zeros(cells, cells, self.channels);
        for r in 0..cells {
            let src_row = row * cells + r;
            let start = (src_row * self.grid_w + col * cells) * self.channels;
            let len = cells * self.channels;
            out.data[r * len..(r + 1) * len].copy_from_slice(&self.data[start..start + len]);
        }
        out
    }

    pub fn put_block(&mut self, row: usize, col: usize, block: &Self) {
        let cells = block.grid_w;
        for r in 0..block.grid_h {
            let dst_row = row * block.grid_h + r;
            let start = (dst_row * self.grid_w + col * cells) * self.channels;
            let len = cells * self.channels;
            self.data[start..start + len].copy_from_slice(&block.data[r * len..(r + 1) * len]);
        }
    }

    /// Values of one channel across all cells, raster order.
    pub fn channel(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().skip(c).step_by(self.channels).copied()
    }
}

/// Maps a pixel plane to features and back.
pub trait FeatureTransform: Sync {
    fn spec(&self) -> TransformSpec;

    fn analyze(&self, plane: &RealPlane) -> Result<FeatureTensor>;

    fn synthesize(&self, features: &FeatureTensor) -> Result<RealPlane>;

    /// Refinement hook for backends whose one-shot analysis is not the
    /// reconstruction-MSE minimizer. Identity by default.
    fn refine(&self, _plane: &RealPlane, initial: FeatureTensor) -> Result<FeatureTensor> {
        Ok(initial)
    }

    /// Features minimizing reconstruction MSE against `plane`.
    fn optimal_features(&self, plane: &RealPlane) -> Result<FeatureTensor> {
        let f = self.analyze(plane)?;
        self.refine(plane, f)
    }
}

/// Backends whose synthesis is linear in the features, exposing the
/// per-channel basis tile.
pub trait LinearTransform: FeatureTransform {
    /// B×B tile produced by a unit coefficient in `channel`.
    fn basis_image(&self, channel: usize) -> &[f64];
}

/// Orthonormal 2-D DCT-II over B×B tiles.
#[derive(Clone, Debug)]
pub struct DctTransform {
    size: usize,
    /// `matrix[k * size + n]` = α(k)·cos(π(2n+1)k / 2B)
    matrix: Vec<f64>,
    /// channel → (row frequency, column frequency)
    zigzag: Vec<(usize, usize)>,
    basis: Vec<Vec<f64>>,
}

/// Zig-zag scan of a `size`×`size` grid as (row, col) pairs.
pub fn zigzag_order(size: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(size * size);
    for s in 0..(2 * size - 1) {
        let lo = s.saturating_sub(size - 1);
        let hi = s.min(size - 1);
        if s % 2 == 0 {
            for r in (lo..=hi).rev() {
                order.push((r, s - r));
            }
        } else {
            for r in lo..=hi {
                order.push((r, s - r));
            }
        }
    }
    order
}

impl DctTransform {
    pub fn new(spec: TransformSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.block_size;
        let mut matrix = vec![0.0; n * n];
        for k in 0..n {
            let alpha = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                matrix[k * n + i] =
                    alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
            }
        }
        let zigzag = zigzag_order(n);
        let basis = zigzag
            .iter()
            .map(|&(u, v)| {
                let mut img = vec![0.0; n * n];
                for y in 0..n {
                    for x in 0..n {
                        img[y * n + x] = matrix[u * n + y] * matrix[v * n + x];
                    }
                }
                img
            })
            .collect();
        Ok(Self {
            size: n,
            matrix,
            zigzag,
            basis,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Forward transform of one tile (row-major, `size`² samples) into
    /// zig-zag ordered coefficients.
    pub fn forward_tile(&self, tile: &[f64], out: &mut [f64]) {
        let n = self.size;
        let m = &self.matrix;
        // tmp = M · X
        let mut tmp = vec![0.0; n * n];
        for k in 0..n {
            for x in 0..n {
                let mut acc = 0.0;
                for y in 0..n {
                    acc += m[k * n + y] * tile[y * n + x];
                }
                tmp[k * n + x] = acc;
            }
        }
        // Y = tmp · Mᵀ
        for (c, &(u, v)) in self.zigzag.iter().enumerate() {
            let mut acc = 0.0;
            for x in 0..n {
                acc += tmp[u * n + x] * m[v * n + x];
            }
            out[c] = acc;
        }
    }

    /// Inverse of [`forward_tile`](Self::forward_tile).
    pub fn inverse_tile(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.size;
        let m = &self.matrix;
        let mut freq = vec![0.0; n * n];
        for (c, &(u, v)) in self.zigzag.iter().enumerate() {
            freq[u * n + v] = coeffs[c];
        }
        // tmp = Mᵀ · Y
        let mut tmp = vec![0.0; n * n];
        for y in 0..n {
            for v in 0..n {
                let mut acc = 0.0;
                for u in 0..n {
                    acc += m[u * n + y] * freq[u * n + v];
                }
                tmp[y * n + v] = acc;
            }
        }
        // X = tmp · M
        for y in 0..n {
            for x in 0..n {
                let mut acc = 0.0;
                for v in 0..n {
                    acc += tmp[y * n + v] * m[v * n + x];
                }
                out[y * n + x] = acc;
            }
        }
    }
}

impl FeatureTransform for DctTransform {
    fn spec(&self) -> TransformSpec {
        TransformSpec {
            kind: TransformKind::Dct2Orthonormal,
            block_size: self.size,
        }
    }

    fn analyze(&self, plane: &RealPlane) -> Result<FeatureTensor> {
        let n = self.size;
        if !plane.width.is_multiple_of(n) || !plane.height.is_multiple_of(n) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} plane is not a multiple of {n}",
                plane.width, plane.height
            )));
        }
        let (gh, gw) = (plane.height / n, plane.width / n);
        let mut out = FeatureTensor::zeros(gh, gw, n * n);
        let mut tile = vec![0.0; n * n];
        for r in 0..gh {
            for c in 0..gw {
                for y in 0..n {
                    let src = (r * n + y) * plane.width + c * n;
                    tile[y * n..(y + 1) * n].copy_from_slice(&plane.data[src..src + n]);
                }
                self.forward_tile(&tile, out.cell_mut(r, c));
            }
        }
        Ok(out)
    }

    fn synthesize(&self, f: &FeatureTensor) -> Result<RealPlane> {
        let n = self.size;
        if f.channels != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} channels, transform expects {}",
                f.channels,
                n * n
            )));
        }
        let mut plane = Plane::new(f.grid_w * n, f.grid_h * n);
        let mut tile = vec![0.0; n * n];
        for r in 0..f.grid_h {
            for c in 0..f.grid_w {
                self.inverse_tile(f.cell(r, c), &mut tile);
                for y in 0..n {
                    let dst = (r * n + y) * plane.width + c * n;
                    plane.data[dst..dst + n].copy_from_slice(&tile[y * n..(y + 1) * n]);
                }
            }
        }
        Ok(plane)
    }
}

impl LinearTransform for DctTransform {
    fn basis_image(&self, channel: usize) -> &[f64] {
        &self.basis[channel]
    }
}

pub fn analyze(plane: &RealPlane, spec: TransformSpec) -> Result<FeatureTensor> {
    DctTransform::new(spec)?.analyze(plane)
}

pub fn synthesize(features: &FeatureTensor, spec: TransformSpec) -> Result<RealPlane> {
    DctTransform::new(spec)?.synthesize(features)
}

pub fn optimal_features(plane: &RealPlane, spec: TransformSpec) -> Result<FeatureTensor> {
    DctTransform::new(spec)?.optimal_features(plane)
}

/// Centers samples around zero: v − 2^(bit_depth−1).
pub fn level_shift(plane: &SamplePlane, bit_depth: u8) -> RealPlane {
    let mid = (1u32 << (bit_depth - 1)) as f64;
    plane.map(|v| v as f64 - mid)
}

/// Undoes [`level_shift`], rounding to the nearest sample and clamping to range.
pub fn to_samples(plane: &RealPlane, bit_depth: u8) -> SamplePlane {
    let mid = (1u32 << (bit_depth - 1)) as f64;
    let max = crate::video_io::max_sample(bit_depth) as f64;
    plane.map(|v| (v + mid).round().clamp(0.0, max) as u16)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_plane(w: usize, h: usize, seed: u64) -> RealPlane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_vec(
            w,
            h,
            (0..w * h).map(|_| rng.gen_range(-128.0..128.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zigzag_matches_jpeg_prefix() {
        let z = zigzag_order(8);
        assert_eq!(&z[..6], &[(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(z[63], (7, 7));
        let mut seen = z.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn constant_tile_is_dc_only() {
        for b in [4, 8, 16] {
            let t = DctTransform::new(TransformSpec::dct(b).unwrap()).unwrap();
            let plane = Plane::filled(b, b, 37.0);
            let f = t.analyze(&plane).unwrap();
            assert!((f.data[0] - b as f64 * 37.0).abs() < 1e-9);
            assert!(f.data[1..].iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn parseval_per_tile() {
        let t = DctTransform::new(TransformSpec::default()).unwrap();
        let p = random_plane(16, 16, 3);
        let f = t.analyze(&p).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let pix: f64 = (0..8)
                    .flat_map(|y| (0..8).map(move |x| (x, y)))
                    .map(|(x, y)| p.get(c * 8 + x, r * 8 + y).powi(2))
                    .sum();
                let coef: f64 = f.cell(r, c).iter().map(|v| v * v).sum();
                assert!((pix - coef).abs() <= 1e-6 * pix);
            }
        }
    }

    #[test]
    fn round_trip_identity() {
        let t = DctTransform::new(TransformSpec::dct(16).unwrap()).unwrap();
        let p = random_plane(32, 48, 9);
        let back = t.synthesize(&t.analyze(&p).unwrap()).unwrap();
        for (a, b) in p.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_tensor_synthesizes_zero_plane() {
        let t = DctTransform::new(TransformSpec::default()).unwrap();
        let p = t.synthesize(&FeatureTensor::zeros(2, 3, 64)).unwrap();
        assert_eq!((p.width, p.height), (24, 16));
        assert!(p.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn misaligned_plane_rejected() {
        let p = Plane::filled(10, 8, 0.0);
        assert!(analyze(&p, TransformSpec::default()).is_err());
    }

    #[test]
    fn channel_count_mismatch_rejected() {
        let f = FeatureTensor::zeros(1, 1, 16);
        assert!(synthesize(&f, TransformSpec::default()).is_err());
    }

    #[test]
    fn optimal_features_equals_analyze() {
        let p = random_plane(16, 16, 5);
        let spec = TransformSpec::default();
        assert_eq!(
            optimal_features(&p, spec).unwrap(),
            analyze(&p, spec).unwrap()
        );
    }

    #[test]
    fn level_shift_round_trip() {
        let s = Plane::from_vec(2, 2, vec![0u16, 128, 255, 17]).unwrap();
        assert_eq!(to_samples(&level_shift(&s, 8), 8), s);
        let r = Plane::from_vec(2, 1, vec![-500.0, 500.0]).unwrap();
        assert_eq!(to_samples(&r, 8).data, vec![0, 255]);
    }

    #[test]
    fn block_extract_and_put() {
        let mut f = FeatureTensor::zeros(4, 6, 2);
        for (i, v) in f.data.iter_mut().enumerate() {
            *v = i as f64;
        }
        let b = f.block(1, 2, 2);
        assert_eq!(b.cell(0, 0), f.cell(2, 4));
        assert_eq!(b.cell(1, 1), f.cell(3, 5));
        let mut g = FeatureTensor::zeros(4, 6, 2);
        for r in 0..2 {
            for c in 0..3 {
                g.put_block(r, c, &f.block(r, c, 2));
            }
        }
        assert_eq!(g, f);
    }
}
