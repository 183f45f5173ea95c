//! Quantization and the density-adaptive dual entropy path.

pub mod dense;
pub mod huffman;
pub mod quant;
pub mod range_coder;
pub mod sparse;

pub use dense::{decode_dense, encode_dense};
pub use huffman::{decode_density_map, encode_density_map};
pub use quant::{
    dequantize, quantize, train_lloyd_max, QuantizedBlock, QuantizerKind, QuantizerSpec,
    MAX_INDEX_BOUND,
};
pub use sparse::{decode_sparse, encode_sparse};

use crate::bitio::{pack_bits, unpack_bits, varint_len};
use crate::error::{Error, Result};

pub const DEFAULT_DENSITY_THRESHOLD: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntropyPath {
    Sparse,
    Dense,
}

impl EntropyPath {
    /// Density-map bit: 1 = sparse.
    pub fn bit(self) -> bool {
        self == EntropyPath::Sparse
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            EntropyPath::Sparse
        } else {
            EntropyPath::Dense
        }
    }
}

pub fn validate_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "density threshold {threshold} outside (0, 1)"
        )))
    }
}

/// Sparse iff the nonzero fraction is strictly below `threshold`.
pub fn route_block(qb: &QuantizedBlock, threshold: f64) -> EntropyPath {
    if qb.density() < threshold {
        EntropyPath::Sparse
    } else {
        EntropyPath::Dense
    }
}

pub fn encode_block(qb: &QuantizedBlock, path: EntropyPath) -> Vec<u8> {
    match path {
        EntropyPath::Sparse => encode_sparse(qb),
        EntropyPath::Dense => encode_dense(qb),
    }
}

pub fn decode_block(
    payload: &[u8],
    path: EntropyPath,
    grid_h: usize,
    grid_w: usize,
    channels: usize,
) -> Result<QuantizedBlock> {
    match path {
        EntropyPath::Sparse => decode_sparse(payload, grid_h, grid_w, channels),
        EntropyPath::Dense => decode_dense(payload, grid_h, grid_w, channels),
    }
}

/// One bit per coded block, `true` = sparse path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DensityMap(pub Vec<bool>);

impl DensityMap {
    pub fn from_paths(paths: &[EntropyPath]) -> Self {
        Self(paths.iter().map(|p| p.bit()).collect())
    }

    pub fn path(&self, i: usize) -> EntropyPath {
        EntropyPath::from_bit(self.0[i])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dense_count(&self) -> usize {
        self.0.iter().filter(|&&b| !b).count()
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        encode_density_map(&self.0)
    }

    pub fn decode(payload: &[u8], n: usize) -> Result<Self> {
        decode_density_map(payload, n).map(Self)
    }
}

/// Dense sub-coder selector, one entry per dense block. Only code 0 exists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntropyModeMap(pub Vec<u8>);

impl EntropyModeMap {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let bits: Vec<bool> = self.0.iter().map(|&w| w != 0).collect();
        pack_bits(&bits)
    }

    pub fn from_bytes(bytes: &[u8], n: usize) -> Result<Self> {
        let bits = unpack_bits(bytes, n)?;
        if bits.iter().any(|&b| b) {
            return Err(Error::Corrupt("unknown dense sub-coder".into()));
        }
        Ok(Self::zeros(n))
    }
}

/// Byte cost of a set of blocks coded one way or the other, with all side
/// information the container spends on them (length prefixes, density map,
/// w_t bits).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PathCost {
    pub payload_bytes: usize,
    pub side_bytes: usize,
}

impl PathCost {
    pub fn total(&self) -> usize {
        self.payload_bytes + self.side_bytes
    }
}

/// Dense-only coding of every block.
pub fn dense_only_cost(blocks: &[QuantizedBlock]) -> PathCost {
    let mut cost = PathCost::default();
    for qb in blocks {
        let n = encode_dense(qb).len();
        cost.payload_bytes += n;
        cost.side_bytes += varint_len(n as u64);
    }
    cost.side_bytes += blocks.len().div_ceil(8);
    cost
}

/// Density-routed coding of every block.
pub fn dual_path_cost(blocks: &[QuantizedBlock], threshold: f64) -> Result<PathCost> {
    let mut cost = PathCost::default();
    if blocks.is_empty() {
        return Ok(cost);
    }
    let paths: Vec<EntropyPath> = blocks.iter().map(|qb| route_block(qb, threshold)).collect();
    for (qb, &p) in blocks.iter().zip(&paths) {
        let n = encode_block(qb, p).len();
        cost.payload_bytes += n;
        cost.side_bytes += varint_len(n as u64);
    }
    let map = DensityMap::from_paths(&paths);
    let m = map.encode()?;
    cost.side_bytes += varint_len(m.len() as u64) + m.len() + map.dense_count().div_ceil(8);
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routing_boundaries() {
        let mut qb = QuantizedBlock::zeros(8, 8, 1);
        for i in 0..6 {
            qb.indices[i * 10] = 1;
        }
        assert_eq!(qb.density(), 0.09375);
        assert_eq!(route_block(&qb, 0.15), EntropyPath::Sparse);

        let mut qb = QuantizedBlock::zeros(4, 5, 1);
        for i in 0..3 {
            qb.indices[i] = -2;
        }
        assert_eq!(route_block(&qb, 0.15), EntropyPath::Dense);

        let mut qb = QuantizedBlock::zeros(2, 2, 4);
        qb.indices.iter_mut().for_each(|v| *v = 1);
        assert_eq!(route_block(&qb, 0.15), EntropyPath::Dense);
        assert!(validate_threshold(0.0).is_err());
        assert!(validate_threshold(1.0).is_err());
    }

    #[test]
    fn entropy_mode_map_round_trip() {
        let w = EntropyModeMap::zeros(11);
        assert_eq!(EntropyModeMap::from_bytes(&w.to_bytes(), 11).unwrap(), w);
        assert!(EntropyModeMap::from_bytes(&[0x80, 0], 11).is_err());
    }
}
