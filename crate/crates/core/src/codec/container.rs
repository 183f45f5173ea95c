//! `.mmvc` byte layout. FORMAT.md at the repository root describes it.

use crate::bitio::{write_varint, ByteReader};
use crate::codec::config::{ModeSet, SkipReference};
use crate::entropy::{
    DensityMap, EntropyModeMap, EntropyPath, QuantizerKind, QuantizerSpec, MAX_INDEX_BOUND,
};
use crate::error::{Error, Result};
use crate::mode_select::ModeMap;
use crate::prediction::SkipMask;
use crate::transform::TransformSpec;
use crate::video_io::{ChromaMode, Rational};

pub const MAGIC: &[u8; 4] = b"MMVC";
pub const VERSION: u8 = 1;

const FLAG_DUAL_PATH: u8 = 1;
const FLAG_SKIP_RECON: u8 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct StreamHeader {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma: ChromaMode,
    pub frame_count: usize,
    pub frame_rate: Rational,
    pub block_px: usize,
    pub transform: TransformSpec,
    pub quantizer: QuantizerSpec,
    pub epsilon: f64,
    pub density_threshold: f64,
    pub delta_db: f64,
    pub search_range: usize,
    pub mblock: usize,
    pub intra_period: u32,
    pub modes: ModeSet,
    pub dual_path: bool,
    pub skip_reference: SkipReference,
}

impl StreamHeader {
    pub fn write(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.push(self.bit_depth);
        out.push(self.chroma.to_byte());
        out.extend_from_slice(&(self.frame_count as u32).to_le_bytes());
        out.extend_from_slice(&self.frame_rate.num.to_le_bytes());
        out.extend_from_slice(&self.frame_rate.den.to_le_bytes());
        out.extend_from_slice(&(self.block_px as u16).to_le_bytes());
        out.extend_from_slice(&self.transform.to_bytes());
        match &self.quantizer.kind {
            QuantizerKind::Uniform { step } => {
                out.push(0);
                out.extend_from_slice(&step.to_le_bytes());
                out.extend_from_slice(&(self.quantizer.index_bound as u16).to_le_bytes());
            }
            QuantizerKind::LloydMax { codebook, .. } => {
                out.push(1);
                write_varint(out, codebook.len() as u64);
                for c in codebook {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        out.extend_from_slice(&self.epsilon.to_le_bytes());
        out.extend_from_slice(&self.density_threshold.to_le_bytes());
        out.extend_from_slice(&self.delta_db.to_le_bytes());
        out.extend_from_slice(&(self.search_range as u16).to_le_bytes());
        out.extend_from_slice(&(self.mblock as u16).to_le_bytes());
        out.extend_from_slice(&self.intra_period.to_le_bytes());
        out.push(self.modes.to_bits());
        let mut flags = 0;
        if self.dual_path {
            flags |= FLAG_DUAL_PATH;
        }
        if self.skip_reference == SkipReference::Reconstruction {
            flags |= FLAG_SKIP_RECON;
        }
        out.push(flags);
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }

    pub fn read(r: &mut ByteReader) -> Result<Self> {
        let start = r.position();
        let bad = |what: &str| Error::Corrupt(format!("header: {what}"));
        if r.bytes(4).map_err(|_| Error::BadMagic)? != MAGIC {
            return Err(Error::BadMagic);
        }
        if r.u8()? != VERSION {
            return Err(Error::BadMagic);
        }
        let width = r.u32()? as usize;
        let height = r.u32()? as usize;
        let bit_depth = r.u8()?;
        let chroma = ChromaMode::from_byte(r.u8()?).ok_or_else(|| bad("chroma mode"))?;
        let frame_count = r.u32()? as usize;
        let frame_rate = Rational::new(r.u32()?, r.u32()?);
        let block_px = r.u16()? as usize;
        let tb = r.bytes(2)?;
        let transform = TransformSpec::from_bytes([tb[0], tb[1]])?;
        let quantizer = match r.u8()? {
            0 => {
                let step = r.f64()?;
                let bound = r.u16()? as u32;
                QuantizerSpec::uniform_bounded(step, bound).map_err(|e| bad(&e.to_string()))?
            }
            1 => {
                let n = r.varint()?;
                if n > 2 * MAX_INDEX_BOUND as u64 + 1 {
                    return Err(bad("codebook size"));
                }
                let book = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
                QuantizerSpec::lloyd_max(book).map_err(|e| bad(&e.to_string()))?
            }
            k => return Err(bad(&format!("quantizer kind {k}"))),
        };
        let epsilon = r.f64()?;
        let density_threshold = r.f64()?;
        let delta_db = r.f64()?;
        let search_range = r.u16()? as usize;
        let mblock = r.u16()? as usize;
        let intra_period = r.u32()?;
        let modes = ModeSet::from_bits(r.u8()?)?;
        let flags = r.u8()?;
        if flags & !(FLAG_DUAL_PATH | FLAG_SKIP_RECON) != 0 {
            return Err(bad("unknown flags"));
        }
        let actual = crc32fast::hash(r.consumed_since(start));
        if r.u32()? != actual {
            return Err(bad("checksum mismatch"));
        }
        let h = Self {
            width,
            height,
            bit_depth,
            chroma,
            frame_count,
            frame_rate,
            block_px,
            transform,
            quantizer,
            epsilon,
            density_threshold,
            delta_db,
            search_range,
            mblock,
            intra_period,
            modes,
            dual_path: flags & FLAG_DUAL_PATH != 0,
            skip_reference: if flags & FLAG_SKIP_RECON != 0 {
                SkipReference::Reconstruction
            } else {
                SkipReference::Source
            },
        };
        if width == 0 || height == 0 || !(8..=16).contains(&bit_depth) || frame_count == 0 {
            return Err(bad("geometry"));
        }
        if block_px == 0 || !block_px.is_multiple_of(transform.block_size) || mblock == 0 {
            return Err(bad("block sizes"));
        }
        Ok(h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameType {
    Intra = 0,
    Predicted = 1,
}

/// Serialized side information and payloads of one plane.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlanePlan {
    pub skip: SkipMask,
    /// One entry per coded block.
    pub modes: ModeMap,
    pub paths: Vec<EntropyPath>,
    pub payloads: Vec<Vec<u8>>,
}

impl PlanePlan {
    pub fn coded(&self) -> usize {
        self.payloads.len()
    }

    pub fn payload_bytes(&self) -> usize {
        self.payloads.iter().map(Vec::len).sum()
    }

    fn write(&self, dual_path: bool, out: &mut Vec<u8>) -> Result<()> {
        out.extend(self.skip.to_bytes());
        let n = self.coded();
        if n == 0 {
            return Ok(());
        }
        out.extend(self.modes.to_bytes());
        if dual_path {
            let map = DensityMap::from_paths(&self.paths).encode()?;
            write_varint(out, map.len() as u64);
            out.extend(map);
        }
        let dense = self
            .paths
            .iter()
            .filter(|&&p| p == EntropyPath::Dense)
            .count();
        out.extend(EntropyModeMap::zeros(dense).to_bytes());
        for p in &self.payloads {
            write_varint(out, p.len() as u64);
            out.extend_from_slice(p);
        }
        Ok(())
    }

    fn read(r: &mut ByteReader, rows: usize, cols: usize, dual_path: bool) -> Result<Self> {
        let skip = SkipMask::from_bytes(rows, cols, r.bytes((rows * cols).div_ceil(8))?)?;
        let n = skip.popcount();
        if n == 0 {
            return Ok(Self {
                skip,
                ..Self::default()
            });
        }
        let modes = ModeMap::from_bytes(r.bytes(ModeMap::byte_len(n))?, n)?;
        let paths = if dual_path {
            let map = DensityMap::decode(r.prefixed()?, n)?;
            (0..n).map(|i| map.path(i)).collect()
        } else {
            vec![EntropyPath::Dense; n]
        };
        let dense = paths.iter().filter(|&&p| p == EntropyPath::Dense).count();
        EntropyModeMap::from_bytes(r.bytes(dense.div_ceil(8))?, dense)?;
        let payloads = (0..n)
            .map(|_| r.prefixed().map(<[u8]>::to_vec))
            .collect::<Result<_>>()?;
        Ok(Self {
            skip,
            modes,
            paths,
            payloads,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FramePlan {
    pub frame_type: FrameType,
    pub planes: Vec<PlanePlan>,
}

impl FramePlan {
    /// Frame body: type byte then each plane's side information and payloads.
    pub fn to_body(&self, dual_path: bool) -> Result<Vec<u8>> {
        let mut out = vec![self.frame_type as u8];
        for p in &self.planes {
            p.write(dual_path, &mut out)?;
        }
        Ok(out)
    }

    /// Parses a body given each plane's block grid (rows, cols).
    pub fn from_body(body: &[u8], grids: &[(usize, usize)], dual_path: bool) -> Result<Self> {
        let mut r = ByteReader::new(body);
        let frame_type = match r.u8()? {
            0 => FrameType::Intra,
            1 => FrameType::Predicted,
            t => return Err(Error::Corrupt(format!("frame type {t}"))),
        };
        let planes = grids
            .iter()
            .map(|&(rows, cols)| PlanePlan::read(&mut r, rows, cols, dual_path))
            .collect::<Result<Vec<_>>>()?;
        if !r.is_empty() {
            return Err(Error::Corrupt("trailing bytes in frame body".into()));
        }
        Ok(Self { frame_type, planes })
    }
}

/// Appends `varint(len) ‖ body ‖ crc32(body)`.
pub fn write_frame(out: &mut Vec<u8>, body: &[u8]) {
    write_varint(out, body.len() as u64);
    out.extend_from_slice(body);
    out.extend_from_slice(&crc32fast::hash(body).to_le_bytes());
}

/// Bytes a framed body occupies in the stream.
pub fn framed_len(body_len: usize) -> usize {
    crate::bitio::varint_len(body_len as u64) + body_len + 4
}

pub fn read_frame<'a>(r: &mut ByteReader<'a>) -> Result<&'a [u8]> {
    let body = r.prefixed()?;
    let crc = r.u32()?;
    if crc32fast::hash(body) != crc {
        return Err(Error::Corrupt("frame checksum mismatch".into()));
    }
    Ok(body)
}
