//! Closed-loop encoder, mirror decoder and stream analysis.
//!
//! Both ends drive the same [`CodecState`]: predictions, motion and
//! reconstructions are computed by one code path from decoded data only, so
//! the encoder's references always equal the decoder's.

pub mod config;
pub mod container;

pub use config::{lcm, CodecConfig, ModeSet, QuantizerChoice, SkipReference};
pub use container::{FramePlan, FrameType, PlanePlan, StreamHeader, MAGIC, VERSION};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bitio::ByteReader;
use crate::channel_removal::{RemovalConfig, RemovalTrace};
use crate::entropy::{
    decode_block, dequantize, encode_dense, train_lloyd_max, EntropyPath, QuantizedBlock,
    QuantizerSpec,
};
use crate::error::{Error, Result};
use crate::mode_select::{coded_bits, plan_plane, ModeMap, PlaneDecisions, SelectParams};
use crate::motion::{estimate_motion, extrapolate_warp, MotionField};
use crate::prediction::{
    block_difference, predict_fp, predict_fpg, predict_ofc, skip_mask, BlockGridSpec, Mode,
    PerMode, SkipMask,
};
use crate::transform::{level_shift, to_samples, DctTransform, FeatureTensor, FeatureTransform};
use crate::video_io::{max_sample, Frame, FrameSequence, Plane, SamplePlane};

/// Seed of the Lloyd-Max training sample.
pub const LLOYD_SEED: u64 = 0;
const LLOYD_SAMPLES: usize = 200_000;
const LLOYD_ITERS: usize = 50;
const LLOYD_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct PlaneGeom {
    /// Padded size.
    width: usize,
    height: usize,
    /// Picture size before padding.
    orig_width: usize,
    orig_height: usize,
    rows: usize,
    cols: usize,
    shift: (u32, u32),
}

#[derive(Clone, Debug)]
struct Layout {
    planes: Vec<PlaneGeom>,
    grid: BlockGridSpec,
    cells: usize,
}

impl Layout {
    fn new(h: &StreamHeader) -> Result<Self> {
        let align = lcm(h.block_px, h.mblock);
        let grid = BlockGridSpec::new(h.block_px, h.transform.block_size)?;
        let planes = (0..h.chroma.plane_count())
            .map(|i| {
                let (w, ht) = h.chroma.plane_dims(i, h.width, h.height);
                let width = w.div_ceil(align) * align;
                let height = ht.div_ceil(align) * align;
                PlaneGeom {
                    width,
                    height,
                    orig_width: w,
                    orig_height: ht,
                    rows: height / h.block_px,
                    cols: width / h.block_px,
                    shift: h.chroma.subsampling(i),
                }
            })
            .collect();
        Ok(Self {
            planes,
            grid,
            cells: grid.cells(),
        })
    }

    fn grids(&self) -> Vec<(usize, usize)> {
        self.planes.iter().map(|g| (g.rows, g.cols)).collect()
    }

    fn blocks(&self) -> usize {
        self.planes.iter().map(|g| g.rows * g.cols).sum()
    }

    fn pad(&self, frame: &Frame) -> Vec<SamplePlane> {
        frame
            .planes
            .iter()
            .zip(&self.planes)
            .map(|(p, g)| p.extend_to(g.width, g.height))
            .collect()
    }

    fn crop(&self, planes: &[SamplePlane], h: &StreamHeader) -> Frame {
        Frame {
            planes: planes
                .iter()
                .zip(&self.planes)
                .map(|(p, g)| p.crop(g.orig_width, g.orig_height))
                .collect(),
            width: h.width,
            height: h.height,
            bit_depth: h.bit_depth,
            chroma: h.chroma,
        }
    }
}

/// Modes usable for a predicted frame given the reference history: FPG
/// needs one reconstruction, FP and OFC two. When none of the configured
/// modes is usable yet, FPG stands in.
pub fn allowed_modes(set: ModeSet, history: usize) -> Vec<Mode> {
    let usable = |m: Mode| match m {
        Mode::Fpg => history >= 1,
        Mode::Fp | Mode::Ofc => history >= 2,
    };
    let modes: Vec<Mode> = Mode::ALL
        .into_iter()
        .filter(|&m| set.contains(m) && usable(m))
        .collect();
    if modes.is_empty() {
        vec![Mode::Fpg]
    } else {
        modes
    }
}

/// SHA-256 over all samples of a frame (u16 little-endian, plane order).
pub fn frame_hash(frame: &Frame) -> String {
    let mut h = Sha256::new();
    for p in &frame.planes {
        for &v in &p.data {
            h.update(v.to_le_bytes());
        }
    }
    format!("{:x}", h.finalize())
}

/// Reference history and the shared reconstruction datapath.
struct CodecState {
    header: StreamHeader,
    layout: Layout,
    transform: DctTransform,
    /// Up to two reconstructions, oldest first.
    recon: Vec<Vec<SamplePlane>>,
    features: Vec<Vec<FeatureTensor>>,
}

impl CodecState {
    fn new(header: StreamHeader) -> Result<Self> {
        Ok(Self {
            layout: Layout::new(&header)?,
            transform: DctTransform::new(header.transform)?,
            header,
            recon: Vec::new(),
            features: Vec::new(),
        })
    }

    fn history(&self) -> usize {
        self.recon.len()
    }

    fn reset(&mut self) {
        self.recon.clear();
        self.features.clear();
    }

    fn last(&self) -> Option<&Vec<SamplePlane>> {
        self.recon.last()
    }

    fn push(&mut self, planes: Vec<SamplePlane>) -> Result<()> {
        let bd = self.header.bit_depth;
        let feats = planes
            .par_iter()
            .map(|p| self.transform.analyze(&level_shift(p, bd)))
            .collect::<Result<Vec<_>>>()?;
        self.recon.push(planes);
        self.features.push(feats);
        if self.recon.len() > 2 {
            self.recon.remove(0);
            self.features.remove(0);
        }
        Ok(())
    }

    /// Luma motion from x̂ₜ₋₂ to x̂ₜ₋₁.
    fn motion(&self) -> Result<MotionField> {
        let [a, b] = &self.recon[..] else {
            return Err(Error::InsufficientHistory);
        };
        estimate_motion(&a[0], &b[0], self.header.search_range, self.header.mblock)
    }

    fn predictions(
        &self,
        plane: usize,
        modes: &[Mode],
        field: Option<&MotionField>,
    ) -> Result<PerMode<FeatureTensor>> {
        let mut out = PerMode::default();
        let n = self.features.len();
        for &m in modes {
            let pred = match m {
                Mode::Fpg => {
                    predict_fpg(&self.features.last().ok_or(Error::InsufficientHistory)?[plane])
                }
                Mode::Fp => {
                    if n < 2 {
                        return Err(Error::InsufficientHistory);
                    }
                    predict_fp(&self.features[n - 1][plane], &self.features[n - 2][plane])?
                }
                Mode::Ofc => {
                    let field = field.ok_or(Error::InsufficientHistory)?;
                    let (sx, sy) = self.layout.planes[plane].shift;
                    let warped = extrapolate_warp(
                        &field.subsampled(sx, sy),
                        &self.last().ok_or(Error::InsufficientHistory)?[plane],
                    );
                    predict_ofc(&warped, self.header.bit_depth, &self.transform)?
                }
            };
            out.set(m, pred);
        }
        Ok(out)
    }

    /// Rebuilds one plane: coded blocks from prediction plus dequantized
    /// residual, skipped blocks copied from the previous reconstruction.
    fn reconstruct(
        &self,
        plane: usize,
        skip: &SkipMask,
        blocks: &[(Option<Mode>, &QuantizedBlock)],
        preds: &PerMode<FeatureTensor>,
    ) -> Result<SamplePlane> {
        let g = self.layout.planes[plane];
        let bd = self.header.bit_depth;
        let mut out = match self.last() {
            Some(prev) => prev[plane].clone(),
            None => Plane::filled(g.width, g.height, 1u16 << (bd - 1)),
        };
        let positions: Vec<(usize, usize)> = (0..skip.rows)
            .flat_map(|r| (0..skip.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| skip.coded(r, c))
            .collect();
        if positions.len() != blocks.len() {
            return Err(Error::Corrupt(
                "block count disagrees with skip mask".into(),
            ));
        }
        if positions.len() < skip.rows * skip.cols && self.last().is_none() {
            return Err(Error::Corrupt("skipped block without a reference".into()));
        }
        let cells = self.layout.cells;
        let tiles = positions
            .par_iter()
            .zip(blocks)
            .map(|(&(r, c), &(mode, qb))| {
                let mut f = dequantize(qb, &self.header.quantizer)?;
                if let Some(m) = mode {
                    let p = preds
                        .get(m)
                        .ok_or_else(|| Error::Corrupt(format!("no {} prediction", m.name())))?;
                    f = p.block(r, c, cells).add(&f)?;
                }
                Ok(to_samples(&self.transform.synthesize(&f)?, bd))
            })
            .collect::<Result<Vec<_>>>()?;
        let px = self.header.block_px;
        for (&(r, c), tile) in positions.iter().zip(&tiles) {
            out.put_sub_plane(c * px, r * px, tile);
        }
        Ok(out)
    }
}

/// Per-block record of an encoder decision.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockRecord {
    pub plane: usize,
    pub row: usize,
    pub col: usize,
    /// `None` for intra blocks.
    pub mode: Option<Mode>,
    pub path: EntropyPath,
    pub bits: usize,
    pub payload_bytes: usize,
    pub candidate_bits: PerMode<usize>,
    pub removed_channels: usize,
    pub channels: usize,
    pub nonzero: usize,
    pub removal: Option<RemovalTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameStats {
    pub index: usize,
    pub frame_type: FrameType,
    /// Framed size in the stream.
    pub bytes: usize,
    pub body_bytes: usize,
    pub payload_bytes: usize,
    /// Everything but block payloads: masks, maps, length prefixes, framing.
    pub side_bytes: usize,
    pub total_blocks: usize,
    pub skipped_blocks: usize,
    /// Skip-mask bytes summed over planes.
    pub skip_mask_bytes: usize,
    pub blocks: Vec<BlockRecord>,
    pub hash: String,
}

impl FrameStats {
    pub fn mode_count(&self, mode: Option<Mode>) -> usize {
        self.blocks.iter().filter(|b| b.mode == mode).count()
    }
}

#[derive(Clone, Debug)]
pub struct EncodeOutput {
    pub bytes: Vec<u8>,
    pub header: StreamHeader,
    pub header_bytes: usize,
    pub frames: Vec<FrameStats>,
    /// Encoder-side reconstructions, cropped to the picture size.
    pub recon: Vec<Frame>,
}

impl EncodeOutput {
    pub fn trace(&self) -> Vec<String> {
        self.frames.iter().map(|f| f.hash.clone()).collect()
    }
}

/// Level-shifted luma features of every frame and their frame-to-frame
/// differences, sampled for codebook training.
fn training_sample(seq: &FrameSequence, cfg: &CodecConfig) -> Result<Vec<f64>> {
    let t = DctTransform::new(cfg.transform)?;
    let align = cfg.alignment();
    let feats = seq
        .frames
        .par_iter()
        .map(|f| {
            let p = f.luma().pad_to_multiple(align);
            t.analyze(&level_shift(&p, f.bit_depth))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pool: Vec<f64> = feats[0].data.clone();
    for w in feats.windows(2) {
        pool.extend(w[1].sub(&w[0])?.data);
    }
    if pool.len() <= LLOYD_SAMPLES {
        return Ok(pool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(LLOYD_SEED);
    let mut idx = sample(&mut rng, pool.len(), LLOYD_SAMPLES).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| pool[i]).collect())
}

/// The quantizer a config resolves to for a given clip.
pub fn build_quantizer(seq: &FrameSequence, cfg: &CodecConfig) -> Result<QuantizerSpec> {
    let bd = seq.frames.first().ok_or(Error::EmptySequence)?.bit_depth;
    match cfg.quantizer {
        QuantizerChoice::Uniform { step } => {
            let bound = cfg
                .index_bound
                .unwrap_or_else(|| cfg.auto_index_bound(step, bd));
            QuantizerSpec::uniform_bounded(step, bound)
        }
        QuantizerChoice::LloydMax { levels } => {
            let samples = training_sample(seq, cfg)?;
            QuantizerSpec::lloyd_max(train_lloyd_max(&samples, levels, LLOYD_ITERS, LLOYD_TOL)?)
        }
    }
}

fn make_header(seq: &FrameSequence, cfg: &CodecConfig) -> Result<StreamHeader> {
    let first = seq.frames.first().ok_or(Error::EmptySequence)?;
    Ok(StreamHeader {
        width: first.width,
        height: first.height,
        bit_depth: first.bit_depth,
        chroma: first.chroma,
        frame_count: seq.len(),
        frame_rate: seq.frame_rate,
        block_px: cfg.block_px,
        transform: cfg.transform,
        quantizer: build_quantizer(seq, cfg)?,
        epsilon: cfg.epsilon,
        density_threshold: cfg.density_threshold,
        delta_db: cfg.delta_db,
        search_range: cfg.search_range,
        mblock: cfg.mblock,
        intra_period: cfg.intra_period,
        modes: cfg.modes,
        dual_path: cfg.dual_path,
        skip_reference: cfg.skip_reference,
    })
}

/// Closed-loop encoder. Feed frames in order, then take the stream.
pub struct Encoder {
    cfg: CodecConfig,
    state: CodecState,
    bytes: Vec<u8>,
    header_bytes: usize,
    prev_source: Option<Vec<SamplePlane>>,
    frames: Vec<FrameStats>,
    recon: Vec<Frame>,
}

impl Encoder {
    /// Prepares the header for `seq` (training the codebook if configured).
    pub fn new(seq: &FrameSequence, cfg: &CodecConfig) -> Result<Self> {
        cfg.validate()?;
        if seq.is_empty() {
            return Err(Error::EmptySequence);
        }
        let header = make_header(seq, cfg)?;
        let mut bytes = Vec::new();
        header.write(&mut bytes);
        Ok(Self {
            cfg: cfg.clone(),
            header_bytes: bytes.len(),
            bytes,
            state: CodecState::new(header)?,
            prev_source: None,
            frames: Vec::new(),
            recon: Vec::new(),
        })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.state.header
    }

    pub fn encode_frame(&mut self, frame: &Frame) -> Result<&FrameStats> {
        let t = self.frames.len();
        let h = &self.state.header;
        let frame_count = h.frame_count;
        if t >= frame_count {
            return Err(Error::InvalidConfig("more frames than announced".into()));
        }
        if frame.width != h.width
            || frame.height != h.height
            || frame.bit_depth != h.bit_depth
            || frame.chroma != h.chroma
        {
            return Err(Error::DimensionMismatch(
                "frame format differs from stream".into(),
            ));
        }
        let intra = self.cfg.is_intra(t);
        if intra {
            self.state.reset();
        }
        let h = &self.state.header;
        let cur = self.state.layout.pad(frame);
        let modes = allowed_modes(self.cfg.modes, self.state.history());
        let field = if !intra && modes.contains(&Mode::Ofc) {
            Some(self.state.motion()?)
        } else {
            None
        };

        let bd = h.bit_depth;
        let params = SelectParams {
            quantizer: &h.quantizer,
            removal: RemovalConfig::new(h.delta_db)?,
            threshold: h.density_threshold,
            dual_path: h.dual_path,
            transform: &self.state.transform,
            peak: max_sample(bd) as f64,
        };
        let mut decisions = Vec::with_capacity(cur.len());
        let mut recon = Vec::with_capacity(cur.len());
        for (i, src) in cur.iter().enumerate() {
            let g = self.state.layout.planes[i];
            let shifted = level_shift(src, bd);
            let f_opt = self.state.transform.optimal_features(&shifted)?;
            let (skip, preds) = if intra {
                (SkipMask::all_coded(g.rows, g.cols), PerMode::default())
            } else {
                let skip = if self.cfg.modes.skip {
                    let reference = match self.cfg.skip_reference {
                        SkipReference::Source => self.prev_source.as_ref(),
                        SkipReference::Reconstruction => self.state.last(),
                    }
                    .ok_or(Error::InsufficientHistory)?;
                    let diffs = block_difference(&reference[i], src, self.state.layout.grid)?;
                    skip_mask(&diffs, self.cfg.epsilon, h.block_px * h.block_px)
                } else {
                    SkipMask::all_coded(g.rows, g.cols)
                };
                (skip, self.state.predictions(i, &modes, field.as_ref())?)
            };
            let d = plan_plane(
                &f_opt,
                &preds,
                &shifted,
                &skip,
                self.state.layout.cells,
                intra,
                &params,
            )?;
            let blocks: Vec<(Option<Mode>, &QuantizedBlock)> = d
                .blocks
                .iter()
                .map(|b| (b.mode(), &b.chosen.indices))
                .collect();
            recon.push(self.state.reconstruct(i, &d.skip, &blocks, &preds)?);
            decisions.push(d);
        }

        let plan = FramePlan {
            frame_type: if intra {
                FrameType::Intra
            } else {
                FrameType::Predicted
            },
            planes: decisions.iter().map(plane_plan).collect(),
        };
        let body = plan.to_body(h.dual_path)?;
        let start = self.bytes.len();
        container::write_frame(&mut self.bytes, &body);
        let framed = self.bytes.len() - start;

        let cropped = self.state.layout.crop(&recon, h);
        let payload_bytes: usize = plan.planes.iter().map(PlanePlan::payload_bytes).sum();
        let stats = FrameStats {
            index: t,
            frame_type: plan.frame_type,
            bytes: framed,
            body_bytes: body.len(),
            payload_bytes,
            side_bytes: framed - payload_bytes,
            total_blocks: self.state.layout.blocks(),
            skipped_blocks: decisions
                .iter()
                .map(|d| d.skip.bits.len() - d.skip.popcount())
                .sum(),
            skip_mask_bytes: decisions.iter().map(|d| d.skip.byte_len()).sum(),
            blocks: block_records(&decisions),
            hash: frame_hash(&cropped),
        };
        self.recon.push(cropped);
        self.state.push(recon)?;
        self.prev_source = Some(cur);
        self.frames.push(stats);
        Ok(self.frames.last().unwrap())
    }

    pub fn finish(self) -> Result<EncodeOutput> {
        if self.frames.len() != self.state.header.frame_count {
            return Err(Error::InvalidConfig(format!(
                "{} of {} frames encoded",
                self.frames.len(),
                self.state.header.frame_count
            )));
        }
        Ok(EncodeOutput {
            bytes: self.bytes,
            header: self.state.header,
            header_bytes: self.header_bytes,
            frames: self.frames,
            recon: self.recon,
        })
    }
}

fn plane_plan(d: &PlaneDecisions) -> PlanePlan {
    PlanePlan {
        skip: d.skip.clone(),
        modes: ModeMap(d.blocks.iter().map(|b| b.mode()).collect()),
        paths: d.blocks.iter().map(|b| b.chosen.path).collect(),
        payloads: d.blocks.iter().map(|b| b.chosen.payload.clone()).collect(),
    }
}

fn block_records(decisions: &[PlaneDecisions]) -> Vec<BlockRecord> {
    let mut out = Vec::new();
    for (plane, d) in decisions.iter().enumerate() {
        for (&(row, col), b) in d.positions.iter().zip(&d.blocks) {
            let c = &b.chosen;
            out.push(BlockRecord {
                plane,
                row,
                col,
                mode: c.mode,
                path: c.path,
                bits: c.bits,
                payload_bytes: c.payload.len(),
                candidate_bits: b.candidate_bits.clone(),
                removed_channels: c.mask.removed(),
                channels: c.mask.len(),
                nonzero: c.indices.nonzero_count(),
                removal: c.trace.clone(),
            });
        }
    }
    out
}

/// Encodes a whole sequence.
pub fn encode_stream(seq: &FrameSequence, cfg: &CodecConfig) -> Result<EncodeOutput> {
    let mut enc = Encoder::new(seq, cfg)?;
    for f in &seq.frames {
        enc.encode_frame(f)?;
    }
    enc.finish()
}

/// Intra-codes a single frame and returns its plan.
pub fn encode_intra(frame: &Frame, cfg: &CodecConfig) -> Result<FramePlan> {
    let seq = FrameSequence::new(vec![frame.clone()], Default::default())?;
    let out = encode_stream(&seq, cfg)?;
    let mut r = ByteReader::new(&out.bytes);
    StreamHeader::read(&mut r)?;
    let body = container::read_frame(&mut r)?;
    let layout = Layout::new(&out.header)?;
    FramePlan::from_body(body, &layout.grids(), out.header.dual_path)
}

/// One decoded frame with its parsed plan and residual indices.
#[derive(Clone, Debug)]
pub struct DecodedFrame {
    pub plan: FramePlan,
    /// Per plane, per coded block.
    pub indices: Vec<Vec<QuantizedBlock>>,
    pub framed_bytes: usize,
    pub frame: Frame,
    pub hash: String,
}

#[derive(Clone, Debug)]
pub struct DecodeOutput {
    pub header: StreamHeader,
    pub header_bytes: usize,
    pub frames: Vec<DecodedFrame>,
}

impl DecodeOutput {
    pub fn sequence(&self) -> Result<FrameSequence> {
        FrameSequence::new(
            self.frames.iter().map(|f| f.frame.clone()).collect(),
            self.header.frame_rate,
        )
    }

    pub fn trace(&self) -> Vec<String> {
        self.frames.iter().map(|f| f.hash.clone()).collect()
    }
}

fn check_plan(plan: &FramePlan, intra: bool, allowed: &[Mode]) -> Result<()> {
    let expected = if intra {
        FrameType::Intra
    } else {
        FrameType::Predicted
    };
    if plan.frame_type != expected {
        return Err(Error::Corrupt(
            "frame type disagrees with the intra schedule".into(),
        ));
    }
    for p in &plan.planes {
        if intra {
            if p.skip.popcount() != p.skip.bits.len()
                || p.modes.0.iter().any(Option::is_some)
                || p.paths.iter().any(|&x| x != EntropyPath::Dense)
            {
                return Err(Error::Corrupt(
                    "intra frame with predicted side info".into(),
                ));
            }
        } else if p
            .modes
            .0
            .iter()
            .any(|m| m.is_none_or(|m| !allowed.contains(&m)))
        {
            return Err(Error::Corrupt("mode not available for this frame".into()));
        }
    }
    Ok(())
}

/// Decodes a stream, keeping per-frame plans and indices.
pub fn decode_stream(bytes: &[u8]) -> Result<DecodeOutput> {
    let mut r = ByteReader::new(bytes);
    let header = StreamHeader::read(&mut r)?;
    let header_bytes = r.position();
    let cfg_intra = CodecConfig {
        intra_period: header.intra_period,
        ..CodecConfig::default()
    };
    let mut state = CodecState::new(header.clone())?;
    let grids = state.layout.grids();
    let cells = state.layout.cells;
    let channels = header.transform.channels();
    let bound = header.quantizer.index_bound as i32;
    let mut frames = Vec::with_capacity(header.frame_count);

    for t in 0..header.frame_count {
        let start = r.position();
        let body = container::read_frame(&mut r)?;
        let framed_bytes = r.position() - start;
        let plan = FramePlan::from_body(body, &grids, header.dual_path)?;
        let intra = cfg_intra.is_intra(t);
        if intra {
            state.reset();
        }
        let allowed = allowed_modes(header.modes, state.history());
        check_plan(&plan, intra, &allowed)?;

        let uses = |m: Mode| plan.planes.iter().any(|p| p.modes.0.contains(&Some(m)));
        let field = if uses(Mode::Ofc) {
            Some(state.motion()?)
        } else {
            None
        };

        let mut indices = Vec::with_capacity(plan.planes.len());
        let mut recon = Vec::with_capacity(plan.planes.len());
        for (i, p) in plan.planes.iter().enumerate() {
            let qbs = p
                .payloads
                .par_iter()
                .zip(&p.paths)
                .map(|(payload, &path)| {
                    let qb = decode_block(payload, path, cells, cells, channels)?;
                    if qb.indices.iter().any(|v| v.abs() > bound) {
                        return Err(Error::Corrupt("index beyond the quantizer bound".into()));
                    }
                    Ok(qb)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut needed: Vec<Mode> = p.modes.0.iter().flatten().copied().collect();
            needed.sort();
            needed.dedup();
            let preds = state.predictions(i, &needed, field.as_ref())?;
            let blocks: Vec<(Option<Mode>, &QuantizedBlock)> =
                p.modes.0.iter().copied().zip(&qbs).collect();
            recon.push(state.reconstruct(i, &p.skip, &blocks, &preds)?);
            indices.push(qbs);
        }
        let frame = state.layout.crop(&recon, &header);
        let hash = frame_hash(&frame);
        state.push(recon)?;
        frames.push(DecodedFrame {
            plan,
            indices,
            framed_bytes,
            frame,
            hash,
        });
    }
    if !r.is_empty() {
        return Err(Error::Corrupt(format!(
            "{} bytes after the last frame",
            r.remaining()
        )));
    }
    Ok(DecodeOutput {
        header,
        header_bytes,
        frames,
    })
}

/// Stream-level utilization figures for one frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameAnalysis {
    pub index: usize,
    pub intra: bool,
    pub bytes: usize,
    pub payload_bytes: usize,
    pub side_bytes: usize,
    pub total_blocks: usize,
    pub skipped: usize,
    /// Coded blocks per mode: FP, OFC, FPG, intra.
    pub mode_blocks: [usize; 4],
    /// Coded bits per mode (payload, length prefix, per-block side bits).
    pub mode_bits: [usize; 4],
    pub sparse_blocks: usize,
    pub dense_blocks: usize,
    /// Channels carrying only zero indices in coded blocks.
    pub zero_channels: usize,
    pub coded_channels: usize,
    /// Framed size had every block taken the dense path.
    pub dense_only_bytes: usize,
}

pub fn mode_slot(mode: Option<Mode>) -> usize {
    mode.map_or(3, Mode::index)
}

/// Decodes and tabulates mode, path and side-information usage.
pub fn analyze_stream(bytes: &[u8]) -> Result<(DecodeOutput, Vec<FrameAnalysis>)> {
    let out = decode_stream(bytes)?;
    let dual = out.header.dual_path;
    let mut rows = Vec::with_capacity(out.frames.len());
    for (t, f) in out.frames.iter().enumerate() {
        let mut a = FrameAnalysis {
            index: t,
            intra: f.plan.frame_type == FrameType::Intra,
            bytes: f.framed_bytes,
            ..Default::default()
        };
        let mut dense_plan = f.plan.clone();
        for (p, (plane, qbs)) in f.plan.planes.iter().zip(&f.indices).enumerate() {
            a.total_blocks += plane.skip.bits.len();
            a.skipped += plane.skip.bits.len() - plane.skip.popcount();
            a.payload_bytes += plane.payload_bytes();
            for ((m, &path), (payload, qb)) in plane
                .modes
                .0
                .iter()
                .zip(&plane.paths)
                .zip(plane.payloads.iter().zip(qbs))
            {
                let s = mode_slot(*m);
                a.mode_blocks[s] += 1;
                a.mode_bits[s] += coded_bits(payload.len(), path, dual);
                match path {
                    EntropyPath::Sparse => a.sparse_blocks += 1,
                    EntropyPath::Dense => a.dense_blocks += 1,
                }
                a.coded_channels += qb.channels;
                a.zero_channels += (0..qb.channels)
                    .filter(|&c| {
                        qb.indices
                            .iter()
                            .skip(c)
                            .step_by(qb.channels)
                            .all(|&v| v == 0)
                    })
                    .count();
            }
            let dp = &mut dense_plan.planes[p];
            for (i, qb) in qbs.iter().enumerate() {
                if dp.paths[i] == EntropyPath::Sparse {
                    dp.paths[i] = EntropyPath::Dense;
                    dp.payloads[i] = encode_dense(qb);
                }
            }
        }
        a.side_bytes = a.bytes - a.payload_bytes;
        a.dense_only_bytes = container::framed_len(dense_plan.to_body(false)?.len());
        rows.push(a);
    }
    Ok((out, rows))
}
