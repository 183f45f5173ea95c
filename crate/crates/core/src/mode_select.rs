//! Per-block choice among the prediction candidates by measured code length.

use rayon::prelude::*;

use crate::bitio::{pack_bits, unpack_bits, varint_len};
use crate::channel_removal::{greedy_remove, ChannelMask, RemovalConfig, RemovalTrace};
use crate::entropy::{
    dequantize, encode_block, quantize, route_block, EntropyPath, QuantizedBlock, QuantizerSpec,
};
use crate::error::{Error, Result};
use crate::prediction::{Mode, PerMode, ResidualSet, SkipMask};
use crate::transform::{FeatureTensor, LinearTransform, RealPlane};

/// Wire code of an intra-coded block in the mode map.
pub const INTRA_CODE: u8 = 3;

/// Mode per coded block; `None` marks an intra block (code 3).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModeMap(pub Vec<Option<Mode>>);

impl ModeMap {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn byte_len(n: usize) -> usize {
        (2 * n).div_ceil(8)
    }

    /// Two bits per entry, MSB first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let bits: Vec<bool> = self
            .0
            .iter()
            .flat_map(|m| {
                let code = m.map_or(INTRA_CODE, |m| m as u8);
                [code & 2 != 0, code & 1 != 0]
            })
            .collect();
        pack_bits(&bits)
    }

    pub fn from_bytes(bytes: &[u8], n: usize) -> Result<Self> {
        let bits = unpack_bits(bytes, 2 * n)?;
        Ok(Self(
            bits.chunks(2)
                .map(|b| match (u8::from(b[0]) << 1) | u8::from(b[1]) {
                    0 => Some(Mode::Fp),
                    1 => Some(Mode::Ofc),
                    2 => Some(Mode::Fpg),
                    _ => None,
                })
                .collect(),
        ))
    }
}

/// Inputs shared by every block decision of a plane.
#[derive(Clone, Copy)]
pub struct SelectParams<'a> {
    pub quantizer: &'a QuantizerSpec,
    pub removal: RemovalConfig,
    pub threshold: f64,
    /// When false every block takes the dense path and no density bit is sent.
    pub dual_path: bool,
    pub transform: &'a dyn LinearTransform,
    /// Sample peak for block PSNR.
    pub peak: f64,
}

/// Side bits a coded block spends besides its length-prefixed payload.
pub fn side_bits(path: EntropyPath, dual_path: bool) -> usize {
    2 + usize::from(dual_path) + usize::from(path == EntropyPath::Dense)
}

/// Total bits of one coded block: payload and its varint length prefix,
/// mode code, density bit and w_t bit.
pub fn coded_bits(payload_len: usize, path: EntropyPath, dual_path: bool) -> usize {
    8 * (payload_len + varint_len(payload_len as u64)) + side_bits(path, dual_path)
}

/// One evaluated candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub mode: Option<Mode>,
    pub indices: QuantizedBlock,
    pub path: EntropyPath,
    pub payload: Vec<u8>,
    pub bits: usize,
    pub mask: ChannelMask,
    pub trace: Option<RemovalTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecision {
    pub chosen: Candidate,
    /// Measured bits of every evaluated mode.
    pub candidate_bits: PerMode<usize>,
}

impl BlockDecision {
    pub fn mode(&self) -> Option<Mode> {
        self.chosen.mode
    }

    pub fn coded_bits(&self) -> usize {
        self.chosen.bits
    }
}

fn finish_candidate(
    mode: Option<Mode>,
    indices: QuantizedBlock,
    mask: ChannelMask,
    trace: Option<RemovalTrace>,
    params: &SelectParams,
) -> Candidate {
    let path = if params.dual_path {
        route_block(&indices, params.threshold)
    } else {
        EntropyPath::Dense
    };
    let payload = encode_block(&indices, path);
    let bits = coded_bits(payload.len(), path, params.dual_path);
    Candidate {
        mode,
        indices,
        path,
        payload,
        bits,
        mask,
        trace,
    }
}

/// Quantizes one residual, removes channels against the dequantized
/// reconstruction, and entropy-codes the result.
pub fn evaluate_candidate(
    mode: Mode,
    residual: &FeatureTensor,
    prediction: &FeatureTensor,
    reference: &RealPlane,
    params: &SelectParams,
) -> Result<Candidate> {
    let mut indices = quantize(residual, params.quantizer);
    let coded = dequantize(&indices, params.quantizer)?;
    let outcome = greedy_remove(
        &coded,
        prediction,
        reference,
        params.removal,
        params.transform,
        params.peak,
    )?;
    for (c, &kept) in outcome.mask.0.iter().enumerate() {
        if !kept {
            indices.zero_channel(c);
        }
    }
    Ok(finish_candidate(
        Some(mode),
        indices,
        outcome.mask,
        Some(outcome.trace),
        params,
    ))
}

/// Codes every candidate and keeps the one with the fewest bits; ties go to
/// the earlier mode in FP, OFC, FPG order.
pub fn select_block_mode(
    residuals: &ResidualSet,
    predictions: &PerMode<FeatureTensor>,
    reference: &RealPlane,
    params: &SelectParams,
) -> Result<BlockDecision> {
    let mut best: Option<Candidate> = None;
    let mut candidate_bits = PerMode::default();
    for (mode, residual) in residuals.iter() {
        let prediction = predictions
            .get(mode)
            .ok_or_else(|| Error::DimensionMismatch(format!("no {} prediction", mode.name())))?;
        let cand = evaluate_candidate(mode, residual, prediction, reference, params)?;
        candidate_bits.set(mode, cand.bits);
        if best.as_ref().is_none_or(|b| cand.bits < b.bits) {
            best = Some(cand);
        }
    }
    let chosen = best.ok_or(Error::NoCandidates)?;
    Ok(BlockDecision {
        chosen,
        candidate_bits,
    })
}

/// Intra block: the quantized features themselves, dense path, no removal.
pub fn intra_block(features: &FeatureTensor, params: &SelectParams) -> BlockDecision {
    let indices = quantize(features, params.quantizer);
    let mask = ChannelMask::all_kept(indices.channels);
    let path = EntropyPath::Dense;
    let payload = encode_block(&indices, path);
    let bits = coded_bits(payload.len(), path, params.dual_path);
    BlockDecision {
        chosen: Candidate {
            mode: None,
            indices,
            path,
            payload,
            bits,
            mask,
            trace: None,
        },
        candidate_bits: PerMode::default(),
    }
}

/// Block decisions for one plane, row-major over coded blocks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlaneDecisions {
    pub skip: SkipMask,
    /// (block row, block col) of each coded block.
    pub positions: Vec<(usize, usize)>,
    pub blocks: Vec<BlockDecision>,
}

/// Runs [`select_block_mode`] on every non-skipped block of a plane.
///
/// `f_opt` and the predictions cover the whole plane; `reference` is the
/// level-shifted source plane. With `intra` set, every block is coded from
/// `f_opt` directly and the mask is ignored.
pub fn plan_plane(
    f_opt: &FeatureTensor,
    predictions: &PerMode<FeatureTensor>,
    reference: &RealPlane,
    skip: &SkipMask,
    cells: usize,
    intra: bool,
    params: &SelectParams,
) -> Result<PlaneDecisions> {
    let b = params.transform.spec().block_size;
    let px = cells * b;
    if f_opt.grid_h != skip.rows * cells || f_opt.grid_w != skip.cols * cells {
        return Err(Error::DimensionMismatch(
            "skip mask does not match features".into(),
        ));
    }
    for (_, p) in predictions.iter() {
        if !p.same_shape(f_opt) {
            return Err(Error::DimensionMismatch("prediction shape".into()));
        }
    }
    let positions: Vec<(usize, usize)> = (0..skip.rows)
        .flat_map(|r| (0..skip.cols).map(move |c| (r, c)))
        .filter(|&(r, c)| intra || skip.coded(r, c))
        .collect();
    let blocks = positions
        .par_iter()
        .map(|&(r, c)| {
            let fo = f_opt.block(r, c, cells);
            if intra {
                return Ok(intra_block(&fo, params));
            }
            let preds = predictions.map(|_, p| p.block(r, c, cells));
            let res = preds.map(|_, p| fo.sub(p).expect("block shapes agree"));
            let refb = reference.sub_plane(c * px, r * px, px, px);
            select_block_mode(&res, &preds, &refb, params)
        })
        .collect::<Result<Vec<_>>>()?;
    let skip = if intra {
        SkipMask::all_coded(skip.rows, skip.cols)
    } else {
        skip.clone()
    };
    Ok(PlaneDecisions {
        skip,
        positions,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::decode_block;
    use crate::prediction::residual_set;
    use crate::transform::{DctTransform, FeatureTransform, TransformSpec};
    use crate::video_io::Plane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (DctTransform, QuantizerSpec) {
        (
            DctTransform::new(TransformSpec::dct(8).unwrap()).unwrap(),
            QuantizerSpec::uniform(8.0).unwrap(),
        )
    }

    fn params<'a>(t: &'a DctTransform, q: &'a QuantizerSpec) -> SelectParams<'a> {
        SelectParams {
            quantizer: q,
            removal: RemovalConfig::default(),
            threshold: 0.15,
            dual_path: true,
            transform: t,
            peak: 255.0,
        }
    }

    fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize, amp: f64) -> RealPlane {
        Plane::from_vec(w, h, (0..w * h).map(|_| rng.gen_range(-amp..amp)).collect()).unwrap()
    }

    #[test]
    fn mode_map_round_trip() {
        let m = ModeMap(vec![
            Some(Mode::Fp),
            None,
            Some(Mode::Fpg),
            Some(Mode::Ofc),
            Some(Mode::Fp),
        ]);
        let b = m.to_bytes();
        assert_eq!(b.len(), ModeMap::byte_len(5));
        assert_eq!(b, vec![0b0011_1001, 0b0000_0000]);
        assert_eq!(ModeMap::from_bytes(&b, 5).unwrap(), m);
        assert!(ModeMap::from_bytes(&[0, 0, 0], 5).is_err());
        assert!(ModeMap::from_bytes(&[0, 1], 5).is_err());
    }

    #[test]
    fn identical_candidates_pick_fp() {
        let (t, q) = setup();
        let p = params(&t, &q);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let src = random_plane(&mut rng, 16, 16, 100.0);
        let fo = t.analyze(&src).unwrap();
        let pred = t.analyze(&random_plane(&mut rng, 16, 16, 100.0)).unwrap();
        let mut preds = PerMode::default();
        for m in Mode::ALL {
            preds.set(m, pred.clone());
        }
        let res = residual_set(&fo, &preds).unwrap();
        let d = select_block_mode(&res, &preds, &src, &p).unwrap();
        assert_eq!(d.mode(), Some(Mode::Fp));
        assert_eq!(d.candidate_bits.modes().count(), 3);
    }

    #[test]
    fn choice_is_the_measured_minimum() {
        let (t, q) = setup();
        let p = params(&t, &q);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let src = random_plane(&mut rng, 16, 16, 60.0);
            let fo = t.analyze(&src).unwrap();
            let mut preds = PerMode::default();
            for m in Mode::ALL {
                let amp = rng.gen_range(1.0..40.0);
                let noise = random_plane(&mut rng, 16, 16, amp);
                let pp = Plane::from_vec(
                    16,
                    16,
                    src.data
                        .iter()
                        .zip(&noise.data)
                        .map(|(a, b)| a + b)
                        .collect(),
                )
                .unwrap();
                preds.set(m, t.analyze(&pp).unwrap());
            }
            let res = residual_set(&fo, &preds).unwrap();
            let d = select_block_mode(&res, &preds, &src, &p).unwrap();
            let min = d.candidate_bits.iter().map(|(_, &b)| b).min().unwrap();
            assert_eq!(d.coded_bits(), min);
            let c = &d.chosen;
            assert_eq!(
                decode_block(&c.payload, c.path, 2, 2, 64).unwrap(),
                c.indices
            );
        }
    }

    #[test]
    fn empty_candidate_set_errors() {
        let (t, q) = setup();
        let p = params(&t, &q);
        let src = Plane::filled(8, 8, 0.0);
        assert!(matches!(
            select_block_mode(&PerMode::default(), &PerMode::default(), &src, &p),
            Err(Error::NoCandidates)
        ));
    }

    #[test]
    fn all_skip_plane_has_no_blocks() {
        let (t, q) = setup();
        let p = params(&t, &q);
        let fo = FeatureTensor::zeros(4, 4, 64);
        let mut preds = PerMode::default();
        preds.set(Mode::Fpg, fo.clone());
        let skip = SkipMask {
            rows: 2,
            cols: 2,
            bits: vec![false; 4],
        };
        let src = Plane::filled(32, 32, 0.0);
        let d = plan_plane(&fo, &preds, &src, &skip, 2, false, &p).unwrap();
        assert!(d.blocks.is_empty());
        let mut skip = skip;
        skip.bits[3] = true;
        let d = plan_plane(&fo, &preds, &src, &skip, 2, false, &p).unwrap();
        assert_eq!(d.positions, vec![(1, 1)]);
        assert_eq!(d.blocks[0].mode(), Some(Mode::Fpg));
    }

    #[test]
    fn dense_only_config_never_routes_sparse() {
        let (t, q) = setup();
        let mut p = params(&t, &q);
        p.dual_path = false;
        let fo = FeatureTensor::zeros(1, 1, 64);
        let mut preds = PerMode::default();
        preds.set(Mode::Fpg, fo.clone());
        let res = residual_set(&fo, &preds).unwrap();
        let d = select_block_mode(&res, &preds, &Plane::filled(8, 8, 0.0), &p).unwrap();
        assert_eq!(d.chosen.path, EntropyPath::Dense);
        assert_eq!(d.coded_bits(), 8 * (d.chosen.payload.len() + 1) + 3);
    }
}
