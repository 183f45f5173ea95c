//! Greedy per-block residual channel removal under a PSNR budget.
//!
//! Each step zeroes the channel whose removal costs the least block PSNR,
//! measured on the synthesized reconstruction `synthesize(pred + res)`
//! against the source pixels. Removal stops before the cumulative loss
//! would exceed `delta_db`.

use crate::error::{Error, Result};
use crate::metrics::psnr_from_mse;
use crate::transform::{FeatureTensor, LinearTransform, RealPlane};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemovalConfig {
    pub delta_db: f64,
}

impl Default for RemovalConfig {
    fn default() -> Self {
        Self { delta_db: 0.05 }
    }
}

impl RemovalConfig {
    pub fn new(delta_db: f64) -> Result<Self> {
        if !(delta_db >= 0.0) {
            return Err(Error::InvalidConfig(format!("delta_db {delta_db} < 0")));
        }
        Ok(Self { delta_db })
    }
}

/// One bit per channel; `true` = kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelMask(pub Vec<bool>);

impl ChannelMask {
    pub fn all_kept(channels: usize) -> Self {
        Self(vec![true; channels])
    }

    pub fn removed(&self) -> usize {
        self.0.iter().filter(|&&k| !k).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemovalStep {
    pub channel: usize,
    /// Block PSNR after this removal.
    pub psnr: f64,
    /// `base_psnr − psnr`
    pub degradation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemovalTrace {
    pub base_psnr: f64,
    pub steps: Vec<RemovalStep>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemovalOutcome {
    pub residual: FeatureTensor,
    pub mask: ChannelMask,
    pub trace: RemovalTrace,
}

/// Greedily zeroes residual channels of one block.
///
/// `reference` holds the block's source pixels in the same (level-shifted)
/// domain the transform synthesizes into; `peak` is the sample peak used for
/// PSNR.
pub fn greedy_remove<T: LinearTransform + ?Sized>(
    residual: &FeatureTensor,
    prediction: &FeatureTensor,
    reference: &RealPlane,
    cfg: RemovalConfig,
    transform: &T,
    peak: f64,
) -> Result<RemovalOutcome> {
    let b = transform.spec().block_size;
    let channels = residual.channels;
    if !residual.same_shape(prediction)
        || channels != b * b
        || reference.width != residual.grid_w * b
        || reference.height != residual.grid_h * b
    {
        return Err(Error::DimensionMismatch(
            "residual, prediction and reference blocks disagree".into(),
        ));
    }
    let npix = (reference.width * reference.height) as f64;
    let psnr_of = |sse: f64| psnr_from_mse(sse / npix, peak);

    let recon = transform.synthesize(&prediction.add(residual)?)?;
    let mut err: Vec<f64> = recon
        .data
        .iter()
        .zip(&reference.data)
        .map(|(r, s)| r - s)
        .collect();
    let mut sse: f64 = err.iter().map(|e| e * e).sum();
    let base_psnr = psnr_of(sse);

    let mut out = residual.clone();
    let mut kept = vec![true; channels];
    let nonzero: Vec<bool> = (0..channels)
        .map(|c| residual.channel(c).any(|v| v != 0.0))
        .collect();
    let width = reference.width;

    // SSE after removing channel c given the current error image.
    let removal_sse = |err: &[f64], c: usize| -> f64 {
        let basis = transform.basis_image(c);
        let mut acc = 0.0;
        for gr in 0..residual.grid_h {
            for gc in 0..residual.grid_w {
                let coef = residual.cell(gr, gc)[c];
                for y in 0..b {
                    let row = &err[(gr * b + y) * width + gc * b..][..b];
                    for x in 0..b {
                        let e = row[x] - coef * basis[y * b + x];
                        acc += e * e;
                    }
                }
            }
        }
        acc
    };

    // Zero channels leave the error image untouched, so cached candidate
    // costs stay valid until a nonzero channel goes.
    let mut cache: Vec<Option<f64>> = vec![None; channels];
    let mut steps = Vec::new();
    loop {
        let mut best: Option<(usize, f64, f64)> = None;
        for c in (0..channels).filter(|&c| kept[c]) {
            let cand_sse = if nonzero[c] {
                *cache[c].get_or_insert_with(|| removal_sse(&err, c))
            } else {
                sse
            };
            let p = psnr_of(cand_sse);
            if best.is_none_or(|(_, bp, _)| p > bp) {
                best = Some((c, p, cand_sse));
            }
        }
        let Some((c, p, cand_sse)) = best else { break };
        let degradation = base_psnr - p;
        if degradation > cfg.delta_db {
            break;
        }
        kept[c] = false;
        if nonzero[c] {
            let basis = transform.basis_image(c);
            for gr in 0..residual.grid_h {
                for gc in 0..residual.grid_w {
                    let coef = residual.cell(gr, gc)[c];
                    for y in 0..b {
                        let row = &mut err[(gr * b + y) * width + gc * b..][..b];
                        for x in 0..b {
                            row[x] -= coef * basis[y * b + x];
                        }
                    }
                }
            }
            sse = cand_sse;
            cache.iter_mut().for_each(|v| *v = None);
            for gr in 0..out.grid_h {
                for gc in 0..out.grid_w {
                    out.cell_mut(gr, gc)[c] = 0.0;
                }
            }
        }
        steps.push(RemovalStep {
            channel: c,
            psnr: p,
            degradation,
        });
    }

    Ok(RemovalOutcome {
        residual: out,
        mask: ChannelMask(kept),
        trace: RemovalTrace { base_psnr, steps },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{DctTransform, FeatureTransform, TransformSpec};
    use crate::video_io::Plane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (DctTransform, FeatureTensor, FeatureTensor, RealPlane) {
        let t = DctTransform::new(TransformSpec::dct(4).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reference = Plane::from_vec(
            8,
            8,
            (0..64).map(|_| rng.gen_range(-100.0..100.0)).collect(),
        )
        .unwrap();
        let f_opt = t.analyze(&reference).unwrap();
        let mut pred = f_opt.clone();
        for v in &mut pred.data {
            *v += rng.gen_range(-3.0..3.0);
        }
        // residual quantized coarsely so the baseline PSNR is finite
        let mut res = f_opt.sub(&pred).unwrap();
        for v in &mut res.data {
            *v = (*v / 2.0).round() * 2.0;
        }
        (t, res, pred, reference)
    }

    #[test]
    fn zero_channel_removed_first_at_no_cost() {
        let (t, mut res, pred, reference) = setup(1);
        for gr in 0..2 {
            for gc in 0..2 {
                res.cell_mut(gr, gc)[5] = 0.0;
            }
        }
        let out = greedy_remove(
            &res,
            &pred,
            &reference,
            RemovalConfig::new(0.0).unwrap(),
            &t,
            255.0,
        )
        .unwrap();
        assert!(out
            .trace
            .steps
            .iter()
            .any(|s| s.channel == 5 && s.degradation == 0.0));
        assert!(!out.mask.0[5]);
    }

    #[test]
    fn zero_budget_keeps_all_impactful_channels() {
        let (t, res, pred, reference) = setup(2);
        let out = greedy_remove(
            &res,
            &pred,
            &reference,
            RemovalConfig::new(0.0).unwrap(),
            &t,
            255.0,
        )
        .unwrap();
        for s in &out.trace.steps {
            assert!(s.degradation <= 0.0);
            assert!(res.channel(s.channel).all(|v| v == 0.0));
        }
        let zero_channels = (0..16)
            .filter(|&c| res.channel(c).all(|v| v == 0.0))
            .count();
        assert_eq!(out.mask.removed(), zero_channels);
        assert_eq!(out.residual, res);
    }

    #[test]
    fn budget_respected_and_only_masked_channels_change() {
        for seed in 0..20 {
            let (t, res, pred, reference) = setup(seed);
            let cfg = RemovalConfig::new(0.5).unwrap();
            let out = greedy_remove(&res, &pred, &reference, cfg, &t, 255.0).unwrap();
            for s in &out.trace.steps {
                assert!(s.degradation <= cfg.delta_db);
            }
            for c in 0..16 {
                let changed = out.residual.channel(c).ne(res.channel(c));
                if out.mask.0[c] {
                    assert!(!changed);
                } else {
                    assert!(out.residual.channel(c).all(|v| v == 0.0));
                }
            }
            let nnz = |f: &FeatureTensor| f.data.iter().filter(|v| **v != 0.0).count();
            assert!(nnz(&out.residual) <= nnz(&res));
        }
    }

    #[test]
    fn negative_budget_rejected() {
        assert!(RemovalConfig::new(-0.1).is_err());
    }
}
