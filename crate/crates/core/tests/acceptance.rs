//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.

use std::f64::consts::PI;
use std::time::Instant;

use mmvc_core::bitio::varint_len;
use mmvc_core::channel_removal::{greedy_remove, RemovalConfig};
use mmvc_core::codec::{
    decode_stream, encode_stream, frame_hash, CodecConfig, FramePlan, FrameType, PlanePlan,
    QuantizerChoice,
};
use mmvc_core::entropy::{
    decode_block, decode_density_map, encode_block, encode_density_map, route_block, DensityMap,
    EntropyModeMap, EntropyPath, QuantizedBlock, QuantizerSpec, DEFAULT_DENSITY_THRESHOLD,
};
use mmvc_core::metrics::{bd_rate, bpp, frame_psnr, ms_ssim, psnr, MetricSpace, RdPoint};
use mmvc_core::mode_select::{
    evaluate_candidate, select_block_mode, side_bits, ModeMap, SelectParams,
};
use mmvc_core::prediction::{residual_set, Mode, PerMode, SkipMask};
use mmvc_core::synthetic::{static_clip, synthetic_clip, ClipSpec};
use mmvc_core::transform::{
    DctTransform, FeatureTensor, FeatureTransform, RealPlane, TransformSpec,
};
use mmvc_core::video_io::{Plane, SamplePlane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn report(n: u32, pass: bool, detail: &str) {
    println!(
        "criterion {n}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn random_block(
    rng: &mut ChaCha8Rng,
    gh: usize,
    gw: usize,
    ch: usize,
    density: f64,
) -> QuantizedBlock {
    let mut qb = QuantizedBlock::zeros(gh, gw, ch);
    for v in qb.indices.iter_mut() {
        if rng.gen_bool(density) {
            let mag = match rng.gen_range(0..100) {
                0..=69 => 1,
                70..=89 => rng.gen_range(2..8),
                90..=98 => rng.gen_range(8..300),
                _ => rng.gen_range(300..=32767),
            };
            *v = if rng.gen_bool(0.5) { mag } else { -mag };
        }
    }
    qb
}

#[test]
fn criterion_1_entropy_round_trip() {
    let start = Instant::now();
    let cases: Vec<(u64, usize, usize, usize, f64)> = (0..10_000u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let (b, cells) = match i % 4 {
                0 => (8, 8),
                1 => (8, rng.gen_range(1..=4)),
                2 => (4, rng.gen_range(1..=8)),
                _ => (rng.gen_range(1..=8), rng.gen_range(1..=3)),
            };
            let density = match i % 5 {
                0 => 0.0,
                1 => rng.gen_range(0.0..0.02),
                2 => rng.gen_range(0.0..0.2),
                3 => rng.gen_range(0.2..1.0),
                _ => 1.0,
            };
            (i, cells, cells, b * b, density)
        })
        .collect();
    let block_mismatches: usize = cases
        .par_iter()
        .map(|&(seed, gh, gw, ch, d)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
            let qb = random_block(&mut rng, gh, gw, ch, d);
            [EntropyPath::Dense, EntropyPath::Sparse]
                .iter()
                .filter(|&&p| {
                    decode_block(&encode_block(&qb, p), p, gh, gw, ch)
                        .ok()
                        .as_ref()
                        != Some(&qb)
                })
                .count()
        })
        .sum();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut map_mismatches = 0;
    for _ in 0..2000 {
        let n = rng.gen_range(0..600);
        let p = rng.gen_range(0.0..1.0);
        let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(p)).collect();
        // Planes without coded blocks carry no density map.
        if n > 0 {
            let enc = encode_density_map(&bits).unwrap();
            if decode_density_map(&enc, n).ok() != Some(bits.clone()) {
                map_mismatches += 1;
            }
            let dm = DensityMap(bits.clone());
            if DensityMap::decode(&dm.encode().unwrap(), n).ok() != Some(dm) {
                map_mismatches += 1;
            }
        }
        let modes = ModeMap(
            (0..n)
                .map(|_| match rng.gen_range(0..4) {
                    0 => Some(Mode::Fp),
                    1 => Some(Mode::Ofc),
                    2 => Some(Mode::Fpg),
                    _ => None,
                })
                .collect(),
        );
        if ModeMap::from_bytes(&modes.to_bytes(), n).ok() != Some(modes) {
            map_mismatches += 1;
        }
        let wt = EntropyModeMap(vec![0; n]);
        if EntropyModeMap::from_bytes(&wt.to_bytes(), n).ok() != Some(wt) {
            map_mismatches += 1;
        }
        let rows = rng.gen_range(1..20);
        let cols = rng.gen_range(1..20);
        let skip = SkipMask {
            rows,
            cols,
            bits: (0..rows * cols).map(|_| rng.gen_bool(p)).collect(),
        };
        if SkipMask::from_bytes(rows, cols, &skip.to_bytes()).ok() != Some(skip) {
            map_mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = block_mismatches == 0 && map_mismatches == 0 && secs < 30.0;
    report(
        1,
        pass,
        &format!("{block_mismatches} block mismatches over 2x10^4 codings, {map_mismatches} map mismatches, {secs:.1} s"),
    );
    assert!(pass);
}

fn random_features(rng: &mut ChaCha8Rng, cells: usize, ch: usize, scale: f64) -> FeatureTensor {
    let mut f = FeatureTensor::zeros(cells, cells, ch);
    for (i, v) in f.data.iter_mut().enumerate() {
        // Energy falls off with zig-zag index, as in natural residuals.
        let c = (i % ch) as f64;
        *v = rng.gen_range(-1.0..1.0) * scale / (1.0 + c / 4.0);
    }
    f
}

#[test]
fn criterion_2_argmin_optimality() {
    let spec = TransformSpec::dct(8).unwrap();
    let t = DctTransform::new(spec).unwrap();
    let q = QuantizerSpec::uniform(8.0).unwrap();
    let params = SelectParams {
        quantizer: &q,
        removal: RemovalConfig::new(0.05).unwrap(),
        threshold: DEFAULT_DENSITY_THRESHOLD,
        dual_path: true,
        transform: &t,
        peak: 255.0,
    };
    let cells = 4;
    let violations: usize = (0..500u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let src = random_features(&mut rng, cells, 64, 300.0);
            let reference = t.synthesize(&src).unwrap();
            let mut preds = PerMode::default();
            for m in Mode::ALL {
                let amp = rng.gen_range(1.0..60.0);
                let noise = random_features(&mut rng, cells, 64, amp);
                preds.set(m, src.add(&noise).unwrap());
            }
            let residuals = residual_set(&src, &preds).unwrap();
            let d = select_block_mode(&residuals, &preds, &reference, &params).unwrap();

            // Exhaustive oracle: code every mode and measure the stream bits.
            let measured: Vec<(Mode, usize)> = Mode::ALL
                .iter()
                .map(|&m| {
                    let c = evaluate_candidate(
                        m,
                        residuals.get(m).unwrap(),
                        preds.get(m).unwrap(),
                        &reference,
                        &params,
                    )
                    .unwrap();
                    let path = route_block(&c.indices, params.threshold);
                    let payload = encode_block(&c.indices, path);
                    let bits = 8 * (payload.len() + varint_len(payload.len() as u64))
                        + 2
                        + 1
                        + usize::from(path == EntropyPath::Dense);
                    (m, bits)
                })
                .collect();
            let min = measured.iter().map(|&(_, b)| b).min().unwrap();
            let first = measured.iter().find(|&&(_, b)| b == min).unwrap().0;
            let side_ok = side_bits(d.chosen.path, true)
                == 3 + usize::from(d.chosen.path == EntropyPath::Dense);
            usize::from(d.chosen.bits != min || d.mode() != Some(first) || !side_ok)
        })
        .sum();
    let pass = violations == 0;
    report(2, pass, &format!("{violations} violations over 500 blocks"));
    assert!(pass);
}

fn cfg_with_modes(modes: &str) -> CodecConfig {
    CodecConfig {
        modes: modes.parse().unwrap(),
        ..CodecConfig::default()
    }
}

#[test]
fn criterion_3_mode_set_monotonicity() {
    let start = Instant::now();
    let clip = synthetic_clip(&ClipSpec::default()).unwrap();
    let run = |m: &str| encode_stream(&clip, &cfg_with_modes(m)).unwrap();
    let fp = run("FP");
    let three = run("FP,OFC,FPG");
    let all = run("FP,OFC,FPG,S");

    // Per block, the chosen payload never exceeds what FP alone would cost
    // in the same closed-loop state.
    let mut compared = 0;
    let mut worse = 0;
    for f in &three.frames {
        for b in &f.blocks {
            if let Some(&fp_bits) = b.candidate_bits.get(Mode::Fp) {
                compared += 1;
                if b.bits > fp_bits {
                    worse += 1;
                }
            }
        }
    }
    let (n_fp, n_all) = (fp.bytes.len(), all.bytes.len());
    let saving = 100.0 * (1.0 - n_all as f64 / n_fp as f64);
    let secs = start.elapsed().as_secs_f64();
    let pass = compared > 0 && worse == 0 && saving >= 5.0 && secs < 300.0;
    report(
        3,
        pass,
        &format!(
            "{worse}/{compared} blocks above FP cost; {{FP}} {n_fp} B, {{FP,OFC,FPG}} {} B, {{FP,OFC,FPG,S}} {n_all} B, saving {saving:.1}%, {secs:.0} s",
            three.bytes.len()
        ),
    );
    assert!(pass);
}

/// Residual frame whose block densities scatter exponentially around `mean`.
fn residual_frame(rng: &mut ChaCha8Rng, blocks: usize, mean: f64) -> Vec<QuantizedBlock> {
    (0..blocks)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let d = (-mean * u.ln()).min(1.0);
            let mut qb = QuantizedBlock::zeros(8, 8, 64);
            for v in qb.indices.iter_mut() {
                if rng.gen_bool(d) {
                    let mut mag = 1;
                    while mag < 30 && rng.gen_bool(0.4) {
                        mag += 1;
                    }
                    *v = if rng.gen_bool(0.5) { mag } else { -mag };
                }
            }
            qb
        })
        .collect()
}

/// Bytes of a predicted-frame body holding `blocks` under either layout.
fn body_bytes(blocks: &[QuantizedBlock], dual: bool) -> (usize, usize) {
    let paths: Vec<EntropyPath> = blocks
        .iter()
        .map(|qb| {
            if dual {
                route_block(qb, DEFAULT_DENSITY_THRESHOLD)
            } else {
                EntropyPath::Dense
            }
        })
        .collect();
    let cols = 8;
    let plane = PlanePlan {
        skip: SkipMask::all_coded(blocks.len() / cols, cols),
        modes: ModeMap(vec![Some(Mode::Fpg); blocks.len()]),
        payloads: blocks
            .iter()
            .zip(&paths)
            .map(|(qb, &p)| encode_block(qb, p))
            .collect(),
        paths,
    };
    let sparse = plane
        .paths
        .iter()
        .filter(|&&p| p == EntropyPath::Sparse)
        .count();
    let plan = FramePlan {
        frame_type: FrameType::Predicted,
        planes: vec![plane],
    };
    (plan.to_body(dual).unwrap().len(), sparse)
}

#[test]
fn criterion_4_density_adaptive_saving() {
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, &mean) in [0.01, 0.02, 0.03, 0.05, 0.10, 0.15].iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + k as u64);
        let (mut dual, mut dense, mut zeros, mut total, mut sparse, mut nblocks) =
            (0, 0, 0, 0, 0, 0);
        for _ in 0..8 {
            let frame = residual_frame(&mut rng, 64, mean);
            zeros += frame
                .iter()
                .map(|qb| qb.len() - qb.nonzero_count())
                .sum::<usize>();
            total += frame.iter().map(QuantizedBlock::len).sum::<usize>();
            let (d, s) = body_bytes(&frame, true);
            dual += d;
            sparse += s;
            nblocks += frame.len();
            dense += body_bytes(&frame, false).0;
        }
        let density = 1.0 - zeros as f64 / total as f64;
        let saving = 100.0 * (1.0 - dual as f64 / dense as f64);
        let ok = density <= 0.15 && dual <= dense && (density > 0.05 || saving >= 10.0);
        pass &= ok;
        lines.push(format!(
            "d={density:.3}: dual {dual} B, dense {dense} B, saving {saving:.1}%, {sparse}/{nblocks} sparse{}",
            if ok { "" } else { " <-" }
        ));
    }
    report(4, pass, &lines.join("; "));
    assert!(pass);
}

fn mse_db(a: &RealPlane, b: &RealPlane, peak: f64) -> f64 {
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data.len() as f64;
    10.0 * (peak * peak / mse).log10()
}

#[test]
fn criterion_5_channel_removal_bound() {
    let spec = TransformSpec::dct(8).unwrap();
    let t = DctTransform::new(spec).unwrap();
    let delta = 0.05;

    // Every block of a real encode: the greedy trace stays inside the budget.
    let clip = synthetic_clip(&ClipSpec {
        width: 176,
        height: 144,
        frames: 8,
        noise: 1.5,
        ..ClipSpec::default()
    })
    .unwrap();
    let enc = encode_stream(
        &clip,
        &CodecConfig {
            delta_db: delta,
            ..CodecConfig::default()
        },
    )
    .unwrap();
    let mut traced = 0;
    let mut trace_violations = 0;
    for b in enc.frames.iter().flat_map(|f| &f.blocks) {
        if let Some(tr) = &b.removal {
            traced += 1;
            if tr.steps.iter().any(|s| {
                s.degradation > delta || (tr.base_psnr - s.psnr - s.degradation).abs() > 1e-9
            }) {
                trace_violations += 1;
            }
        }
    }

    // Random blocks: recompute the degradation independently.
    let mut oracle_violations = 0;
    let mut zero_budget_violations = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_features(&mut rng, 2, 64, 200.0);
        let pred = src.add(&random_features(&mut rng, 2, 64, 10.0)).unwrap();
        let mut residual = src.sub(&pred).unwrap();
        // A few exactly-zero channels, which removal may take for free.
        for c in [40, 50, 63] {
            for v in residual.data.iter_mut().skip(c).step_by(64) {
                *v = 0.0;
            }
        }
        let reference = t.synthesize(&src).unwrap();
        let full = t.synthesize(&pred.add(&residual).unwrap()).unwrap();
        for budget in [delta, 0.0] {
            let out = greedy_remove(
                &residual,
                &pred,
                &reference,
                RemovalConfig::new(budget).unwrap(),
                &t,
                255.0,
            )
            .unwrap();
            let removed = t.synthesize(&pred.add(&out.residual).unwrap()).unwrap();
            let drop = mse_db(&full, &reference, 255.0) - mse_db(&removed, &reference, 255.0);
            if drop > budget + 1e-9 {
                oracle_violations += 1;
            }
            if budget == 0.0 {
                for c in 0..64 {
                    let orig_zero = residual.channel(c).all(|v| v == 0.0);
                    if !out.mask.0[c] && !orig_zero {
                        // Only zero-impact channels may go.
                        let step = out.trace.steps.iter().find(|s| s.channel == c).unwrap();
                        if step.degradation > 0.0 {
                            zero_budget_violations += 1;
                        }
                    }
                    if out.mask.0[c] && !out.residual.channel(c).eq(residual.channel(c)) {
                        zero_budget_violations += 1;
                    }
                }
            }
        }
    }
    let pass = traced > 0
        && trace_violations == 0
        && oracle_violations == 0
        && zero_budget_violations == 0;
    report(
        5,
        pass,
        &format!(
            "{trace_violations}/{traced} traced blocks over budget, {oracle_violations} oracle violations, {zero_budget_violations} zero-budget violations"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_closed_loop() {
    let clip = synthetic_clip(&ClipSpec {
        noise: 2.0,
        seed: 6,
        ..ClipSpec::default()
    })
    .unwrap();
    let enc = encode_stream(&clip, &CodecConfig::default()).unwrap();
    let dec = decode_stream(&enc.bytes).unwrap();
    let hashes = dec.trace();
    let mismatches = enc
        .trace()
        .iter()
        .zip(&hashes)
        .filter(|(a, b)| a != b)
        .count()
        + enc
            .recon
            .iter()
            .zip(&dec.frames)
            .filter(|(a, b)| **a != b.frame)
            .count()
        + enc.frames.len().abs_diff(dec.frames.len());
    let pass = mismatches == 0 && enc.frames.len() == 30;
    report(
        6,
        pass,
        &format!("{mismatches} mismatches over {} frames", dec.frames.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_7_skip_correctness() {
    let base = synthetic_clip(&ClipSpec {
        frames: 1,
        ..ClipSpec::default()
    })
    .unwrap();
    let clip = static_clip(&base.frames[0], 10).unwrap();
    let enc = encode_stream(&clip, &CodecConfig::default()).unwrap();
    let dec = decode_stream(&enc.bytes).unwrap();
    let first = frame_hash(&dec.frames[0].frame);
    let mut bad = Vec::new();
    for (t, f) in dec.frames.iter().enumerate().skip(1) {
        let mask_bytes: usize = f.plan.planes.iter().map(|p| p.skip.byte_len()).sum();
        let coded: usize = f.plan.planes.iter().map(|p| p.skip.popcount()).sum();
        let body = enc.frames[t].body_bytes;
        if coded != 0 || body > mask_bytes + 16 || f.hash != first || f.frame != dec.frames[0].frame
        {
            bad.push(t);
        }
    }
    let body = enc.frames[1].body_bytes;
    let pass = bad.is_empty();
    report(
        7,
        pass,
        &format!("bad frames {bad:?}; body {body} B per skipped frame"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_rd_monotonicity() {
    let clip = synthetic_clip(&ClipSpec {
        width: 176,
        height: 144,
        frames: 10,
        noise: 1.0,
        seed: 8,
        ..ClipSpec::default()
    })
    .unwrap();
    let points: Vec<RdPoint> = [32.0, 16.0, 8.0, 4.0]
        .par_iter()
        .map(|&step| {
            let cfg = CodecConfig {
                quantizer: QuantizerChoice::Uniform { step },
                ..CodecConfig::default()
            };
            let enc = encode_stream(&clip, &cfg).unwrap();
            let psnr = clip
                .frames
                .iter()
                .zip(&enc.recon)
                .map(|(a, b)| frame_psnr(a, b, MetricSpace::Luma).unwrap())
                .sum::<f64>()
                / clip.len() as f64;
            RdPoint {
                bpp: bpp(enc.bytes.len(), 176, 144, clip.len()).unwrap(),
                psnr,
                msssim: 0.0,
            }
        })
        .collect();
    let monotone = points
        .windows(2)
        .all(|w| w[1].psnr >= w[0].psnr && w[1].bpp >= w[0].bpp);
    let self_bd = bd_rate(&points, &points).unwrap();
    let pass = monotone && self_bd.abs() <= 0.01;
    let pts: Vec<String> = points
        .iter()
        .map(|p| format!("{:.3} bpp/{:.2} dB", p.bpp, p.psnr))
        .collect();
    report(
        8,
        pass,
        &format!("{}; self BD-rate {self_bd:.2e}%", pts.join(", ")),
    );
    assert!(pass);
}

/// Direct N⁴ DCT-II with orthonormal scaling, natural (row, col) order.
fn dct_oracle(tile: &[f64], n: usize) -> Vec<f64> {
    let a = |k: usize| {
        if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        }
    };
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            let mut acc = 0.0;
            for y in 0..n {
                for x in 0..n {
                    acc += tile[y * n + x]
                        * (PI * (2 * y + 1) as f64 * u as f64 / (2 * n) as f64).cos()
                        * (PI * (2 * x + 1) as f64 * v as f64 / (2 * n) as f64).cos();
                }
            }
            out[u * n + v] = a(u) * a(v) * acc;
        }
    }
    out
}

/// Textbook MS-SSIM: explicit 2-D window, two-pass moments per pixel.
fn ms_ssim_oracle(a: &SamplePlane, b: &SamplePlane, peak: f64) -> f64 {
    let weights = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
    let mut win = [[0.0f64; 11]; 11];
    let mut s = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, w) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *w = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            s += *w;
        }
    }
    win.iter_mut().flatten().for_each(|w| *w /= s);
    let (c1, c2) = ((0.01 * peak).powi(2), (0.03 * peak).powi(2));
    let mut x: Vec<Vec<f64>> = (0..a.height)
        .map(|r| a.row(r).iter().map(|&v| v as f64).collect())
        .collect();
    let mut y: Vec<Vec<f64>> = (0..b.height)
        .map(|r| b.row(r).iter().map(|&v| v as f64).collect())
        .collect();
    let mut result = 1.0;
    for (scale, &w) in weights.iter().enumerate() {
        let (h, wd) = (x.len(), x[0].len());
        let (mut ssim_sum, mut cs_sum, mut count) = (0.0, 0.0, 0.0);
        for r in 0..=h - 11 {
            for c in 0..=wd - 11 {
                let (mut mx, mut my) = (0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        mx += win[i][j] * x[r + i][c + j];
                        my += win[i][j] * y[r + i][c + j];
                    }
                }
                let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
                for i in 0..11 {
                    for j in 0..11 {
                        let (dx, dy) = (x[r + i][c + j] - mx, y[r + i][c + j] - my);
                        vx += win[i][j] * dx * dx;
                        vy += win[i][j] * dy * dy;
                        cov += win[i][j] * dx * dy;
                    }
                }
                let cs = (2.0 * cov + c2) / (vx + vy + c2);
                let l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
                ssim_sum += l * cs;
                cs_sum += cs;
                count += 1.0;
            }
        }
        let term = if scale == 4 {
            ssim_sum / count
        } else {
            cs_sum / count
        };
        result *= term.max(0.0).powf(w);
        let half = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..m.len() / 2)
                .map(|r| {
                    (0..m[0].len() / 2)
                        .map(|c| {
                            (m[2 * r][2 * c]
                                + m[2 * r][2 * c + 1]
                                + m[2 * r + 1][2 * c]
                                + m[2 * r + 1][2 * c + 1])
                                / 4.0
                        })
                        .collect()
                })
                .collect()
        };
        x = half(&x);
        y = half(&y);
    }
    result
}

#[test]
fn criterion_9_transform_and_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut dct_err: f64 = 0.0;
    for n in [4usize, 8, 16] {
        let t = DctTransform::new(TransformSpec::dct(n).unwrap()).unwrap();
        for _ in 0..20 {
            let plane = RealPlane::from_fn(n, n, |_, _| rng.gen_range(-128.0..128.0));
            let f = t.analyze(&plane).unwrap();
            let oracle = dct_oracle(&plane.data, n);
            for (c, &(u, v)) in mmvc_core::transform::zigzag_order(n).iter().enumerate() {
                dct_err = dct_err.max((f.data[c] - oracle[u * n + v]).abs());
            }
        }
    }

    let a = Plane::filled(16, 16, 100u16);
    let mut b = a.clone();
    for (i, v) in b.data.iter_mut().enumerate() {
        *v = if i % 2 == 0 { 101 } else { 99 };
    }
    let p = psnr(&a, &b, 8).unwrap();

    let img = synthetic_clip(&ClipSpec {
        width: 192,
        height: 192,
        frames: 1,
        ..ClipSpec::default()
    })
    .unwrap()
    .frames[0]
        .planes[0]
        .clone();
    let mut nrng = ChaCha8Rng::seed_from_u64(19);
    let noisy = img.map(|v| (v as i32 + nrng.gen_range(-12..=12)).clamp(0, 255) as u16);
    let ours = ms_ssim(&img, &noisy, 8).unwrap();
    let oracle = ms_ssim_oracle(&img, &noisy, 255.0);

    let pass = dct_err <= 1e-9 && (p - 48.13).abs() <= 0.01 && (ours - oracle).abs() <= 1e-4;
    report(
        9,
        pass,
        &format!("DCT max error {dct_err:.1e}; PSNR at MSE 1 = {p:.4} dB; MS-SSIM {ours:.6} vs oracle {oracle:.6}"),
    );
    assert!(pass);
}
