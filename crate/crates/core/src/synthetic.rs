//! Deterministic test clips: textured background, moving objects, a
//! panning band and an untouched static area.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::video_io::{max_sample, ChromaMode, Frame, FrameSequence, Plane, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct ClipSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    /// Std-dev of per-frame sensor noise, in 8-bit units. Zero keeps
    /// static areas bit-identical across frames.
    pub noise: f64,
    pub chroma: ChromaMode,
    pub bit_depth: u8,
}

impl Default for ClipSpec {
    fn default() -> Self {
        Self {
            width: 352,
            height: 288,
            frames: 30,
            seed: 1,
            noise: 0.0,
            chroma: ChromaMode::Yuv420,
            bit_depth: 8,
        }
    }
}

/// Periodic multi-octave value noise, roughly zero-mean.
fn texture(w: usize, h: usize, rng: &mut ChaCha8Rng, base: f64) -> Plane<f64> {
    let octaves: Vec<(usize, f64, usize, usize, Vec<f64>)> =
        [(48usize, 1.0), (24, 0.5), (12, 0.3), (6, 0.15)]
            .into_iter()
            .map(|(cell, amp)| {
                let (lw, lh) = (w.div_ceil(cell), h.div_ceil(cell));
                let lattice = (0..lw * lh).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (cell, amp, lw, lh, lattice)
            })
            .collect();
    let mut out = Plane::from_fn(w, h, |x, y| {
        octaves
            .iter()
            .map(|(cell, amp, lw, lh, lattice)| {
                let at = |i: usize, j: usize| lattice[(j % lh) * lw + (i % lw)];
                let (fx, fy) = (x as f64 / *cell as f64, y as f64 / *cell as f64);
                let (i, j) = (fx.floor() as usize, fy.floor() as usize);
                let (u, t) = (fx - i as f64, fy - j as f64);
                let (u, t) = (u * u * (3.0 - 2.0 * u), t * t * (3.0 - 2.0 * t));
                let top = at(i, j) * (1.0 - u) + at(i + 1, j) * u;
                let bot = at(i, j + 1) * (1.0 - u) + at(i + 1, j + 1) * u;
                base * amp * (top * (1.0 - t) + bot * t)
            })
            .sum()
    });
    for v in out.data.iter_mut() {
        *v += rng.gen_range(-2.0..2.0);
    }
    out
}

fn wrap(v: isize, n: usize) -> usize {
    v.rem_euclid(n as isize) as usize
}

struct Layer {
    /// Luma, Cb, Cr textures of the layer's own size.
    tex: [Plane<f64>; 3],
    mean: [f64; 3],
    x0: isize,
    y0: isize,
    vx: isize,
    vy: isize,
    /// Content scrolls inside a fixed window instead of the window moving.
    pans: bool,
}

impl Layer {
    fn sample(&self, c: usize, x: usize, y: usize, t: usize) -> Option<f64> {
        let tex = &self.tex[c];
        let (w, h) = (tex.width as isize, tex.height as isize);
        let (dx, dy) = (self.vx * t as isize, self.vy * t as isize);
        let (lx, ly) = if self.pans {
            let (lx, ly) = (x as isize - self.x0, y as isize - self.y0);
            if !(0..w).contains(&lx) || !(0..h).contains(&ly) {
                return None;
            }
            (lx - dx, ly - dy)
        } else {
            let (lx, ly) = (x as isize - self.x0 - dx, y as isize - self.y0 - dy);
            if !(0..w).contains(&lx) || !(0..h).contains(&ly) {
                return None;
            }
            (lx, ly)
        };
        Some(self.mean[c] + tex.get(wrap(lx, tex.width), wrap(ly, tex.height)))
    }
}

/// Builds the clip described by `spec`. The top-left quarter is never
/// touched by moving content.
pub fn synthetic_clip(spec: &ClipSpec) -> Result<FrameSequence> {
    let (w, h) = (spec.width, spec.height);
    if w < 16 || h < 16 || spec.frames == 0 {
        return Err(Error::InvalidConfig(format!(
            "clip {w}x{h}x{}",
            spec.frames
        )));
    }
    if !(8..=16).contains(&spec.bit_depth) {
        return Err(Error::InvalidConfig(format!(
            "bit depth {}",
            spec.bit_depth
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut layer = |lw: usize, lh: usize, mean: [f64; 3], x0, y0, vx, vy, pans| Layer {
        tex: [
            texture(lw, lh, &mut rng, 55.0),
            texture(lw, lh, &mut rng, 18.0),
            texture(lw, lh, &mut rng, 18.0),
        ],
        mean,
        x0,
        y0,
        vx,
        vy,
        pans,
    };
    let (wi, hi) = (w as isize, h as isize);
    let layers = vec![
        layer(w, h, [120.0, 128.0, 128.0], 0, 0, 0, 0, false),
        // Scrolling band along the bottom fifth.
        layer(w, h / 5, [100.0, 120.0, 140.0], 0, hi - hi / 5, 3, 0, true),
        layer(
            w / 3,
            h / 3,
            [160.0, 100.0, 150.0],
            wi / 2,
            hi / 3,
            2,
            0,
            false,
        ),
        layer(
            w / 4,
            h / 4,
            [80.0, 150.0, 110.0],
            wi - wi / 4 - 4,
            hi / 8,
            -1,
            1,
            false,
        ),
    ];

    let scale = f64::from(1u32 << (spec.bit_depth - 8));
    let peak = max_sample(spec.bit_depth) as f64;
    let frames = (0..spec.frames)
        .map(|t| {
            let mut full: Vec<Plane<f64>> = (0..3)
                .map(|c| {
                    Plane::from_fn(w, h, |x, y| {
                        layers
                            .iter()
                            .rev()
                            .find_map(|l| l.sample(c, x, y, t))
                            .unwrap_or(128.0)
                    })
                })
                .collect();
            if spec.noise > 0.0 {
                let mut nrng =
                    ChaCha8Rng::seed_from_u64(spec.seed ^ (t as u64 + 1).wrapping_mul(0x9e37_79b9));
                for p in &mut full {
                    for v in p.data.iter_mut() {
                        // Sum of uniforms: close enough to Gaussian.
                        let n: f64 = (0..4).map(|_| nrng.gen_range(-1.0..1.0)).sum::<f64>();
                        *v += n * spec.noise * (3.0f64 / 4.0).sqrt();
                    }
                }
            }
            let mut frame = Frame::gray(w, h, spec.bit_depth, spec.chroma);
            for (i, plane) in frame.planes.iter_mut().enumerate() {
                let (sx, sy) = spec.chroma.subsampling(i);
                let src = &full[i.min(2)];
                let (bw, bh) = (1usize << sx, 1usize << sy);
                *plane = Plane::from_fn(plane.width, plane.height, |x, y| {
                    let mut acc = 0.0;
                    for yy in 0..bh {
                        for xx in 0..bw {
                            acc += src.get((x * bw + xx).min(w - 1), (y * bh + yy).min(h - 1));
                        }
                    }
                    (acc / (bw * bh) as f64 * scale).round().clamp(0.0, peak) as u16
                });
            }
            frame
        })
        .collect();
    FrameSequence::new(frames, Rational::new(30, 1))
}

/// `n` copies of one frame.
pub fn static_clip(frame: &Frame, n: usize) -> Result<FrameSequence> {
    FrameSequence::new(vec![frame.clone(); n], Rational::new(30, 1))
}
