//! Five-scale structural similarity.

use crate::error::{Error, Result};
use crate::video_io::{max_sample, SamplePlane};

const WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WIN: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Smallest side that still leaves one full window at the coarsest scale.
pub const MIN_MSSSIM_SIZE: usize = WIN << (WEIGHTS.len() - 1);

fn gaussian() -> [f64; WIN] {
    let mut g = [0.0; WIN];
    let c = (WIN / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

struct Img {
    w: usize,
    h: usize,
    d: Vec<f64>,
}

impl Img {
    /// Separable 'valid' Gaussian filter.
    fn blur(&self, g: &[f64; WIN]) -> Img {
        let ow = self.w - WIN + 1;
        let oh = self.h - WIN + 1;
        let mut tmp = vec![0.0; ow * self.h];
        for y in 0..self.h {
            let row = &self.d[y * self.w..(y + 1) * self.w];
            for x in 0..ow {
                tmp[y * ow + x] = g.iter().zip(&row[x..x + WIN]).map(|(a, b)| a * b).sum();
            }
        }
        let mut d = vec![0.0; ow * oh];
        for y in 0..oh {
            for x in 0..ow {
                d[y * ow + x] = (0..WIN).map(|k| g[k] * tmp[(y + k) * ow + x]).sum();
            }
        }
        Img { w: ow, h: oh, d }
    }

    fn zip(&self, o: &Img, f: impl Fn(f64, f64) -> f64) -> Img {
        Img {
            w: self.w,
            h: self.h,
            d: self.d.iter().zip(&o.d).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn downsample(&self) -> Img {
        let (w, h) = (self.w / 2, self.h / 2);
        let mut d = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let at = |dx: usize, dy: usize| self.d[(2 * y + dy) * self.w + 2 * x + dx];
                d.push((at(0, 0) + at(1, 0) + at(0, 1) + at(1, 1)) / 4.0);
            }
        }
        Img { w, h, d }
    }
}

/// Mean luminance term and mean contrast-structure term at one scale.
fn ssim_terms(x: &Img, y: &Img, c1: f64, c2: f64, g: &[f64; WIN]) -> (f64, f64) {
    let mx = x.blur(g);
    let my = y.blur(g);
    let sxx = x.zip(x, |a, b| a * b).blur(g);
    let syy = y.zip(y, |a, b| a * b).blur(g);
    let sxy = x.zip(y, |a, b| a * b).blur(g);
    let n = mx.d.len() as f64;
    let (mut lsum, mut cssum) = (0.0, 0.0);
    for i in 0..mx.d.len() {
        let (ux, uy) = (mx.d[i], my.d[i]);
        let vx = sxx.d[i] - ux * ux;
        let vy = syy.d[i] - uy * uy;
        let cov = sxy.d[i] - ux * uy;
        let cs = (2.0 * cov + c2) / (vx + vy + c2);
        let l = (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
        lsum += l * cs;
        cssum += cs;
    }
    (lsum / n, cssum / n)
}

/// MS-SSIM with an 11×11 Gaussian window (σ = 1.5), 'valid' filtering and
/// 2×2 average pooling between scales. Negative per-scale terms are
/// clamped to zero before exponentiation.
pub fn ms_ssim(a: &SamplePlane, b: &SamplePlane, bit_depth: u8) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch(
            "ms-ssim planes differ in size".into(),
        ));
    }
    if a.width < MIN_MSSSIM_SIZE || a.height < MIN_MSSSIM_SIZE {
        return Err(Error::Metric(format!(
            "ms-ssim needs at least {MIN_MSSSIM_SIZE}x{MIN_MSSSIM_SIZE}, got {}x{}",
            a.width, a.height
        )));
    }
    let peak = max_sample(bit_depth) as f64;
    let c1 = (K1 * peak).powi(2);
    let c2 = (K2 * peak).powi(2);
    let g = gaussian();
    let to_img = |p: &SamplePlane| Img {
        w: p.width,
        h: p.height,
        d: p.data.iter().map(|&v| v as f64).collect(),
    };
    let (mut x, mut y) = (to_img(a), to_img(b));
    let mut score = 1.0;
    for (s, &w) in WEIGHTS.iter().enumerate() {
        let (ssim, cs) = ssim_terms(&x, &y, c1, c2, &g);
        let term = if s + 1 == WEIGHTS.len() { ssim } else { cs };
        score *= term.max(0.0).powf(w);
        if s + 1 < WEIGHTS.len() {
            x = x.downsample();
            y = y.downsample();
        }
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video_io::Plane;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(w: usize, h: usize) -> SamplePlane {
        let mut p = Plane::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let v = 128.0
                    + 60.0 * ((x as f64) * 0.09).sin() * ((y as f64) * 0.05).cos()
                    + 30.0 * (((x + 2 * y) as f64) * 0.21).sin();
                p.set(x, y, v.round().clamp(0.0, 255.0) as u16);
            }
        }
        p
    }

    fn noisy(p: &SamplePlane, amp: i32, seed: u64) -> SamplePlane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        p.map(|v| (v as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u16)
    }

    #[test]
    fn identical_is_one() {
        let p = textured(176, 180);
        assert!((ms_ssim(&p, &p, 8).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn more_noise_lower_score_and_symmetric() {
        let p = textured(192, 176);
        let small = ms_ssim(&p, &noisy(&p, 3, 1), 8).unwrap();
        let large = ms_ssim(&p, &noisy(&p, 30, 1), 8).unwrap();
        assert!(small > large, "{small} vs {large}");
        let q = noisy(&p, 10, 2);
        assert!((ms_ssim(&p, &q, 8).unwrap() - ms_ssim(&q, &p, 8).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn too_small_rejected() {
        let p = textured(175, 200);
        assert!(ms_ssim(&p, &p, 8).is_err());
    }
}
