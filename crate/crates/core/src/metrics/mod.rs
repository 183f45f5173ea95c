//! Quality and rate measurement.

mod bdrate;
mod msssim;

pub use bdrate::{bd_rate, fit_cubic};
pub use msssim::{ms_ssim, MIN_MSSSIM_SIZE};

use crate::error::{Error, Result};
use crate::video_io::{max_sample, ChromaMode, Frame, Plane, SamplePlane};

/// Reported for identical planes in place of +∞.
pub const PSNR_CAP: f64 = 99.0;

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
}

pub fn mse(a: &SamplePlane, b: &SamplePlane) -> Result<f64> {
    if !a.same_dims(b) || a.data.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let sse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sse / a.data.len() as f64)
}

pub fn psnr(a: &SamplePlane, b: &SamplePlane, bit_depth: u8) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, max_sample(bit_depth) as f64))
}

/// Which planes a frame-level metric looks at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MetricSpace {
    #[default]
    Luma,
    /// BT.601 full-range conversion to RGB, metric averaged over R, G, B.
    Rgb,
}

fn check_frames(a: &Frame, b: &Frame) -> Result<()> {
    if a.width != b.width
        || a.height != b.height
        || a.bit_depth != b.bit_depth
        || a.chroma != b.chroma
    {
        return Err(Error::DimensionMismatch("frames differ in format".into()));
    }
    Ok(())
}

/// Converts a frame to three full-resolution RGB planes. Chroma is
/// upsampled by sample repetition; mono frames give R = G = B = Y.
pub fn to_rgb(frame: &Frame) -> [SamplePlane; 3] {
    let peak = max_sample(frame.bit_depth) as f64;
    let mid = (1u32 << (frame.bit_depth - 1)) as f64;
    let (w, h) = (frame.width, frame.height);
    let y = frame.luma();
    if frame.chroma == ChromaMode::Mono {
        return [y.clone(), y.clone(), y.clone()];
    }
    let (sx, sy) = frame.chroma.subsampling(1);
    let mut out = [Plane::new(w, h), Plane::new(w, h), Plane::new(w, h)];
    let q = |v: f64| v.round().clamp(0.0, peak) as u16;
    for row in 0..h {
        for col in 0..w {
            let l = y.get(col, row) as f64;
            let u = frame.planes[1].get(col >> sx, row >> sy) as f64 - mid;
            let v = frame.planes[2].get(col >> sx, row >> sy) as f64 - mid;
            out[0].set(col, row, q(l + 1.402 * v));
            out[1].set(col, row, q(l - 0.344_136 * u - 0.714_136 * v));
            out[2].set(col, row, q(l + 1.772 * u));
        }
    }
    out
}

pub fn frame_psnr(a: &Frame, b: &Frame, space: MetricSpace) -> Result<f64> {
    check_frames(a, b)?;
    match space {
        MetricSpace::Luma => psnr(a.luma(), b.luma(), a.bit_depth),
        MetricSpace::Rgb => {
            let (ra, rb) = (to_rgb(a), to_rgb(b));
            let mut sum = 0.0;
            for c in 0..3 {
                sum += psnr(&ra[c], &rb[c], a.bit_depth)?;
            }
            Ok(sum / 3.0)
        }
    }
}

pub fn frame_ms_ssim(a: &Frame, b: &Frame, space: MetricSpace) -> Result<f64> {
    check_frames(a, b)?;
    match space {
        MetricSpace::Luma => ms_ssim(a.luma(), b.luma(), a.bit_depth),
        MetricSpace::Rgb => {
            let (ra, rb) = (to_rgb(a), to_rgb(b));
            let mut sum = 0.0;
            for c in 0..3 {
                sum += ms_ssim(&ra[c], &rb[c], a.bit_depth)?;
            }
            Ok(sum / 3.0)
        }
    }
}

/// Bits per pixel over the original (uncropped) frame size.
pub fn bpp(stream_bytes: usize, width: usize, height: usize, n_frames: usize) -> Result<f64> {
    if width == 0 || height == 0 || n_frames == 0 {
        return Err(Error::Metric(
            "bpp needs non-zero dimensions and frames".into(),
        ));
    }
    Ok(8.0 * stream_bytes as f64 / (width * height * n_frames) as f64)
}

/// One rate-distortion operating point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    pub bpp: f64,
    pub psnr: f64,
    pub msssim: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_planes_hit_the_cap() {
        let p = Plane::filled(8, 8, 77u16);
        assert_eq!(psnr(&p, &p, 8).unwrap(), PSNR_CAP);
    }

    #[test]
    fn unit_mse_is_48_13_db() {
        let a = Plane::filled(16, 16, 100u16);
        let b = a.map(|v| v + 1);
        assert!((psnr(&a, &b, 8).unwrap() - 48.13).abs() < 0.01);
    }

    #[test]
    fn psnr_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (w, h) = (23, 17);
        let a =
            Plane::from_vec(w, h, (0..w * h).map(|_| rng.gen_range(0..1024)).collect()).unwrap();
        let b =
            Plane::from_vec(w, h, (0..w * h).map(|_| rng.gen_range(0..1024)).collect()).unwrap();
        let mut sse = 0.0;
        for y in 0..h {
            for x in 0..w {
                let d = a.get(x, y) as f64 - b.get(x, y) as f64;
                sse += d * d;
            }
        }
        let expect = 10.0 * (1023.0f64 * 1023.0 / (sse / (w * h) as f64)).log10();
        assert!((psnr(&a, &b, 10).unwrap() - expect).abs() < 1e-12);
        assert_eq!(psnr(&a, &b, 10).unwrap(), psnr(&b, &a, 10).unwrap());
    }

    #[test]
    fn psnr_rejects_mismatched_dims() {
        assert!(psnr(&Plane::new(4, 4), &Plane::new(4, 5), 8).is_err());
    }

    #[test]
    fn bpp_examples() {
        assert!((bpp(1000, 100, 100, 2).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(bpp(0, 10, 10, 1).unwrap(), 0.0);
        assert!(bpp(10, 0, 10, 1).is_err());
    }

    #[test]
    fn rgb_of_gray_is_gray() {
        let f = Frame::gray(6, 4, 8, ChromaMode::Yuv420);
        let rgb = to_rgb(&f);
        assert!(rgb.iter().all(|p| p.data.iter().all(|&v| v == 128)));
        assert_eq!(frame_psnr(&f, &f, MetricSpace::Rgb).unwrap(), PSNR_CAP);
    }
}
