//! Bjøntegaard delta rate.

use super::RdPoint;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Least-squares cubic `y ≈ c0 + c1·x + c2·x² + c3·x³`.
pub fn fit_cubic(xs: &[f64], ys: &[f64]) -> Result<[f64; 4]> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::Metric("cubic fit needs at least 4 points".into()));
    }
    // Center and scale x for conditioning, then expand back.
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let scale = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Metric("cubic fit over a single abscissa".into()));
    }
    let a = DMatrix::from_fn(xs.len(), 4, |r, c| ((xs[r] - mean) / scale).powi(c as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let u = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::Metric(format!("cubic fit failed: {e}")))?;
    // p(t) with t = (x − m)/s expanded into powers of x
    let (m, s) = (mean, scale);
    let d = [u[0], u[1] / s, u[2] / (s * s), u[3] / (s * s * s)];
    Ok([
        d[0] - d[1] * m + d[2] * m * m - d[3] * m * m * m,
        d[1] - 2.0 * d[2] * m + 3.0 * d[3] * m * m,
        d[2] - 3.0 * d[3] * m,
        d[3],
    ])
}

fn integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let prim =
        |x: f64| c[0] * x + c[1] * x * x / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0;
    prim(hi) - prim(lo)
}

/// Average rate difference of `test` against `anchor` at equal PSNR, in
/// percent. Negative values mean `test` needs fewer bits.
pub fn bd_rate(anchor: &[RdPoint], test: &[RdPoint]) -> Result<f64> {
    if anchor.len() < 4 || test.len() < 4 {
        return Err(Error::Metric(
            "bd-rate needs at least 4 points per curve".into(),
        ));
    }
    if anchor
        .iter()
        .chain(test)
        .any(|p| !(p.bpp > 0.0) || !p.psnr.is_finite())
    {
        return Err(Error::Metric(
            "bd-rate needs positive rates and finite PSNR".into(),
        ));
    }
    let split = |pts: &[RdPoint]| -> (Vec<f64>, Vec<f64>) {
        (
            pts.iter().map(|p| p.psnr).collect(),
            pts.iter().map(|p| p.bpp.log10()).collect(),
        )
    };
    let (qa, ra) = split(anchor);
    let (qt, rt) = split(test);
    let range = |q: &[f64]| {
        (
            q.iter().copied().fold(f64::INFINITY, f64::min),
            q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let (a_lo, a_hi) = range(&qa);
    let (t_lo, t_hi) = range(&qt);
    let lo = a_lo.max(t_lo);
    let hi = a_hi.min(t_hi);
    if !(hi > lo) {
        return Err(Error::Metric("rd curves do not overlap in quality".into()));
    }
    let ca = fit_cubic(&qa, &ra)?;
    let ct = fit_cubic(&qt, &rt)?;
    let avg = (integral(&ct, lo, hi) - integral(&ca, lo, hi)) / (hi - lo);
    Ok(100.0 * (10f64.powf(avg) - 1.0))
}
