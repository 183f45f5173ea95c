//! Python bindings. Video travels as Y4M bytes, streams as `.mmvc` bytes.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyBytes, PyDict};

use mmvc_core::codec::{analyze_stream, decode_stream, encode_stream, CodecConfig};
use mmvc_core::error::Error;
use mmvc_core::metrics::{
    bd_rate as core_bd_rate, frame_ms_ssim, frame_psnr, MetricSpace, RdPoint, MIN_MSSSIM_SIZE,
};
use mmvc_core::synthetic::{synthetic_clip as core_clip, ClipSpec};
use mmvc_core::video_io::{read_y4m, write_y4m, FrameSequence};

create_exception!(mmvc, MmvcError, PyException);

fn err(e: Error) -> PyErr {
    MmvcError::new_err(e.to_string())
}

fn y4m_bytes(seq: &FrameSequence) -> Result<Vec<u8>, Error> {
    let mut out = Vec::new();
    write_y4m(seq, &mut out)?;
    Ok(out)
}

fn config_from(options: Option<&Bound<'_, PyDict>>) -> PyResult<CodecConfig> {
    let mut cfg = CodecConfig::default();
    if let Some(d) = options {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            // Python spells booleans `True`.
            let value = if v.is_instance_of::<PyBool>() {
                v.extract::<bool>()?.to_string()
            } else {
                v.str()?.to_string()
            };
            cfg.set(&key, &value).map_err(err)?;
        }
    }
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Encodes a Y4M clip. `options` maps option names (`qstep`, `modes`, ...)
/// to values.
#[pyfunction]
#[pyo3(signature = (y4m, options=None))]
fn encode<'py>(
    py: Python<'py>,
    y4m: &[u8],
    options: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyBytes>> {
    let cfg = config_from(options)?;
    let bytes = py
        .allow_threads(|| {
            let seq = read_y4m(y4m)?;
            encode_stream(&seq, &cfg).map(|e| e.bytes)
        })
        .map_err(err)?;
    Ok(PyBytes::new(py, &bytes))
}

/// Decodes a stream to Y4M.
#[pyfunction]
fn decode<'py>(py: Python<'py>, stream: &[u8]) -> PyResult<Bound<'py, PyBytes>> {
    let out = py
        .allow_threads(|| y4m_bytes(&decode_stream(stream)?.sequence()?))
        .map_err(err)?;
    Ok(PyBytes::new(py, &out))
}

/// SHA-256 of every decoded frame.
#[pyfunction]
fn trace(py: Python<'_>, stream: &[u8]) -> PyResult<Vec<String>> {
    py.allow_threads(|| decode_stream(stream).map(|d| d.trace()))
        .map_err(err)
}

/// Per-frame utilization figures, one dict per frame.
#[pyfunction]
fn analyze<'py>(py: Python<'py>, stream: &[u8]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let (_, rows) = py.allow_threads(|| analyze_stream(stream)).map_err(err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("index", r.index)?;
            d.set_item("intra", r.intra)?;
            d.set_item("bytes", r.bytes)?;
            d.set_item("payload_bytes", r.payload_bytes)?;
            d.set_item("side_bytes", r.side_bytes)?;
            d.set_item("total_blocks", r.total_blocks)?;
            d.set_item("skipped", r.skipped)?;
            for (i, m) in ["fp", "ofc", "fpg", "intra"].iter().enumerate() {
                d.set_item(format!("{m}_blocks"), r.mode_blocks[i])?;
                d.set_item(format!("{m}_bits"), r.mode_bits[i])?;
            }
            d.set_item("sparse_blocks", r.sparse_blocks)?;
            d.set_item("dense_blocks", r.dense_blocks)?;
            d.set_item("zero_channels", r.zero_channels)?;
            d.set_item("coded_channels", r.coded_channels)?;
            d.set_item("dense_only_bytes", r.dense_only_bytes)?;
            Ok(d)
        })
        .collect()
}

/// Per-frame `(psnr, msssim)`; MS-SSIM is `None` below the minimum size.
#[pyfunction]
#[pyo3(signature = (reference, distorted, rgb=false))]
fn quality(
    py: Python<'_>,
    reference: &[u8],
    distorted: &[u8],
    rgb: bool,
) -> PyResult<Vec<(f64, Option<f64>)>> {
    let space = if rgb {
        MetricSpace::Rgb
    } else {
        MetricSpace::Luma
    };
    py.allow_threads(|| {
        let (a, b) = (read_y4m(reference)?, read_y4m(distorted)?);
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} frames",
                a.len(),
                b.len()
            )));
        }
        a.frames
            .iter()
            .zip(&b.frames)
            .map(|(x, y)| {
                let ms = if x.width >= MIN_MSSSIM_SIZE && x.height >= MIN_MSSSIM_SIZE {
                    Some(frame_ms_ssim(x, y, space)?)
                } else {
                    None
                };
                Ok((frame_psnr(x, y, space)?, ms))
            })
            .collect()
    })
    .map_err(err)
}

/// BD-rate in percent from `(bpp, psnr)` pairs.
#[pyfunction]
fn bd_rate(anchor: Vec<(f64, f64)>, test: Vec<(f64, f64)>) -> PyResult<f64> {
    let pts = |v: Vec<(f64, f64)>| -> Vec<RdPoint> {
        v.into_iter()
            .map(|(bpp, psnr)| RdPoint {
                bpp,
                psnr,
                msssim: 0.0,
            })
            .collect()
    };
    core_bd_rate(&pts(anchor), &pts(test)).map_err(err)
}

/// Deterministic test clip as Y4M.
#[pyfunction]
#[pyo3(signature = (width=352, height=288, frames=30, seed=1, noise=0.0))]
fn synthetic_clip<'py>(
    py: Python<'py>,
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
    noise: f64,
) -> PyResult<Bound<'py, PyBytes>> {
    let spec = ClipSpec {
        width,
        height,
        frames,
        seed,
        noise,
        ..ClipSpec::default()
    };
    let out = py
        .allow_threads(|| y4m_bytes(&core_clip(&spec)?))
        .map_err(err)?;
    Ok(PyBytes::new(py, &out))
}

#[pymodule]
pub fn mmvc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MmvcError", m.py().get_type::<MmvcError>())?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(quality, m)?)?;
    m.add_function(wrap_pyfunction!(bd_rate, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_clip, m)?)?;
    Ok(())
}
