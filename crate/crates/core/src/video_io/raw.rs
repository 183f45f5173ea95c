use std::io::{Read, Write};

use super::y4m::{decode_samples, encode_samples};
use super::{ChromaMode, Frame, FrameSequence, Plane, Rational};
use crate::error::{Error, Result};

/// Reads headerless planar YUV with externally supplied geometry.
pub fn read_raw<R: Read>(
    mut source: R,
    width: usize,
    height: usize,
    chroma: ChromaMode,
    bit_depth: u8,
    frame_rate: Rational,
) -> Result<FrameSequence> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidConfig(
            "raw input needs non-zero width/height".into(),
        ));
    }
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    let bps = if bit_depth > 8 { 2 } else { 1 };
    let dims: Vec<_> = (0..chroma.plane_count())
        .map(|i| chroma.plane_dims(i, width, height))
        .collect();
    let frame_bytes: usize = dims.iter().map(|(w, h)| w * h * bps).sum();
    if buf.len() % frame_bytes != 0 {
        let frame = buf.len() / frame_bytes;
        return Err(Error::TruncatedFrame {
            frame,
            needed: frame_bytes,
            available: buf.len() - frame * frame_bytes,
        });
    }
    let frames = buf
        .chunks_exact(frame_bytes)
        .map(|mut chunk| {
            let planes = dims
                .iter()
                .map(|&(w, h)| {
                    let data = decode_samples(chunk, bit_depth, w * h)?;
                    chunk = &chunk[w * h * bps..];
                    Plane::from_vec(w, h, data)
                })
                .collect::<Result<Vec<_>>>()?;
            Frame::new(planes, width, height, bit_depth, chroma)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, frame_rate)
}

pub fn write_raw<W: Write>(seq: &FrameSequence, mut sink: W) -> Result<usize> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut out = Vec::new();
    for f in &seq.frames {
        for p in &f.planes {
            encode_samples(p, f.bit_depth, &mut out);
        }
    }
    sink.write_all(&out)?;
    Ok(out.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip() {
        let bytes: Vec<u8> = (0..48u8).collect();
        let seq = read_raw(&bytes[..], 4, 4, ChromaMode::Yuv420, 8, Rational::default()).unwrap();
        assert_eq!(seq.len(), 2);
        let mut out = Vec::new();
        write_raw(&seq, &mut out).unwrap();
        assert_eq!(out, bytes);
    }

    #[test]
    fn raw_partial_frame_rejected() {
        let bytes = [0u8; 30];
        assert!(read_raw(&bytes[..], 4, 4, ChromaMode::Yuv420, 8, Rational::default()).is_err());
    }
}
