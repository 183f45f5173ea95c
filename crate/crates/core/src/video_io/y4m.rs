use std::io::{Read, Write};

use super::{ChromaMode, Frame, FrameSequence, Plane, Rational};
use crate::error::{Error, Result};

const SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_MARKER: &[u8] = b"FRAME";

struct Header {
    width: usize,
    height: usize,
    rate: Rational,
    chroma: ChromaMode,
    bit_depth: u8,
}

fn parse_chroma(tag: &str) -> Result<(ChromaMode, u8)> {
    Ok(match tag {
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => (ChromaMode::Yuv420, 8),
        "444" => (ChromaMode::Yuv444, 8),
        "mono" => (ChromaMode::Mono, 8),
        "420p10" => (ChromaMode::Yuv420, 10),
        "444p10" => (ChromaMode::Yuv444, 10),
        "mono10" => (ChromaMode::Mono, 10),
        other => return Err(Error::UnsupportedChroma(other.to_string())),
    })
}

fn chroma_tag(chroma: ChromaMode, bit_depth: u8) -> Result<&'static str> {
    Ok(match (chroma, bit_depth) {
        (ChromaMode::Yuv420, 8) => "420jpeg",
        (ChromaMode::Yuv444, 8) => "444",
        (ChromaMode::Mono, 8) => "mono",
        (ChromaMode::Yuv420, 10) => "420p10",
        (ChromaMode::Yuv444, 10) => "444p10",
        (ChromaMode::Mono, 10) => "mono10",
        (c, d) => return Err(Error::UnsupportedChroma(format!("{c:?} at {d} bits"))),
    })
}

fn parse_header(line: &str) -> Result<Header> {
    let mut tokens = line.split_ascii_whitespace();
    if tokens.next().map(str::as_bytes) != Some(SIGNATURE) {
        return Err(Error::MalformedHeader("missing YUV4MPEG2 signature".into()));
    }
    let bad = |what: &str, tok: &str| Error::MalformedHeader(format!("bad {what} `{tok}`"));
    let (mut width, mut height) = (None, None);
    let mut rate = Rational::default();
    let mut chroma = (ChromaMode::Yuv420, 8);
    for tok in tokens {
        let (key, val) = tok.split_at(1);
        match key {
            "W" => width = Some(val.parse::<usize>().map_err(|_| bad("width", tok))?),
            "H" => height = Some(val.parse::<usize>().map_err(|_| bad("height", tok))?),
            "F" => {
                let (n, d) = val.split_once(':').ok_or_else(|| bad("frame rate", tok))?;
                let num = n.parse().map_err(|_| bad("frame rate", tok))?;
                let den = d.parse().map_err(|_| bad("frame rate", tok))?;
                if den == 0 {
                    return Err(bad("frame rate", tok));
                }
                rate = Rational::new(num, den);
            }
            "C" => chroma = parse_chroma(val)?,
            // interlacing, aspect ratio and extensions are passed over
            _ => {}
        }
    }
    match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 => Ok(Header {
            width: w,
            height: h,
            rate,
            chroma: chroma.0,
            bit_depth: chroma.1,
        }),
        _ => Err(Error::MalformedHeader("missing or zero W/H".into())),
    }
}

/// Splits off one `\n`-terminated line.
fn take_line(buf: &[u8]) -> Option<(&[u8], &[u8])> {
    let end = buf.iter().position(|&b| b == b'\n')?;
    Some((&buf[..end], &buf[end + 1..]))
}

pub(super) fn decode_samples(bytes: &[u8], bit_depth: u8, count: usize) -> Result<Vec<u16>> {
    if bit_depth <= 8 {
        Ok(bytes[..count].iter().map(|&b| b as u16).collect())
    } else {
        let max = super::max_sample(bit_depth);
        bytes[..count * 2]
            .chunks_exact(2)
            .map(|c| {
                let v = u16::from_le_bytes([c[0], c[1]]);
                if v > max {
                    Err(Error::SampleOutOfRange {
                        value: v as u32,
                        bit_depth,
                    })
                } else {
                    Ok(v)
                }
            })
            .collect()
    }
}

pub(super) fn encode_samples(plane: &Plane<u16>, bit_depth: u8, out: &mut Vec<u8>) {
    if bit_depth <= 8 {
        out.extend(plane.data.iter().map(|&v| v as u8));
    } else {
        for &v in &plane.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

/// Parses a complete YUV4MPEG2 stream.
pub fn read_y4m<R: Read>(mut source: R) -> Result<FrameSequence> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    let (line, mut rest) =
        take_line(&buf).ok_or_else(|| Error::MalformedHeader("no header line".into()))?;
    let line = std::str::from_utf8(line)
        .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;
    let hdr = parse_header(line)?;
    let bps = if hdr.bit_depth > 8 { 2 } else { 1 };

    let mut frames = Vec::new();
    while !rest.is_empty() {
        let index = frames.len();
        let (marker, body) = take_line(rest).ok_or(Error::TruncatedFrame {
            frame: index,
            needed: FRAME_MARKER.len() + 1,
            available: rest.len(),
        })?;
        if !marker.starts_with(FRAME_MARKER) {
            return Err(Error::MalformedHeader(format!(
                "frame {index} lacks FRAME marker"
            )));
        }
        let mut planes = Vec::with_capacity(hdr.chroma.plane_count());
        let mut cursor = body;
        for p in 0..hdr.chroma.plane_count() {
            let (w, h) = hdr.chroma.plane_dims(p, hdr.width, hdr.height);
            let need = w * h * bps;
            if cursor.len() < need {
                return Err(Error::TruncatedFrame {
                    frame: index,
                    needed: need,
                    available: cursor.len(),
                });
            }
            let data = decode_samples(cursor, hdr.bit_depth, w * h)?;
            planes.push(Plane::from_vec(w, h, data)?);
            cursor = &cursor[need..];
        }
        frames.push(Frame::new(
            planes,
            hdr.width,
            hdr.height,
            hdr.bit_depth,
            hdr.chroma,
        )?);
        rest = cursor;
    }
    FrameSequence::new(frames, hdr.rate)
}

/// Writes `seq` as YUV4MPEG2, returning the number of bytes emitted.
pub fn write_y4m<W: Write>(seq: &FrameSequence, mut sink: W) -> Result<usize> {
    let first = seq.frames.first().ok_or(Error::EmptySequence)?;
    let mut out = format!(
        "YUV4MPEG2 W{} H{} F{}:{} Ip A0:0 C{}\n",
        first.width,
        first.height,
        seq.frame_rate.num,
        seq.frame_rate.den,
        chroma_tag(first.chroma, first.bit_depth)?
    )
    .into_bytes();
    for frame in &seq.frames {
        out.extend_from_slice(b"FRAME\n");
        for plane in &frame.planes {
            encode_samples(plane, frame.bit_depth, &mut out);
        }
    }
    sink.write_all(&out)?;
    sink.flush()?;
    Ok(out.len())
}
